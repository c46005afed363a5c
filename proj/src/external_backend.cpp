#include <algorithm>
#include <chrono>
#include <cmath>
#include <regex>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "base64.hpp"
#include "gaze2seg/segmenter.hpp"

namespace g2s {

using nlohmann::json;

struct ExternalBackend::Impl {
  ExternalBackendConfig cfg;
  std::string host_port;  // scheme://host:port
  std::string path;       // <prefix>/segment
  std::counting_semaphore<1024> in_flight;

  explicit Impl(ExternalBackendConfig c)
      : cfg(std::move(c)), in_flight(std::clamp(cfg.max_in_flight, 1, 1024)) {}
};

namespace {

// Splits http://host[:port][/prefix]. https is not compiled into the client.
std::pair<std::string, std::string> split_url(const std::string& url) {
  static const std::regex re(R"(^(http)://([A-Za-z0-9.\-]+|\[[0-9A-Fa-f:]+\])(:([0-9]{1,5}))?(/[^?#]*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) fail(Errc::kInvalidArgument, "malformed external backend URL '" + url + "'");
  std::string host = m[1].str() + "://" + m[2].str();
  if (m[4].matched) {
    const int port = std::stoi(m[4].str());
    if (port < 1 || port > 65535) fail(Errc::kInvalidArgument, "port out of range in '" + url + "'");
    host += ":" + m[4].str();
  }
  std::string prefix = m[5].matched ? m[5].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {host, prefix + "/segment"};
}

}  // namespace

ExternalBackend::ExternalBackend(ExternalBackendConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {
  if (impl_->cfg.retries < 0) fail(Errc::kInvalidArgument, "retries must be >= 0");
  if (!(impl_->cfg.timeout_s > 0.0)) fail(Errc::kInvalidArgument, "timeout_s must be > 0");
  std::tie(impl_->host_port, impl_->path) = split_url(impl_->cfg.url);
}

ExternalBackend::~ExternalBackend() = default;

std::string ExternalBackend::encode_request(const SliceImage& image, std::span<const BBoxPrompt> prompts) {
  std::vector<std::uint8_t> le(image.size() * 2);
  for (std::size_t i = 0; i < image.size(); ++i) {
    const auto v = static_cast<std::int16_t>(std::clamp(std::lround(image.data[i]), -32768L, 32767L));
    const auto u = static_cast<std::uint16_t>(v);
    le[2 * i] = static_cast<std::uint8_t>(u & 0xff);
    le[2 * i + 1] = static_cast<std::uint8_t>(u >> 8);
  }
  json boxes = json::array();
  for (const auto& b : prompts) boxes.push_back({{"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
  json body{{"width", image.width},
            {"height", image.height},
            {"dtype", "i16"},
            {"pixels", base64_encode(le)},
            {"boxes", std::move(boxes)}};
  return body.dump();
}

SliceMask ExternalBackend::decode_response(std::string_view body, int width, int height) {
  std::vector<std::uint8_t> raw;
  try {
    const auto j = json::parse(body);
    raw = base64_decode(j.at("mask").get<std::string>());
  } catch (const json::exception& e) {
    fail(Errc::kBackendProtocolError, std::string("malformed backend response: ") + e.what());
  } catch (const Error& e) {
    fail(Errc::kBackendProtocolError, std::string("malformed backend mask: ") + e.what());
  }
  SliceMask m(width, height);
  if (raw.size() != m.size()) {
    fail(Errc::kBackendProtocolError, "backend mask has " + std::to_string(raw.size()) + " bytes, expected " +
                                          std::to_string(m.size()));
  }
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] > 1) fail(Errc::kBackendProtocolError, "backend mask values must be 0/1");
    m.data[i] = raw[i];
  }
  return m;
}

SliceMask ExternalBackend::segment(const SliceImage& image, std::int64_t, std::span<const BBoxPrompt> prompts) {
  const std::string body = encode_request(image, prompts);
  impl_->in_flight.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{impl_->in_flight};

  httplib::Client client(impl_->host_port);
  const auto secs = static_cast<time_t>(impl_->cfg.timeout_s);
  const auto usecs = static_cast<time_t>((impl_->cfg.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  std::string last_error;
  for (int attempt = 0; attempt <= impl_->cfg.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(impl_->cfg.backoff_ms << (attempt - 1)));
    }
    auto res = client.Post(impl_->path, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      fail(Errc::kBackendProtocolError, "backend answered HTTP " + std::to_string(res->status));
    }
    return decode_response(res->body, image.width, image.height);
  }
  fail(Errc::kBackendUnavailable, "external backend " + impl_->cfg.url + " unavailable after " +
                                      std::to_string(impl_->cfg.retries + 1) + " attempts (" + last_error + ")");
}

}  // namespace g2s

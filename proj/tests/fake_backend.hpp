#pragma once

#include <atomic>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "base64.hpp"

namespace testing {

/// In-process stand-in for a segmentation service.
class FakeSegmentServer {
 public:
  std::atomic<int> calls{0};
  std::atomic<int> fail_first{0};  // answer 503 this many times
  std::string mode = "boxes";      // boxes | garbage | short | 400

  FakeSegmentServer() {
    svr_.Post("/segment", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++calls;
      if (n <= fail_first.load()) {
        res.status = 503;
        return;
      }
      if (mode == "garbage") {
        res.set_content("{\"nope\":1}", "application/json");
        return;
      }
      if (mode == "400") {
        res.status = 400;
        return;
      }
      const auto j = nlohmann::json::parse(req.body);
      const int w = j.at("width"), h = j.at("height");
      const auto px = g2s::base64_decode(j.at("pixels").get<std::string>());
      if (px.size() != static_cast<std::size_t>(w * h * 2) || j.at("dtype") != "i16") {
        res.status = 422;
        return;
      }
      std::vector<std::uint8_t> mask(static_cast<std::size_t>(w * h), 0);
      for (const auto& b : j.at("boxes"))
        for (int y = b.at("y0"); y <= b.at("y1").get<int>(); ++y)
          for (int x = b.at("x0"); x <= b.at("x1").get<int>(); ++x) {
            const auto i = static_cast<std::size_t>(y * w + x);
            // positive pixels inside the box
            const auto v = static_cast<std::int16_t>(px[2 * i] | (px[2 * i + 1] << 8));
            mask[i] = v > 0;
          }
      if (mode == "short") mask.pop_back();
      res.set_content(nlohmann::json{{"mask", g2s::base64_encode(mask)}}.dump(), "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    th_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~FakeSegmentServer() {
    svr_.stop();
    th_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server svr_;
  int port_ = 0;
  std::thread th_;
};

}  // namespace testing

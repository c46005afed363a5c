#include "gaze2seg/segmenter.hpp"

#include <chrono>
#include <cmath>
#include <deque>

#include <json.hpp>

namespace g2s {

using nlohmann::json;

SliceSegmentation segment_slice(SegmenterBackend& backend, const SliceImage& image, std::int64_t slice,
                                std::span<const BBoxPrompt> prompts) {
  if (prompts.empty()) fail(Errc::kNoPrompts, "slice " + std::to_string(slice) + " has no prompts");
  for (const auto& p : prompts) {
    if (p.slice != slice) fail(Errc::kInvalidArgument, "prompt belongs to another slice");
    if (p.x0 < 0 || p.y0 < 0 || p.x0 > p.x1 || p.y0 > p.y1 || p.x1 >= image.width || p.y1 >= image.height) {
      fail(Errc::kInvalidArgument, "prompt box outside the image");
    }
  }
  const auto t0 = std::chrono::steady_clock::now();
  SliceSegmentation out{slice, backend.segment(image, slice, prompts), 0.0};
  out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  if (!out.mask.same_shape(SliceMask(image.width, image.height))) {
    fail(Errc::kBackendProtocolError, "backend returned a mask with the wrong dims");
  }
  return out;
}

SliceMask GtOracleBackend::segment(const SliceImage& image, std::int64_t slice, std::span<const BBoxPrompt> prompts) {
  if (!gt_) fail(Errc::kMissingGroundTruth, "gt_oracle backend has no ground truth attached");
  if (gt_->dims().nx != image.width || gt_->dims().ny != image.height) {
    fail(Errc::kDimMismatch, "ground truth dims differ from the image slice");
  }
  const auto truth = gt_->slice(slice);
  SliceMask out(image.width, image.height);
  for (const auto& b : prompts) {
    for (int y = b.y0; y <= b.y1; ++y) {
      for (int x = b.x0; x <= b.x1; ++x) out(x, y) |= truth(x, y);
    }
  }
  return out;
}

RegionGrowBackend::RegionGrowBackend(double tau) : tau_(tau) {
  if (!(tau > 0.0)) fail(Errc::kInvalidArgument, "region_grow tau must be > 0");
}

SliceMask RegionGrowBackend::segment(const SliceImage& image, std::int64_t, std::span<const BBoxPrompt> prompts) {
  SliceMask out(image.width, image.height);
  SliceMask visited(image.width, image.height);
  std::deque<std::array<int, 2>> queue;
  for (const auto& b : prompts) {
    std::fill(visited.data.begin(), visited.data.end(), 0);
    const int sx = (b.x0 + b.x1) / 2;
    const int sy = (b.y0 + b.y1) / 2;
    double sum = image(sx, sy);
    std::size_t n = 1;
    visited(sx, sy) = 1;
    out(sx, sy) = 1;
    queue.push_back({sx, sy});
    while (!queue.empty()) {
      const auto [px, py] = queue.front();
      queue.pop_front();
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = px + dx, qy = py + dy;
          if (!b.contains(qx, qy) || visited(qx, qy)) continue;
          visited(qx, qy) = 1;
          const double v = image(qx, qy);
          if (std::abs(v - sum / static_cast<double>(n)) > tau_) continue;
          sum += v;
          ++n;
          out(qx, qy) = 1;
          queue.push_back({qx, qy});
        }
      }
    }
  }
  return out;
}

BackendConfig BackendConfig::from_json_text(std::string_view text) {
  BackendConfig c;
  try {
    const auto j = json::parse(text);
    c.kind = j.value("kind", c.kind);
    c.tau = j.value("tau", c.tau);
    c.external.url = j.value("url", std::string{});
    c.external.timeout_s = j.value("timeout_s", c.external.timeout_s);
    c.external.retries = j.value("retries", c.external.retries);
    c.external.backoff_ms = j.value("backoff_ms", c.external.backoff_ms);
    c.external.max_in_flight = j.value("max_in_flight", c.external.max_in_flight);
  } catch (const json::exception& e) {
    fail(Errc::kInvalidArgument, std::string("backend config: ") + e.what());
  }
  if (c.kind != "gt_oracle" && c.kind != "region_grow" && c.kind != "external") {
    fail(Errc::kInvalidArgument, "unknown backend kind '" + c.kind + "'");
  }
  return c;
}

std::string BackendConfig::to_json_text() const {
  json j{{"kind", kind}};
  if (kind == "region_grow") j["tau"] = tau;
  if (kind == "external") {
    j["url"] = external.url;
    j["timeout_s"] = external.timeout_s;
    j["retries"] = external.retries;
    j["backoff_ms"] = external.backoff_ms;
    j["max_in_flight"] = external.max_in_flight;
  }
  return j.dump();
}

std::unique_ptr<SegmenterBackend> make_backend(const BackendConfig& cfg, std::shared_ptr<const MaskVolume> gt) {
  if (cfg.kind == "gt_oracle") return std::make_unique<GtOracleBackend>(std::move(gt));
  if (cfg.kind == "region_grow") return std::make_unique<RegionGrowBackend>(cfg.tau);
  if (cfg.kind == "external") return std::make_unique<ExternalBackend>(cfg.external);
  fail(Errc::kInvalidArgument, "unknown backend kind '" + cfg.kind + "'");
}

}  // namespace g2s

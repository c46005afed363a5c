#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "gaze2seg/image.hpp"
#include "gaze2seg/promptgen.hpp"
#include "gaze2seg/volume_io.hpp"

namespace g2s {

struct SliceSegmentation {
  std::int64_t slice = 0;
  SliceMask mask;
  double latency_ms = 0.0;
};

/// Box-prompted per-slice segmenter. Implementations must tolerate
/// concurrent calls on distinct slices.
class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;
  virtual std::string kind() const = 0;
  /// Union over the prompt boxes. `prompts` is non-empty and in bounds.
  virtual SliceMask segment(const SliceImage& image, std::int64_t slice, std::span<const BBoxPrompt> prompts) = 0;
};

/// Validates prompts, times the backend call with a monotonic clock.
SliceSegmentation segment_slice(SegmenterBackend& backend, const SliceImage& image, std::int64_t slice,
                                std::span<const BBoxPrompt> prompts);

/// Ground truth clipped to the union of prompt boxes. Evaluation only.
class GtOracleBackend final : public SegmenterBackend {
 public:
  explicit GtOracleBackend(std::shared_ptr<const MaskVolume> gt = nullptr) : gt_(std::move(gt)) {}
  std::string kind() const override { return "gt_oracle"; }
  SliceMask segment(const SliceImage& image, std::int64_t slice, std::span<const BBoxPrompt> prompts) override;

 private:
  std::shared_ptr<const MaskVolume> gt_;
};

/// Flood fill from each box center over 8-connected pixels within +-tau of
/// the running region mean, clipped to the box.
class RegionGrowBackend final : public SegmenterBackend {
 public:
  explicit RegionGrowBackend(double tau = 60.0);
  std::string kind() const override { return "region_grow"; }
  double tau() const { return tau_; }
  SliceMask segment(const SliceImage& image, std::int64_t slice, std::span<const BBoxPrompt> prompts) override;

 private:
  double tau_;
};

struct ExternalBackendConfig {
  std::string url;  // http://host:port[/prefix]; requests go to <prefix>/segment
  double timeout_s = 30.0;
  int retries = 2;
  int backoff_ms = 100;  // doubled per retry
  int max_in_flight = 4;
};

/// POST {"width","height","dtype":"i16","pixels":b64,"boxes":[...]} -> {"mask":b64}.
class ExternalBackend final : public SegmenterBackend {
 public:
  explicit ExternalBackend(ExternalBackendConfig cfg);
  ~ExternalBackend() override;
  std::string kind() const override { return "external"; }
  SliceMask segment(const SliceImage& image, std::int64_t slice, std::span<const BBoxPrompt> prompts) override;

  /// Request body for one slice (exposed for shims and tests).
  static std::string encode_request(const SliceImage& image, std::span<const BBoxPrompt> prompts);
  static SliceMask decode_response(std::string_view body, int width, int height);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct BackendConfig {
  std::string kind = "region_grow";  // gt_oracle | region_grow | external
  double tau = 60.0;
  ExternalBackendConfig external;

  static BackendConfig from_json_text(std::string_view text);
  std::string to_json_text() const;
};

/// gt may be null except for gt_oracle, which then throws MissingGroundTruth at call time.
std::unique_ptr<SegmenterBackend> make_backend(const BackendConfig& cfg, std::shared_ptr<const MaskVolume> gt);

}  // namespace g2s

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gaze2seg/gaze.hpp"
#include "gaze2seg/image.hpp"
#include "gaze2seg/volume_io.hpp"

namespace g2s {

/// Gaussian gaze density normalized to max 1 (all zero without samples).
struct Heatmap {
  Image2D<double> values;
  double sigma_px = 0.0;

  int width() const { return values.width; }
  int height() const { return values.height; }
  bool empty() const;
};

/// Default bandwidth: 25 px at 512 px width, scaled linearly with width.
double default_sigma_px(std::int64_t nx);
/// Default speckle filter: 50 px at 512x512, scaled with slice area.
std::size_t default_min_area_px(std::int64_t nx, std::int64_t ny);

/// Sum of exp(-|p-g|^2 / 2 sigma^2) within 3 sigma of each sample, divided
/// by the max. Samples are accumulated in sorted order, so the result is
/// bit-identical for any permutation of the input.
Heatmap accumulate_heatmap(std::span<const GazeSample> samples, int width, int height, double sigma_px);

struct CoarseMask {
  SliceMask mask;
  int component_count = 0;
};

/// 1-D Lloyd's K-Means over heatmap intensities (min/max initialization),
/// foreground = highest-centroid cluster, 8-connected components smaller
/// than min_area_px dropped. Throws EmptyHeatmap on an all-zero heatmap.
CoarseMask kmeans_coarse_mask(const Heatmap& h, int k = 2, std::size_t min_area_px = 50, std::uint64_t seed = 0);

/// Centroids of a 1-D Lloyd run, exposed for testing.
struct KMeans1D {
  std::vector<double> centroids;     // ascending
  std::vector<std::uint8_t> labels;  // per input value
  int iterations = 0;
};
KMeans1D kmeans_1d(std::span<const double> values, int k, std::uint64_t seed = 0);

/// 8-connected component labels (0 = background, 1..n in raster order of first pixel).
struct Components {
  Image2D<std::int32_t> labels;
  std::vector<std::size_t> areas;  // index 0 unused
  int count() const { return static_cast<int>(areas.size()) - 1; }
};
Components label_components(const SliceMask& m);

struct BBoxPrompt {
  std::int64_t slice = 0;
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive

  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  friend bool operator==(const BBoxPrompt&, const BBoxPrompt&) = default;
};

/// One box per 8-connected component, grown by margin_px and clipped,
/// sorted by (y0, x0).
std::vector<BBoxPrompt> extract_bboxes(const SliceMask& m, std::int64_t slice, int margin_px = 3);

struct PromptStrategy {
  enum class Kind { kFirstSlice, kAllSlices, kBudget };
  Kind kind = Kind::kAllSlices;
  int budget = 30;

  static PromptStrategy first_slice() { return {Kind::kFirstSlice, 0}; }
  static PromptStrategy all_slices() { return {Kind::kAllSlices, 0}; }
  static PromptStrategy budget_n(int n) { return {Kind::kBudget, n}; }

  /// "first_slice", "all_slices", "budget_<n>".
  std::string name() const;
  static PromptStrategy parse(std::string_view s);
  friend bool operator==(const PromptStrategy&, const PromptStrategy&) = default;
};

/// Slices to prompt within the inclusive organ extent.
std::vector<std::int64_t> select_slices(std::int64_t z_lo, std::int64_t z_hi, const PromptStrategy& strategy);

struct PromptPlan {
  PromptStrategy strategy;
  std::vector<std::int64_t> prompted_slices;  // sorted
  std::vector<BBoxPrompt> prompts;            // grouped by slice, ascending

  std::vector<BBoxPrompt> prompts_for(std::int64_t slice) const;
  std::string to_json() const;
  static PromptPlan from_json(std::string_view text);
};

struct GazePromptParams {
  double sigma_px = 0.0;  // 0 = default_sigma_px(nx)
  int k = 2;
  std::optional<std::size_t> min_area_px;  // default_min_area_px when unset
  int margin_px = 3;
  std::uint64_t seed = 0;
};

/// Heatmap -> K-Means -> boxes for each candidate slice that has gaze.
/// Slices without samples, or whose coarse mask is empty, get no prompts
/// and are left out of prompted_slices.
PromptPlan build_gaze_plan(const GazeStream& stream, const Dims& dims, const std::vector<std::int64_t>& candidates,
                           const PromptStrategy& strategy, const GazePromptParams& params);

/// Tight (margin 0) boxes around each ground-truth component on each candidate slice.
PromptPlan build_gt_bbox_plan(const MaskVolume& gt, const std::vector<std::int64_t>& candidates,
                              const PromptStrategy& strategy);

}  // namespace g2s

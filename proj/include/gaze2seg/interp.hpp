#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "gaze2seg/image.hpp"
#include "gaze2seg/volume_io.hpp"

namespace g2s {

struct PromptPlan;

// Chamfer weights of the 3x3 kernel: axial steps cost 3, diagonal steps cost 4.
// Distances are kept as integers in thirds of a pixel; divide by 3 for pixels.
inline constexpr std::int32_t kChamferAxial = 3;
inline constexpr std::int32_t kChamferDiagonal = 4;
inline constexpr std::int32_t kChamferUnreachable = INT32_MAX / 2;

/// Two-pass (forward raster, backward raster) chamfer DT from every pixel to
/// the nearest nonzero pixel of `sources`. Source pixels are 0; with no
/// sources every pixel is kChamferUnreachable.
Image2D<std::int32_t> chamfer_distance(const SliceMask& sources);

/// Signed chamfer distance: +d inside the foreground, -d outside, where d is
/// the distance to the nearest pixel of the opposite class (1.0 at the first layer).
struct SignedDistanceMap {
  Image2D<std::int32_t> thirds;

  int width() const { return thirds.width; }
  int height() const { return thirds.height; }
  double operator()(int x, int y) const { return thirds(x, y) / 3.0; }
  std::vector<double> values() const;
};

/// Throws AllSameClass for all-foreground or all-background masks.
SignedDistanceMap chamfer_sdt(const SliceMask& mask);

/// Zero-crossing of (1-t)*sdt(a) + t*sdt(b); ties count as foreground.
/// Empty/full slices are handled with a plateau so the other shape tapers
/// toward its medial maximum instead of vanishing abruptly.
SliceMask interpolate_masks(const SliceMask& a, const SliceMask& b, double t);

enum class SliceTag : std::uint8_t { kSegmented, kInterpolated, kEmpty };
const char* slice_tag_name(SliceTag t) noexcept;

/// Per-slice masks over an inclusive z range.
struct Masklet {
  std::int64_t z_lo = 0;
  std::int64_t z_hi = -1;
  std::vector<SliceMask> masks;
  std::vector<SliceTag> tags;
  std::shared_ptr<const PromptPlan> plan;  // provenance, may be null

  std::size_t size() const { return masks.size(); }
  const SliceMask& mask_at(std::int64_t z) const { return masks.at(static_cast<std::size_t>(z - z_lo)); }
  SliceTag tag_at(std::int64_t z) const { return tags.at(static_cast<std::size_t>(z - z_lo)); }

  /// Full-volume mask; slices outside [z_lo, z_hi] are zero.
  MaskVolume to_mask_volume(const Dims& dims, const Spacing& spacing, std::string label = {}) const;
};

struct FillOptions {
  /// Physical z position per slice index (mm). When set, interpolation
  /// weights follow physical distance instead of slice index.
  std::optional<std::vector<double>> slice_positions_mm;
  /// Worker threads for independent gaps; 0 = hardware concurrency.
  unsigned threads = 1;
};

/// Prompted slices keep their masks; gaps between consecutive prompted
/// slices are interpolated; everything else in [z_lo, z_hi] is empty.
Masklet fill_masklet(const std::map<std::int64_t, SliceMask>& segmented, std::int64_t z_lo, std::int64_t z_hi,
                     const FillOptions& opts = {});

}  // namespace g2s

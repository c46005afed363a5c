#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gaze2seg/image.hpp"
#include "gaze2seg/volume_io.hpp"

namespace g2s {

/// Eye-tracker sampling rate; synthetic streams step at this rate.
inline constexpr double kTrackerRateHz = 90.0;
inline constexpr double kSampleIntervalMs = 1000.0 / kTrackerRateHz;

enum class GazeSource { kRecorded, kSynthetic, kLive };
const char* gaze_source_name(GazeSource s) noexcept;

/// One tracker sample in image pixel coordinates, bound to a slice.
struct GazeSample {
  double t_ms = 0.0;
  double x_px = 0.0;
  double y_px = 0.0;
  std::int64_t slice = 0;
  bool clamped = false;

  friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

struct GazeStream {
  std::vector<GazeSample> samples;
  GazeSource source = GazeSource::kRecorded;

  std::vector<GazeSample> on_slice(std::int64_t z) const;
  /// Slices that received at least one sample.
  std::set<std::int64_t> slices() const;
};

/// Screen px -> image px: (s - origin) / scale.
struct ViewportTransform {
  double img_x0 = 0.0;
  double img_y0 = 0.0;
  double scale = 1.0;

  std::array<double, 2> to_image(double sx, double sy) const { return {(sx - img_x0) / scale, (sy - img_y0) / scale}; }
  std::array<double, 2> to_screen(double x, double y) const { return {x * scale + img_x0, y * scale + img_y0}; }
};

/// Clamps to the nearest boundary pixel of an nx x ny slice. Returns true when clamping was needed.
bool clamp_to_image(GazeSample& s, std::int64_t nx, std::int64_t ny);

struct GazeLog {
  ViewportTransform viewport;
  GazeStream stream;
  std::size_t clamped = 0;
};

/// JSONL: {"kind":"viewport",...} first, then {"kind":"gaze","t_ms","sx","sy","slice"} records.
/// Errors carry the 1-based line number.
GazeLog parse_gaze_log_text(std::string_view text, const Dims& dims);
GazeLog parse_gaze_log(const std::filesystem::path& path, const Dims& dims);
std::string serialize_gaze_log(const ViewportTransform& viewport, const GazeStream& stream);

struct SynthGazeParams {
  int n_points = 90;  // one second at 90 Hz
  double inside_ratio = 0.8;
  double band_px = 30.0;
  std::uint64_t seed = 0;
  std::int64_t slice = 0;
  double t0_ms = 0.0;
};

struct SyntheticGaze {
  GazeStream stream;
  std::vector<std::string> warnings;
};

/// round(n*inside_ratio) samples uniform over foreground pixels, the rest
/// uniform over background pixels within chamfer distance band_px of the
/// foreground. Timestamps step by 1000/90 ms from t0_ms.
SyntheticGaze synthesize_gaze(const SliceMask& gt, const SynthGazeParams& params);

/// Synthesizes every listed slice with seed ^ slice; timestamps continue
/// across slices in list order. Slices with empty ground truth are skipped.
SyntheticGaze synthesize_gaze_volume(const MaskVolume& gt, const std::vector<std::int64_t>& slices,
                                     const SynthGazeParams& params);

}  // namespace g2s

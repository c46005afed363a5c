#include "gaze2seg/gaze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gaze2seg/interp.hpp"
#include "gaze2seg/rng.hpp"

namespace g2s {

using nlohmann::json;

const char* gaze_source_name(GazeSource s) noexcept {
  switch (s) {
    case GazeSource::kRecorded: return "recorded";
    case GazeSource::kSynthetic: return "synthetic";
    case GazeSource::kLive: return "live";
  }
  return "?";
}

std::vector<GazeSample> GazeStream::on_slice(std::int64_t z) const {
  std::vector<GazeSample> out;
  std::copy_if(samples.begin(), samples.end(), std::back_inserter(out), [z](const auto& s) { return s.slice == z; });
  return out;
}

std::set<std::int64_t> GazeStream::slices() const {
  std::set<std::int64_t> out;
  for (const auto& s : samples) out.insert(s.slice);
  return out;
}

bool clamp_to_image(GazeSample& s, std::int64_t nx, std::int64_t ny) {
  const double cx = std::clamp(s.x_px, 0.0, static_cast<double>(nx - 1));
  const double cy = std::clamp(s.y_px, 0.0, static_cast<double>(ny - 1));
  const bool changed = cx != s.x_px || cy != s.y_px || std::isnan(s.x_px) || std::isnan(s.y_px);
  s.x_px = cx;
  s.y_px = cy;
  s.clamped = s.clamped || changed;
  return changed;
}

GazeLog parse_gaze_log_text(std::string_view text, const Dims& dims) {
  GazeLog log;
  bool have_viewport = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    json rec;
    std::string kind;
    try {
      rec = json::parse(line);
      kind = rec.at("kind").get<std::string>();
    } catch (const json::exception& e) {
      throw LineError(Errc::kMalformedLine, line_no, std::string("malformed gaze record: ") + e.what());
    }

    try {
      if (kind == "viewport") {
        ViewportTransform vp{rec.at("img_x0").get<double>(), rec.at("img_y0").get<double>(),
                             rec.at("scale").get<double>()};
        if (!(vp.scale > 0.0)) throw LineError(Errc::kMalformedLine, line_no, "viewport scale must be > 0");
        log.viewport = vp;
        have_viewport = true;
      } else if (kind == "gaze") {
        if (!have_viewport) throw LineError(Errc::kMissingViewport, line_no, "gaze record before viewport record");
        GazeSample s;
        s.t_ms = rec.at("t_ms").get<double>();
        const auto [x, y] = log.viewport.to_image(rec.at("sx").get<double>(), rec.at("sy").get<double>());
        s.x_px = x;
        s.y_px = y;
        s.slice = rec.at("slice").get<std::int64_t>();
        if (!(s.t_ms >= 0.0)) throw LineError(Errc::kMalformedLine, line_no, "t_ms must be >= 0");
        if (!log.stream.samples.empty() && s.t_ms < log.stream.samples.back().t_ms) {
          throw LineError(Errc::kNonMonotonicTime, line_no, "t_ms decreases");
        }
        if (s.slice < 0 || s.slice >= dims.nz) {
          throw LineError(Errc::kSliceOutOfRange, line_no, "slice " + std::to_string(s.slice) + " out of range");
        }
        if (clamp_to_image(s, dims.nx, dims.ny)) ++log.clamped;
        log.stream.samples.push_back(s);
      } else {
        throw LineError(Errc::kMalformedLine, line_no, "unknown record kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw LineError(Errc::kMalformedLine, line_no, std::string("bad field: ") + e.what());
    }
  }
  if (!have_viewport) throw Error(Errc::kMissingViewport, "gaze log has no viewport record");
  log.stream.source = GazeSource::kRecorded;
  return log;
}

GazeLog parse_gaze_log(const std::filesystem::path& path, const Dims& dims) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIo, "cannot open gaze log " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_gaze_log_text(ss.str(), dims);
}

std::string serialize_gaze_log(const ViewportTransform& vp, const GazeStream& stream) {
  std::string out;
  json v = {{"kind", "viewport"}, {"img_x0", vp.img_x0}, {"img_y0", vp.img_y0}, {"scale", vp.scale}};
  out += v.dump();
  out += '\n';
  for (const auto& s : stream.samples) {
    const auto [sx, sy] = vp.to_screen(s.x_px, s.y_px);
    json g = {{"kind", "gaze"}, {"t_ms", s.t_ms}, {"sx", sx}, {"sy", sy}, {"slice", s.slice}};
    out += g.dump();
    out += '\n';
  }
  return out;
}

SyntheticGaze synthesize_gaze(const SliceMask& gt, const SynthGazeParams& p) {
  if (p.n_points < 1) fail(Errc::kInvalidArgument, "n_points must be >= 1");
  if (!(p.inside_ratio > 0.0 && p.inside_ratio <= 1.0)) fail(Errc::kInvalidArgument, "inside_ratio must be in (0,1]");
  if (!(p.band_px >= 0.0)) fail(Errc::kInvalidArgument, "band_px must be >= 0");

  std::vector<std::uint32_t> inside;
  std::vector<std::uint32_t> background;
  for (std::size_t i = 0; i < gt.size(); ++i) (gt.data[i] ? inside : background).push_back(static_cast<std::uint32_t>(i));
  if (inside.empty()) fail(Errc::kEmptyMask, "cannot synthesize gaze on an empty mask");

  SyntheticGaze out;
  out.stream.source = GazeSource::kSynthetic;

  const auto n_inside = static_cast<int>(std::lround(p.n_points * p.inside_ratio));
  const int n_outside = p.n_points - n_inside;

  std::vector<std::uint32_t> band;
  if (n_outside > 0) {
    const auto dist = chamfer_distance(gt);
    const double limit = 3.0 * p.band_px;
    for (auto i : background) {
      if (dist.data[i] <= limit) band.push_back(i);
    }
    if (band.empty() && !background.empty()) {
      out.warnings.push_back("outside band is empty; sampling outside points from the whole background");
      band = background;
    } else if (background.empty()) {
      out.warnings.push_back("mask fills the slice; outside points fall back to foreground pixels");
      band = inside;
    }
  }

  SplitMix64 rng(p.seed);
  out.stream.samples.reserve(static_cast<std::size_t>(p.n_points));
  auto emit = [&](const std::vector<std::uint32_t>& pool) {
    const std::uint32_t idx = pool[rng.uniform_index(pool.size())];
    GazeSample s;
    s.t_ms = p.t0_ms + static_cast<double>(out.stream.samples.size()) * kSampleIntervalMs;
    s.x_px = static_cast<double>(idx % static_cast<std::uint32_t>(gt.width));
    s.y_px = static_cast<double>(idx / static_cast<std::uint32_t>(gt.width));
    s.slice = p.slice;
    out.stream.samples.push_back(s);
  };
  for (int i = 0; i < n_inside; ++i) emit(inside);
  for (int i = 0; i < n_outside; ++i) emit(band);
  return out;
}

SyntheticGaze synthesize_gaze_volume(const MaskVolume& gt, const std::vector<std::int64_t>& slices,
                                     const SynthGazeParams& params) {
  SyntheticGaze out;
  out.stream.source = GazeSource::kSynthetic;
  double t = params.t0_ms;
  for (auto z : slices) {
    const auto m = gt.slice(z);
    if (count_foreground(m) == 0) continue;
    SynthGazeParams p = params;
    p.slice = z;
    p.seed = params.seed ^ static_cast<std::uint64_t>(z);
    p.t0_ms = t;
    auto part = synthesize_gaze(m, p);
    for (auto& w : part.warnings) out.warnings.push_back("slice " + std::to_string(z) + ": " + w);
    out.stream.samples.insert(out.stream.samples.end(), part.stream.samples.begin(), part.stream.samples.end());
    t += static_cast<double>(p.n_points) * kSampleIntervalMs;
  }
  return out;
}

}  // namespace g2s

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gaze2seg/gaze.hpp"
#include "gaze2seg/interp.hpp"
#include "gaze2seg/promptgen.hpp"
#include "gaze2seg/segmenter.hpp"
#include "gaze2seg/volume_io.hpp"

namespace g2s {

// --- metrics ---------------------------------------------------------------

/// 2|P∩G| / (|P|+|G|); 1.0 when both are empty. Throws DimMismatch.
double dice(const MaskVolume& pred, const MaskVolume& gt);
double dice(const SliceMask& pred, const SliceMask& gt);

// --- phantoms ---------------------------------------------------------------

/// Ellipsoid whose in-plane center drifts and whose in-plane radii taper
/// linearly along z, so neighbouring slices differ in both shape and position.
struct PhantomParams {
  Dims dims{128, 128, 128};
  Spacing spacing{1.0, 1.0, 1.0};
  std::array<double, 3> center{64.0, 64.0, 64.0};
  std::array<double, 3> radii{20.0, 20.0, 20.0};
  std::array<double, 2> drift_per_slice{0.0, 0.0};
  double taper = 0.0;  // in-plane radius scale 1 + taper*(z-cz)/rz, |taper| < 1
  double inside_hu = 60.0;
  double outside_hu = -40.0;
  double noise_sd = 0.0;
  std::string label = "phantom";
};

struct Phantom {
  Volume image;  // int16 HU
  MaskVolume gt;
};

/// Throws InvalidArgument when the ellipsoid is degenerate or leaves the grid.
Phantom make_phantom(const PhantomParams& params, std::uint64_t seed);

struct PhantomSuiteParams {
  int count = 10;
  Dims dims{128, 128, 128};
  double inside_hu = 60.0;
  double outside_hu = -40.0;
  double noise_sd = 20.0;
  std::uint64_t seed = 2025;
};

/// Randomized, seed-deterministic ellipsoid cases whose organ extent covers
/// at least 100 slices on 128-slice grids (80% of nz in general).
std::vector<PhantomParams> phantom_suite(const PhantomSuiteParams& params);

// --- experiments ------------------------------------------------------------

struct PromptSource {
  enum class Kind { kGtBbox, kSyntheticGaze, kRecordedGaze };
  Kind kind = Kind::kGtBbox;
  SynthGazeParams synth;          // kSyntheticGaze; band_px <= 0 means 30 px scaled to width/512
  GazePromptParams gaze;          // both gaze kinds
  std::filesystem::path gaze_log; // kRecordedGaze fallback when a case has none

  std::string name() const;
  static PromptSource gt_bbox() { return {}; }
  static PromptSource synthetic_gaze() {
    PromptSource s;
    s.kind = Kind::kSyntheticGaze;
    s.synth.band_px = 0.0;
    return s;
  }
};

struct CaseData {
  std::string id;
  std::string organ;
  std::shared_ptr<const Volume> image;
  std::shared_ptr<const MaskVolume> gt;
  std::filesystem::path gaze_log;
};

/// One cell of the grid: exactly one prompt source, strategy and backend.
struct ExperimentSpec {
  PromptSource source;
  PromptStrategy strategy;
  BackendConfig backend;
  std::uint64_t seed = 0;
  unsigned slice_threads = 1;
};

struct EvalRecord {
  std::string case_id;
  std::string organ;
  std::string strategy;
  std::string source;
  std::string backend;
  double dice = 0.0;
  double prompt_ms = 0.0;
  double segment_ms = 0.0;
  double interp_ms = 0.0;
  double total_ms = 0.0;
  std::size_t prompted_slices = 0;
  bool failed = false;
  std::string error;
  std::string masklet_path;
};

struct CaseResult {
  EvalRecord record;
  std::optional<Masklet> masklet;
  PromptPlan plan;
};

/// Full pipeline for one case and cell. Module errors are captured in the
/// record (failed = true) rather than thrown.
CaseResult run_case(const CaseData& data, const ExperimentSpec& spec);

struct DatasetSpec {
  std::optional<PhantomSuiteParams> phantom;
  struct VolumeCase {
    std::string id;
    std::string organ;
    std::filesystem::path image;
    std::filesystem::path gt;
    std::optional<std::int64_t> label_id;
    std::filesystem::path gaze_log;
  };
  std::vector<VolumeCase> volumes;
};

struct GridSpec {
  DatasetSpec dataset;
  std::vector<PromptSource> sources;
  std::vector<PromptStrategy> strategies;
  std::vector<BackendConfig> backends;
  std::filesystem::path output_dir;
  unsigned parallelism = 1;
  bool save_masklets = true;
  std::uint64_t seed = 0;
};

/// Parses the JSON grid spec; relative paths resolve against base_dir.
/// Throws InvalidSpec.
GridSpec parse_grid_spec(std::string_view json_text, const std::filesystem::path& base_dir);
GridSpec load_grid_spec(const std::filesystem::path& path);

std::vector<CaseData> materialize_cases(const DatasetSpec& dataset);

struct GridResult {
  std::vector<EvalRecord> records;
  std::size_t failures = 0;
};

/// Runs every grid cell on a worker pool. With output_dir set, also writes
/// the reports and the masklets.
GridResult run_experiment(const GridSpec& spec);
GridResult run_experiment(const GridSpec& spec, const std::vector<CaseData>& cases);

// --- reports ---------------------------------------------------------------

inline constexpr const char* kCsvHeader = "case,organ,strategy,source,backend,dice,prompt_ms,segment_ms,interp_ms,total_ms";

std::string records_to_csv(const std::vector<EvalRecord>& records);
std::string records_to_json(const std::vector<EvalRecord>& records);
/// Mean ± sd per (backend, source, strategy) cell, laid out like a results table.
std::string summary_markdown(const std::vector<EvalRecord>& records);
void write_reports(const std::vector<EvalRecord>& records, const std::filesystem::path& dir);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};
MeanSd mean_sd(const std::vector<double>& xs);

}  // namespace g2s

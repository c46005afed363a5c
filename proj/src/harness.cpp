#include "gaze2seg/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gaze2seg/parallel.hpp"
#include "gaze2seg/rng.hpp"

namespace g2s {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double dice_counts(std::size_t inter, std::size_t p, std::size_t g) {
  if (p + g == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(p + g);
}

}  // namespace

double dice(const MaskVolume& pred, const MaskVolume& gt) {
  if (!(pred.dims() == gt.dims())) fail(Errc::kDimMismatch, "dice: prediction and ground truth dims differ");
  std::size_t inter = 0, p = 0, g = 0;
  const auto a = pred.voxels();
  const auto b = gt.voxels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    p += x;
    g += y;
    inter += x && y;
  }
  return dice_counts(inter, p, g);
}

double dice(const SliceMask& pred, const SliceMask& gt) {
  if (!pred.same_shape(gt)) fail(Errc::kDimMismatch, "dice: slice dims differ");
  std::size_t inter = 0, p = 0, g = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool x = pred.data[i] != 0, y = gt.data[i] != 0;
    p += x;
    g += y;
    inter += x && y;
  }
  return dice_counts(inter, p, g);
}

std::string PromptSource::name() const {
  switch (kind) {
    case Kind::kGtBbox: return "gt_bbox";
    case Kind::kSyntheticGaze: return "synthetic_gaze";
    case Kind::kRecordedGaze: return "recorded_gaze";
  }
  return "?";
}

// --- single case -------------------------------------------------------------

CaseResult run_case(const CaseData& data, const ExperimentSpec& spec) {
  CaseResult result;
  EvalRecord& rec = result.record;
  rec.case_id = data.id;
  rec.organ = data.organ;
  rec.strategy = spec.strategy.name();
  rec.source = spec.source.name();
  rec.backend = spec.backend.kind;

  const auto t_total = Clock::now();
  try {
    if (!data.image) fail(Errc::kInvalidArgument, "case has no image");
    const Dims& dims = data.image->dims();
    if (data.gt && !(data.gt->dims() == dims)) fail(Errc::kDimMismatch, "ground truth dims differ from the image");

    // Prompt construction.
    const auto t_prompt = Clock::now();
    PromptPlan plan;
    switch (spec.source.kind) {
      case PromptSource::Kind::kGtBbox:
      case PromptSource::Kind::kSyntheticGaze: {
        if (!data.gt) fail(Errc::kMissingGroundTruth, rec.source + " prompts need ground truth");
        const auto extent = data.gt->z_extent();
        if (!extent) fail(Errc::kEmptyMask, "ground truth is empty");
        const auto candidates = select_slices((*extent)[0], (*extent)[1], spec.strategy);
        if (spec.source.kind == PromptSource::Kind::kGtBbox) {
          plan = build_gt_bbox_plan(*data.gt, candidates, spec.strategy);
        } else {
          SynthGazeParams sp = spec.source.synth;
          if (!(sp.band_px > 0.0)) sp.band_px = 30.0 * static_cast<double>(dims.nx) / 512.0;
          sp.seed ^= spec.seed;
          const auto gaze = synthesize_gaze_volume(*data.gt, candidates, sp);
          plan = build_gaze_plan(gaze.stream, dims, candidates, spec.strategy, spec.source.gaze);
        }
        break;
      }
      case PromptSource::Kind::kRecordedGaze: {
        const fs::path log_path = !data.gaze_log.empty() ? data.gaze_log : spec.source.gaze_log;
        if (log_path.empty()) fail(Errc::kInvalidSpec, "recorded_gaze needs a gaze log");
        const auto log = parse_gaze_log(log_path, dims);
        const auto gazed = log.stream.slices();
        if (gazed.empty()) fail(Errc::kNoPrompts, "gaze log has no samples");
        const auto candidates = select_slices(*gazed.begin(), *gazed.rbegin(), spec.strategy);
        plan = build_gaze_plan(log.stream, dims, candidates, spec.strategy, spec.source.gaze);
        break;
      }
    }
    rec.prompt_ms = ms_since(t_prompt);
    if (plan.prompted_slices.empty()) fail(Errc::kNoPrompts, "no slice produced a prompt");
    rec.prompted_slices = plan.prompted_slices.size();

    // Segmentation of prompted slices.
    const auto backend = make_backend(spec.backend, data.gt);
    const auto t_seg = Clock::now();
    std::vector<SliceSegmentation> segs(plan.prompted_slices.size());
    parallel_for(segs.size(), spec.slice_threads, [&](std::size_t i) {
      const auto z = plan.prompted_slices[i];
      const auto prompts = plan.prompts_for(z);
      segs[i] = segment_slice(*backend, data.image->slice_image(z), z, prompts);
    });
    rec.segment_ms = ms_since(t_seg);

    // Shape-based fill of the remaining slices.
    const auto t_interp = Clock::now();
    std::map<std::int64_t, SliceMask> segmented;
    for (auto& s : segs) segmented.emplace(s.slice, std::move(s.mask));
    Masklet masklet = fill_masklet(segmented, 0, dims.nz - 1);
    rec.interp_ms = ms_since(t_interp);

    masklet.plan = std::make_shared<PromptPlan>(plan);
    rec.total_ms = ms_since(t_total);
    if (data.gt) rec.dice = dice(masklet.to_mask_volume(dims, data.image->spacing()), *data.gt);
    result.masklet = std::move(masklet);
    result.plan = std::move(plan);
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.total_ms = ms_since(t_total);
  }
  return result;
}

// --- spec parsing ------------------------------------------------------------

namespace {

[[noreturn]] void spec_error(const std::string& what) { fail(Errc::kInvalidSpec, what); }

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

PromptSource parse_source(const json& j, const fs::path& base) {
  PromptSource s;
  const std::string kind = j.is_string() ? j.get<std::string>() : j.at("kind").get<std::string>();
  if (kind == "gt_bbox") {
    s.kind = PromptSource::Kind::kGtBbox;
  } else if (kind == "synthetic_gaze") {
    s = PromptSource::synthetic_gaze();
  } else if (kind == "recorded_gaze") {
    s.kind = PromptSource::Kind::kRecordedGaze;
  } else {
    spec_error("unknown prompt source '" + kind + "'");
  }
  if (!j.is_object()) return s;
  s.synth.n_points = j.value("n_points", s.synth.n_points);
  s.synth.inside_ratio = j.value("inside_ratio", s.synth.inside_ratio);
  s.synth.band_px = j.value("band_px", s.synth.band_px);
  s.synth.seed = j.value("seed", s.synth.seed);
  s.gaze.sigma_px = j.value("sigma_px", s.gaze.sigma_px);
  s.gaze.k = j.value("k", s.gaze.k);
  if (j.contains("min_area_px")) s.gaze.min_area_px = j["min_area_px"].get<std::size_t>();
  s.gaze.margin_px = j.value("margin_px", s.gaze.margin_px);
  if (j.contains("path")) s.gaze_log = resolve(base, j["path"].get<std::string>());
  if (s.synth.n_points < 1) spec_error("n_points must be >= 1");
  if (!(s.synth.inside_ratio > 0.0 && s.synth.inside_ratio <= 1.0)) spec_error("inside_ratio must be in (0,1]");
  if (s.gaze.k < 2) spec_error("k must be >= 2");
  if (s.gaze.sigma_px < 0.0) spec_error("sigma_px must be > 0");
  return s;
}

template <class T, class F>
std::vector<T> parse_list(const json& root, const char* plural, const char* singular, F&& parse_one) {
  std::vector<T> out;
  if (root.contains(plural)) {
    if (!root[plural].is_array()) spec_error(std::string(plural) + " must be an array");
    for (const auto& j : root[plural]) out.push_back(parse_one(j));
  } else if (root.contains(singular)) {
    out.push_back(parse_one(root[singular]));
  }
  if (out.empty()) spec_error(std::string("spec needs at least one entry in '") + plural + "'");
  return out;
}

}  // namespace

GridSpec parse_grid_spec(std::string_view text, const fs::path& base_dir) {
  GridSpec g;
  try {
    const auto root = json::parse(text);
    if (!root.is_object()) spec_error("spec must be a JSON object");
    g.seed = root.value("seed", std::uint64_t{0});
    g.parallelism = root.value("parallelism", 1u);
    g.save_masklets = root.value("save_masklets", true);
    if (root.contains("output_dir")) g.output_dir = resolve(base_dir, root["output_dir"].get<std::string>());

    const auto& ds = root.at("dataset");
    if (ds.contains("phantom")) {
      const auto& pj = ds["phantom"];
      PhantomSuiteParams ps;
      ps.count = pj.value("count", ps.count);
      if (pj.contains("dims")) {
        const auto d = pj["dims"].get<std::vector<std::int64_t>>();
        if (d.size() != 3) spec_error("phantom dims must have 3 entries");
        ps.dims = {d[0], d[1], d[2]};
      }
      ps.inside_hu = pj.value("inside_hu", ps.inside_hu);
      ps.outside_hu = pj.value("outside_hu", ps.outside_hu);
      ps.noise_sd = pj.value("noise_sd", ps.noise_sd);
      ps.seed = pj.value("seed", ps.seed);
      if (ps.count < 1) spec_error("phantom count must be >= 1");
      if (ps.dims.nx < 16 || ps.dims.ny < 16 || ps.dims.nz < 8) spec_error("phantom dims too small");
      if (ps.noise_sd < 0.0) spec_error("noise_sd must be >= 0");
      g.dataset.phantom = ps;
    }
    if (ds.contains("cases")) {
      for (const auto& c : ds["cases"]) {
        DatasetSpec::VolumeCase vc;
        vc.image = resolve(base_dir, c.at("image").get<std::string>());
        vc.gt = c.contains("gt") ? resolve(base_dir, c["gt"].get<std::string>()) : fs::path{};
        vc.id = c.value("id", vc.image.stem().string());
        vc.organ = c.value("organ", std::string("organ"));
        if (c.contains("label")) vc.label_id = c["label"].get<std::int64_t>();
        if (c.contains("gaze_log")) vc.gaze_log = resolve(base_dir, c["gaze_log"].get<std::string>());
        if (!fs::exists(vc.image)) spec_error("image not found: " + vc.image.string());
        if (!vc.gt.empty() && !fs::exists(vc.gt)) spec_error("ground truth not found: " + vc.gt.string());
        if (!vc.gaze_log.empty() && !fs::exists(vc.gaze_log)) spec_error("gaze log not found: " + vc.gaze_log.string());
        g.dataset.volumes.push_back(std::move(vc));
      }
    }
    if (!g.dataset.phantom && g.dataset.volumes.empty()) spec_error("dataset needs 'phantom' or 'cases'");

    g.sources = parse_list<PromptSource>(root, "prompt_sources", "prompt_source",
                                         [&](const json& j) { return parse_source(j, base_dir); });
    g.strategies = parse_list<PromptStrategy>(root, "strategies", "strategy", [](const json& j) {
      try {
        return PromptStrategy::parse(j.get<std::string>());
      } catch (const Error& e) {
        spec_error(e.what());
      }
    });
    g.backends = parse_list<BackendConfig>(root, "backends", "backend", [](const json& j) {
      try {
        return BackendConfig::from_json_text(j.is_string() ? json{{"kind", j}}.dump() : j.dump());
      } catch (const Error& e) {
        spec_error(e.what());
      }
    });
    for (const auto& s : g.sources) {
      if (s.kind != PromptSource::Kind::kRecordedGaze) continue;
      if (!s.gaze_log.empty() && !fs::exists(s.gaze_log)) spec_error("gaze log not found: " + s.gaze_log.string());
      if (s.gaze_log.empty()) {
        for (const auto& v : g.dataset.volumes) {
          if (v.gaze_log.empty()) spec_error("recorded_gaze needs a path or a per-case gaze_log");
        }
        if (g.dataset.phantom) spec_error("recorded_gaze needs a path when the dataset has phantoms");
      }
    }
    for (const auto& b : g.backends) {
      if (b.kind == "external") {
        try {
          ExternalBackend probe(b.external);
        } catch (const Error& e) {
          spec_error(e.what());
        }
      }
    }
  } catch (const json::exception& e) {
    spec_error(std::string("spec JSON: ") + e.what());
  }
  return g;
}

GridSpec load_grid_spec(const fs::path& path) {
  std::ifstream in(path);
  if (!in) spec_error("cannot open spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid_spec(ss.str(), path.parent_path());
}

std::vector<CaseData> materialize_cases(const DatasetSpec& ds) {
  std::vector<CaseData> out;
  if (ds.phantom) {
    const auto params = phantom_suite(*ds.phantom);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto ph = make_phantom(params[i], ds.phantom->seed + i);
      char id[32];
      std::snprintf(id, sizeof id, "phantom_%02zu", i);
      out.push_back({id, params[i].label, std::make_shared<const Volume>(std::move(ph.image)),
                     std::make_shared<const MaskVolume>(std::move(ph.gt)), {}});
    }
  }
  for (const auto& vc : ds.volumes) {
    CaseData c;
    c.id = vc.id;
    c.organ = vc.organ;
    auto img = load_any(vc.image);
    if (!std::holds_alternative<Volume>(img)) fail(Errc::kInvalidSpec, vc.image.string() + " is a mask, not an image");
    c.image = std::make_shared<const Volume>(std::get<Volume>(std::move(img)));
    if (!vc.gt.empty()) {
      NiftiOptions opts{true, vc.label_id, vc.organ};
      auto gt = load_any(vc.gt, opts);
      if (!std::holds_alternative<MaskVolume>(gt)) fail(Errc::kInvalidSpec, vc.gt.string() + " is not a mask");
      c.gt = std::make_shared<const MaskVolume>(std::get<MaskVolume>(std::move(gt)));
    }
    c.gaze_log = vc.gaze_log;
    out.push_back(std::move(c));
  }
  return out;
}

// --- grid ---------------------------------------------------------------

GridResult run_experiment(const GridSpec& spec) { return run_experiment(spec, materialize_cases(spec.dataset)); }

GridResult run_experiment(const GridSpec& spec, const std::vector<CaseData>& cases) {
  struct Task {
    std::size_t case_idx;
    ExperimentSpec cell;
  };
  std::vector<Task> tasks;
  for (std::size_t c = 0; c < cases.size(); ++c) {
    for (const auto& b : spec.backends) {
      for (const auto& s : spec.sources) {
        for (const auto& st : spec.strategies) {
          // Per-case seed so every case draws its own synthetic gaze.
          SplitMix64 mix(spec.seed + 0x9e3779b97f4a7c15ULL * (c + 1));
          tasks.push_back({c, ExperimentSpec{s, st, b, mix.next(), 1}});
        }
      }
    }
  }

  const bool write = !spec.output_dir.empty();
  if (write) fs::create_directories(spec.output_dir / (spec.save_masklets ? "masklets" : ""));

  GridResult out;
  out.records.resize(tasks.size());
  parallel_for(tasks.size(), spec.parallelism, [&](std::size_t i) {
    const auto& t = tasks[i];
    auto res = run_case(cases[t.case_idx], t.cell);
    if (write && spec.save_masklets && res.masklet) {
      const auto& r = res.record;
      const std::string name = r.case_id + "__" + r.source + "__" + r.strategy + "__" + r.backend + ".mvol";
      const auto& img = *cases[t.case_idx].image;
      save_mvol(res.masklet->to_mask_volume(img.dims(), img.spacing(), r.organ), spec.output_dir / "masklets" / name);
      res.record.masklet_path = (fs::path("masklets") / name).string();
    }
    out.records[i] = std::move(res.record);
  });
  for (const auto& r : out.records) out.failures += r.failed;
  if (write) write_reports(out.records, spec.output_dir);
  return out;
}

}  // namespace g2s

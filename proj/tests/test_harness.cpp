#include <doctest.h>

#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "gaze2seg/harness.hpp"
#include "oracles.hpp"

using namespace g2s;

namespace {

MaskVolume mask_with(Dims d, std::initializer_list<std::size_t> on) {
  std::vector<std::uint8_t> v(d.voxel_count(), 0);
  for (auto i : on) v[i] = 1;
  return MaskVolume(d, Spacing{}, v);
}

std::vector<CaseData> small_cases(int n, double noise = 10.0) {
  PhantomSuiteParams ps;
  ps.count = n;
  ps.dims = {48, 48, 40};
  ps.noise_sd = noise;
  ps.seed = 77;
  DatasetSpec ds;
  ds.phantom = ps;
  return materialize_cases(ds);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("dice identities") {
  const Dims d{10, 10, 2};
  std::vector<std::uint8_t> a(d.voxel_count(), 0), b(d.voxel_count(), 0);
  for (std::size_t i = 0; i < 100; ++i) a[i] = 1;
  for (std::size_t i = 50; i < 150; ++i) b[i] = 1;
  const MaskVolume ma(d, Spacing{}, a), mb(d, Spacing{}, b);
  CHECK(dice(ma, ma) == 1.0);
  CHECK(dice(ma, mb) == 0.5);
  const auto far = mask_with(d, {199});
  CHECK(dice(ma, far) == 0.0);
  const MaskVolume empty(d, Spacing{});
  CHECK(dice(empty, empty) == 1.0);
  CHECK(dice(empty, ma) == 0.0);
  CHECK_THROWS_AS(dice(ma, MaskVolume(Dims{10, 10, 3}, Spacing{})), Error);
  CHECK(dice(ma.slice(0), mb.slice(0)) == doctest::Approx(2.0 * 50 / 150));
}

TEST_CASE("sphere phantom volume") {
  PhantomParams p;
  p.radii = {20, 20, 20};
  const auto ph = make_phantom(p, 1);
  const double expect = 4.0 / 3.0 * std::numbers::pi * 8000.0;
  CHECK(std::abs(static_cast<double>(ph.gt.count()) - expect) <= 0.01 * expect);
  // noiseless image has exactly two values
  std::set<double> seen;
  for (std::int64_t z = 0; z < 128; z += 3)
    for (std::int64_t y = 0; y < 128; y += 2)
      for (std::int64_t x = 0; x < 128; ++x) seen.insert(ph.image.at(x, y, z));
  CHECK(seen == std::set<double>{-40.0, 60.0});
}

TEST_CASE("phantoms are deterministic per seed") {
  PhantomParams p;
  p.radii = {15, 12, 30};
  p.noise_sd = 20;
  p.taper = 0.3;
  p.drift_per_slice = {0.05, -0.05};
  CHECK(make_phantom(p, 9).image == make_phantom(p, 9).image);
  CHECK(make_phantom(p, 9).gt == make_phantom(p, 9).gt);
  CHECK_FALSE(make_phantom(p, 9).image == make_phantom(p, 10).image);
  p.radii = {0, 10, 10};
  CHECK_THROWS_AS(make_phantom(p, 1), Error);
  p.radii = {70, 10, 10};
  CHECK_THROWS_AS(make_phantom(p, 1), Error);
}

TEST_CASE("phantom suite has long organs") {
  const auto suite = phantom_suite(PhantomSuiteParams{});
  REQUIRE(suite.size() == 10);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const auto ph = make_phantom(suite[i], i);
    const auto ext = ph.gt.z_extent();
    REQUIRE(ext.has_value());
    CHECK((*ext)[1] - (*ext)[0] + 1 >= 100);
  }
}

TEST_CASE("oracle with tight boxes on every slice is exact") {
  const auto cases = small_cases(3, 0.0);
  for (const auto& c : cases) {
    ExperimentSpec spec;
    spec.backend.kind = "gt_oracle";
    spec.strategy = PromptStrategy::all_slices();
    const auto r = run_case(c, spec);
    CHECK_FALSE(r.record.failed);
    CHECK(r.record.dice == 1.0);
    CHECK(r.record.total_ms >= r.record.prompt_ms + r.record.segment_ms + r.record.interp_ms - 1e-6);
  }
}

TEST_CASE("strategies and prompt counts") {
  const auto cases = small_cases(1);
  ExperimentSpec spec;
  spec.backend.kind = "region_grow";
  std::size_t prev = 0;
  for (auto s : {PromptStrategy::first_slice(), PromptStrategy::budget_n(8), PromptStrategy::all_slices()}) {
    spec.strategy = s;
    const auto r = run_case(cases[0], spec);
    REQUIRE_FALSE(r.record.failed);
    CHECK(r.record.prompted_slices > prev);
    prev = r.record.prompted_slices;
    CHECK(r.record.dice >= 0.0);
    CHECK(r.record.dice <= 1.0);
    CHECK(r.masklet.has_value());
  }
}

TEST_CASE("synthetic gaze source runs end to end") {
  const auto cases = small_cases(1);
  ExperimentSpec spec;
  spec.source = PromptSource::synthetic_gaze();
  spec.backend.kind = "region_grow";
  spec.seed = 5;
  const auto a = run_case(cases[0], spec);
  const auto b = run_case(cases[0], spec);
  REQUIRE_FALSE(a.record.failed);
  CHECK(a.record.dice > 0.5);
  CHECK(a.record.dice == b.record.dice);
  CHECK(a.plan.to_json() == b.plan.to_json());
}

TEST_CASE("recorded gaze source") {
  const auto dir = oracle::temp_dir("rec");
  auto cases = small_cases(1);
  const auto& gt = *cases[0].gt;
  const auto ext = *gt.z_extent();
  std::vector<std::int64_t> zs;
  for (auto z = ext[0]; z <= ext[1]; z += 4) zs.push_back(z);
  SynthGazeParams sp;
  sp.band_px = 3;
  const auto g = synthesize_gaze_volume(gt, zs, sp);
  std::ofstream(dir / "g.jsonl") << serialize_gaze_log(ViewportTransform{10, 20, 1.5}, g.stream);
  cases[0].gaze_log = dir / "g.jsonl";
  ExperimentSpec spec;
  spec.source.kind = PromptSource::Kind::kRecordedGaze;
  spec.backend.kind = "region_grow";
  const auto r = run_case(cases[0], spec);
  CHECK_FALSE(r.record.failed);
  CHECK(r.record.prompted_slices == zs.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("errors are recorded, not thrown") {
  auto cases = small_cases(1);
  cases[0].gt = nullptr;
  ExperimentSpec spec;
  spec.backend.kind = "gt_oracle";
  const auto r = run_case(cases[0], spec);
  CHECK(r.record.failed);
  CHECK_FALSE(r.record.error.empty());
}

TEST_CASE("grid reports agree with persisted masklets") {
  const auto dir = oracle::temp_dir("grid");
  const std::string text = R"({
    "dataset": {"phantom": {"count": 2, "dims": [40, 40, 32], "noise_sd": 10, "seed": 3}},
    "prompt_sources": ["gt_bbox", {"kind": "synthetic_gaze", "n_points": 60}],
    "strategies": ["first_slice", "budget_5", "all_slices"],
    "backends": ["region_grow", {"kind": "gt_oracle"}],
    "output_dir": "out",
    "parallelism": 2,
    "seed": 11
  })";
  const auto spec = parse_grid_spec(text, dir);
  const auto res = run_experiment(spec);
  CHECK(res.failures == 0);
  REQUIRE(res.records.size() == 2 * 2 * 3 * 2);

  const auto csv = slurp(dir / "out" / "records.csv");
  CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 24);
  const auto js = nlohmann::json::parse(slurp(dir / "out" / "records.json"));
  REQUIRE(js.size() == 24);
  const auto md = slurp(dir / "out" / "summary.md");
  CHECK(md.find("±") != std::string::npos);

  const auto cases = materialize_cases(spec.dataset);
  for (const auto& r : js) {
    const auto path = dir / "out" / r.at("masklet").get<std::string>();
    REQUIRE(std::filesystem::exists(path));
    const auto pred = load_mask_mvol(path);
    const auto it = std::find_if(cases.begin(), cases.end(), [&](const CaseData& c) { return c.id == r.at("case"); });
    REQUIRE(it != cases.end());
    CHECK(dice(pred, *it->gt) == doctest::Approx(r.at("dice").get<double>()).epsilon(1e-12));
  }

  // same spec, same records apart from timings
  const auto again = run_experiment(spec);
  REQUIRE(again.records.size() == res.records.size());
  for (std::size_t i = 0; i < res.records.size(); ++i) {
    CHECK(again.records[i].case_id == res.records[i].case_id);
    CHECK(again.records[i].strategy == res.records[i].strategy);
    CHECK(again.records[i].source == res.records[i].source);
    CHECK(again.records[i].backend == res.records[i].backend);
    CHECK(again.records[i].dice == res.records[i].dice);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("spec validation") {
  const auto dir = oracle::temp_dir("spec");
  auto code = [&](const std::string& text) {
    try {
      parse_grid_spec(text, dir);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::kOk;
  };
  CHECK(code("not json") == Errc::kInvalidSpec);
  CHECK(code(R"({"dataset":{}})") == Errc::kInvalidSpec);
  CHECK(code(R"({"dataset":{"phantom":{}},"strategy":"all_slices","backend":"region_grow"})") == Errc::kInvalidSpec);
  CHECK(code(R"({"dataset":{"phantom":{}},"prompt_source":"gt_bbox","strategy":"sometimes","backend":"region_grow"})") ==
        Errc::kInvalidSpec);
  CHECK(code(R"({"dataset":{"cases":[{"image":"missing.mvol"}]},"prompt_source":"gt_bbox","strategy":"all_slices","backend":"region_grow"})") ==
        Errc::kInvalidSpec);
  CHECK(code(R"({"dataset":{"phantom":{}},"prompt_source":"gt_bbox","strategy":"all_slices","backend":"region_grow"})") ==
        Errc::kOk);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mean and sd") {
  const auto m = mean_sd({1, 2, 3, 4});
  CHECK(m.mean == 2.5);
  CHECK(m.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(m.n == 4);
  CHECK(mean_sd({7}).sd == 0.0);
}

#include <doctest.h>

#include <cmath>

#include "gaze2seg/gaze.hpp"
#include "oracles.hpp"

using namespace g2s;

namespace {

const Dims kDims{512, 512, 200};

template <class Fn>
std::pair<Errc, int> line_error_of(Fn&& fn) {
  try {
    fn();
  } catch (const LineError& e) {
    return {e.code(), e.line()};
  } catch (const Error& e) {
    return {e.code(), -1};
  }
  return {Errc::kOk, 0};
}

}  // namespace

TEST_CASE("viewport maps screen to image") {
  const std::string log =
      "{\"kind\":\"viewport\",\"img_x0\":100,\"img_y0\":100,\"scale\":2.0}\n"
      "{\"kind\":\"gaze\",\"t_ms\":0,\"sx\":300,\"sy\":500,\"slice\":7}\n";
  const auto g = parse_gaze_log_text(log, kDims);
  REQUIRE(g.stream.samples.size() == 1);
  CHECK(g.stream.samples[0].x_px == 100.0);
  CHECK(g.stream.samples[0].y_px == 200.0);
  CHECK(g.stream.samples[0].slice == 7);
  CHECK_FALSE(g.stream.samples[0].clamped);
  CHECK(g.clamped == 0);
}

TEST_CASE("out-of-image sample is clamped and flagged") {
  const std::string log =
      "{\"kind\":\"viewport\",\"img_x0\":0,\"img_y0\":0,\"scale\":1.0}\n"
      "{\"kind\":\"gaze\",\"t_ms\":0,\"sx\":-5,\"sy\":10,\"slice\":0}\n"
      "{\"kind\":\"gaze\",\"t_ms\":1,\"sx\":600,\"sy\":511.5,\"slice\":0}\n";
  const auto g = parse_gaze_log_text(log, kDims);
  REQUIRE(g.stream.samples.size() == 2);
  CHECK(g.stream.samples[0].x_px == 0.0);
  CHECK(g.stream.samples[0].y_px == 10.0);
  CHECK(g.stream.samples[0].clamped);
  CHECK(g.stream.samples[1].x_px == 511.0);
  CHECK(g.stream.samples[1].y_px == 511.0);
  CHECK(g.clamped == 2);

  GazeSample s{0, 3.5, 4.0, 0, false};
  CHECK_FALSE(clamp_to_image(s, 10, 10));
  CHECK(s.x_px == 3.5);
}

TEST_CASE("log errors carry line numbers") {
  const std::string vp = "{\"kind\":\"viewport\",\"img_x0\":0,\"img_y0\":0,\"scale\":1}\n";
  auto [c1, l1] = line_error_of([&] {
    parse_gaze_log_text(vp +
                            "{\"kind\":\"gaze\",\"t_ms\":50,\"sx\":1,\"sy\":1,\"slice\":0}\n"
                            "{\"kind\":\"gaze\",\"t_ms\":40,\"sx\":1,\"sy\":1,\"slice\":0}\n",
                        kDims);
  });
  CHECK(c1 == Errc::kNonMonotonicTime);
  CHECK(l1 == 3);

  auto [c2, l2] = line_error_of([&] {
    parse_gaze_log_text("{\"kind\":\"gaze\",\"t_ms\":0,\"sx\":1,\"sy\":1,\"slice\":0}\n", kDims);
  });
  CHECK(c2 == Errc::kMissingViewport);
  CHECK(l2 == 1);

  auto [c3, l3] = line_error_of([&] { parse_gaze_log_text(vp + "\n{not json\n", kDims); });
  CHECK(c3 == Errc::kMalformedLine);
  CHECK(l3 == 3);

  auto [c4, l4] = line_error_of([&] {
    parse_gaze_log_text(vp + "{\"kind\":\"gaze\",\"t_ms\":0,\"sx\":1,\"sy\":1,\"slice\":200}\n", kDims);
  });
  CHECK(c4 == Errc::kSliceOutOfRange);
  CHECK(l4 == 2);

  auto [c5, l5] = line_error_of([&] {
    parse_gaze_log_text(vp + "{\"kind\":\"gaze\",\"t_ms\":0,\"sy\":1,\"slice\":0}\n", kDims);
  });
  CHECK(c5 == Errc::kMalformedLine);
  CHECK(l5 == 2);

  // equal timestamps are allowed
  CHECK_NOTHROW(parse_gaze_log_text(vp +
                                        "{\"kind\":\"gaze\",\"t_ms\":5,\"sx\":1,\"sy\":1,\"slice\":0}\n"
                                        "{\"kind\":\"gaze\",\"t_ms\":5,\"sx\":2,\"sy\":1,\"slice\":0}\n",
                                    kDims));
}

TEST_CASE("synthetic gaze splits exactly and respects the band") {
  const auto disk = oracle::disk(100, 100, 50, 50, 20);
  const auto signed_thirds = oracle::dijkstra_signed_thirds(disk);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SynthGazeParams p;
    p.n_points = 100;
    p.inside_ratio = 0.8;
    p.band_px = 10;
    p.seed = seed;
    const auto g = synthesize_gaze(disk, p);
    REQUIRE(g.warnings.empty());
    REQUIRE(g.stream.samples.size() == 100);
    int in = 0, out = 0;
    for (const auto& s : g.stream.samples) {
      const int x = static_cast<int>(s.x_px), y = static_cast<int>(s.y_px);
      if (disk(x, y)) {
        ++in;
      } else {
        ++out;
        const auto d = -signed_thirds[disk.index(x, y)];
        REQUIRE(d > 0);
        REQUIRE(d <= 3 * 10);
      }
    }
    REQUIRE(in == 80);
    REQUIRE(out == 20);
  }
}

TEST_CASE("inside_ratio 1 keeps every sample on the foreground") {
  const auto disk = oracle::disk(64, 64, 20, 30, 8);
  SynthGazeParams p;
  p.n_points = 57;
  p.inside_ratio = 1.0;
  p.seed = 9;
  const auto g = synthesize_gaze(disk, p);
  REQUIRE(g.stream.samples.size() == 57);
  for (const auto& s : g.stream.samples) CHECK(disk(static_cast<int>(s.x_px), static_cast<int>(s.y_px)));
}

TEST_CASE("synthetic gaze is deterministic per seed") {
  const auto disk = oracle::disk(100, 100, 50, 50, 20);
  SynthGazeParams p;
  p.seed = 42;
  const auto a = synthesize_gaze(disk, p);
  const auto b = synthesize_gaze(disk, p);
  CHECK(a.stream.samples == b.stream.samples);
  p.seed = 43;
  const auto c = synthesize_gaze(disk, p);
  CHECK(a.stream.samples != c.stream.samples);
}

TEST_CASE("timestamps are a 90 Hz arithmetic sequence") {
  const auto disk = oracle::disk(64, 64, 32, 32, 10);
  SynthGazeParams p;
  p.t0_ms = 250.0;
  const auto g = synthesize_gaze(disk, p);
  REQUIRE(g.stream.samples.size() == 90);
  for (std::size_t i = 0; i < g.stream.samples.size(); ++i)
    CHECK(g.stream.samples[i].t_ms == doctest::Approx(250.0 + static_cast<double>(i) * 1000.0 / 90.0));
}

TEST_CASE("degenerate masks") {
  SynthGazeParams p;
  CHECK_THROWS_AS(synthesize_gaze(SliceMask(8, 8), p), Error);
  SliceMask full(8, 8, 1);
  const auto g = synthesize_gaze(full, p);
  CHECK(g.stream.samples.size() == 90);
  CHECK_FALSE(g.warnings.empty());

  // zero band: outside points fall back to the whole background
  const auto disk = oracle::disk(32, 32, 16, 16, 4);
  p.band_px = 0;
  const auto z = synthesize_gaze(disk, p);
  CHECK_FALSE(z.warnings.empty());
  int out = 0;
  for (const auto& s : z.stream.samples) out += !disk(static_cast<int>(s.x_px), static_cast<int>(s.y_px));
  CHECK(out == 18);
}

TEST_CASE("volume synthesis uses seed xor slice and skips empty slices") {
  MaskVolume gt(Dims{32, 32, 6}, Spacing{});
  const auto disk = oracle::disk(32, 32, 16, 16, 6);
  for (std::int64_t z : {1, 2, 4}) gt.set_slice(z, disk);
  SynthGazeParams p;
  p.seed = 1000;
  p.n_points = 10;
  const auto v = synthesize_gaze_volume(gt, {0, 1, 2, 3, 4}, p);
  CHECK(v.stream.slices() == std::set<std::int64_t>{1, 2, 4});
  REQUIRE(v.stream.samples.size() == 30);
  SynthGazeParams q = p;
  q.slice = 2;
  q.seed = 1000 ^ 2;
  const auto single = synthesize_gaze(disk, q);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(v.stream.samples[10 + i].x_px == single.stream.samples[i].x_px);
    CHECK(v.stream.samples[10 + i].y_px == single.stream.samples[i].y_px);
  }
  for (std::size_t i = 1; i < v.stream.samples.size(); ++i)
    CHECK(v.stream.samples[i].t_ms > v.stream.samples[i - 1].t_ms);
}

TEST_CASE("parse, serialize, parse is lossless for in-bounds samples") {
  ViewportTransform vp{37.5, 12.0, 1.75};
  GazeStream s;
  for (int i = 0; i < 50; ++i)
    s.samples.push_back({i * 11.1, std::fmod(i * 13.37, 511.0), std::fmod(i * 7.9, 511.0), i % 200, false});
  const auto text = serialize_gaze_log(vp, s);
  const auto first = parse_gaze_log_text(text, kDims);
  const auto again = parse_gaze_log_text(serialize_gaze_log(first.viewport, first.stream), kDims);
  CHECK(first.stream.samples == again.stream.samples);
  REQUIRE(first.stream.samples.size() == s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    CHECK(first.stream.samples[i].x_px == doctest::Approx(s.samples[i].x_px).epsilon(1e-12));
    CHECK(first.stream.samples[i].y_px == doctest::Approx(s.samples[i].y_px).epsilon(1e-12));
    CHECK(first.stream.samples[i].slice == s.samples[i].slice);
  }
}

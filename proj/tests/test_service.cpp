#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "fake_backend.hpp"
#include "gaze2seg/gaze.hpp"
#include "gaze2seg/harness.hpp"
#include "gaze2seg/promptgen.hpp"
#include "gaze2seg/service.hpp"
#include "oracles.hpp"
#include "png.hpp"

using namespace g2s;
using nlohmann::json;

namespace {

struct Fixture {
  std::filesystem::path dir = oracle::temp_dir("svc");
  Phantom ph;
  std::unique_ptr<Service> svc;
  std::thread th;
  int port = 0;

  Fixture() {
    PhantomParams p;
    p.dims = {64, 64, 24};
    p.center = {32, 30, 11.5};
    p.radii = {14, 12, 9};
    p.noise_sd = 5;
    ph = make_phantom(p, 3);
    save_mvol(ph.image, dir / "ct.mvol");
    save_mvol(ph.gt, dir / "gt.mvol");
    svc = std::make_unique<Service>(ServiceOptions{dir, "http://ui.example", std::chrono::seconds(600)});
    port = svc->bind_to_any_port("127.0.0.1");
    th = std::thread([this] { svc->listen_after_bind(); });
    svc->wait_until_ready();
  }
  ~Fixture() {
    svc->stop();
    th.join();
    std::filesystem::remove_all(dir);
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(30, 0);
    return c;
  }

  std::string create(const json& body) {
    auto c = client();
    auto r = c.Post("/sessions", body.dump(), "application/json");
    REQUIRE(r);
    REQUIRE(r->status == 201);
    return json::parse(r->body).at("id").get<std::string>();
  }

  /// Synthetic gaze for the given slices as a JSON batch.
  json gaze_batch(const std::vector<std::int64_t>& zs, int n_per_slice, std::uint64_t seed = 1) const {
    SynthGazeParams sp;
    sp.n_points = n_per_slice;
    sp.band_px = 4;
    sp.seed = seed;
    const auto g = synthesize_gaze_volume(ph.gt, zs, sp);
    json arr = json::array();
    for (const auto& s : g.stream.samples) arr.push_back({{"t_ms", s.t_ms}, {"x", s.x_px}, {"y", s.y_px}, {"slice", s.slice}});
    return arr;
  }
};

}  // namespace

TEST_CASE("session lifecycle") {
  Fixture f;
  auto c = f.client();
  const auto id = f.create({{"volume", "ct.mvol"}, {"gt", "gt.mvol"}});
  CHECK(id.size() == 32);
  CHECK(f.svc->session_count() == 1);

  // heatmap before gaze is all zero
  auto h0 = c.Get("/sessions/" + id + "/overlay/11/heatmap");
  REQUIRE(h0);
  CHECK(h0->status == 200);
  const auto etag0 = h0->get_header_value("ETag");
  CHECK(h0->get_header_value("Access-Control-Allow-Origin") == "http://ui.example");

  auto coarse0 = c.Get("/sessions/" + id + "/overlay/11/coarse");
  REQUIRE(coarse0);
  CHECK(coarse0->status == 409);
  CHECK(json::parse(coarse0->body)["error"] == "EmptyHeatmap");

  auto seg0 = c.Get("/sessions/" + id + "/overlay/11/segmentation");
  REQUIRE(seg0);
  CHECK(seg0->status == 409);

  // 90 samples on slice 11
  const auto batch = f.gaze_batch({11}, 90);
  auto g = c.Post("/sessions/" + id + "/gaze", batch.dump(), "application/json");
  REQUIRE(g);
  REQUIRE(g->status == 200);
  CHECK(json::parse(g->body) == json{{"accepted", 90}, {"clamped", 0}});

  auto h1 = c.Get("/sessions/" + id + "/overlay/11/heatmap");
  REQUIRE(h1);
  REQUIRE(h1->status == 200);
  CHECK(h1->get_header_value("Content-Type") == "image/png");
  const auto etag1 = h1->get_header_value("ETag");
  CHECK(etag1 != etag0);

  // PNG matches the library heatmap at its argmax
  const auto png = decode_png_gray8(h1->body);
  CHECK(png.width == 64);
  std::vector<GazeSample> samples;
  for (const auto& s : batch) samples.push_back({s["t_ms"], s["x"], s["y"], 11, false});
  const auto ref = accumulate_heatmap(samples, 64, 64, default_sigma_px(64));
  const auto arg = static_cast<std::size_t>(
      std::max_element(ref.values.data.begin(), ref.values.data.end()) - ref.values.data.begin());
  CHECK(png.data[arg] == 255);

  // same state: same ETag, same bytes, 304 on revalidation
  auto h2 = c.Get("/sessions/" + id + "/overlay/11/heatmap");
  CHECK(h2->get_header_value("ETag") == etag1);
  CHECK(h2->body == h1->body);
  auto h3 = c.Get("/sessions/" + id + "/overlay/11/heatmap", {{"If-None-Match", etag1}});
  CHECK(h3->status == 304);

  // raw bytes on request
  auto raw = c.Get("/sessions/" + id + "/overlay/11/heatmap", {{"Accept", "application/octet-stream"}});
  CHECK(raw->get_header_value("X-Width") == "64");
  CHECK(raw->body.size() == 64u * 64u);
  CHECK(std::equal(raw->body.begin(), raw->body.end(), png.data.begin(),
                   [](char a, std::uint8_t b) { return static_cast<std::uint8_t>(a) == b; }));

  // other slices unaffected
  CHECK(c.Get("/sessions/" + id + "/overlay/12/heatmap")->get_header_value("ETag") != etag1);
  auto coarse = c.Get("/sessions/" + id + "/overlay/11/coarse");
  CHECK(coarse->status == 200);

  // gaze on a second slice, then segment
  c.Post("/sessions/" + id + "/gaze", json{{"samples", f.gaze_batch({16}, 90, 2)}}.dump(), "application/json");
  auto s = c.Post("/sessions/" + id + "/segment", R"({"strategy":"all_slices"})", "application/json");
  REQUIRE(s);
  REQUIRE(s->status == 200);
  const auto sj = json::parse(s->body);
  CHECK(sj["prompted"] == json{11, 16});
  for (int z = 12; z <= 15; ++z) CHECK(sj["tags"][static_cast<std::size_t>(z - sj["z_lo"].get<int>())] == "interpolated");
  CHECK(sj["tags"][11] == "segmented");
  CHECK(sj["tags"][0] == "empty");
  CHECK(sj["dice"].get<double>() >= 0.0);
  CHECK(sj["dice"].get<double>() <= 1.0);

  auto seg = c.Get("/sessions/" + id + "/overlay/13/interpolated");
  CHECK(seg->status == 200);
  CHECK(seg->get_header_value("X-Slice-Tag") == "interpolated");
  auto segonly = c.Get("/sessions/" + id + "/overlay/13/segmentation");
  const auto blank = decode_png_gray8(segonly->body);
  CHECK(std::all_of(blank.data.begin(), blank.data.end(), [](auto v) { return v == 0; }));

  auto m = c.Get("/sessions/" + id + "/masklet");
  REQUIRE(m);
  REQUIRE(m->status == 200);
  std::vector<std::byte> bytes(m->body.size());
  std::memcpy(bytes.data(), m->body.data(), bytes.size());
  const auto mv = std::get<MaskVolume>(parse_mvol(bytes));
  CHECK(mv.dims() == f.ph.gt.dims());
  CHECK(dice(mv, f.ph.gt) == doctest::Approx(sj["dice"].get<double>()));

  auto d = c.Delete("/sessions/" + id);
  CHECK(d->status == 204);
  CHECK(c.Get("/sessions/" + id + "/masklet")->status == 404);
  CHECK(f.svc->session_count() == 0);
}

TEST_CASE("create errors") {
  Fixture f;
  auto c = f.client();
  auto bad = c.Post("/sessions", json{{"volume", "ct.mvol"}, {"config", {{"sigma_px", 0}}}}.dump(), "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 422);
  CHECK(json::parse(bad->body)["error"] == "InvalidConfig");
  CHECK(c.Post("/sessions", json{{"volume", "nope.mvol"}}.dump(), "application/json")->status == 404);
  CHECK(c.Post("/sessions", json{{"volume", "../etc/passwd"}}.dump(), "application/json")->status == 404);
  CHECK(c.Post("/sessions", "{", "application/json")->status == 400);

  // raw upload
  const auto bytes = serialize_mvol(f.ph.image);
  auto up = c.Post("/sessions", std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                   "application/octet-stream");
  REQUIRE(up);
  CHECK(up->status == 201);
  CHECK(json::parse(up->body)["dims"] == json{64, 64, 24});
}

TEST_CASE("gaze validation") {
  Fixture f;
  auto c = f.client();
  const auto id = f.create({{"volume", "ct.mvol"}});
  auto batch = f.gaze_batch({10}, 30);
  batch[28]["x"] = -20;
  batch[29]["y"] = 500;
  auto r = c.Post("/sessions/" + id + "/gaze", batch.dump(), "application/json");
  CHECK(json::parse(r->body) == json{{"accepted", 30}, {"clamped", 2}});

  auto bad = f.gaze_batch({10}, 5);
  bad[3]["slice"] = 24;
  auto rb = c.Post("/sessions/" + id + "/gaze", bad.dump(), "application/json");
  CHECK(rb->status == 400);
  CHECK(json::parse(rb->body)["index"] == 3);
  bad[3].erase("slice");
  CHECK(json::parse(c.Post("/sessions/" + id + "/gaze", bad.dump(), "application/json")->body)["index"] == 3);
  CHECK(c.Post("/sessions/unknown/gaze", "[]", "application/json")->status == 404);
  CHECK(c.Get("/sessions/" + id + "/overlay/99/heatmap")->status == 400);
  CHECK(c.Get("/sessions/" + id + "/overlay/1/sparkles")->status == 400);
}

TEST_CASE("segment errors keep state intact") {
  Fixture f;
  testing::FakeSegmentServer backend;
  auto c = f.client();
  const json cfg = {{"backend", {{"kind", "external"}, {"url", backend.url()}, {"retries", 1}, {"backoff_ms", 1}}}};
  const auto id = f.create({{"volume", "ct.mvol"}, {"config", cfg}});

  auto none = c.Post("/sessions/" + id + "/segment", "{}", "application/json");
  CHECK(none->status == 409);
  CHECK(json::parse(none->body)["error"] == "NoGaze");

  c.Post("/sessions/" + id + "/gaze", f.gaze_batch({8, 14}, 90).dump(), "application/json");
  auto ok = c.Post("/sessions/" + id + "/segment", "{}", "application/json");
  REQUIRE(ok->status == 200);
  const auto before = c.Get("/sessions/" + id + "/masklet")->body;
  const auto etag_before = c.Get("/sessions/" + id + "/overlay/8/segmentation")->get_header_value("ETag");

  backend.fail_first = 1 << 20;
  auto down = c.Post("/sessions/" + id + "/segment", R"({"slices":[8]})", "application/json");
  CHECK(down->status == 502);
  CHECK(json::parse(down->body)["error"] == "BackendUnavailable");
  CHECK(c.Get("/sessions/" + id + "/masklet")->body == before);
  CHECK(c.Get("/sessions/" + id + "/overlay/8/segmentation")->get_header_value("ETag") == etag_before);

  // oracle without ground truth
  const auto id2 = f.create({{"volume", "ct.mvol"}, {"config", {{"backend", {{"kind", "gt_oracle"}}}}}});
  c.Post("/sessions/" + id2 + "/gaze", f.gaze_batch({8}, 90).dump(), "application/json");
  CHECK(c.Post("/sessions/" + id2 + "/segment", "{}", "application/json")->status == 409);
  CHECK(c.Post("/sessions/" + id2 + "/segment", R"({"slices":[999]})", "application/json")->status == 400);
  // gaze far from anything on an explicit slice list without gaze
  CHECK(c.Post("/sessions/" + id2 + "/segment", R"({"slices":[2]})", "application/json")->status == 409);
}

TEST_CASE("concurrent sessions and writers") {
  Fixture f;
  std::vector<std::string> ids;
  for (int i = 0; i < 3; ++i) ids.push_back(f.create({{"volume", "ct.mvol"}, {"gt", "gt.mvol"}}));
  std::vector<std::thread> ts;
  std::atomic<int> ok{0};
  for (int i = 0; i < 3; ++i) {
    ts.emplace_back([&, i] {
      auto c = f.client();
      for (int k = 0; k < 4; ++k) {
        c.Post("/sessions/" + ids[static_cast<std::size_t>(i)] + "/gaze",
               f.gaze_batch({static_cast<std::int64_t>(6 + 3 * k)}, 30, static_cast<std::uint64_t>(k)).dump(),
               "application/json");
        c.Get("/sessions/" + ids[static_cast<std::size_t>(i)] + "/overlay/" + std::to_string(6 + 3 * k) + "/coarse");
      }
      auto r = c.Post("/sessions/" + ids[static_cast<std::size_t>(i)] + "/segment", "{}", "application/json");
      if (r && r->status == 200) ++ok;
    });
  }
  for (auto& t : ts) t.join();
  CHECK(ok == 3);
  CHECK(f.svc->session_count() == 3);
}

TEST_CASE("CORS preflight and health") {
  Fixture f;
  auto c = f.client();
  auto r = c.Options("/sessions");
  REQUIRE(r);
  CHECK(r->status == 204);
  CHECK(r->get_header_value("Access-Control-Allow-Origin") == "http://ui.example");
  CHECK(c.Get("/health")->status == 200);
}

#include "gaze2seg/service.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <random>
#include <shared_mutex>

#include <httplib.h>
#include <json.hpp>

#include "gaze2seg/harness.hpp"
#include "gaze2seg/interp.hpp"
#include "gaze2seg/promptgen.hpp"
#include "png.hpp"

namespace g2s {

using nlohmann::json;
namespace fs = std::filesystem;

void SessionConfig::validate() const {
  if (!(sigma_px >= 0.0) || !std::isfinite(sigma_px)) fail(Errc::kInvalidArgument, "sigma_px must be > 0");
  if (k < 2 || k > 255) fail(Errc::kInvalidArgument, "k must be in [2,255]");
  if (margin_px < 0) fail(Errc::kInvalidArgument, "margin_px must be >= 0");
  if (backend.kind == "region_grow" && !(backend.tau > 0.0)) fail(Errc::kInvalidArgument, "tau must be > 0");
  if (backend.kind == "external") ExternalBackend probe(backend.external);
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <class T>
std::uint64_t fnv1a(std::uint64_t h, const T& v) {
  return fnv1a(h, &v, sizeof v);
}

using SampleBuffer = std::vector<GazeSample>;

/// Immutable snapshot; replaced wholesale on every mutation.
struct SessionState {
  std::vector<std::shared_ptr<const SampleBuffer>> gaze;  // per slice
  std::vector<std::uint64_t> gaze_hash;                   // per slice, over appended samples
  std::shared_ptr<const Masklet> masklet;
  std::uint64_t masklet_version = 0;
};

struct OverlayCache {
  std::uint64_t gaze_hash = 0;
  std::shared_ptr<const Heatmap> heatmap;
  std::shared_ptr<const CoarseMask> coarse;
  std::string coarse_error;
};

struct Session {
  std::string id;
  std::shared_ptr<const Volume> volume;
  std::shared_ptr<const MaskVolume> gt;
  SessionConfig cfg;

  std::mutex write_mu;  // serializes mutations
  std::shared_ptr<const SessionState> state;

  std::mutex cache_mu;
  std::map<std::int64_t, OverlayCache> cache;

  std::atomic<std::int64_t> last_used{0};

  std::shared_ptr<const SessionState> snapshot() const { return std::atomic_load(&state); }
  void publish(std::shared_ptr<const SessionState> s) { std::atomic_store(&state, std::move(s)); }
  void touch() { last_used = Clock::now().time_since_epoch().count(); }
};

std::string random_id() {
  std::random_device rd;
  std::string id;
  for (int i = 0; i < 4; ++i) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<unsigned>(rd()));
    id += buf;
  }
  return id;
}

std::string etag_of(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "\"%016llx\"", static_cast<unsigned long long>(h));
  return buf;
}

struct HttpError {
  int status;
  std::string error;
  std::string message;
};

[[noreturn]] void http_fail(int status, std::string error, std::string message) {
  throw HttpError{status, std::move(error), std::move(message)};
}

int status_for(Errc c) {
  switch (c) {
    case Errc::kNotFound: return 404;
    case Errc::kBackendUnavailable:
    case Errc::kBackendProtocolError: return 502;
    case Errc::kEmptyHeatmap:
    case Errc::kNoPrompts: return 409;
    case Errc::kInvalidArgument:
    case Errc::kInvalidSpec: return 422;
    case Errc::kInternal: return 500;
    default: return 400;
  }
}

SessionConfig parse_config(const json& j, std::int64_t nx, std::int64_t ny) {
  SessionConfig c;
  if (!j.is_null()) {
    if (!j.is_object()) fail(Errc::kInvalidArgument, "config must be an object");
    c.sigma_px = j.value("sigma_px", 0.0);
    if (j.contains("sigma_px") && !(c.sigma_px > 0.0)) fail(Errc::kInvalidArgument, "sigma_px must be > 0");
    c.k = j.value("k", 2);
    if (j.contains("min_area_px")) {
      const auto v = j["min_area_px"].get<std::int64_t>();
      if (v < 0) fail(Errc::kInvalidArgument, "min_area_px must be >= 0");
      c.min_area_px = static_cast<std::size_t>(v);
    }
    c.margin_px = j.value("margin_px", 3);
    if (j.contains("backend")) c.backend = BackendConfig::from_json_text(j["backend"].dump());
  }
  if (c.sigma_px <= 0.0) c.sigma_px = default_sigma_px(nx);
  if (!c.min_area_px) c.min_area_px = default_min_area_px(nx, ny);
  c.validate();
  return c;
}

}  // namespace

struct Service::Impl {
  ServiceOptions opts;
  httplib::Server server;

  mutable std::shared_mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;

  explicit Impl(ServiceOptions o) : opts(std::move(o)) { install_routes(); }

  // --- session store --------------------------------------------------------

  void sweep() {
    const auto now = Clock::now().time_since_epoch().count();
    const auto ttl = std::chrono::duration_cast<Clock::duration>(opts.idle_ttl).count();
    std::unique_lock lk(sessions_mu);
    std::erase_if(sessions, [&](const auto& kv) { return now - kv.second->last_used.load() > ttl; });
  }

  std::shared_ptr<Session> find(const std::string& id) {
    std::shared_lock lk(sessions_mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) http_fail(404, "NotFound", "unknown session " + id);
    it->second->touch();
    return it->second;
  }

  fs::path resolve_volume(const std::string& name) {
    if (opts.data_dir.empty()) http_fail(404, "NotFound", "service has no data directory");
    if (name.empty() || name.find("..") != std::string::npos || name.find('/') != std::string::npos ||
        name.find('\\') != std::string::npos) {
      http_fail(404, "NotFound", "invalid volume name");
    }
    const fs::path p = opts.data_dir / name;
    if (!fs::is_regular_file(p)) http_fail(404, "NotFound", "volume '" + name + "' not found");
    return p;
  }

  // --- handlers ---------------------------------------------------------------

  void create_session(const httplib::Request& req, httplib::Response& res) {
    sweep();
    auto s = std::make_shared<Session>();
    json cfg_json;
    const std::string ctype = req.get_header_value("Content-Type");
    if (ctype.starts_with("application/octet-stream")) {
      try {
        auto any = parse_mvol(std::as_bytes(std::span(req.body.data(), req.body.size())));
        if (!std::holds_alternative<Volume>(any)) http_fail(400, "BadVolume", "uploaded mvol must be an image");
        s->volume = std::make_shared<const Volume>(std::get<Volume>(std::move(any)));
      } catch (const Error& e) {
        http_fail(400, std::string(errc_name(e.code())), e.what());
      }
      if (req.has_param("config")) {
        try {
          cfg_json = json::parse(req.get_param_value("config"));
        } catch (const json::exception& e) {
          http_fail(400, "BadRequest", e.what());
        }
      }
    } else {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        http_fail(400, "BadRequest", std::string("body: ") + e.what());
      }
      if (!body.is_object() || !body.contains("volume") || !body["volume"].is_string()) {
        http_fail(400, "BadRequest", "body needs a \"volume\" name");
      }
      const auto vpath = resolve_volume(body["volume"].get<std::string>());
      try {
        auto any = load_any(vpath);
        if (!std::holds_alternative<Volume>(any)) http_fail(400, "BadVolume", "volume must be an image");
        s->volume = std::make_shared<const Volume>(std::get<Volume>(std::move(any)));
        if (body.contains("gt")) {
          NiftiOptions nopts{true, std::nullopt, "organ"};
          if (body.contains("label")) nopts.label_id = body["label"].get<std::int64_t>();
          auto gt = load_any(resolve_volume(body["gt"].get<std::string>()), nopts);
          if (!std::holds_alternative<MaskVolume>(gt)) http_fail(400, "BadVolume", "gt must be a mask");
          s->gt = std::make_shared<const MaskVolume>(std::get<MaskVolume>(std::move(gt)));
          if (!(s->gt->dims() == s->volume->dims())) http_fail(400, "DimMismatch", "gt dims differ from volume");
        }
      } catch (const Error& e) {
        http_fail(400, std::string(errc_name(e.code())), e.what());
      }
      if (body.contains("config")) cfg_json = body["config"];
    }

    const Dims& d = s->volume->dims();
    try {
      s->cfg = parse_config(cfg_json, d.nx, d.ny);
    } catch (const Error& e) {
      http_fail(422, "InvalidConfig", e.what());
    } catch (const json::exception& e) {
      http_fail(422, "InvalidConfig", e.what());
    }

    auto st = std::make_shared<SessionState>();
    st->gaze.assign(static_cast<std::size_t>(d.nz), std::make_shared<const SampleBuffer>());
    st->gaze_hash.assign(static_cast<std::size_t>(d.nz), kFnvOffset);
    s->state = std::move(st);
    s->id = random_id();
    s->touch();
    {
      std::unique_lock lk(sessions_mu);
      sessions.emplace(s->id, s);
    }
    const auto& sp = s->volume->spacing();
    json out{{"id", s->id},
             {"dims", {d.nx, d.ny, d.nz}},
             {"spacing_mm", {sp.sx, sp.sy, sp.sz}},
             {"slices", d.nz},
             {"has_gt", static_cast<bool>(s->gt)},
             {"config",
              {{"sigma_px", s->cfg.sigma_px},
               {"k", s->cfg.k},
               {"min_area_px", *s->cfg.min_area_px},
               {"margin_px", s->cfg.margin_px},
               {"backend", json::parse(s->cfg.backend.to_json_text())}}}};
    res.status = 201;
    res.set_content(out.dump(), "application/json");
  }

  void post_gaze(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto s = find(id);
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      http_fail(400, "BadRequest", std::string("body: ") + e.what());
    }
    const json* arr = &body;
    if (body.is_object() && body.contains("samples")) arr = &body["samples"];
    if (!arr->is_array()) http_fail(400, "BadRequest", "expected an array of gaze samples");

    const Dims& d = s->volume->dims();
    std::vector<GazeSample> batch;
    batch.reserve(arr->size());
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const auto& r = (*arr)[i];
      auto bad = [&](const std::string& why) {
        res.status = 400;
        res.set_content(json{{"error", "BadSample"}, {"index", i}, {"message", why}}.dump(), "application/json");
      };
      GazeSample g;
      try {
        if (!r.is_object()) return bad("sample is not an object");
        if (r.contains("kind") && r["kind"] != "gaze") return bad("kind must be gaze");
        g.t_ms = r.at("t_ms").get<double>();
        g.x_px = (r.contains("sx") ? r["sx"] : r.at("x")).get<double>();
        g.y_px = (r.contains("sy") ? r["sy"] : r.at("y")).get<double>();
        g.slice = r.at("slice").get<std::int64_t>();
      } catch (const json::exception& e) {
        return bad(e.what());
      }
      if (!std::isfinite(g.t_ms) || g.t_ms < 0.0) return bad("t_ms must be finite and >= 0");
      if (!std::isfinite(g.x_px) || !std::isfinite(g.y_px)) return bad("coordinates must be finite");
      if (g.slice < 0 || g.slice >= d.nz) return bad("slice out of range");
      if (clamp_to_image(g, d.nx, d.ny)) ++clamped;
      batch.push_back(g);
    }

    {
      std::lock_guard wl(s->write_mu);
      auto next = std::make_shared<SessionState>(*s->snapshot());
      std::map<std::int64_t, std::shared_ptr<SampleBuffer>> touched;
      for (const auto& g : batch) {
        const auto z = static_cast<std::size_t>(g.slice);
        auto& buf = touched[g.slice];
        if (!buf) buf = std::make_shared<SampleBuffer>(*next->gaze[z]);
        buf->push_back(g);
        next->gaze_hash[z] = fnv1a(next->gaze_hash[z], &g, offsetof(GazeSample, clamped));
      }
      for (auto& [z, buf] : touched) next->gaze[static_cast<std::size_t>(z)] = std::move(buf);
      s->publish(std::move(next));
      std::lock_guard cl(s->cache_mu);
      for (const auto& [z, buf] : touched) s->cache.erase(z);
    }
    res.set_content(json{{"accepted", batch.size()}, {"clamped", clamped}}.dump(), "application/json");
  }

  // Heatmap/coarse for a slice, memoized against the slice's gaze hash.
  OverlayCache overlay_cache(Session& s, const SessionState& st, std::int64_t z, bool need_coarse) {
    const auto zi = static_cast<std::size_t>(z);
    {
      std::lock_guard cl(s.cache_mu);
      auto it = s.cache.find(z);
      if (it != s.cache.end() && it->second.gaze_hash == st.gaze_hash[zi] &&
          (!need_coarse || it->second.coarse || !it->second.coarse_error.empty())) {
        return it->second;
      }
    }
    const Dims& d = s.volume->dims();
    OverlayCache c;
    c.gaze_hash = st.gaze_hash[zi];
    c.heatmap = std::make_shared<const Heatmap>(
        accumulate_heatmap(*st.gaze[zi], static_cast<int>(d.nx), static_cast<int>(d.ny), s.cfg.sigma_px));
    if (need_coarse) {
      try {
        c.coarse = std::make_shared<const CoarseMask>(
            kmeans_coarse_mask(*c.heatmap, s.cfg.k, *s.cfg.min_area_px, static_cast<std::uint64_t>(z)));
      } catch (const Error& e) {
        if (e.code() != Errc::kEmptyHeatmap) throw;
        c.coarse_error = e.what();
      }
    }
    std::lock_guard cl(s.cache_mu);
    // Publish only if no newer gaze has landed meanwhile.
    auto& slot = s.cache[z];
    if (s.snapshot()->gaze_hash[zi] == c.gaze_hash) slot = c;
    return c;
  }

  void get_overlay(const std::string& id, const std::string& slice_str, const std::string& layer,
                   const httplib::Request& req, httplib::Response& res) {
    auto s = find(id);
    const auto st = s->snapshot();
    const Dims& d = s->volume->dims();
    std::int64_t z = -1;
    try {
      std::size_t used = 0;
      z = std::stoll(slice_str, &used);
      if (used != slice_str.size()) z = -1;
    } catch (const std::exception&) {
      z = -1;
    }
    if (z < 0 || z >= d.nz) http_fail(400, "SliceOutOfRange", "slice " + slice_str + " out of range");

    Image2D<std::uint8_t> img(static_cast<int>(d.nx), static_cast<int>(d.ny));
    std::uint64_t h = fnv1a(kFnvOffset, layer.data(), layer.size());
    h = fnv1a(h, z);
    std::string tag;

    if (layer == "heatmap" || layer == "coarse") {
      h = fnv1a(h, st->gaze_hash[static_cast<std::size_t>(z)]);
      h = fnv1a(h, s->cfg.sigma_px);
      if (check_not_modified(req, res, h)) return;
      const auto c = overlay_cache(*s, *st, z, layer == "coarse");
      if (layer == "heatmap") {
        for (std::size_t i = 0; i < img.size(); ++i) {
          img.data[i] = static_cast<std::uint8_t>(std::lround(std::clamp(c.heatmap->values.data[i], 0.0, 1.0) * 255.0));
        }
      } else {
        if (!c.coarse) http_fail(409, "EmptyHeatmap", "no gaze on slice " + std::to_string(z));
        for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = c.coarse->mask.data[i] ? 255 : 0;
      }
    } else if (layer == "segmentation" || layer == "interpolated") {
      if (!st->masklet) http_fail(409, "NoMasklet", "segment has not been called");
      h = fnv1a(h, st->masklet_version);
      const auto t = st->masklet->tag_at(z);
      tag = slice_tag_name(t);
      if (check_not_modified(req, res, h, tag)) return;
      const bool show = layer == "segmentation" ? t == SliceTag::kSegmented : t == SliceTag::kInterpolated;
      if (show) {
        const auto& m = st->masklet->mask_at(z);
        for (std::size_t i = 0; i < img.size(); ++i) img.data[i] = m.data[i] ? 255 : 0;
      }
    } else {
      http_fail(400, "UnknownLayer", "layer must be heatmap|coarse|segmentation|interpolated");
    }

    res.set_header("ETag", etag_of(h));
    if (!tag.empty()) res.set_header("X-Slice-Tag", tag);
    if (req.get_header_value("Accept").find("application/octet-stream") != std::string::npos) {
      res.set_header("X-Width", std::to_string(img.width));
      res.set_header("X-Height", std::to_string(img.height));
      res.set_content(std::string(img.data.begin(), img.data.end()), "application/octet-stream");
    } else {
      res.set_content(encode_png_gray8(img), "image/png");
    }
  }

  static bool check_not_modified(const httplib::Request& req, httplib::Response& res, std::uint64_t h,
                                 const std::string& tag = {}) {
    const auto etag = etag_of(h);
    if (req.get_header_value("If-None-Match") != etag) return false;
    res.status = 304;
    res.set_header("ETag", etag);
    if (!tag.empty()) res.set_header("X-Slice-Tag", tag);
    return true;
  }

  void segment(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto s = find(id);
    json body = json::object();
    if (!req.body.empty()) {
      try {
        body = json::parse(req.body);
      } catch (const json::exception& e) {
        http_fail(400, "BadRequest", std::string("body: ") + e.what());
      }
    }
    PromptStrategy strategy = PromptStrategy::all_slices();
    std::optional<std::vector<std::int64_t>> explicit_slices;
    try {
      if (body.contains("strategy")) strategy = PromptStrategy::parse(body["strategy"].get<std::string>());
      if (body.contains("slices")) explicit_slices = body["slices"].get<std::vector<std::int64_t>>();
    } catch (const json::exception& e) {
      http_fail(400, "BadRequest", e.what());
    } catch (const Error& e) {
      http_fail(400, "BadRequest", e.what());
    }

    std::lock_guard wl(s->write_mu);
    const auto st = s->snapshot();
    const Dims& d = s->volume->dims();

    GazeStream stream;
    stream.source = GazeSource::kLive;
    for (const auto& buf : st->gaze) stream.samples.insert(stream.samples.end(), buf->begin(), buf->end());
    const auto gazed = stream.slices();
    if (gazed.empty()) http_fail(409, "NoGaze", "no gaze samples in this session");

    std::vector<std::int64_t> candidates;
    if (explicit_slices) {
      candidates = *explicit_slices;
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
      for (auto z : candidates) {
        if (z < 0 || z >= d.nz) http_fail(400, "SliceOutOfRange", "slice " + std::to_string(z) + " out of range");
      }
    } else {
      candidates = select_slices(*gazed.begin(), *gazed.rbegin(), strategy);
    }

    const auto t0 = Clock::now();
    GazePromptParams gp{s->cfg.sigma_px, s->cfg.k, s->cfg.min_area_px, s->cfg.margin_px, 0};
    auto plan = build_gaze_plan(stream, d, candidates, strategy, gp);
    const double prompt_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (plan.prompted_slices.empty()) http_fail(409, "NoPrompts", "gaze produced no prompts on the selected slices");

    std::unique_ptr<SegmenterBackend> backend;
    std::map<std::int64_t, SliceMask> segmented;
    double segment_ms = 0.0;
    try {
      backend = make_backend(s->cfg.backend, s->gt);
      for (auto z : plan.prompted_slices) {
        const auto prompts = plan.prompts_for(z);
        auto seg = segment_slice(*backend, s->volume->slice_image(z), z, prompts);
        segment_ms += seg.latency_ms;
        segmented.emplace(z, std::move(seg.mask));
      }
    } catch (const Error& e) {
      const int code = e.code() == Errc::kMissingGroundTruth ? 409 : 502;
      http_fail(code, std::string(errc_name(e.code())), e.what());
    }

    const auto t1 = Clock::now();
    auto masklet = std::make_shared<Masklet>(fill_masklet(segmented, 0, d.nz - 1));
    const double interp_ms = std::chrono::duration<double, std::milli>(Clock::now() - t1).count();
    masklet->plan = std::make_shared<const PromptPlan>(plan);

    json out;
    out["strategy"] = strategy.name();
    out["prompted"] = plan.prompted_slices;
    out["boxes"] = json::array();
    for (const auto& b : plan.prompts) {
      out["boxes"].push_back({{"slice", b.slice}, {"x0", b.x0}, {"y0", b.y0}, {"x1", b.x1}, {"y1", b.y1}});
    }
    json tags = json::array();
    for (auto t : masklet->tags) tags.push_back(slice_tag_name(t));
    out["z_lo"] = masklet->z_lo;
    out["tags"] = std::move(tags);
    out["timing"] = {{"prompt_ms", prompt_ms}, {"segment_ms", segment_ms}, {"interp_ms", interp_ms}};
    if (s->gt) out["dice"] = dice(masklet->to_mask_volume(d, s->volume->spacing()), *s->gt);

    auto next = std::make_shared<SessionState>(*st);
    next->masklet = std::move(masklet);
    next->masklet_version = st->masklet_version + 1;
    s->publish(std::move(next));
    res.set_content(out.dump(), "application/json");
  }

  void get_masklet(const std::string& id, httplib::Response& res) {
    auto s = find(id);
    const auto st = s->snapshot();
    if (!st->masklet) http_fail(409, "NoMasklet", "segment has not been called");
    const auto mv = st->masklet->to_mask_volume(s->volume->dims(), s->volume->spacing(), "organ");
    const auto bytes = serialize_mvol(mv);
    res.set_header("Content-Disposition", "attachment; filename=\"masklet.mvol\"");
    res.set_content(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()), "application/octet-stream");
  }

  void delete_session(const std::string& id, httplib::Response& res) {
    std::unique_lock lk(sessions_mu);
    if (sessions.erase(id) == 0) http_fail(404, "NotFound", "unknown session " + id);
    res.status = 204;
  }

  // --- routing ---------------------------------------------------------------

  template <class F>
  httplib::Server::Handler wrap(F&& f) {
    return [this, f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const HttpError& e) {
        res.status = e.status;
        res.set_content(json{{"error", e.error}, {"message", e.message}}.dump(), "application/json");
      } catch (const Error& e) {
        res.status = status_for(e.code());
        res.set_content(json{{"error", errc_name(e.code())}, {"message", e.what()}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", "Internal"}, {"message", e.what()}}.dump(), "application/json");
      }
    };
  }

  void install_routes() {
    server.set_post_routing_handler([this](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", opts.cors_origin);
      res.set_header("Access-Control-Expose-Headers", "ETag, X-Slice-Tag, X-Width, X-Height");
    });
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type, If-None-Match, Accept");
      res.status = 204;
    });
    server.Get("/health", wrap([this](const httplib::Request&, httplib::Response& res) {
                 res.set_content(json{{"ok", true}, {"sessions", count()}}.dump(), "application/json");
               }));
    server.Post("/sessions", wrap([this](const auto& req, auto& res) { create_session(req, res); }));
    server.Post(R"(/sessions/([0-9a-f]+)/gaze)",
                wrap([this](const auto& req, auto& res) { post_gaze(req.matches[1], req, res); }));
    server.Get(R"(/sessions/([0-9a-f]+)/overlay/([^/]+)/([a-z]+))", wrap([this](const auto& req, auto& res) {
                 get_overlay(req.matches[1], req.matches[2], req.matches[3], req, res);
               }));
    server.Post(R"(/sessions/([0-9a-f]+)/segment)",
                wrap([this](const auto& req, auto& res) { segment(req.matches[1], req, res); }));
    server.Get(R"(/sessions/([0-9a-f]+)/masklet)",
               wrap([this](const auto& req, auto& res) { get_masklet(req.matches[1], res); }));
    server.Delete(R"(/sessions/([0-9a-f]+))",
                  wrap([this](const auto& req, auto& res) { delete_session(req.matches[1], res); }));
  }

  std::size_t count() const {
    std::shared_lock lk(sessions_mu);
    return sessions.size();
  }
};

Service::Service(ServiceOptions opts) : impl_(std::make_unique<Impl>(std::move(opts))) {}
Service::~Service() { stop(); }

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int Service::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }
void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }
void Service::stop() {
  if (impl_) impl_->server.stop();
}
std::size_t Service::session_count() const { return impl_->count(); }

}  // namespace g2s

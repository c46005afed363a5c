#include "gaze2seg/gaze2seg.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "gaze2seg/gaze.hpp"
#include "gaze2seg/harness.hpp"
#include "gaze2seg/interp.hpp"
#include "gaze2seg/service.hpp"
#include "gaze2seg/volume_io.hpp"

struct g2s_volume {
  g2s::AnyVolume v;
};

struct g2s_service {
  g2s::Service svc;
};

namespace {

thread_local std::string t_last_error;

int set_error(int code, const std::string& msg) {
  t_last_error = msg;
  return code;
}

template <class F>
int guarded(F&& f) {
  t_last_error.clear();
  try {
    f();
    return G2S_OK;
  } catch (const g2s::Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(G2S_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(G2S_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) g2s::fail(g2s::Errc::kInvalidArgument, what);
}

const g2s::MaskVolume& as_mask(const g2s_volume* v, const char* what) {
  require(v != nullptr, "null volume handle");
  const auto* m = std::get_if<g2s::MaskVolume>(&v->v);
  if (!m) g2s::fail(g2s::Errc::kInvalidArgument, std::string(what) + " must be a mask volume");
  return *m;
}

char* dup_string(const std::string& s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

}  // namespace

extern "C" {

const char* g2s_version(void) { return "0.1.0"; }

const char* g2s_last_error(void) { return t_last_error.c_str(); }

const char* g2s_status_name(int status) {
  static thread_local std::string name;
  name = g2s::errc_name(static_cast<g2s::Errc>(status));
  return name.c_str();
}

void g2s_string_free(char* s) { std::free(s); }

int g2s_volume_load(const char* path, g2s_volume** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new g2s_volume{g2s::load_any(path)};
  });
}

int g2s_volume_load_mask(const char* path, int64_t label_id, g2s_volume** out) {
  return guarded([&] {
    require(path && out, "null argument");
    g2s::NiftiOptions opts;
    opts.as_mask = true;
    if (label_id >= 0) opts.label_id = label_id;
    *out = new g2s_volume{g2s::load_any(path, opts)};
  });
}

int g2s_volume_save(const g2s_volume* v, const char* path) {
  return guarded([&] {
    require(v && path, "null argument");
    g2s::save_mvol(v->v, path);
  });
}

void g2s_volume_free(g2s_volume* v) { delete v; }

int g2s_volume_dims(const g2s_volume* v, int64_t dims[3]) {
  return guarded([&] {
    require(v && dims, "null argument");
    const auto& d = std::visit([](const auto& x) -> const g2s::Dims& { return x.dims(); }, v->v);
    dims[0] = d.nx;
    dims[1] = d.ny;
    dims[2] = d.nz;
  });
}

int g2s_volume_spacing(const g2s_volume* v, double spacing_mm[3]) {
  return guarded([&] {
    require(v && spacing_mm, "null argument");
    const auto& s = std::visit([](const auto& x) -> const g2s::Spacing& { return x.spacing(); }, v->v);
    spacing_mm[0] = s.sx;
    spacing_mm[1] = s.sy;
    spacing_mm[2] = s.sz;
  });
}

int g2s_volume_is_mask(const g2s_volume* v) {
  if (!v) return -1;
  return std::holds_alternative<g2s::MaskVolume>(v->v) ? 1 : 0;
}

int g2s_dice(const g2s_volume* pred, const g2s_volume* gt, double* out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    *out = g2s::dice(as_mask(pred, "pred"), as_mask(gt, "gt"));
  });
}

void g2s_synth_params_default(g2s_synth_params* p) {
  if (!p) return;
  const g2s::SynthGazeParams d;
  p->n_points = d.n_points;
  p->inside_ratio = d.inside_ratio;
  p->band_px = d.band_px;
  p->seed = d.seed;
}

int g2s_synth_gaze_log(const g2s_volume* gt_mask, const g2s_synth_params* p, char** out_jsonl,
                       size_t* out_warning_count) {
  return guarded([&] {
    require(p && out_jsonl, "null argument");
    const auto& gt = as_mask(gt_mask, "gt");
    const auto extent = gt.z_extent();
    if (!extent) g2s::fail(g2s::Errc::kEmptyMask, "ground truth mask is empty");
    std::vector<std::int64_t> slices;
    for (auto z = (*extent)[0]; z <= (*extent)[1]; ++z) slices.push_back(z);
    g2s::SynthGazeParams sp;
    sp.n_points = p->n_points;
    sp.inside_ratio = p->inside_ratio;
    sp.band_px = p->band_px;
    sp.seed = p->seed;
    const auto synth = g2s::synthesize_gaze_volume(gt, slices, sp);
    if (out_warning_count) *out_warning_count = synth.warnings.size();
    *out_jsonl = dup_string(g2s::serialize_gaze_log(g2s::ViewportTransform{}, synth.stream));
  });
}

int g2s_interp_masklet(const g2s_volume* masks, const int64_t* slices, size_t n_slices, g2s_volume** out,
                       uint8_t* tags_out) {
  return guarded([&] {
    require(out != nullptr && (slices || n_slices == 0), "null argument");
    const auto& mv = as_mask(masks, "masks");
    std::map<std::int64_t, g2s::SliceMask> segmented;
    for (size_t i = 0; i < n_slices; ++i) segmented[slices[i]] = mv.slice(slices[i]);
    const auto& d = mv.dims();
    const auto masklet = g2s::fill_masklet(segmented, 0, d.nz - 1);
    if (tags_out) {
      for (std::size_t i = 0; i < masklet.tags.size(); ++i) {
        switch (masklet.tags[i]) {
          case g2s::SliceTag::kSegmented: tags_out[i] = G2S_TAG_SEGMENTED; break;
          case g2s::SliceTag::kInterpolated: tags_out[i] = G2S_TAG_INTERPOLATED; break;
          case g2s::SliceTag::kEmpty: tags_out[i] = G2S_TAG_EMPTY; break;
        }
      }
    }
    *out = new g2s_volume{masklet.to_mask_volume(d, mv.spacing(), mv.label())};
  });
}

int g2s_run_experiment(const char* spec_path, g2s_run_summary* summary) {
  return guarded([&] {
    require(spec_path != nullptr, "null spec path");
    const auto spec = g2s::load_grid_spec(spec_path);
    std::vector<g2s::CaseData> cases;
    try {
      cases = g2s::materialize_cases(spec.dataset);
    } catch (const g2s::Error& e) {
      g2s::fail(g2s::Errc::kInvalidSpec, std::string("dataset: ") + e.what());
    }
    const auto result = g2s::run_experiment(spec, cases);
    if (summary) {
      summary->records = result.records.size();
      summary->failures = result.failures;
    }
  });
}

int g2s_service_create(const char* data_dir, const char* cors_origin, int idle_ttl_seconds, g2s_service** out) {
  return guarded([&] {
    require(out != nullptr, "null output");
    g2s::ServiceOptions opts;
    if (data_dir) opts.data_dir = data_dir;
    if (cors_origin) opts.cors_origin = cors_origin;
    if (idle_ttl_seconds > 0) opts.idle_ttl = std::chrono::seconds(idle_ttl_seconds);
    *out = new g2s_service{g2s::Service(std::move(opts))};
  });
}

int g2s_service_listen(g2s_service* s, const char* host, int port) {
  return guarded([&] {
    require(s && host, "null argument");
    if (!s->svc.listen(host, port)) {
      g2s::fail(g2s::Errc::kIo, "cannot listen on " + std::string(host) + ":" + std::to_string(port));
    }
  });
}

int g2s_service_bind_any(g2s_service* s, const char* host, int* port_out) {
  return guarded([&] {
    require(s && host && port_out, "null argument");
    const int port = s->svc.bind_to_any_port(host);
    if (port <= 0) g2s::fail(g2s::Errc::kIo, "cannot bind " + std::string(host));
    *port_out = port;
  });
}

int g2s_service_listen_after_bind(g2s_service* s) {
  return guarded([&] {
    require(s != nullptr, "null service");
    s->svc.listen_after_bind();
  });
}

void g2s_service_stop(g2s_service* s) {
  if (s) s->svc.stop();
}

void g2s_service_free(g2s_service* s) { delete s; }

}  // extern "C"

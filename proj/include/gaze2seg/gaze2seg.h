/* C interface to the gaze-prompted segmentation pipeline.
 *
 * Every fallible call returns a g2s_status (G2S_OK on success). On failure
 * g2s_last_error() describes the error for the calling thread until the next
 * call on that thread. Objects are opaque handles released with the matching
 * *_free function; passing NULL to a *_free function is a no-op.
 */
#ifndef GAZE2SEG_H
#define GAZE2SEG_H

#include <stddef.h>
#include <stdint.h>

#if defined(G2S_BUILDING_LIBRARY)
#define G2S_API __attribute__((visibility("default")))
#else
#define G2S_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum g2s_status {
  G2S_OK = 0,
  G2S_ERR_INVALID_ARGUMENT = 1,
  G2S_ERR_IO = 2,
  G2S_ERR_BAD_MAGIC = 3,
  G2S_ERR_BAD_HEADER = 4,
  G2S_ERR_SIZE_MISMATCH = 5,
  G2S_ERR_UNSUPPORTED_DTYPE = 6,
  G2S_ERR_INVALID_DIMS = 7,
  G2S_ERR_INVALID_SPACING = 8,
  G2S_ERR_INVALID_MASK_VALUE = 9,
  G2S_ERR_UNSUPPORTED_COMPRESSED = 10,
  G2S_ERR_UNSUPPORTED_DATATYPE = 11,
  G2S_ERR_UNSUPPORTED_DIMS = 12,
  G2S_ERR_MISSING_VIEWPORT = 13,
  G2S_ERR_NON_MONOTONIC_TIME = 14,
  G2S_ERR_MALFORMED_LINE = 15,
  G2S_ERR_SLICE_OUT_OF_RANGE = 16,
  G2S_ERR_EMPTY_MASK = 17,
  G2S_ERR_EMPTY_HEATMAP = 18,
  G2S_ERR_ALL_SAME_CLASS = 19,
  G2S_ERR_DIM_MISMATCH = 20,
  G2S_ERR_BACKEND_UNAVAILABLE = 21,
  G2S_ERR_BACKEND_PROTOCOL = 22,
  G2S_ERR_MISSING_GROUND_TRUTH = 23,
  G2S_ERR_INVALID_SPEC = 24,
  G2S_ERR_NO_PROMPTS = 25,
  G2S_ERR_NOT_FOUND = 26,
  G2S_ERR_INTERNAL = 99
} g2s_status;

typedef enum g2s_slice_tag { G2S_TAG_SEGMENTED = 0, G2S_TAG_INTERPOLATED = 1, G2S_TAG_EMPTY = 2 } g2s_slice_tag;

typedef struct g2s_volume g2s_volume; /* image or binary mask volume */
typedef struct g2s_service g2s_service;

typedef struct g2s_synth_params {
  int n_points;        /* per slice */
  double inside_ratio; /* fraction placed on foreground pixels */
  double band_px;      /* outside samples lie within this chamfer distance */
  uint64_t seed;
} g2s_synth_params;

typedef struct g2s_run_summary {
  size_t records;
  size_t failures;
} g2s_run_summary;

G2S_API const char* g2s_version(void);
G2S_API const char* g2s_last_error(void);
G2S_API const char* g2s_status_name(int status);
/* Releases strings returned through char** out-parameters. */
G2S_API void g2s_string_free(char* s);

/* Volumes. Format (mvol or uncompressed NIfTI-1) is detected from content. */
G2S_API int g2s_volume_load(const char* path, g2s_volume** out);
/* Loads as a binary mask: voxels equal to label_id become 1, or any nonzero voxel when label_id < 0. */
G2S_API int g2s_volume_load_mask(const char* path, int64_t label_id, g2s_volume** out);
G2S_API int g2s_volume_save(const g2s_volume* v, const char* path);
G2S_API void g2s_volume_free(g2s_volume* v);
G2S_API int g2s_volume_dims(const g2s_volume* v, int64_t dims[3]);
G2S_API int g2s_volume_spacing(const g2s_volume* v, double spacing_mm[3]);
/* 1 for masks, 0 for images, -1 on a NULL handle. */
G2S_API int g2s_volume_is_mask(const g2s_volume* v);

G2S_API int g2s_dice(const g2s_volume* pred, const g2s_volume* gt, double* out);

/* Synthetic gaze over every foreground slice of a mask, as a JSONL gaze log
 * with an identity viewport. *out_jsonl is released with g2s_string_free. */
G2S_API void g2s_synth_params_default(g2s_synth_params* p);
G2S_API int g2s_synth_gaze_log(const g2s_volume* gt_mask, const g2s_synth_params* p, char** out_jsonl,
                               size_t* out_warning_count);

/* Keeps `masks` on the listed slices and fills the rest of the volume by
 * shape-based interpolation. tags_out, if non-NULL, receives nz g2s_slice_tag values. */
G2S_API int g2s_interp_masklet(const g2s_volume* masks, const int64_t* slices, size_t n_slices, g2s_volume** out,
                               uint8_t* tags_out);

/* Runs an experiment grid from a JSON spec file and writes its reports.
 * Returns G2S_ERR_INVALID_SPEC for unusable specs; per-case failures are
 * reported through summary->failures, not the status. */
G2S_API int g2s_run_experiment(const char* spec_path, g2s_run_summary* summary);

/* HTTP session service. data_dir and cors_origin may be NULL. */
G2S_API int g2s_service_create(const char* data_dir, const char* cors_origin, int idle_ttl_seconds,
                               g2s_service** out);
/* Blocks until g2s_service_stop is called from another thread. */
G2S_API int g2s_service_listen(g2s_service* s, const char* host, int port);
G2S_API int g2s_service_bind_any(g2s_service* s, const char* host, int* port_out);
G2S_API int g2s_service_listen_after_bind(g2s_service* s);
G2S_API void g2s_service_stop(g2s_service* s);
G2S_API void g2s_service_free(g2s_service* s);

#ifdef __cplusplus
}
#endif

#endif /* GAZE2SEG_H */

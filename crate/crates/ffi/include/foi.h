/* C interface for the foreign-object-intrusion tracking engine. */

#ifndef FOI_H
#define FOI_H

/* Generated by cbindgen from foi-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every fallible call.
typedef enum FoiStatus {
  // The call succeeded.
  FOI_STATUS_OK = 0,
  // A required pointer argument was NULL.
  FOI_STATUS_NULL_ARGUMENT = 1,
  // A string argument was not valid UTF-8.
  FOI_STATUS_INVALID_UTF8 = 2,
  // An argument violated the call contract.
  FOI_STATUS_INVALID_ARGUMENT = 3,
  // Embedding dimensions disagreed.
  FOI_STATUS_DIMENSION_MISMATCH = 4,
  // A zero-norm embedding was supplied.
  FOI_STATUS_ZERO_NORM = 5,
  // The reference store holds no records.
  FOI_STATUS_EMPTY_STORE = 6,
  // A record index was already taken.
  FOI_STATUS_DUPLICATE_INDEX = 7,
  // File IO failed.
  FOI_STATUS_IO = 8,
  // Input data failed to parse.
  FOI_STATUS_PARSE = 9,
  // Frame indices did not increase strictly.
  FOI_STATUS_OUT_OF_ORDER_FRAME = 10,
  // A caller-provided buffer was too small.
  FOI_STATUS_BUFFER_TOO_SMALL = 11,
  // An internal invariant failed.
  FOI_STATUS_INTERNAL = 12,
} FoiStatus;

// Opaque tracking-session handle.
typedef struct FoiSession FoiSession;

// Opaque reference-store handle.
typedef struct FoiStore FoiStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// A short human-readable description of a status code. The returned string
// is static; do not free it.
const char *foi_status_message(enum FoiStatus status);

// Releases a string allocated by this library.
//
// # Safety
// `s` must be a pointer previously returned through an out parameter of
// this library and not yet freed. NULL is accepted and ignored.
void foi_string_free(char *s);

// Creates an empty reference store for `dim`-component embeddings.
// Returns NULL when `dim` is zero.
struct FoiStore *foi_store_new(uintptr_t dim);

// Loads a store snapshot from `path`, writing the handle to `out_store`.
//
// # Safety
// `path` must be a NUL-terminated string and `out_store` a valid pointer.
enum FoiStatus foi_store_load(const char *path, struct FoiStore **out_store);

// Writes the store snapshot to `path`.
//
// # Safety
// `store` must be a live handle and `path` a NUL-terminated string.
enum FoiStatus foi_store_save(const struct FoiStore *store, const char *path);

// Appends a record; the embedding is normalized on ingestion. The assigned
// index is written to `out_index` when it is non-NULL.
//
// # Safety
// `store` must be a live handle, `values` must point at `len` floats, and
// `label`/`source_path` must be NUL-terminated strings (`source_path` may
// be NULL for none).
enum FoiStatus foi_store_insert(struct FoiStore *store,
                                const float *values,
                                uintptr_t len,
                                const char *label,
                                const char *source_path,
                                uint64_t *out_index);

// Number of records in the store; 0 for a NULL handle.
//
// # Safety
// `store` must be NULL or a live handle.
uintptr_t foi_store_len(const struct FoiStore *store);

// Embedding dimension of the store; 0 for a NULL handle.
//
// # Safety
// `store` must be NULL or a live handle.
uintptr_t foi_store_dim(const struct FoiStore *store);

// Classifies one query embedding: brute-force cosine scan, closest record
// wins. Writes the record index and similarity, and copies the label into
// `label_buf` (NUL-terminated) when the buffer is large enough.
//
// # Safety
// `store` must be a live handle, `query` must point at `len` floats, and
// `label_buf` must point at `label_cap` writable bytes (or be NULL along
// with `label_cap == 0`).
enum FoiStatus foi_store_classify(const struct FoiStore *store,
                                  const float *query,
                                  uintptr_t len,
                                  uint64_t *out_index,
                                  double *out_similarity,
                                  char *label_buf,
                                  uintptr_t label_cap);

// Exact top-k retrieval. Writes up to `capacity` (index, similarity) pairs
// and the produced count.
//
// # Safety
// `store` must be a live handle; `query` points at `len` floats;
// `out_indices` and `out_similarities` point at `capacity` writable slots;
// `out_count` must be a valid pointer.
enum FoiStatus foi_store_nearest(const struct FoiStore *store,
                                 const float *query,
                                 uintptr_t len,
                                 uintptr_t k,
                                 uint64_t *out_indices,
                                 double *out_similarities,
                                 uintptr_t capacity,
                                 uintptr_t *out_count);

// Releases a store handle. NULL is accepted and ignored.
//
// # Safety
// `store` must be NULL or a live handle not owned by a session.
void foi_store_free(struct FoiStore *store);

// Creates a tracking session. The session takes ownership of `store`; the
// handle must not be used or freed afterwards. `config_json` may be NULL
// for defaults, or a JSON object with `tracker` (`iou_threshold`,
// `feature_threshold`, `max_misses`, `buffer_size`), `zones` (array of
// `{"name":..,"bounds":{"x_min":..,"y_min":..,"x_max":..,"y_max":..}}`),
// and `approach_window`.
//
// # Safety
// `store` must be a live handle and `out_session` a valid pointer;
// `config_json` must be NULL or a NUL-terminated string.
enum FoiStatus foi_session_new(struct FoiStore *store,
                               const char *config_json,
                               struct FoiSession **out_session);

// Feeds one frame. `boxes` holds `count * 4` floats as
// `[x_min, y_min, x_max, y_max]` per detection, `confidences` holds
// `count` floats, and `embeddings` holds `count * dim` floats row by row.
// When `out_events_json` is non-NULL it receives the frame's alert events
// as line-delimited JSON (an empty string when there are none).
//
// # Safety
// `session` must be a live handle; array arguments must match the
// documented lengths; `count == 0` permits NULL arrays.
enum FoiStatus foi_session_process_frame(struct FoiSession *session,
                                         uint64_t frame_index,
                                         uint64_t timestamp_ms,
                                         const double *boxes,
                                         const double *confidences,
                                         const float *embeddings,
                                         uintptr_t count,
                                         char **out_events_json);

// Produces the per-track reports accumulated so far as line-delimited JSON.
//
// # Safety
// `session` must be a live handle and `out_reports_json` a valid pointer.
enum FoiStatus foi_session_reports(const struct FoiSession *session, char **out_reports_json);

// Releases a session handle. NULL is accepted and ignored.
//
// # Safety
// `session` must be NULL or a live handle.
void foi_session_free(struct FoiSession *session);

// Cosine similarity between two `len`-component vectors, clamped to
// [-1, 1]. Rejects zero-norm input.
//
// # Safety
// `a` and `b` must point at `len` floats and `out` must be valid.
enum FoiStatus foi_cosine_similarity(const float *a, const float *b, uintptr_t len, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOI_H */

#ifndef GAZEFORMER_H
#define GAZEFORMER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. `GF_STATUS_OK` is zero; everything else is a failure.
typedef enum {
  GF_STATUS_OK = 0,
  // A null pointer, invalid UTF-8 or out-of-range argument.
  GF_STATUS_INVALID_ARGUMENT = 1,
  // A file could not be read or written.
  GF_STATUS_IO = 2,
  // Malformed input data: checkpoint, feature file, dataset, embeddings.
  GF_STATUS_FORMAT = 3,
  // Invalid model configuration.
  GF_STATUS_CONFIG = 4,
  // Failure in the numerical pipeline: shapes, non-finite values.
  GF_STATUS_COMPUTE = 5,
  // The metric is undefined for the given inputs.
  GF_STATUS_UNDEFINED_METRIC = 6,
  // The target name is not in the embedding table.
  GF_STATUS_UNKNOWN_TARGET = 7,
  // A Rust panic was caught at the boundary.
  GF_STATUS_PANIC = 8,
} GfStatus;

// A loaded model. Immutable; may be shared between threads for prediction.
typedef struct GfModel GfModel;

// Scanpaths produced by one prediction call.
typedef struct GfScanpathSet GfScanpathSet;

// Options shared by the prediction entry points.
typedef struct {
  // Number of scanpaths to sample (at least 1).
  size_t n_samples;
  uint64_t seed;
  // Non-zero emits means instead of samples.
  uint8_t deterministic;
  // Image frame in pixels.
  double width;
  double height;
} GfPredictOptions;

// One fixation: pixel coordinates and duration in milliseconds.
typedef struct {
  double x;
  double y;
  double t;
} GfFixation;

// MultiMatch similarities in `[0, 1]`. Components undefined for the inputs
// (single-fixation scanpaths have no saccades) are NaN.
typedef struct {
  double shape;
  double direction;
  double length;
  double position;
} GfMultiMatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next gazeformer call on the same thread.
const char *gf_last_error(void);

// Library version as a static NUL-terminated string.
const char *gf_version(void);

// Loads a model from a checkpoint file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
GfStatus gf_model_load(const char *path, GfModel **out);

// Creates a model with freshly initialized weights. `config_path` names a
// TOML file with a `[model]` table; null selects the tiny configuration.
//
// # Safety
// `config_path` must be null or NUL-terminated; `out` must be writable.
GfStatus gf_model_init(const char *config_path, uint64_t seed, GfModel **out);

// Saves the model weights as a checkpoint.
//
// # Safety
// `model` must come from this library; `path` must be NUL-terminated.
GfStatus gf_model_save(const GfModel *model, const char *path);

// Maximum scanpath length `L` of the model.
//
// # Safety
// `model` must come from this library; `out` must be writable.
GfStatus gf_model_max_len(const GfModel *model, size_t *out);

// Releases a model. Null is ignored.
//
// # Safety
// `model` must be null or a handle not yet freed.
void gf_model_free(GfModel *model);

// Default options: 10 samples, seed 0, stochastic, 1680×1050 frame.
GfPredictOptions gf_predict_options_default(void);

// Predicts scanpaths on deterministic synthetic features for `image_id`.
//
// # Safety
// Handles must come from this library; strings must be NUL-terminated;
// `opts` and `out` must be valid pointers.
GfStatus gf_predict_synthetic(const GfModel *model,
                              const char *image_id,
                              const char *target,
                              uint64_t feature_seed,
                              const GfPredictOptions *opts,
                              GfScanpathSet **out);

// Predicts scanpaths from a feature file. The target is embedded with the
// seeded hash embedder, so any non-empty name is accepted.
//
// # Safety
// As for [`gf_predict_synthetic`].
GfStatus gf_predict_features(const GfModel *model,
                             const char *feature_path,
                             const char *target,
                             uint64_t embedding_seed,
                             const GfPredictOptions *opts,
                             GfScanpathSet **out);

// Number of scanpaths in the set; 0 for null.
//
// # Safety
// `set` must be null or a live handle.
size_t gf_scanpath_set_len(const GfScanpathSet *set);

// Borrows scanpath `index`. The fixation array stays valid until the set is
// freed. `out_empty` (optional) receives 1 when the model terminated before
// the first step and only the initial fixation was emitted.
//
// # Safety
// `set` must be a live handle; out pointers must be writable (`out_empty`
// may be null).
GfStatus gf_scanpath_set_get(const GfScanpathSet *set,
                             size_t index,
                             const GfFixation **out_fixations,
                             size_t *out_len,
                             uint8_t *out_empty);

// Releases a scanpath set. Null is ignored.
//
// # Safety
// `set` must be null or a handle not yet freed.
void gf_scanpath_set_free(GfScanpathSet *set);

// Sequence score of two symbol strings: Needleman–Wunsch matches over the
// longer length, in `[0, 1]`. Both strings must be non-empty.
//
// # Safety
// `a`/`b` must point to `a_len`/`b_len` values; `out` must be writable.
GfStatus gf_sequence_score(const uint32_t *a,
                           size_t a_len,
                           const uint32_t *b,
                           size_t b_len,
                           double *out);

// Levenshtein distance between two symbol strings.
//
// # Safety
// As for [`gf_sequence_score`].
GfStatus gf_edit_distance(const uint32_t *a,
                          size_t a_len,
                          const uint32_t *b,
                          size_t b_len,
                          size_t *out);

// MultiMatch similarity of two scanpaths in a `width × height` frame.
//
// # Safety
// `a`/`b` must point to `a_len`/`b_len` fixations; `out` must be writable.
GfStatus gf_multimatch(const GfFixation *a,
                       size_t a_len,
                       const GfFixation *b,
                       size_t b_len,
                       double width,
                       double height,
                       GfMultiMatch *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAZEFORMER_H */

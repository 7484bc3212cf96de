#ifndef CSCORE_H
#define CSCORE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CsMethod {
  CS_METHOD_GRAD_CAM = 0,
  CS_METHOD_GRAD_CAM_PP = 1,
  CS_METHOD_LAYER_CAM = 2,
  CS_METHOD_EIGEN_CAM = 3,
  CS_METHOD_SCORE_CAM = 4,
} CsMethod;

typedef enum CsStatus {
  CS_STATUS_OK = 0,
  CS_STATUS_NULL_POINTER = 1,
  CS_STATUS_INVALID_ARGUMENT = 2,
  CS_STATUS_NON_FINITE = 3,
  CS_STATUS_MISSING_INPUT = 4,
  CS_STATUS_NOT_FOUND = 5,
  CS_STATUS_IO = 6,
  CS_STATUS_INTERNAL = 7,
  CS_STATUS_PANIC = 8,
} CsStatus;

/**
 * Heatmaps of one checkpoint with their labels and confidences.
 */
typedef struct CsHeatmapSet CsHeatmapSet;

typedef struct CsClassScore {
  double cscore;
  size_t gold_size;
  size_t degenerate_pairs;
  bool empty_gold;
  bool singleton_gold;
} CsClassScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null. Owned by the library.
 */
const char *cs_last_error(void);

/**
 * Soft-IoU of two `len`-element heatmaps with values in [0, 1].
 *
 * # Safety
 * `a` and `b` must point to `len` floats; `out` and `degenerate` must be
 * valid for writes (`degenerate` may be null).
 */
enum CsStatus cs_soft_iou(const float *a,
                          const float *b,
                          size_t len,
                          double *out,
                          bool *degenerate);

/**
 * Compose a single-layer CAM from channel-last `height x width x channels`
 * activations into `out` (`height * width` floats).
 *
 * `gradients` is required by the gradient methods and `channel_scores`
 * (`channels` doubles) by ScoreCAM; either may be null otherwise.
 *
 * # Safety
 * Non-null pointers must reference buffers of the stated sizes.
 */
enum CsStatus cs_compose(enum CsMethod method,
                         size_t height,
                         size_t width,
                         size_t channels,
                         const float *activations,
                         const float *gradients,
                         const double *channel_scores,
                         float *out,
                         bool *degenerate);

/**
 * New empty set of `height x width` heatmaps, written to `*out`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum CsStatus cs_heatmap_set_new(size_t height, size_t width, struct CsHeatmapSet **out);

/**
 * Add one image: its id, true label, predicted probability of that label
 * and its heatmap (`height * width` floats in [0, 1]).
 *
 * # Safety
 * `set` must come from [`cs_heatmap_set_new`]; `image_id` must be a
 * NUL-terminated UTF-8 string; `data` must hold `height * width` floats.
 */
enum CsStatus cs_heatmap_set_push(struct CsHeatmapSet *set,
                                  const char *image_id,
                                  size_t true_label,
                                  double confidence,
                                  const float *data);

/**
 * Number of images in the set (0 for a null set).
 *
 * # Safety
 * `set` must be null or come from [`cs_heatmap_set_new`].
 */
size_t cs_heatmap_set_len(const struct CsHeatmapSet *set);

/**
 * C-Score of `class_id`: gold list of correctly labelled images with
 * confidence >= `tau`, maps emphasized by `alpha`.
 *
 * # Safety
 * `set` must come from [`cs_heatmap_set_new`]; `out` must be valid for writes.
 */
enum CsStatus cs_heatmap_set_class_score(const struct CsHeatmapSet *set,
                                         enum CsMethod method,
                                         size_t class_id,
                                         double tau,
                                         double alpha,
                                         struct CsClassScore *out);

/**
 * Release a set. Null is a no-op.
 *
 * # Safety
 * `set` must be null or come from [`cs_heatmap_set_new`], and not be used afterwards.
 */
void cs_heatmap_set_free(struct CsHeatmapSet *set);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSCORE_H */

#ifndef FOLDWISE_H
#define FOLDWISE_H

#include <stddef.h>
#include <stdint.h>

typedef enum FwStatus {
  FW_STATUS_OK = 0,
  FW_STATUS_NULL_POINTER = 1,
  FW_STATUS_INVALID_ARGUMENT = 2,
  FW_STATUS_SCHEMA = 3,
  FW_STATUS_VALIDATION = 4,
  FW_STATUS_ALIGNMENT = 5,
  FW_STATUS_DEGENERATE = 6,
  FW_STATUS_FORMAT = 7,
  FW_STATUS_IO = 8,
  FW_STATUS_BUFFER_TOO_SMALL = 9,
  FW_STATUS_PANIC = 10,
  FW_STATUS_OTHER = 11,
} FwStatus;

/**
 * Trained random forest.
 */
typedef struct FwForest FwForest;

/**
 * Normalised 2-D heatmap with values in `[0, 1]`.
 */
typedef struct FwHeatmap FwHeatmap;

/**
 * Prediction matrix loaded from a prediction CSV.
 */
typedef struct FwPredictions FwPredictions;

/**
 * ROC curve for one positive class.
 */
typedef struct FwRoc FwRoc;

/**
 * f32 tensor in TNSR v1 layout.
 */
typedef struct FwTensor FwTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *fw_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void fw_string_free(char *s);

/**
 * Load and validate a prediction CSV against `n_classes` class names.
 *
 * # Safety
 * `path` and each of the `n_classes` entries of `class_names` must be
 * NUL-terminated strings; `out` must be writable.
 */
enum FwStatus fw_predictions_load(const char *path,
                                  const char *const *class_names,
                                  size_t n_classes,
                                  struct FwPredictions **out);

/**
 * # Safety
 * `h` must be a live handle; `rows` and `cols` must be writable.
 */
enum FwStatus fw_predictions_dims(const struct FwPredictions *h, size_t *rows, size_t *cols);

/**
 * # Safety
 * `h` must be a live handle; `value` must be writable.
 */
enum FwStatus fw_predictions_get(const struct FwPredictions *h,
                                 size_t row,
                                 size_t col,
                                 double *value);

/**
 * Sample id of `row` as a new string, or null when out of range.
 *
 * # Safety
 * `h` must be a live handle.
 */
char *fw_predictions_sample_id(const struct FwPredictions *h, size_t row);

/**
 * # Safety
 * `h` must be null or a handle from [`fw_predictions_load`] not yet freed.
 */
void fw_predictions_free(struct FwPredictions *h);

/**
 * ROC curve from scores and 0/1 truth flags (non-zero means positive).
 *
 * # Safety
 * `scores` and `truth` must each hold `n` elements; `out` must be writable.
 */
enum FwStatus fw_roc_new(const double *scores, const uint8_t *truth, size_t n, struct FwRoc **out);

/**
 * # Safety
 * `h` must be a live handle; `value` must be writable.
 */
enum FwStatus fw_roc_auc(const struct FwRoc *h, double *value);

/**
 * Number of points on the curve, 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t fw_roc_len(const struct FwRoc *h);

/**
 * Copy the curve into `fpr`, `tpr` and optionally `thresholds` (may be
 * null), each with room for `capacity` values.
 *
 * # Safety
 * Non-null buffers must hold `capacity` writable doubles.
 */
enum FwStatus fw_roc_points(const struct FwRoc *h,
                            double *fpr,
                            double *tpr,
                            double *thresholds,
                            size_t capacity);

/**
 * # Safety
 * `h` must be null or a handle from [`fw_roc_new`] not yet freed.
 */
void fw_roc_free(struct FwRoc *h);

/**
 * Train a forest on a row-major `n_samples x n_features` matrix with labels
 * in `0..n_classes`. `mtry == 0` selects the default, `max_depth == 0`
 * means unlimited.
 *
 * # Safety
 * `features` must hold `n_samples * n_features` doubles and `labels`
 * `n_samples` values; `out` must be writable.
 */
enum FwStatus fw_forest_train(const double *features,
                              const uint32_t *labels,
                              size_t n_samples,
                              size_t n_features,
                              size_t n_classes,
                              size_t n_trees,
                              size_t mtry,
                              size_t max_depth,
                              uint64_t seed,
                              struct FwForest **out);

/**
 * Predict hard labels (ties to the lowest class) and, when `votes` is not
 * null, per-class vote fractions (`n_samples * n_classes`, row-major).
 *
 * # Safety
 * `features` must hold `n_samples * n_features` doubles, `labels_out`
 * `n_samples` writable values and `votes` (if non-null) room for
 * `n_samples * n_classes` doubles.
 */
enum FwStatus fw_forest_predict(const struct FwForest *h,
                                const double *features,
                                size_t n_samples,
                                size_t n_features,
                                uint32_t *labels_out,
                                double *votes);

/**
 * Number of classes the forest predicts, 0 for a null handle.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
size_t fw_forest_n_classes(const struct FwForest *h);

/**
 * Serialised model as a new JSON string, or null on failure.
 *
 * # Safety
 * `h` must be a live handle.
 */
char *fw_forest_to_json(const struct FwForest *h);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FwStatus fw_forest_from_json(const char *json, struct FwForest **out);

/**
 * # Safety
 * `h` must be null or a forest handle not yet freed.
 */
void fw_forest_free(struct FwForest *h);

/**
 * Grad-CAM heatmap from `[channels, height, width]` activation and
 * gradient buffers.
 *
 * # Safety
 * Both buffers must hold `channels * height * width` floats; `out` must be
 * writable.
 */
enum FwStatus fw_gradcam(const float *activations,
                         const float *gradients,
                         size_t channels,
                         size_t height,
                         size_t width,
                         struct FwHeatmap **out);

/**
 * # Safety
 * `h` must be a live handle; `height` and `width` must be writable.
 */
enum FwStatus fw_heatmap_dims(const struct FwHeatmap *h, size_t *height, size_t *width);

/**
 * Copy the row-major values into `values`, which has room for `capacity`.
 *
 * # Safety
 * `values` must hold `capacity` writable doubles.
 */
enum FwStatus fw_heatmap_values(const struct FwHeatmap *h, double *values, size_t capacity);

/**
 * Corner-aligned bilinear resize to `out_width x out_height`.
 *
 * # Safety
 * `h` must be a live handle; `out` must be writable.
 */
enum FwStatus fw_heatmap_upsample(const struct FwHeatmap *h,
                                  size_t out_width,
                                  size_t out_height,
                                  struct FwHeatmap **out);

/**
 * # Safety
 * `h` must be null or a heatmap handle not yet freed.
 */
void fw_heatmap_free(struct FwHeatmap *h);

/**
 * Build a tensor from a shape and row-major data.
 *
 * # Safety
 * `shape` must hold `rank` values and `data` their product.
 */
enum FwStatus fw_tensor_new(const size_t *shape,
                            size_t rank,
                            const float *data,
                            struct FwTensor **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum FwStatus fw_tensor_read(const char *path, struct FwTensor **out);

/**
 * # Safety
 * `h` must be a live handle; `path` a NUL-terminated string.
 */
enum FwStatus fw_tensor_write(const struct FwTensor *h, const char *path);

/**
 * # Safety
 * `h` must be null or a live handle.
 */
size_t fw_tensor_rank(const struct FwTensor *h);

/**
 * # Safety
 * `h` must be null or a live handle.
 */
size_t fw_tensor_len(const struct FwTensor *h);

/**
 * # Safety
 * `h` must be a live handle; `shape` must have room for `capacity` values.
 */
enum FwStatus fw_tensor_shape(const struct FwTensor *h, size_t *shape, size_t capacity);

/**
 * Borrowed pointer to the tensor data, valid while the handle lives.
 *
 * # Safety
 * `h` must be null or a live handle.
 */
const float *fw_tensor_data(const struct FwTensor *h);

/**
 * # Safety
 * `h` must be null or a tensor handle not yet freed.
 */
void fw_tensor_free(struct FwTensor *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOLDWISE_H */

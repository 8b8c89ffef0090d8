#ifndef ZSCAN_FFI_H
#define ZSCAN_FFI_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Values 2 to 4 match the command-line exit codes.
 */
typedef enum ZscanStatus {
  ZSCAN_STATUS_OK = 0,
  /**
   * Null pointer, invalid UTF-8 or an undersized output buffer.
   */
  ZSCAN_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Invalid data or configuration.
   */
  ZSCAN_STATUS_CONFIG = 2,
  ZSCAN_STATUS_IO = 3,
  ZSCAN_STATUS_NON_CONVERGENCE = 4,
  /**
   * A panic was caught at the boundary.
   */
  ZSCAN_STATUS_INTERNAL = 5,
} ZscanStatus;

/**
 * Opaque labeled dataset.
 */
typedef struct ZscanDataset ZscanDataset;

/**
 * Opaque trained classifier bundle.
 */
typedef struct ZscanModel ZscanModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *zscan_version(void);

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *zscan_last_error(void);

/**
 * Converts a reflection coefficient to impedance.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum ZscanStatus zscan_reflection_to_impedance(double tau_re,
                                               double tau_im,
                                               double z_ref,
                                               double *out_re,
                                               double *out_im);

/**
 * Converts an impedance to a reflection coefficient.
 *
 * # Safety
 * `out_re` and `out_im` must be valid for writes.
 */
enum ZscanStatus zscan_impedance_to_reflection(double z_re,
                                               double z_im,
                                               double z_ref,
                                               double *out_re,
                                               double *out_im);

/**
 * Parses dataset CSV text with one reference impedance for all rows.
 *
 * # Safety
 * `csv` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum ZscanStatus zscan_dataset_from_csv(const char *csv, double z_ref, struct ZscanDataset **out);

/**
 * Loads a dataset from a CSV (with optional sidecar), a `.s1p` file or a
 * manifest directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum ZscanStatus zscan_dataset_load(const char *path, struct ZscanDataset **out);

/**
 * Synthesizes a corpus from a simulator configuration in JSON. A null or
 * empty string selects the defaults.
 *
 * # Safety
 * `config_json` must be null or NUL-terminated; `out` must be valid for writes.
 */
enum ZscanStatus zscan_dataset_simulate(const char *config_json, struct ZscanDataset **out);

/**
 * Number of traces, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t zscan_dataset_len(const struct ZscanDataset *ds);

/**
 * Number of sweep points per trace, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t zscan_dataset_n_points(const struct ZscanDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void zscan_dataset_free(struct ZscanDataset *ds);

/**
 * Loads a model bundle from a JSON file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be valid for writes.
 */
enum ZscanStatus zscan_model_load(const char *path, struct ZscanModel **out);

/**
 * Loads a model bundle from JSON text.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be valid for writes.
 */
enum ZscanStatus zscan_model_from_json(const char *json, struct ZscanModel **out);

/**
 * Number of classes, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t zscan_model_n_classes(const struct ZscanModel *model);

/**
 * Name of class `index`, or null when out of range. Owned by the model.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
const char *zscan_model_class_name(const struct ZscanModel *model, size_t index);

/**
 * Predicts a class index for every trace of `ds`. `out_labels` must hold
 * at least `zscan_dataset_len(ds)` entries.
 *
 * # Safety
 * Handles must be live; `out_labels` must be valid for `capacity` writes.
 */
enum ZscanStatus zscan_model_predict(const struct ZscanModel *model,
                                     const struct ZscanDataset *ds,
                                     size_t *out_labels,
                                     size_t capacity);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void zscan_model_free(struct ZscanModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZSCAN_FFI_H */

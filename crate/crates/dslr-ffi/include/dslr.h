/* C interface to the dslr accelerator model. */

#ifndef DSLR_H
#define DSLR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Multiplier-step ceiling accepted by `dslr_simulate_layer`.
 */
#define DSLR_SIM_STEP_GUARD (1 << 28)

/**
 * Result codes of every entry point.
 */
typedef enum DslrStatus {
  DSLR_STATUS_OK = 0,
  DSLR_STATUS_NULL_ARGUMENT = 1,
  DSLR_STATUS_INVALID_ARGUMENT = 2,
  DSLR_STATUS_UNKNOWN_NETWORK = 3,
  DSLR_STATUS_PARSE_ERROR = 4,
  DSLR_STATUS_INDEX_OUT_OF_RANGE = 5,
  DSLR_STATUS_TOO_LARGE = 6,
  DSLR_STATUS_INTERNAL = 7,
} DslrStatus;

/**
 * Opaque handle: a network plus the model parameters used for reports.
 */
typedef struct DslrModel DslrModel;

/**
 * Layer dimensions for an ad-hoc simulation.
 */
typedef struct DslrLayer {
  uint32_t in_channels;
  uint32_t out_channels;
  uint32_t out_rows;
  uint32_t out_cols;
  uint32_t kernel;
  uint32_t stride;
  uint32_t padding;
} DslrLayer;

/**
 * Outcome of a digit-accurate simulation.
 */
typedef struct DslrSimResult {
  uint64_t measured_cycles;
  uint64_t predicted_cycles;
  uint64_t per_pass_cycles;
  bool matches_reference;
} DslrSimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *dslr_version(void);

/**
 * Create a model for a built-in network (alexnet, vgg16, resnet18) with
 * default tile geometry and hardware profiles.
 *
 * # Safety
 * `name` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum DslrStatus dslr_model_builtin(const char *name, struct DslrModel **out);

/**
 * Create a model from a JSON configuration document (same schema as the
 * CLI's `--config` file).
 *
 * # Safety
 * `json` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum DslrStatus dslr_model_from_json(const char *json, struct DslrModel **out);

/**
 * Release a model handle. Passing NULL is a no-op.
 *
 * # Safety
 * `model` must have come from a `dslr_model_*` constructor and not have
 * been freed already.
 */
void dslr_model_free(struct DslrModel *model);

/**
 * Number of layers in the model's network.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum DslrStatus dslr_model_layer_count(const struct DslrModel *model, uintptr_t *out);

/**
 * Analytic cycle count of one layer on the left-to-right design.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum DslrStatus dslr_model_cycles(const struct DslrModel *model,
                                  uintptr_t layer_idx,
                                  uint64_t *out);

/**
 * Analytic cycle count of one layer on the bit-serial baseline.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum DslrStatus dslr_model_baseline_cycles(const struct DslrModel *model,
                                           uintptr_t layer_idx,
                                           uint64_t *out);

/**
 * Operation count (2*M*N*R*C*K*K) of one layer.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum DslrStatus dslr_model_layer_ops(const struct DslrModel *model,
                                     uintptr_t layer_idx,
                                     uint64_t *out);

/**
 * Full performance report as a JSON document; free with
 * [`dslr_string_free`].
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum DslrStatus dslr_model_report_json(const struct DslrModel *model,
                                       bool include_baseline,
                                       char **out);

/**
 * Free a string returned by this library. Passing NULL is a no-op.
 *
 * # Safety
 * `s` must have been returned by this library and not freed already.
 */
void dslr_string_free(char *s);

/**
 * Run a digit-accurate simulation of one ad-hoc layer against the golden
 * model, with tensors generated from `seed`. Uses the default tile
 * geometry; refuses runs beyond [`DSLR_SIM_STEP_GUARD`] multiplier steps.
 *
 * # Safety
 * `layer` and `out` must be valid pointers.
 */
enum DslrStatus dslr_simulate_layer(const struct DslrLayer *layer,
                                    uint64_t seed,
                                    struct DslrSimResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DSLR_H */

#ifndef LOADSIM_H
#define LOADSIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LoadsimStatus {
  LOADSIM_STATUS_OK = 0,
  LOADSIM_STATUS_NULL_POINTER = 1,
  LOADSIM_STATUS_INVALID_UTF8 = 2,
  LOADSIM_STATUS_IO = 3,
  LOADSIM_STATUS_PARSE = 4,
  LOADSIM_STATUS_VALIDATION = 5,
  LOADSIM_STATUS_DATA = 6,
  LOADSIM_STATUS_LENGTH_MISMATCH = 7,
  LOADSIM_STATUS_BUFFER_TOO_SMALL = 8,
  LOADSIM_STATUS_NOT_FOUND = 9,
  LOADSIM_STATUS_PANIC = 99,
} LoadsimStatus;

// Opaque run configuration.
typedef struct LoadsimConfig LoadsimConfig;

// Opaque result of a simulation.
typedef struct LoadsimRun LoadsimRun;

typedef struct LoadsimMetricReport {
  double mae;
  double rmse;
  double mape;
  double wape;
  double mda;
  double frechet;
} LoadsimMetricReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, static NUL-terminated string.
const char *loadsim_version(void);

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *loadsim_last_error(void);

// Loads and validates a run configuration file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum LoadsimStatus loadsim_config_load(const char *path, struct LoadsimConfig **out);

// Overrides the seed of a loaded configuration.
//
// # Safety
// `config` must come from [`loadsim_config_load`].
enum LoadsimStatus loadsim_config_set_seed(struct LoadsimConfig *config, uint64_t seed);

// # Safety
// `config` must come from [`loadsim_config_load`] or be null.
void loadsim_config_free(struct LoadsimConfig *config);

// Runs the configured simulation.
//
// # Safety
// `config` must come from [`loadsim_config_load`]; `out` must be valid.
enum LoadsimStatus loadsim_simulate(const struct LoadsimConfig *config, struct LoadsimRun **out);

// Simulated minutes and dwellings.
//
// # Safety
// `run` must come from [`loadsim_simulate`]; the out pointers may be null.
enum LoadsimStatus loadsim_run_shape(const struct LoadsimRun *run,
                                     uint32_t *minutes,
                                     size_t *dwellings);

// Mean load per dwelling in W, one value per minute.
//
// # Safety
// `out` must hold `cap` doubles or be null; `written` may be null.
enum LoadsimStatus loadsim_run_load(const struct LoadsimRun *run,
                                    double *out,
                                    size_t cap,
                                    size_t *written);

// Mean load of one appliance group (e.g. `cooking`, `dhw`).
//
// # Safety
// As [`loadsim_run_load`]; `group` must be a NUL-terminated string.
enum LoadsimStatus loadsim_run_group_load(const struct LoadsimRun *run,
                                          const char *group,
                                          double *out,
                                          size_t cap,
                                          size_t *written);

// Number of showers taken during the run.
//
// # Safety
// `run` must come from [`loadsim_simulate`]; `count` must be valid.
enum LoadsimStatus loadsim_run_shower_count(const struct LoadsimRun *run, size_t *count);

// # Safety
// `run` must come from [`loadsim_simulate`] or be null.
void loadsim_run_free(struct LoadsimRun *run);

// All six metrics of `model` against `reference`, both of length `len`.
//
// # Safety
// Both arrays must hold `len` doubles; `out` must be valid.
enum LoadsimStatus loadsim_compare(const double *model,
                                   const double *reference,
                                   size_t len,
                                   struct LoadsimMetricReport *out);

// Discrete Fréchet distance between two series of different lengths.
//
// # Safety
// `a` holds `na` doubles, `b` holds `nb`; `out` must be valid.
enum LoadsimStatus loadsim_frechet(const double *a,
                                   size_t na,
                                   const double *b,
                                   size_t nb,
                                   double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOADSIM_H */

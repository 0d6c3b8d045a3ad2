#ifndef TOPOFLOCK_H
#define TOPOFLOCK_H

/* Generated by cbindgen from the topoflock-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes; nonzero values match the CLI exit codes where applicable.
typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_CONFIG_ERROR = 2,
  TF_STATUS_CHECK_FAILURE = 3,
  TF_STATUS_RUNTIME_ABORT = 4,
  TF_STATUS_INVALID_ARGUMENT = 5,
  TF_STATUS_PANIC = 6,
} TfStatus;

// Opaque experiment configuration.
typedef struct TfConfig TfConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Crate version as a static NUL-terminated string.
const char *tf_version(void);

// Message describing the most recent failure on this thread. Valid until
// the next failing call.
const char *tf_last_error(void);

// Release a string allocated by this library.
//
// # Safety
// `s` must have been returned by a `tf_*` function and not freed before.
void tf_string_free(char *s);

// Default configuration.
//
// # Safety
// `out` must be a valid pointer to a `TfConfig*` slot.
enum TfStatus tf_config_default(struct TfConfig **out);

// Parse a configuration from `key = value` text.
//
// # Safety
// `text` must be a NUL-terminated string; `out` a valid pointer.
enum TfStatus tf_config_parse_text(const char *text, struct TfConfig **out);

// Parse a configuration file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` a valid pointer.
enum TfStatus tf_config_parse_file(const char *path, struct TfConfig **out);

// Override one key on an existing configuration, re-validating everything.
//
// # Safety
// `cfg` must be a live handle; `key` and `value` NUL-terminated strings.
enum TfStatus tf_config_set(struct TfConfig *cfg, const char *key, const char *value);

// Canonical text form of a configuration; free with `tf_string_free`.
//
// # Safety
// `cfg` must be a live handle.
char *tf_config_to_text(const struct TfConfig *cfg);

// Release a configuration handle.
//
// # Safety
// `cfg` must come from this library and not be freed twice.
void tf_config_free(struct TfConfig *cfg);

// Run the experiment described by the config. `out_dir` optionally
// overrides the config's output directory; pass NULL to keep it.
//
// # Safety
// `cfg` must be a live handle; `out_dir` NULL or NUL-terminated.
enum TfStatus tf_run(const struct TfConfig *cfg, const char *out_dir);

// Apply the singular alignment operator to `f` on a periodic grid carrying
// the density `rho` (topological kernel family, smooth cutoff). Writes n
// values into `out`.
//
// # Safety
// `rho`, `f` and `out` must point to `n` doubles each.
enum TfStatus tf_alignment_operator(size_t n,
                                    const double *rho,
                                    const double *f,
                                    double length,
                                    double alpha,
                                    double tau,
                                    double r0,
                                    double *out);

// Density-weighted commutator of the alignment operator with `f`; the
// source term of the momentum equation. Writes n values into `out`.
//
// # Safety
// `rho`, `f` and `out` must point to `n` doubles each.
enum TfStatus tf_commutator(size_t n,
                            const double *rho,
                            const double *f,
                            double length,
                            double alpha,
                            double tau,
                            double r0,
                            double *out);

// Second-smallest eigenvalue of the density-weighted alignment form.
//
// # Safety
// `rho` must point to `n` doubles; `out` to one double.
enum TfStatus tf_lambda2(size_t n,
                         const double *rho,
                         double length,
                         double alpha,
                         double tau,
                         double r0,
                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TOPOFLOCK_H */

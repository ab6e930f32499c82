#ifndef QCFLOW_H
#define QCFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QcfBlobShape {
  QCF_BLOB_SHAPE_RANKINE = 0,
  QCF_BLOB_SHAPE_GAUSSIAN = 1,
} QcfBlobShape;

typedef enum QcfKernelKind {
  QCF_KERNEL_KIND_CAUCHY = 0,
  QCF_KERNEL_KIND_EULER = 1,
} QcfKernelKind;

/*
 Result codes shared by all functions.
 */
typedef enum QcfStatus {
  QCF_STATUS_OK = 0,
  QCF_STATUS_NULL_POINTER = 1,
  QCF_STATUS_INVALID_INPUT = 2,
  QCF_STATUS_CONFIG = 3,
  QCF_STATUS_SINGULAR = 4,
  QCF_STATUS_BLOWUP = 5,
  QCF_STATUS_DEGENERATE = 6,
  QCF_STATUS_MEMORY = 7,
  QCF_STATUS_IO = 8,
  /*
   The output buffer is too small; the required size was written.
   */
  QCF_STATUS_BUFFER_TOO_SMALL = 9,
  QCF_STATUS_PANIC = 10,
} QcfStatus;

/*
 Diagnostics from a scenario run.
 */
typedef struct QcfReport QcfReport;

/*
 A parsed and validated scenario.
 */
typedef struct QcfScenario QcfScenario;

/*
 A blob simulation built from a scenario's initial data.
 */
typedef struct QcfSimulation QcfSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *qcf_version(void);

/*
 Message of the last failure on this thread, or NULL if none. The
 pointer stays valid until the next failing call on this thread.
 */
const char *qcf_last_error(void);

/*
 Parse a scenario from TOML text.

 # Safety
 `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum QcfStatus qcf_scenario_parse(const char *text, struct QcfScenario **out);

/*
 Load a scenario file.

 # Safety
 `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum QcfStatus qcf_scenario_load(const char *path, struct QcfScenario **out);

/*
 # Safety
 `s` must be NULL or a handle from `qcf_scenario_parse`/`_load` that has
 not been freed.
 */
void qcf_scenario_free(struct QcfScenario *s);

/*
 Run a scenario with all configured diagnostics. `out_dir` may be NULL
 to skip writing checkpoints. A report is returned even when checks
 fail; query it with `qcf_report_all_pass`.

 # Safety
 `scenario` must be a live handle, `out_dir` NULL or a valid string and
 `out` a valid pointer.
 */
enum QcfStatus qcf_run_scenario(const struct QcfScenario *scenario,
                                const char *out_dir,
                                struct QcfReport **out);

/*
 1 if every hard check passed, 0 otherwise (or for NULL).

 # Safety
 `r` must be NULL or a live report handle.
 */
int32_t qcf_report_all_pass(const struct QcfReport *r);

/*
 Number of report rows.

 # Safety
 `r` must be NULL or a live report handle.
 */
size_t qcf_report_len(const struct QcfReport *r);

/*
 Copy the report CSV (NUL-terminated) into `buf`. `needed` receives the
 size including the terminator; pass `buf = NULL, len = 0` to query it.

 # Safety
 `r` must be a live handle, `buf` writable for `len` bytes (or NULL with
 `len = 0`) and `needed` a valid pointer.
 */
enum QcfStatus qcf_report_csv(const struct QcfReport *r, char *buf, size_t len, size_t *needed);

/*
 # Safety
 `r` must be NULL or a live report handle.
 */
void qcf_report_free(struct QcfReport *r);

/*
 Build a simulation from the scenario's initial data and numerics,
 without tracers.

 # Safety
 `scenario` must be a live handle and `out` a valid pointer.
 */
enum QcfStatus qcf_sim_new(const struct QcfScenario *scenario, struct QcfSimulation **out);

/*
 Advance by `n` steps of the scenario's `dt`.

 # Safety
 `sim` must be a live handle.
 */
enum QcfStatus qcf_sim_step(struct QcfSimulation *sim, uint64_t n);

/*
 Current time, or NaN for NULL.

 # Safety
 `sim` must be NULL or a live handle.
 */
double qcf_sim_time(const struct QcfSimulation *sim);

/*
 Number of blobs, or 0 for NULL.

 # Safety
 `sim` must be NULL or a live handle.
 */
size_t qcf_sim_blob_count(const struct QcfSimulation *sim);

/*
 Copy blob positions and jacobians into caller arrays of length `n`,
 which must equal `qcf_sim_blob_count`. `jac` may be NULL.

 # Safety
 `x`, `y` (and `jac` when non-NULL) must be writable for `n` values.
 */
enum QcfStatus qcf_sim_blobs(const struct QcfSimulation *sim,
                             double *x,
                             double *y,
                             double *jac,
                             size_t n);

/*
 Velocity of the current blob field at `n` targets.

 # Safety
 Input arrays must be readable and output arrays writable for `n` values.
 */
enum QcfStatus qcf_sim_velocity(const struct QcfSimulation *sim,
                                const double *x,
                                const double *y,
                                size_t n,
                                double *u,
                                double *v);

/*
 # Safety
 `sim` must be NULL or a live handle.
 */
void qcf_sim_free(struct QcfSimulation *sim);

/*
 Stateless velocity `Σ m_j K_δ(z - z_j)` of `nsrc` blobs at `ntgt`
 targets. `theta` is ignored for the Euler kernel.

 # Safety
 Source arrays must be readable for `nsrc` values, target arrays for
 `ntgt` values and output arrays writable for `ntgt` values.
 */
enum QcfStatus qcf_blob_velocity(enum QcfKernelKind kind,
                                 double theta,
                                 enum QcfBlobShape shape,
                                 double blob_radius,
                                 const double *sx,
                                 const double *sy,
                                 const double *mass,
                                 size_t nsrc,
                                 const double *tx,
                                 const double *ty,
                                 size_t ntgt,
                                 double *u,
                                 double *v);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QCFLOW_H */

/* C interface to the imptrack path-following toolkit. */

#ifndef IMPTRACK_H
#define IMPTRACK_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Segment kind codes for [`ImpSegment::kind`].
#define IMP_SEGMENT_LINE 0

#define IMP_SEGMENT_ARC 1

// Bits of [`ImpRecord::fault_bits`]; names match the CSV `fault` column.
#define IMP_FAULT_CTRL_CURVATURE (1 << 0)

#define IMP_FAULT_CTRL_OFFSET (1 << 1)

#define IMP_FAULT_CTRL_DOMAIN (1 << 2)

#define IMP_FAULT_CTRL_OTHER (1 << 3)

#define IMP_FAULT_PLANT_SINGULARITY (1 << 4)

#define IMP_FAULT_PLANT_NONFINITE (1 << 5)

#define IMP_FAULT_TIMEOUT (1 << 6)

#define IMP_FAULT_ROBOT_AMBIGUOUS (1 << 7)

#define IMP_FAULT_IMPLEMENT_AMBIGUOUS (1 << 8)

#define IMP_FAULT_IMPLEMENT_CLAMPED (1 << 9)

// Result code of every fallible call.
typedef enum ImpStatus {
  IMP_STATUS_OK = 0,
  // A required pointer argument was NULL.
  IMP_STATUS_NULL_POINTER = 1,
  // An argument was malformed (bad UTF-8, unknown name, bad enum value).
  IMP_STATUS_INVALID_ARGUMENT = 2,
  // A scenario or path failed validation.
  IMP_STATUS_VALIDATION = 3,
  // A query fell outside the path.
  IMP_STATUS_OUT_OF_RANGE = 4,
  // Model singularity (`1 - c y` or `1 - gamma I_y` near zero).
  IMP_STATUS_SINGULARITY = 5,
  // Heading deviation outside (-pi/2, pi/2).
  IMP_STATUS_DOMAIN = 6,
  // The simulation recorded a fault; results are still available.
  IMP_STATUS_FAULT = 7,
  // File could not be read or written.
  IMP_STATUS_IO = 8,
  // An internal error was caught at the boundary.
  IMP_STATUS_PANIC = 9,
} ImpStatus;

// Opaque controller with fail-safe command hold.
typedef struct ImpController ImpController;

// Opaque reference path.
typedef struct ImpPath ImpPath;

// Opaque result of a simulation run.
typedef struct ImpRunLog ImpRunLog;

// Opaque, validated scenario.
typedef struct ImpScenario ImpScenario;

typedef struct ImpStartPose {
  double x_m;
  double y_m;
  double heading_rad;
} ImpStartPose;

typedef struct ImpSegment {
  // `IMP_SEGMENT_LINE` or `IMP_SEGMENT_ARC`.
  uint32_t kind;
  double length_m;
  // Signed curvature, positive turning left; 0 for lines.
  double curvature_per_m;
} ImpSegment;

typedef struct ImpPathPoint {
  double x_m;
  double y_m;
  double heading_rad;
  double curvature_per_m;
} ImpPathPoint;

typedef struct ImpProjection {
  double s_m;
  double y_m;
  double theta_tilde_rad;
  double distance_m;
  bool ambiguous;
  bool clamped;
} ImpProjection;

typedef struct ImpRecord {
  double t_s;
  double s_m;
  double y_m;
  double theta_tilde_rad;
  double e_i_exact_m;
  double e_i_measured_m;
  double delta_cmd_rad;
  double delta_actual_rad;
  double theta_d_rad;
  // `IMP_FAULT_*` bits.
  uint32_t fault_bits;
} ImpRecord;

typedef struct ImpSummary {
  size_t samples;
  double median_m;
  double q25_m;
  double q75_m;
  double max_m;
  double max_overshoot_m;
  size_t fault_count;
  // A fault record exists.
  bool has_fault;
  // The run stopped at that fault.
  bool aborted;
} ImpSummary;

typedef struct ImpMeasurements {
  double s_m;
  double y_m;
  double theta_tilde_rad;
  double steer_rad;
  double omega_bar_rad_s;
  double e_i_m;
  double curvature_now_per_m;
  double curvature_ahead_per_m;
} ImpMeasurements;

typedef struct ImpCommand {
  double delta_desired_rad;
  double theta_desired_rad;
  double xi_desired;
  bool clamped;
  // The law failed and the previous command was repeated.
  bool held;
  double e_i_prime;
  double e_i_second_per_m;
  double alpha;
  double gamma_per_m;
  double j_residual;
  uint32_t n_h;
} ImpCommand;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL if none.
// The pointer stays valid until the next failing call on this thread.
const char *imp_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *imp_version(void);

// Build a named path preset (`"exp1"` or `"exp2"`).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum ImpStatus imp_path_preset(const char *name, struct ImpPath **out);

// Chain `count` segments from `start` (NULL means the origin, heading 0).
//
// # Safety
// `segments` must point to `count` readable elements; `out` must be writable.
enum ImpStatus imp_path_new(const struct ImpStartPose *start,
                            const struct ImpSegment *segments,
                            size_t count,
                            struct ImpPath **out);

// # Safety
// `path` must be NULL or a handle from this library not yet freed.
void imp_path_free(struct ImpPath *path);

// # Safety
// `path` must be a live handle; `out` must be writable.
enum ImpStatus imp_path_total_length(const struct ImpPath *path, double *out);

// Position, heading and curvature at abscissa `s`.
//
// # Safety
// `path` must be a live handle; `out` must be writable.
enum ImpStatus imp_path_point_at(const struct ImpPath *path, double s, struct ImpPathPoint *out);

// # Safety
// `path` must be a live handle; `out` must be writable.
enum ImpStatus imp_path_curvature_at(const struct ImpPath *path, double s, double *out);

// Closest-point projection of a world pose.
//
// # Safety
// `path` must be a live handle; `out` must be writable.
enum ImpStatus imp_path_project(const struct ImpPath *path,
                                double x_m,
                                double y_m,
                                double heading_rad,
                                struct ImpProjection *out);

// Parse and validate a scenario document (TOML text).
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum ImpStatus imp_scenario_from_toml(const char *text, struct ImpScenario **out);

// Load and validate a scenario file.
//
// # Safety
// `file` must be a NUL-terminated path; `out` must be writable.
enum ImpStatus imp_scenario_load(const char *file, struct ImpScenario **out);

// # Safety
// `scenario` must be NULL or a handle from this library not yet freed.
void imp_scenario_free(struct ImpScenario *scenario);

// # Safety
// `scenario` must be a live handle.
enum ImpStatus imp_scenario_set_seed(struct ImpScenario *scenario, uint64_t seed);

// # Safety
// `scenario` must be a live handle.
enum ImpStatus imp_scenario_set_noise(struct ImpScenario *scenario, bool enabled);

// Simulate a scenario. On `IMP_STATUS_OK` or `IMP_STATUS_FAULT` a run log
// is written to `out` and must be freed; a fault still yields the
// truncated log.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum ImpStatus imp_run(const struct ImpScenario *scenario, struct ImpRunLog **out);

// # Safety
// `log` must be NULL or a handle from this library not yet freed.
void imp_run_log_free(struct ImpRunLog *log);

// # Safety
// `log` must be a live handle; `out` must be writable.
enum ImpStatus imp_run_log_len(const struct ImpRunLog *log, size_t *out);

// # Safety
// `log` must be a live handle; `out` must be writable.
enum ImpStatus imp_run_log_record(const struct ImpRunLog *log, size_t index, struct ImpRecord *out);

// # Safety
// `log` must be a live handle; `out` must be writable.
enum ImpStatus imp_run_log_summary(const struct ImpRunLog *log, struct ImpSummary *out);

// Write the log as CSV.
//
// # Safety
// `log` must be a live handle; `file` a NUL-terminated path.
enum ImpStatus imp_run_log_write_csv(const struct ImpRunLog *log, const char *file);

// Controller for a named preset (e.g. `"table1_rear_optimal"`) with the
// preset's implement and the default vehicle.
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum ImpStatus imp_controller_from_preset(const char *name, struct ImpController **out);

// Controller configured like a scenario's closed loop.
//
// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum ImpStatus imp_controller_from_scenario(const struct ImpScenario *scenario,
                                            struct ImpController **out);

// # Safety
// `controller` must be NULL or a handle from this library not yet freed.
void imp_controller_free(struct ImpController *controller);

// One control step. When the law fails (singularity, domain), `out`
// still receives the previously emitted command with `held = true` and
// the matching error status is returned.
//
// # Safety
// `controller` must be a live handle; `meas` readable; `out` writable.
enum ImpStatus imp_controller_step(struct ImpController *controller,
                                   const struct ImpMeasurements *meas,
                                   struct ImpCommand *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPTRACK_H */

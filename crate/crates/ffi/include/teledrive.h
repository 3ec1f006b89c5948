#ifndef TELEDRIVE_H
#define TELEDRIVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TdStatus {
  TD_STATUS_OK = 0,
  TD_STATUS_NULL_POINTER = 1,
  TD_STATUS_INVALID_ARGUMENT = 2,
  TD_STATUS_PARSE_ERROR = 3,
  TD_STATUS_ABOVE_HORIZON = 4,
  TD_STATUS_OUT_OF_RANGE = 5,
  TD_STATUS_OUT_OF_FRAME = 6,
  TD_STATUS_BEHIND_CAMERA = 7,
  TD_STATUS_NO_CONVERGENCE = 8,
  TD_STATUS_UNKNOWN_SCENARIO = 9,
  TD_STATUS_PANIC = 10,
} TdStatus;

typedef enum TdNavStatus {
  TD_NAV_STATUS_IDLE = 0,
  TD_NAV_STATUS_NAVIGATING = 1,
  TD_NAV_STATUS_ARRIVED = 2,
  TD_NAV_STATUS_BLOCKED = 3,
} TdNavStatus;

/**
 * Camera model plus mast chain at fixed pan/tilt.
 */
typedef struct TdCameraRig TdCameraRig;

/**
 * A scenario simulation driven by click-to-go or velocity commands.
 */
typedef struct TdSimulation TdSimulation;

typedef struct TdPose {
  double x;
  double y;
  double theta;
} TdPose;

/**
 * One tick of telemetry. `pose` is odometry, `true_pose` is ground truth.
 */
typedef struct TdSimState {
  uint64_t tick;
  struct TdPose pose;
  struct TdPose true_pose;
  enum TdNavStatus nav_status;
  bool collision;
  bool has_goal;
  double goal_x;
  double goal_y;
  /**
   * Sequence number of the newest rendered frame.
   */
  uint64_t frame_seq;
} TdSimState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static name of a status code, e.g. `"above_horizon"`.
 */
const char *td_status_str(enum TdStatus status);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * always NUL-terminated when `len > 0`). Returns the full message length in
 * bytes, excluding the terminator.
 *
 * # Safety
 * `buf` is null or points to `len` writable bytes.
 */
size_t td_last_error_message(char *buf, size_t len);

/**
 * Builds a rig. Either JSON argument may be null to use the built-in
 * 640x480 camera or pan/tilt mast.
 *
 * # Safety
 * String arguments are null or NUL-terminated; `out` is writable.
 */
enum TdStatus td_rig_new(const char *camera_json,
                         const char *chain_json,
                         double pan,
                         double tilt,
                         struct TdCameraRig **out);

/**
 * # Safety
 * `rig` is null or a live handle from [`td_rig_new`]; it must not be used afterwards.
 */
void td_rig_free(struct TdCameraRig *rig);

/**
 * # Safety
 * `rig` is a live handle.
 */
enum TdStatus td_rig_set_pan_tilt(struct TdCameraRig *rig, double pan, double tilt);

/**
 * Floor point (robot base frame, meters) under pixel `(u, v)`.
 *
 * # Safety
 * `rig` is a live handle; `x` and `y` are writable.
 */
enum TdStatus td_rig_pixel_to_ground(const struct TdCameraRig *rig,
                                     double u,
                                     double v,
                                     double *x,
                                     double *y);

/**
 * Pixel of a base-frame point. The pixel may lie outside the image.
 *
 * # Safety
 * `rig` is a live handle; `u` and `v` are writable.
 */
enum TdStatus td_rig_project(const struct TdCameraRig *rig,
                             double x,
                             double y,
                             double z,
                             double *u,
                             double *v);

/**
 * Starts a simulation of a built-in scenario (`open_space`, `doorway`,
 * `block`) or, when `scenario_json` is non-null, a scenario document.
 *
 * # Safety
 * String arguments are null or NUL-terminated; `out` is writable.
 */
enum TdStatus td_sim_new(const char *scenario_name,
                         const char *scenario_json,
                         uint64_t seed,
                         struct TdSimulation **out);

/**
 * # Safety
 * `sim` is null or a live handle from [`td_sim_new`]; it must not be used afterwards.
 */
void td_sim_free(struct TdSimulation *sim);

/**
 * Sets a goal at the floor point under pixel `(u, v)` of the last frame.
 *
 * # Safety
 * `sim` is a live handle.
 */
enum TdStatus td_sim_goto_pixel(struct TdSimulation *sim, double u, double v);

/**
 * Manual drive; cancels any goal.
 *
 * # Safety
 * `sim` is a live handle.
 */
enum TdStatus td_sim_set_velocity(struct TdSimulation *sim, double v, double w);

/**
 * # Safety
 * `sim` is a live handle.
 */
enum TdStatus td_sim_stop(struct TdSimulation *sim);

/**
 * # Safety
 * `sim` is a live handle.
 */
enum TdStatus td_sim_set_camera(struct TdSimulation *sim, double tilt, double pan);

/**
 * Advances `ticks` control ticks and reports the final state (`state` may be null).
 *
 * # Safety
 * `sim` is a live handle; `state` is null or writable.
 */
enum TdStatus td_sim_step(struct TdSimulation *sim, uint32_t ticks, struct TdSimState *state);

/**
 * Current state without advancing.
 *
 * # Safety
 * `sim` is a live handle; `state` is writable.
 */
enum TdStatus td_sim_state(const struct TdSimulation *sim, struct TdSimState *state);

/**
 * Encodes the last rendered frame as PNG. Release with [`td_buffer_free`].
 *
 * # Safety
 * `sim` is a live handle; `data` and `len` are writable.
 */
enum TdStatus td_sim_frame_png(const struct TdSimulation *sim, uint8_t **data, size_t *len);

/**
 * # Safety
 * `data`/`len` come from [`td_sim_frame_png`] and are freed once.
 */
void td_buffer_free(uint8_t *data, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TELEDRIVE_H */

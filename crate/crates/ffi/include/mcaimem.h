#ifndef MCAIMEM_H
#define MCAIMEM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum McaimemStatus {
  MCAIMEM_STATUS_OK = 0,
  MCAIMEM_STATUS_NULL_POINTER = 1,
  MCAIMEM_STATUS_INVALID_ARGUMENT = 2,
  MCAIMEM_STATUS_DOMAIN = 3,
  MCAIMEM_STATUS_CALIBRATION = 4,
  MCAIMEM_STATUS_ADDRESS_OUT_OF_RANGE = 5,
  MCAIMEM_STATUS_TIME_REGRESSION = 6,
  MCAIMEM_STATUS_FORMAT = 7,
  MCAIMEM_STATUS_PANIC = 8,
} McaimemStatus;

typedef enum McaimemTech {
  MCAIMEM_TECH_SRAM = 0,
  MCAIMEM_TECH_EDRAM = 1,
  MCAIMEM_TECH_MCAIMEM = 2,
} McaimemTech;

typedef enum McaimemAccess {
  MCAIMEM_ACCESS_READ = 0,
  MCAIMEM_ACCESS_WRITE = 1,
} McaimemAccess;

typedef enum McaimemPreset {
  MCAIMEM_PRESET_EYERISS = 0,
  MCAIMEM_PRESET_TPUV1 = 1,
} McaimemPreset;

/**
 * Opaque mixed SRAM/eDRAM array.
 */
typedef struct McaimemArray McaimemArray;

/**
 * Opaque retention calibration.
 */
typedef struct McaimemCalibration McaimemCalibration;

typedef struct McaimemArrayConfig {
  size_t banks;
  size_t rows_per_bank;
  size_t bytes_per_row;
  /**
   * Sense reference in volts.
   */
  double v_ref;
  bool refresh_enabled;
  /**
   * Per-cell flip probability the refresh period is sized for.
   */
  double refresh_target_p;
  double clock_hz;
} McaimemArrayConfig;

typedef struct McaimemCounters {
  uint64_t reads;
  uint64_t writes;
  uint64_t row_refreshes;
  uint64_t flips;
} McaimemCounters;

typedef struct McaimemLayer {
  uint64_t ifmap_h;
  uint64_t ifmap_w;
  uint64_t filter_h;
  uint64_t filter_w;
  uint64_t channels;
  uint64_t num_filters;
  uint64_t stride;
} McaimemLayer;

typedef struct McaimemLayerStats {
  uint64_t cycles;
  uint64_t ifmap_reads_bytes;
  uint64_t filter_reads_bytes;
  uint64_t ofmap_writes_bytes;
} McaimemLayerStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *mcaimem_last_error(void);

/**
 * Stored cell pattern of `x` under one-enhancement encoding.
 */
uint8_t mcaimem_encode(int8_t x);

/**
 * Inverse of [`mcaimem_encode`]; total over all 256 patterns.
 */
int8_t mcaimem_decode(uint8_t bits);

/**
 * Calibration fitted to the reference retention anchors.
 */
struct McaimemCalibration *mcaimem_calibration_default(void);

/**
 * Parses a calibration JSON object as written by `mcaimem calibrate`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum McaimemStatus mcaimem_calibration_from_json(const char *json, struct McaimemCalibration **out);

/**
 * # Safety
 * `cal` must come from this library and not be used afterwards. Null is a no-op.
 */
void mcaimem_calibration_free(struct McaimemCalibration *cal);

/**
 * Probability that a stored zero reads as one after `t_us` microseconds.
 *
 * # Safety
 * `cal` and `out` must be valid pointers.
 */
enum McaimemStatus mcaimem_flip_probability(const struct McaimemCalibration *cal,
                                            double t_us,
                                            double v_ref,
                                            double *out);

/**
 * Longest refresh period in microseconds keeping the flip probability at
 * or below `target_p`.
 *
 * # Safety
 * `cal` and `out` must be valid pointers.
 */
enum McaimemStatus mcaimem_refresh_interval(const struct McaimemCalibration *cal,
                                            double v_ref,
                                            double target_p,
                                            double *out);

/**
 * 1 MB array at V_REF 0.8 V with refresh on.
 */
struct McaimemArrayConfig mcaimem_array_config_default(void);

/**
 * Creates an array holding encoded zeros at time 0.
 *
 * # Safety
 * `config`, `cal` and `out` must be valid pointers.
 */
enum McaimemStatus mcaimem_array_new(const struct McaimemArrayConfig *config,
                                     const struct McaimemCalibration *cal,
                                     uint64_t seed,
                                     struct McaimemArray **out);

/**
 * # Safety
 * `array` must come from this library and not be used afterwards. Null is a no-op.
 */
void mcaimem_array_free(struct McaimemArray *array);

/**
 * Stores the cell pattern `bits` at time `t_ns`.
 *
 * # Safety
 * `array` must be a valid handle.
 */
enum McaimemStatus mcaimem_array_write(struct McaimemArray *array,
                                       size_t bank,
                                       size_t row,
                                       size_t col,
                                       uint8_t bits,
                                       uint64_t t_ns);

/**
 * Senses the byte at time `t_ns`; the row is written back as sensed.
 *
 * # Safety
 * `array` and `out` must be valid pointers.
 */
enum McaimemStatus mcaimem_array_read(struct McaimemArray *array,
                                      size_t bank,
                                      size_t row,
                                      size_t col,
                                      uint64_t t_ns,
                                      uint8_t *out);

/**
 * Runs scheduled refreshes up to `t_ns`; `out_refreshes` may be null.
 *
 * # Safety
 * `array` must be a valid handle.
 */
enum McaimemStatus mcaimem_array_advance(struct McaimemArray *array,
                                         uint64_t t_ns,
                                         uint64_t *out_refreshes);

/**
 * # Safety
 * `array` must be a valid handle.
 */
enum McaimemStatus mcaimem_array_refresh_row(struct McaimemArray *array,
                                             size_t bank,
                                             size_t row,
                                             uint64_t t_ns);

/**
 * # Safety
 * `array` and `out` must be valid pointers.
 */
enum McaimemStatus mcaimem_array_counters(const struct McaimemArray *array,
                                          struct McaimemCounters *out);

/**
 * Static power in mW of `capacity_mb` megabytes at the given zero-bit fraction.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McaimemStatus mcaimem_static_power(enum McaimemTech tech,
                                        double zero_fraction,
                                        double capacity_mb,
                                        double *out);

/**
 * Energy in pJ of one byte access at the given zero-bit fraction.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McaimemStatus mcaimem_access_energy(enum McaimemTech tech,
                                         enum McaimemAccess op,
                                         double zero_fraction,
                                         double *out);

/**
 * Relative ops-per-watt gain from scaling buffer energy by `buffer_energy_ratio`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum McaimemStatus mcaimem_ops_per_watt_gain(double buffer_power_share,
                                             double buffer_energy_ratio,
                                             double *out);

/**
 * Output-stationary cycle and buffer traffic counts for one layer.
 *
 * # Safety
 * `layer` and `out` must be valid pointers.
 */
enum McaimemStatus mcaimem_simulate_layer(const struct McaimemLayer *layer,
                                          enum McaimemPreset preset,
                                          struct McaimemLayerStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCAIMEM_H */

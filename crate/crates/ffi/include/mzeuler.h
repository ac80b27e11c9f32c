#ifndef MZEULER_H
#define MZEULER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum MzStatus {
  MZ_STATUS_OK = 0,
  MZ_STATUS_NULL_POINTER = 1,
  MZ_STATUS_INVALID_ARGUMENT = 2,
  MZ_STATUS_CONFIG = 3,
  MZ_STATUS_GRID = 4,
  MZ_STATUS_IO = 5,
  MZ_STATUS_BUFFER_TOO_SMALL = 6,
  MZ_STATUS_BLOW_UP = 7,
  MZ_STATUS_INTERNAL = 8,
  MZ_STATUS_PANIC = 9,
} MzStatus;

/**
 * A running simulation.
 */
typedef struct MzSimulation MzSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf`. The message is
 * kept, so a first call with a null buffer can query its size.
 *
 * # Safety
 * `buf` must point to `len` writable bytes or be null; `needed` must be
 * null or writable.
 */
enum MzStatus mz_last_error_message(char *buf, size_t len, size_t *needed);

/**
 * Creates a simulation from a named preset.
 *
 * # Safety
 * `preset` must be a NUL-terminated string; `out` must be writable.
 */
enum MzStatus mz_simulation_new_preset(const char *preset, struct MzSimulation **out);

/**
 * Creates a simulation from `key = value` configuration text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum MzStatus mz_simulation_new_config(const char *text, struct MzSimulation **out);

/**
 * Releases a simulation; null is ignored.
 *
 * # Safety
 * `sim` must come from a constructor above and not be used afterwards.
 */
void mz_simulation_free(struct MzSimulation *sim);

/**
 * Advances up to `steps` steps. Returns `BlowUp` if the run became
 * unstable; `done` receives the number of steps taken.
 *
 * # Safety
 * `sim` must be a live handle; `done` must be null or writable.
 */
enum MzStatus mz_simulation_step(struct MzSimulation *sim, uint64_t steps, uint64_t *done);

/**
 * Current time.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum MzStatus mz_simulation_time(struct MzSimulation *sim, double *out);

/**
 * Energy of the evolved modes.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum MzStatus mz_simulation_energy(struct MzSimulation *sim, double *out);

/**
 * `dE/dt` at the current state.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum MzStatus mz_simulation_energy_rate(struct MzSimulation *sim, double *out);

/**
 * Number of resolved modes; the state has `6 *` this many doubles.
 *
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum MzStatus mz_simulation_mode_count(struct MzSimulation *sim, size_t *out);

/**
 * Copies the velocity on the evolved modes as interleaved
 * `(re, im)` pairs per component, modes in FFT order; `wavevectors`
 * (optional, `3 *` mode count ints) receives each mode's wavevector.
 *
 * # Safety
 * `values` must hold `len` doubles; `wavevectors` must be null or hold
 * `len / 2` ints.
 */
enum MzStatus mz_simulation_copy_state(struct MzSimulation *sim,
                                       double *values,
                                       size_t len,
                                       int32_t *wavevectors);

/**
 * Writes the listing of the generated `Z^n` sums into `buf`.
 *
 * # Safety
 * `buf` must hold `len` bytes or be null; `needed` must be null or writable.
 */
enum MzStatus mz_show_terms(uint32_t n, bool with_plan, char *buf, size_t len, size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MZEULER_H */

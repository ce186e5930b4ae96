#ifndef EODA_H
#define EODA_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Depth reported by [`eoda_krk_cost`] for drawn positions.
#define EODA_KRK_DRAW -1

// Result code of every fallible call.
typedef enum EodaStatus {
  EODA_STATUS_OK = 0,
  EODA_STATUS_NULL_POINTER = 1,
  EODA_STATUS_INVALID_ARGUMENT = 2,
  EODA_STATUS_INVALID_INSTANCE = 3,
  EODA_STATUS_CONFIG = 4,
  EODA_STATUS_IO = 5,
  EODA_STATUS_RUNTIME = 6,
  EODA_STATUS_PANIC = 7,
} EodaStatus;

// A job-shop problem instance.
typedef struct EodaJobShop EodaJobShop;

// A loaded or freshly built KRK tablebase.
typedef struct EodaTablebase EodaTablebase;

// The per-iteration record of a finished optimisation run.
typedef struct EodaTrace EodaTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static nul-terminated string.
const char *eoda_version(void);

// Message of the last failed call on this thread, or null. Valid until the
// next library call on this thread.
const char *eoda_last_error_message(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void eoda_string_free(char *s);

// Builds the tablebase by retrograde analysis.
//
// # Safety
// `out` must be a valid pointer.
enum EodaStatus eoda_tablebase_build(struct EodaTablebase **out);

// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum EodaStatus eoda_tablebase_load(const char *path, struct EodaTablebase **out);

// # Safety
// `tb` must be a live handle and `path` a nul-terminated string.
enum EodaStatus eoda_tablebase_save(const struct EodaTablebase *tb, const char *path);

// Number of stored canonical positions; 0 for null.
//
// # Safety
// `tb` must be null or a live handle.
size_t eoda_tablebase_len(const struct EodaTablebase *tb);

// # Safety
// `tb` must be null or a handle not yet freed.
void eoda_tablebase_free(struct EodaTablebase *tb);

// Depth-to-mate of a position with Black to move. `squares` holds six
// 0-based coordinates: white king file and rank, white rook file and rank,
// black king file and rank. Draws report [`EODA_KRK_DRAW`].
//
// # Safety
// `squares` must point to 6 bytes; `tb` and `out_depth` must be valid.
enum EodaStatus eoda_krk_cost(const struct EodaTablebase *tb,
                              const uint8_t *squares,
                              int32_t *out_depth);

// Writes the symmetry-canonical form of a legal position to `out`.
//
// # Safety
// `squares` and `out` must each point to 6 bytes.
enum EodaStatus eoda_krk_canonicalize(const uint8_t *squares, uint8_t *out);

// The frozen 5x5 benchmark instance.
//
// # Safety
// `out` must be a valid pointer.
enum EodaStatus eoda_jobshop_benchmark(struct EodaJobShop **out);

// Parses an instance from JSON `{"routings": [[..]], "durations": [[..]]}`.
//
// # Safety
// `json` must be a nul-terminated string and `out` a valid pointer.
enum EodaStatus eoda_jobshop_from_json(const char *json, struct EodaJobShop **out);

// # Safety
// `inst` must be null or a handle not yet freed.
void eoda_jobshop_free(struct EodaJobShop *inst);

// # Safety
// All pointers must be valid.
enum EodaStatus eoda_jobshop_dims(const struct EodaJobShop *inst,
                                  size_t *out_jobs,
                                  size_t *out_machines);

// # Safety
// All pointers must be valid.
enum EodaStatus eoda_jobshop_lower_bound(const struct EodaJobShop *inst, uint32_t *out);

// Makespan of a schedule given as machine-major job orders: `orders[m * n_jobs + i]`
// is the `i`-th job processed on machine `m`. Deadlocked schedules set
// `*out_feasible` to false and report the infeasibility sentinel.
//
// # Safety
// `orders` must point to `len` values; other pointers must be valid.
enum EodaStatus eoda_jobshop_cost(const struct EodaJobShop *inst,
                                  const uint32_t *orders,
                                  size_t len,
                                  uint32_t *out_makespan,
                                  bool *out_feasible);

// Runs the optimiser with a JSON configuration (the same keys as the CLI
// config file). Chess runs need `tb`; job-shop runs use `inst`, or the
// benchmark instance when it is null.
//
// # Safety
// `config_json` must be a nul-terminated string; `tb` and `inst` null or
// live handles; `out` a valid pointer.
enum EodaStatus eoda_run(const char *config_json,
                         const struct EodaTablebase *tb,
                         const struct EodaJobShop *inst,
                         struct EodaTrace **out);

// # Safety
// `trace` must be null or a handle not yet freed.
void eoda_trace_free(struct EodaTrace *trace);

// Number of iterations; 0 for null.
//
// # Safety
// `trace` must be null or a live handle.
size_t eoda_trace_iterations(const struct EodaTrace *trace);

// Near-optimal instances covered by the end of the run.
//
// # Safety
// `trace` must be null or a live handle.
size_t eoda_trace_final_coverage(const struct EodaTrace *trace);

// The per-iteration CSV, identical to the CLI's trace CSV.
//
// # Safety
// `trace` must be a live handle and `out` a valid pointer.
enum EodaStatus eoda_trace_csv(const struct EodaTrace *trace, char **out);

// The full trace as JSON.
//
// # Safety
// `trace` must be a live handle and `out` a valid pointer.
enum EodaStatus eoda_trace_json(const struct EodaTrace *trace, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EODA_H */

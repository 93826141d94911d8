#ifndef TORIDIMER_H
#define TORIDIMER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum TdStatus {
  TdStatus_Ok = 0,
  TdStatus_NullPointer = 1,
  TdStatus_InvalidUtf8 = 2,
  TdStatus_Schema = 3,
  TdStatus_InvalidInput = 4,
  TdStatus_Numeric = 5,
  TdStatus_CapExceeded = 6,
  TdStatus_Invariant = 7,
  TdStatus_Io = 8,
  TdStatus_BufferTooSmall = 9,
  TdStatus_Panic = 10,
} TdStatus;

typedef struct TdGraph TdGraph;

typedef struct TdTorus TdTorus;

typedef struct TdWired TdWired;

/**
 * Connectivity and height statistics of a torus in a magnetic field.
 */
typedef struct TdStats {
  double e_k;
  double e_hx;
  double e_hy;
  double p_connect;
} TdStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *td_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the next failing call.
 */
const char *td_last_error_message(void);

void td_clear_last_error(void);

/**
 * Parses a JSON graph spec.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TdStatus td_graph_from_json(const char *json, struct TdGraph **out);

/**
 * Built-in graph: `uniform`, `drifted` or `drifted:a,b,c,d`.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TdStatus td_graph_builtin(const char *name, struct TdGraph **out);

/**
 * # Safety
 * `g` must come from a `td_graph_*` constructor (or be NULL) and not be used afterwards.
 */
void td_graph_free(struct TdGraph *g);

/**
 * Runs the identity suite; `passed` receives 1 or 0 and `buf` the JSON report.
 *
 * # Safety
 * `g` and `passed` must be valid; `buf` may be NULL to query `needed`.
 */
enum TdStatus td_graph_verify(const struct TdGraph *g,
                              bool exact,
                              int32_t *passed,
                              char *buf,
                              size_t cap,
                              size_t *needed);

/**
 * # Safety
 * `g` and `out` must be valid pointers.
 */
enum TdStatus td_torus_new(const struct TdGraph *g, size_t n, struct TdTorus **out);

/**
 * # Safety
 * `t` must come from `td_torus_new` (or be NULL) and not be used afterwards.
 */
void td_torus_free(struct TdTorus *t);

/**
 * Characteristic polynomial as text, e.g. `-z^-1 - w^-1 + 4 - w - z`.
 *
 * # Safety
 * `t` must be valid; `buf` may be NULL to query `needed`.
 */
enum TdStatus td_torus_charpoly(const struct TdTorus *t, char *buf, size_t cap, size_t *needed);

/**
 * Partition function as an exact rational `p/q` (or integer) string.
 *
 * # Safety
 * `t` must be valid; `buf` may be NULL to query `needed`.
 */
enum TdStatus td_torus_partition_function(const struct TdTorus *t,
                                          char *buf,
                                          size_t cap,
                                          size_t *needed);

/**
 * Exhaustive statistics at field `(bx, by)`; the ensemble is enumerated on first use.
 *
 * # Safety
 * `t` and `out` must be valid pointers.
 */
enum TdStatus td_torus_stats(struct TdTorus *t, double bx, double by, struct TdStats *out);

/**
 * # Safety
 * `g` and `out` must be valid pointers.
 */
enum TdStatus td_wired_new(const struct TdGraph *g, size_t n, struct TdWired **out);

/**
 * # Safety
 * `w` must come from `td_wired_new` (or be NULL) and not be used afterwards.
 */
void td_wired_free(struct TdWired *w);

/**
 * Number of vertices including the root; the length of a parent array.
 *
 * # Safety
 * `w` must be valid.
 */
size_t td_wired_vertex_count(const struct TdWired *w);

/**
 * Number of directed half-edges; valid half-edge ids are `0..count`.
 *
 * # Safety
 * `w` must be valid.
 */
size_t td_wired_half_edge_count(const struct TdWired *w);

/**
 * Wilson spanning tree for `(seed, stream)`: `parent[v]` is the outgoing half-edge of `v`,
 * `-1` at the root.
 *
 * # Safety
 * `w` must be valid and `parent` hold `len` entries.
 */
enum TdStatus td_wired_wilson(const struct TdWired *w,
                              uint64_t seed,
                              uint64_t stream,
                              int64_t *parent,
                              size_t len);

/**
 * Probability that all listed directed half-edges lie in the wired spanning tree.
 *
 * # Safety
 * `w` must be valid, `halves` hold `count` entries and `out` be valid.
 */
enum TdStatus td_wired_edge_probability(struct TdWired *w,
                                        const size_t *halves,
                                        size_t count,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TORIDIMER_H */

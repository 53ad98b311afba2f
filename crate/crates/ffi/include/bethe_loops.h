#ifndef BETHE_LOOPS_H
#define BETHE_LOOPS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BlStatus {
  BL_STATUS_OK = 0,
  BL_STATUS_NULL_POINTER = 1,
  BL_STATUS_INVALID_ARGUMENT = 2,
  BL_STATUS_INFEASIBLE = 3,
  BL_STATUS_CAP_EXCEEDED = 4,
  BL_STATUS_PARSE = 5,
  BL_STATUS_NO_ROOT = 6,
  BL_STATUS_SINGULAR = 7,
  BL_STATUS_INCONSISTENT = 8,
  BL_STATUS_PANIC = 9,
  BL_STATUS_OTHER = 10,
} BlStatus;

// Opaque Tanner graph.
typedef struct BlGraph BlGraph;

// Opaque set of BP messages on the edges of one graph.
typedef struct BlMessages BlMessages;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty if none. Valid until
// the next failing call on the same thread.
const char *bl_last_error(void);

// Draws a uniformly random simple `(l, r)`-biregular graph on `n` variables.
//
// # Safety
// `out_graph` must be a valid pointer.
enum BlStatus bl_graph_generate(size_t n,
                                size_t l,
                                size_t r,
                                uint64_t seed,
                                struct BlGraph **out_graph);

// Parses a graph in alist format from a NUL-terminated string.
//
// # Safety
// `text` must be NUL-terminated and `out_graph` valid.
enum BlStatus bl_graph_from_alist(const char *text, struct BlGraph **out_graph);

// # Safety
// `graph` must come from this library and not be freed twice.
void bl_graph_free(struct BlGraph *graph);

// Writes the numbers of variables, checks and edges; any output may be null.
//
// # Safety
// `graph` must be valid.
enum BlStatus bl_graph_sizes(const struct BlGraph *graph,
                             size_t *num_vars,
                             size_t *num_checks,
                             size_t *num_edges);

// GF(2) rank of the parity-check matrix.
//
// # Safety
// Pointers must be valid.
enum BlStatus bl_graph_rank(const struct BlGraph *graph, size_t *rank);

// `½ ln((1−p)/p)`.
//
// # Safety
// `h` must be valid.
enum BlStatus bl_half_llr(double p, double *h);

// Runs BP from the default start. Non-convergence is reported through
// `converged`, not as an error. Zero `tol`/`max_iter` select the defaults.
//
// # Safety
// `fields` must hold `n_fields` values; other pointers must be valid.
enum BlStatus bl_bp_solve(const struct BlGraph *graph,
                          const double *fields,
                          size_t n_fields,
                          double tol,
                          size_t max_iter,
                          double damping,
                          struct BlMessages **out_messages,
                          bool *converged,
                          size_t *iterations);

// Copies `η` and `η̂` (one value per edge each); either output may be null.
//
// # Safety
// Non-null outputs must have room for `len` values.
enum BlStatus bl_messages_get(const struct BlMessages *messages,
                              double *eta,
                              double *eta_hat,
                              size_t len);

// # Safety
// `messages` must come from this library and not be freed twice.
void bl_messages_free(struct BlMessages *messages);

// Bethe free energy per variable of a message set.
//
// # Safety
// Pointers must be valid and `fields` hold `n_fields` values.
enum BlStatus bl_bethe_free_energy(const struct BlGraph *graph,
                                   const double *fields,
                                   size_t n_fields,
                                   const struct BlMessages *messages,
                                   double *value);

// Exact `ln Z` by codeword enumeration; `max_kernel_dim` 0 selects the default cap.
//
// # Safety
// Pointers must be valid and `fields` hold `n_fields` values.
enum BlStatus bl_log_partition(const struct BlGraph *graph,
                               const double *fields,
                               size_t n_fields,
                               size_t max_kernel_dim,
                               double *value);

// Sum of all generalized-loop activities, empty loop included.
//
// # Safety
// Pointers must be valid and `fields` hold `n_fields` values.
enum BlStatus bl_loop_series_sum(const struct BlGraph *graph,
                                 const double *fields,
                                 size_t n_fields,
                                 const struct BlMessages *messages,
                                 double *value);

// Smallest positive root `λ0` of the expansion exponent and its residual.
//
// # Safety
// `lambda0` must be valid; `residual` may be null.
enum BlStatus bl_solve_lambda0(size_t l, size_t r, double kappa, double *lambda0, double *residual);

// Polymer-bound exponent `c(l, r, κ)`.
//
// # Safety
// `c` must be valid.
enum BlStatus bl_exponent_c(size_t l, size_t r, double kappa, double *c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BETHE_LOOPS_H */

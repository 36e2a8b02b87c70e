#ifndef KRONMIX_H
#define KRONMIX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Status codes returned by every fallible call.
 */
typedef enum KmStatus {
  KM_STATUS_OK = 0,
  KM_STATUS_NULL_POINTER = 1,
  KM_STATUS_INVALID_ARGUMENT = 2,
  KM_STATUS_SPEC_ERROR = 3,
  KM_STATUS_PARSE_ERROR = 4,
  KM_STATUS_IO_ERROR = 5,
  KM_STATUS_NOT_ERGODIC = 6,
  KM_STATUS_NON_CONVERGENT = 7,
  KM_STATUS_FAILED_TO_CONVERGE = 8,
  KM_STATUS_STRUCTURAL_ERROR = 9,
  KM_STATUS_BUFFER_TOO_SMALL = 10,
  KM_STATUS_PANIC = 11,
} KmStatus;

typedef struct KmBeliefSystem KmBeliefSystem;

typedef struct KmGraph KmGraph;

typedef struct KmMatrix KmMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread; empty after a success.
 The pointer stays valid until the next `km_*` call on the same thread.
 */
const char *km_last_error_message(void);

/*
 Builds a graph from a source string such as `cycle:n=11` or
 `grid:n=5,k=2,lazy=0.5`.

 # Safety
 `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum KmStatus km_graph_generate(const char *spec, struct KmGraph **out);

/*
 Builds a graph from `len` edges `sources[k] -> targets[k]`. Undirected
 graphs get both directions.

 # Safety
 `sources` and `targets` must hold `len` entries; `out` must be writable.
 */
enum KmStatus km_graph_from_edges(uintptr_t node_count,
                                  const uintptr_t *sources,
                                  const uintptr_t *targets,
                                  uintptr_t len,
                                  bool directed,
                                  struct KmGraph **out);

/*
 Reads a whitespace-separated edge list (`#` comments).

 # Safety
 `path` must be a NUL-terminated string; `out` must be writable.
 */
enum KmStatus km_graph_load_edgelist(const char *path, bool directed, struct KmGraph **out);

/*
 Induced subgraph on the largest strongly connected component.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum KmStatus km_graph_largest_scc(const struct KmGraph *graph, struct KmGraph **out);

/*
 # Safety
 `graph` must be null or a handle not yet freed.
 */
void km_graph_free(struct KmGraph *graph);

/*
 Node count, or 0 for a null handle.

 # Safety
 `graph` must be null or a live handle.
 */
uintptr_t km_graph_node_count(const struct KmGraph *graph);

/*
 Edge count, or 0 for a null handle.

 # Safety
 `graph` must be null or a live handle.
 */
uintptr_t km_graph_edge_count(const struct KmGraph *graph);

/*
 Equal-weight random walk on `graph`.

 # Safety
 `graph` must be a live handle; `out` must be writable.
 */
enum KmStatus km_matrix_equal_weight(const struct KmGraph *graph, struct KmMatrix **out);

/*
 Row-stochastic matrix from a dense row-major `dim × dim` array.

 # Safety
 `values` must hold `dim * dim` entries; `out` must be writable.
 */
enum KmStatus km_matrix_from_dense(const double *values, uintptr_t dim, struct KmMatrix **out);

/*
 # Safety
 `matrix` must be null or a handle not yet freed.
 */
void km_matrix_free(struct KmMatrix *matrix);

/*
 Number of states, or 0 for a null handle.

 # Safety
 `matrix` must be null or a live handle.
 */
uintptr_t km_matrix_dim(const struct KmMatrix *matrix);

/*
 Writes the stationary distribution into `out[0..dim]`.

 # Safety
 `matrix` must be a live handle; `out` must hold `len` doubles.
 */
enum KmStatus km_matrix_stationary(const struct KmMatrix *matrix, double *out, uintptr_t len);

/*
 Mixing time `t_mix(epsilon)` over all starts (sampled above 2000 states).

 # Safety
 `matrix` must be a live handle; `out` must be writable.
 */
enum KmStatus km_matrix_mixing_time(const struct KmMatrix *matrix, double epsilon, uintptr_t *out);

/*
 Second eigenvalue modulus and the spectral bounds on `t_mix(epsilon)`.

 # Safety
 `matrix` must be a live handle; the three outputs must be writable.
 */
enum KmStatus km_matrix_eigen_bounds(const struct KmMatrix *matrix,
                                     double epsilon,
                                     double *lambda2,
                                     double *lower,
                                     double *upper);

/*
 Assembles a belief system. `lambda` has `agents` entries and `x0`
 `agents * topics` entries, row-major by agent. The matrices are copied.

 # Safety
 Handles must be live; arrays must hold the stated number of entries.
 */
enum KmStatus km_system_assemble(const struct KmMatrix *influence,
                                 const struct KmMatrix *constraints,
                                 const double *lambda,
                                 uintptr_t lambda_len,
                                 const double *x0,
                                 uintptr_t x0_len,
                                 struct KmBeliefSystem **out);

/*
 # Safety
 `system` must be null or a handle not yet freed.
 */
void km_system_free(struct KmBeliefSystem *system);

/*
 Whether the beliefs converge for every initial condition.

 # Safety
 `system` must be a live handle; `out` must be writable.
 */
enum KmStatus km_system_converges(const struct KmBeliefSystem *system, bool *out);

/*
 Iterates the dynamics and writes the final beliefs (`agents * topics`
 values) into `out`.

 # Safety
 `system` must be a live handle; `out` must hold `len` doubles and
 `iterations` must be null or writable.
 */
enum KmStatus km_system_simulate(const struct KmBeliefSystem *system,
                                 double stop_delta,
                                 uintptr_t max_iter,
                                 double *out,
                                 uintptr_t len,
                                 uintptr_t *iterations);

/*
 Writes the limiting beliefs (`agents * topics` values) into `out`.

 # Safety
 `system` must be a live handle; `out` must hold `len` doubles.
 */
enum KmStatus km_system_limits(const struct KmBeliefSystem *system, double *out, uintptr_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KRONMIX_H */

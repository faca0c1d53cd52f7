#ifndef MCPGEV_H
#define MCPGEV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum McpCoefMode {
  MCP_COEF_MODE_GRADIENT = 0,
  MCP_COEF_MODE_MARGINAL = 1,
} McpCoefMode;

/**
 * Result code of every fallible call.
 */
typedef enum McpStatus {
  MCP_STATUS_OK = 0,
  MCP_STATUS_NULL_POINTER = 1,
  MCP_STATUS_INVALID_INPUT = 2,
  MCP_STATUS_PARSE = 3,
  MCP_STATUS_IO = 4,
  MCP_STATUS_INFEASIBLE = 5,
  MCP_STATUS_UNSUPPORTED = 6,
  MCP_STATUS_PANIC = 7,
} McpStatus;

/**
 * Opaque problem instance.
 */
typedef struct McpInstance McpInstance;

typedef struct McpSolverConfig {
  size_t cardinality;
  /**
   * Even, at least 2.
   */
  size_t delta;
  enum McpCoefMode coef_mode;
  /**
   * Wall-clock budget in seconds; zero or negative means unlimited.
   */
  double time_budget_s;
} McpSolverConfig;

typedef struct McpGeneratorParams {
  size_t zones;
  size_t locations;
  size_t competitors;
  double alpha;
  double beta;
  double plane_side;
  uint64_t seed;
} McpGeneratorParams;

typedef struct McpRunReport {
  size_t effective_delta;
  double phase_objectives[3];
  size_t subproblem_iterations;
  size_t subproblem_accepted;
  size_t exchange_iterations;
  size_t exchange_accepted;
  double wall_ms[3];
  bool budget_exhausted;
} McpRunReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *mcp_version(void);

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *mcp_last_error(void);

/**
 * Default solver settings for `cardinality`.
 */
struct McpSolverConfig mcp_solver_config_default(size_t cardinality);

/**
 * Default generator settings.
 */
struct McpGeneratorParams mcp_generator_params_default(void);

/**
 * Builds an instance from dense data. `y` is row-major `zones x m`. Pass
 * `nest_of = NULL` for MNL; otherwise `nest_of[j]` is the 0-based nest of
 * location `j` and `mu` holds `nests` dissimilarity parameters.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum McpStatus mcp_instance_new(size_t m,
                                size_t zones,
                                const double *q,
                                const double *y,
                                const size_t *nest_of,
                                const double *mu,
                                size_t nests,
                                struct McpInstance **out);

/**
 * Generates a Euclidean instance. With `mu = NULL` the model is MNL,
 * otherwise nested logit over `n_mu` contiguous nests.
 *
 * # Safety
 * `params` and `out` must be valid; `mu` valid for `n_mu` reads.
 */
enum McpStatus mcp_instance_generate(const struct McpGeneratorParams *params,
                                     const double *mu,
                                     size_t n_mu,
                                     struct McpInstance **out);

/**
 * Reads a `.mcp` file.
 *
 * # Safety
 * `file` must be a NUL-terminated string; `out` must be valid.
 */
enum McpStatus mcp_instance_read(const char *file, struct McpInstance **out);

/**
 * Writes a `.mcp` file.
 *
 * # Safety
 * `inst` must be a live handle; `file` a NUL-terminated string.
 */
enum McpStatus mcp_instance_write(const struct McpInstance *inst, const char *file);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `inst` must come from this library and not be used afterwards.
 */
void mcp_instance_free(struct McpInstance *inst);

/**
 * Number of candidate locations, or 0 for NULL.
 *
 * # Safety
 * `inst` must be NULL or a live handle.
 */
size_t mcp_instance_locations(const struct McpInstance *inst);

/**
 * Number of customer zones, or 0 for NULL.
 *
 * # Safety
 * `inst` must be NULL or a live handle.
 */
size_t mcp_instance_zones(const struct McpInstance *inst);

/**
 * Expected captured demand of the open set `selected[0..len]`.
 *
 * # Safety
 * `inst` live, `selected` valid for `len` reads, `value` writable.
 */
enum McpStatus mcp_objective(const struct McpInstance *inst,
                             const size_t *selected,
                             size_t len,
                             double *value);

/**
 * Greedy heuristic. `selected` receives `cardinality` sorted indices.
 *
 * # Safety
 * `inst` live, `selected` writable for `cardinality` entries, `value`
 * writable or NULL.
 */
enum McpStatus mcp_greedy(const struct McpInstance *inst,
                          size_t cardinality,
                          size_t *selected,
                          double *value);

/**
 * Full GGX run. `selected` receives `config.cardinality` sorted indices.
 *
 * # Safety
 * `inst` and `config` valid, `selected` writable for `config.cardinality`
 * entries; `value` and `report` writable or NULL.
 */
enum McpStatus mcp_ggx(const struct McpInstance *inst,
                       const struct McpSolverConfig *config,
                       size_t *selected,
                       double *value,
                       struct McpRunReport *report);

/**
 * Maximizes `sum_{j in S} d_j` over `|S| = cardinality` within `delta`
 * flips of `s_bar`. `selected` receives `cardinality` sorted indices.
 *
 * # Safety
 * `d` valid for `m` reads, `s_bar` for `cardinality` reads, `selected`
 * writable for `cardinality` entries.
 */
enum McpStatus mcp_solve_subproblem(const double *d,
                                    size_t m,
                                    const size_t *s_bar,
                                    size_t cardinality,
                                    size_t delta,
                                    size_t *selected);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCPGEV_H */

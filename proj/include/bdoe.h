/* bdoe — robust efficient fractional factorial designs under the baseline
 * parametrization.
 *
 * C API over the C++ core. All objects are opaque handles created and
 * released through these functions; every fallible call returns a
 * bdoe_status, with outputs written through pointers only on BDOE_OK
 * (except where noted). bdoe_last_error() carries the detail message of the
 * most recent failure on the calling thread.
 *
 * Treatment labels are 1-based (1..v); factor levels are 0-based with level 0
 * the baseline.
 */

#ifndef BDOE_H
#define BDOE_H

#include <stdint.h>

#if defined(_WIN32)
#define BDOE_API __declspec(dllexport)
#else
#define BDOE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bdoe_status {
  BDOE_OK = 0,
  BDOE_ERR_INVALID_ARGUMENT = 1,
  BDOE_ERR_DEGENERATE_MODEL = 2,
  BDOE_ERR_SINGULAR = 3,
  BDOE_ERR_NO_VALID_ROUNDING = 4,
  BDOE_ERR_NONCONVERGENCE = 5,
  BDOE_ERR_DEAD_END = 6,
  BDOE_ERR_NO_INITIAL_DESIGN = 7,
  BDOE_ERR_BUDGET_EXCEEDED = 8,
  BDOE_ERR_IO = 9,
  BDOE_ERR_PARSE = 10,
  BDOE_ERR_INTERNAL = 11
} bdoe_status;

typedef struct bdoe_model bdoe_model;
typedef struct bdoe_measure bdoe_measure;
typedef struct bdoe_design bdoe_design;
typedef struct bdoe_trace bdoe_trace;
typedef struct bdoe_oracle bdoe_oracle;

BDOE_API const char* bdoe_version(void);
BDOE_API const char* bdoe_status_name(bdoe_status status);
/* Detail message of the last failure on this thread; empty string if none. */
BDOE_API const char* bdoe_last_error(void);

/* ------------------------------------------------------------------ model */

/* Build the model for a mixed-level factorial.
 *   levels          number of levels per factor, each >= 2
 *   n_factors       length of levels
 *   effect_factors  concatenated 1-based factor indices of all effects
 *   effect_sizes    number of factors of each effect
 *   n_effects       length of effect_sizes
 */
BDOE_API bdoe_status bdoe_model_create(const int32_t* levels,
                                       int32_t n_factors,
                                       const int32_t* effect_factors,
                                       const int32_t* effect_sizes,
                                       int32_t n_effects,
                                       bdoe_model** out_model);
BDOE_API void bdoe_model_free(bdoe_model* model);

BDOE_API int32_t bdoe_model_num_factors(const bdoe_model* model);
BDOE_API int32_t bdoe_model_num_treatments(const bdoe_model* model); /* v */
BDOE_API int32_t bdoe_model_num_params(const bdoe_model* model);     /* q */
BDOE_API double bdoe_model_trace_w(const bdoe_model* model);

/* Hierarchy notes (interactions lacking a parent main effect). */
BDOE_API int32_t bdoe_model_num_warnings(const bdoe_model* model);
BDOE_API const char* bdoe_model_warning(const bdoe_model* model, int32_t i);

/* treatment: n_factors level indices. */
BDOE_API bdoe_status bdoe_model_label(const bdoe_model* model,
                                      const int32_t* treatment,
                                      int32_t* out_label);
BDOE_API bdoe_status bdoe_model_unlabel(const bdoe_model* model, int32_t label,
                                        int32_t* out_treatment);

/* --------------------------------------------------- optimal design measure */

/* Multiplicative algorithm from the uniform measure. tol <= 0 selects the
 * default 1e-10; max_iter <= 0 selects the default 1000000. On
 * BDOE_ERR_NONCONVERGENCE the best iterate is still returned. */
BDOE_API bdoe_status bdoe_optimize_measure(const bdoe_model* model, double tol,
                                           int64_t max_iter,
                                           bdoe_measure** out_measure);
BDOE_API void bdoe_measure_free(bdoe_measure* measure);

/* Masses over all v treatments, by label order. */
BDOE_API bdoe_status bdoe_measure_masses(const bdoe_measure* measure,
                                         double* out_masses);
/* Benchmark constant s = tr{M(p_hat)}^-1 - tol. */
BDOE_API double bdoe_measure_s(const bdoe_measure* measure);
BDOE_API double bdoe_measure_phi(const bdoe_measure* measure);
BDOE_API int64_t bdoe_measure_iterations(const bdoe_measure* measure);
BDOE_API double bdoe_measure_terminal_gap(const bdoe_measure* measure);
BDOE_API int32_t bdoe_measure_converged(const bdoe_measure* measure);

/* ---------------------------------------------------------- exact designs */

BDOE_API bdoe_status bdoe_design_from_replications(const bdoe_model* model,
                                                   const int32_t* replications,
                                                   bdoe_design** out_design);
BDOE_API bdoe_status bdoe_design_from_labels(const bdoe_model* model,
                                             const int32_t* labels,
                                             int32_t n_runs,
                                             bdoe_design** out_design);
/* Design files: one run per line, either a 1-based label or comma-separated
 * level indices; '#' lines are comments; repeated lines mean replication. */
BDOE_API bdoe_status bdoe_design_read(const bdoe_model* model,
                                      const char* path,
                                      bdoe_design** out_design);
BDOE_API bdoe_status bdoe_design_write(const bdoe_design* design,
                                       const char* path);
BDOE_API void bdoe_design_free(bdoe_design* design);

BDOE_API int32_t bdoe_design_num_runs(const bdoe_design* design);
BDOE_API int32_t bdoe_design_is_binary(const bdoe_design* design);
BDOE_API bdoe_status bdoe_design_replications(const bdoe_design* design,
                                              int32_t* out_replications);

/* All scores of a design under the model it was created with. s is the
 * benchmark constant from bdoe_measure_s. out_eff_lb_rho (length n_rhos) may
 * be NULL when n_rhos is 0. */
typedef struct bdoe_score {
  double a_value; /* tr(H^-1) */
  double eff_lb;
  double tr_v;
  int32_t is_binary;
  int32_t negative_bound; /* some rho bound had a negative numerator */
} bdoe_score;

BDOE_API bdoe_status bdoe_design_score(const bdoe_model* model,
                                       const bdoe_design* design, double s,
                                       const double* rhos, int32_t n_rhos,
                                       bdoe_score* out_score,
                                       double* out_eff_lb_rho);

/* Worst-case expected MSE trace under misspecification bounded by delta2. */
BDOE_API bdoe_status bdoe_design_psi(const bdoe_model* model,
                                     const bdoe_design* design, double sigma2,
                                     double delta2, double* out_psi);

/* Round the measure to an n_target-run design (smallest rounding constant
 * wins). Fails with BDOE_ERR_NO_VALID_ROUNDING or BDOE_ERR_SINGULAR. */
BDOE_API bdoe_status bdoe_round_measure(const bdoe_model* model,
                                        const bdoe_measure* measure,
                                        int32_t n_target,
                                        bdoe_design** out_design);

/* ------------------------------------------------------ search procedures */

typedef struct bdoe_search_config {
  int32_t target_n;
  double init_threshold; /* <= 0 selects the default 0.98 */
  double keep_threshold; /* <= 0 selects the default 0.95 */
  int32_t n1_hint;       /* <= 0 for none */
  /* Number of seeded descents; ties between equally scored moves are
   * reshuffled per restart and the best final design wins. <= 0 selects the
   * default of 1 (canonical tie order only). Output stays deterministic. */
  int32_t restarts;
} bdoe_search_config;

/* Procedures A, B1, B2. The rho list sets which eff_lb(rho) values are
 * recorded per step. On BDOE_ERR_DEAD_END the partial trace is still
 * returned. B1 and B2 use the measure only for its benchmark constant. */
BDOE_API bdoe_status bdoe_procedure_a(const bdoe_model* model,
                                      const bdoe_measure* measure,
                                      const bdoe_search_config* config,
                                      const double* rhos, int32_t n_rhos,
                                      bdoe_trace** out_trace);
BDOE_API bdoe_status bdoe_procedure_b1(const bdoe_model* model,
                                       const bdoe_measure* measure,
                                       const bdoe_search_config* config,
                                       const double* rhos, int32_t n_rhos,
                                       bdoe_trace** out_trace);
BDOE_API bdoe_status bdoe_procedure_b2(const bdoe_model* model,
                                       const bdoe_measure* measure,
                                       const bdoe_search_config* config,
                                       const double* rhos, int32_t n_rhos,
                                       bdoe_trace** out_trace);
BDOE_API void bdoe_trace_free(bdoe_trace* trace);

BDOE_API int32_t bdoe_trace_initial_n(const bdoe_trace* trace);
BDOE_API double bdoe_trace_initial_eff_lb(const bdoe_trace* trace);
BDOE_API int32_t bdoe_trace_num_steps(const bdoe_trace* trace);

/* One accepted move; deleted[1] and added are 0 when unused. */
typedef struct bdoe_step_info {
  int32_t n_runs;
  int32_t deleted[2];
  int32_t added;
  double eff_lb;
} bdoe_step_info;

BDOE_API bdoe_status bdoe_trace_step(const bdoe_trace* trace, int32_t index,
                                     bdoe_step_info* out_step,
                                     double* out_eff_lb_rho);
/* Best design found at the given run size (initial or after a step). With
 * several restarts this may come from a different descent than the steps. */
BDOE_API bdoe_status bdoe_trace_design_at(const bdoe_trace* trace,
                                          int32_t n_runs,
                                          bdoe_design** out_design);
BDOE_API bdoe_status bdoe_trace_final_design(const bdoe_trace* trace,
                                             bdoe_design** out_design);

/* ------------------------------------------------------------------ oracle */

/* Exhaustive enumeration of binary n-run designs. budget 0 selects the
 * default 10^7 candidates; exceeding it fails with
 * BDOE_ERR_BUDGET_EXCEEDED before any work is done. */
BDOE_API bdoe_status bdoe_oracle_run(const bdoe_model* model, int32_t n_runs,
                                     const double* rhos, int32_t n_rhos,
                                     uint64_t budget, bdoe_oracle** out_oracle);
BDOE_API void bdoe_oracle_free(bdoe_oracle* oracle);

BDOE_API double bdoe_oracle_min_a_value(const bdoe_oracle* oracle);
BDOE_API bdoe_status bdoe_oracle_best_design(const bdoe_oracle* oracle,
                                             bdoe_design** out_design);
/* sigma^2-normalized minimum of psi at rhos[rho_index]. */
BDOE_API bdoe_status bdoe_oracle_min_psi(const bdoe_oracle* oracle,
                                         int32_t rho_index, double* out_psi);
BDOE_API bdoe_status bdoe_oracle_psi_design(const bdoe_oracle* oracle,
                                            int32_t rho_index,
                                            bdoe_design** out_design);
BDOE_API uint64_t bdoe_oracle_num_candidates(const bdoe_oracle* oracle);
BDOE_API uint64_t bdoe_oracle_num_nonsingular(const bdoe_oracle* oracle);

#ifdef __cplusplus
}
#endif

#endif /* BDOE_H */

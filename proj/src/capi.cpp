#include "bdoe.h"

#include <cstring>
#include <new>
#include <string>

#include "discretization.hpp"
#include "errors.hpp"
#include "exact_design.hpp"
#include "factorial_model.hpp"
#include "measure_optimizer.hpp"

using bdoe::Error;
using bdoe::ErrorCode;

struct bdoe_model {
  bdoe::Model impl;
};

struct bdoe_measure {
  bdoe::OptimizerResult impl;
  bool converged = true;
};

struct bdoe_design {
  bdoe::ExactDesign impl;
};

struct bdoe_trace {
  bdoe::SearchTrace impl;
  int32_t n_rhos = 0;
};

struct bdoe_oracle {
  bdoe::OracleResult impl;
};

namespace {

thread_local std::string t_last_error;

bdoe_status map_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return BDOE_ERR_INVALID_ARGUMENT;
    case ErrorCode::DegenerateModel: return BDOE_ERR_DEGENERATE_MODEL;
    case ErrorCode::Singular: return BDOE_ERR_SINGULAR;
    case ErrorCode::NoValidRounding: return BDOE_ERR_NO_VALID_ROUNDING;
    case ErrorCode::Nonconvergence: return BDOE_ERR_NONCONVERGENCE;
    case ErrorCode::DeadEnd: return BDOE_ERR_DEAD_END;
    case ErrorCode::NoInitialDesign: return BDOE_ERR_NO_INITIAL_DESIGN;
    case ErrorCode::BudgetExceeded: return BDOE_ERR_BUDGET_EXCEEDED;
    case ErrorCode::Io: return BDOE_ERR_IO;
    case ErrorCode::Parse: return BDOE_ERR_PARSE;
  }
  return BDOE_ERR_INTERNAL;
}

bdoe_status fail(bdoe_status status, const char* msg) {
  t_last_error = msg;
  return status;
}

// Runs the body, translating exceptions into statuses.
template <typename Fn>
bdoe_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return BDOE_OK;
  } catch (const Error& e) {
    t_last_error = e.what();
    return map_code(e.code());
  } catch (const std::bad_alloc&) {
    t_last_error = "out of memory";
    return BDOE_ERR_INTERNAL;
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return BDOE_ERR_INTERNAL;
  }
}

bdoe::ProcedureConfig to_config(const bdoe_search_config& c,
                                const double* rhos, int32_t n_rhos) {
  bdoe::ProcedureConfig cfg;
  cfg.target_n = c.target_n;
  if (c.init_threshold > 0.0) cfg.init_threshold = c.init_threshold;
  if (c.keep_threshold > 0.0) cfg.keep_threshold = c.keep_threshold;
  if (c.n1_hint > 0) cfg.n1_hint = c.n1_hint;
  if (c.restarts > 0) cfg.restarts = c.restarts;
  cfg.rho_list.assign(rhos, rhos + n_rhos);
  return cfg;
}

template <typename Runner>
bdoe_status run_procedure(const bdoe_model* model, const bdoe_measure* measure,
                          const bdoe_search_config* config, const double* rhos,
                          int32_t n_rhos, bdoe_trace** out_trace,
                          Runner&& runner) {
  if (!model || !measure || !config || n_rhos < 0 || (n_rhos > 0 && !rhos) ||
      !out_trace)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to procedure");
  const bdoe::ProcedureConfig cfg = to_config(*config, rhos, n_rhos);
  try {
    *out_trace = new bdoe_trace{runner(cfg), n_rhos};
    t_last_error.clear();
    return BDOE_OK;
  } catch (const bdoe::DeadEndError& e) {
    *out_trace = new bdoe_trace{e.partial(), n_rhos};
    t_last_error = e.what();
    return BDOE_ERR_DEAD_END;
  } catch (const Error& e) {
    t_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return BDOE_ERR_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* bdoe_version(void) { return "0.1.0"; }

const char* bdoe_status_name(bdoe_status status) {
  switch (status) {
    case BDOE_OK: return "ok";
    case BDOE_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BDOE_ERR_DEGENERATE_MODEL: return "degenerate model";
    case BDOE_ERR_SINGULAR: return "singular design";
    case BDOE_ERR_NO_VALID_ROUNDING: return "no valid rounding constant";
    case BDOE_ERR_NONCONVERGENCE: return "nonconvergence";
    case BDOE_ERR_DEAD_END: return "search dead end";
    case BDOE_ERR_NO_INITIAL_DESIGN: return "no initial design";
    case BDOE_ERR_BUDGET_EXCEEDED: return "enumeration budget exceeded";
    case BDOE_ERR_IO: return "i/o error";
    case BDOE_ERR_PARSE: return "parse error";
    case BDOE_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bdoe_last_error(void) { return t_last_error.c_str(); }

/* model ------------------------------------------------------------------ */

bdoe_status bdoe_model_create(const int32_t* levels, int32_t n_factors,
                              const int32_t* effect_factors,
                              const int32_t* effect_sizes, int32_t n_effects,
                              bdoe_model** out_model) {
  if (!levels || n_factors < 1 || !effect_factors || !effect_sizes ||
      n_effects < 1 || !out_model)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to model_create");
  return guarded([&] {
    bdoe::FactorialSpace space(std::vector<int>(levels, levels + n_factors));
    std::vector<bdoe::Effect> effects;
    const int32_t* cursor = effect_factors;
    for (int32_t e = 0; e < n_effects; ++e) {
      bdoe::require(effect_sizes[e] >= 1, ErrorCode::InvalidArgument,
                    "effect sizes must be positive");
      effects.push_back(
          bdoe::Effect{std::vector<int>(cursor, cursor + effect_sizes[e])});
      cursor += effect_sizes[e];
    }
    *out_model = new bdoe_model{bdoe::Model(std::move(space), std::move(effects))};
  });
}

void bdoe_model_free(bdoe_model* model) { delete model; }

int32_t bdoe_model_num_factors(const bdoe_model* model) {
  return model ? model->impl.space().num_factors() : 0;
}

int32_t bdoe_model_num_treatments(const bdoe_model* model) {
  return model ? model->impl.v() : 0;
}

int32_t bdoe_model_num_params(const bdoe_model* model) {
  return model ? model->impl.q() : 0;
}

double bdoe_model_trace_w(const bdoe_model* model) {
  return model ? model->impl.trace_w() : 0.0;
}

int32_t bdoe_model_num_warnings(const bdoe_model* model) {
  return model ? static_cast<int32_t>(model->impl.warnings().size()) : 0;
}

const char* bdoe_model_warning(const bdoe_model* model, int32_t i) {
  if (!model || i < 0 ||
      i >= static_cast<int32_t>(model->impl.warnings().size()))
    return "";
  return model->impl.warnings()[i].c_str();
}

bdoe_status bdoe_model_label(const bdoe_model* model, const int32_t* treatment,
                             int32_t* out_label) {
  if (!model || !treatment || !out_label)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to model_label");
  return guarded([&] {
    std::vector<int> t(treatment,
                       treatment + model->impl.space().num_factors());
    *out_label = model->impl.space().label(t);
  });
}

bdoe_status bdoe_model_unlabel(const bdoe_model* model, int32_t label,
                               int32_t* out_treatment) {
  if (!model || !out_treatment)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to model_unlabel");
  return guarded([&] {
    const std::vector<int> t = model->impl.space().unlabel(label);
    for (std::size_t i = 0; i < t.size(); ++i)
      out_treatment[i] = t[i];
  });
}

/* measure ----------------------------------------------------------------- */

bdoe_status bdoe_optimize_measure(const bdoe_model* model, double tol,
                                  int64_t max_iter,
                                  bdoe_measure** out_measure) {
  if (!model || !out_measure)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to optimize_measure");
  const double t = tol > 0.0 ? tol : 1e-10;
  const long long iters = max_iter > 0 ? max_iter : 1'000'000;
  try {
    *out_measure =
        new bdoe_measure{bdoe::optimize(model->impl.z(), t, iters), true};
    t_last_error.clear();
    return BDOE_OK;
  } catch (const bdoe::NonconvergenceError& e) {
    *out_measure = new bdoe_measure{e.best(), false};
    t_last_error = e.what();
    return BDOE_ERR_NONCONVERGENCE;
  } catch (const Error& e) {
    t_last_error = e.what();
    return map_code(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return BDOE_ERR_INTERNAL;
  }
}

void bdoe_measure_free(bdoe_measure* measure) { delete measure; }

bdoe_status bdoe_measure_masses(const bdoe_measure* measure,
                                double* out_masses) {
  if (!measure || !out_masses)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to measure_masses");
  std::memcpy(out_masses, measure->impl.p_hat.memptr(),
              measure->impl.p_hat.n_elem * sizeof(double));
  return BDOE_OK;
}

double bdoe_measure_s(const bdoe_measure* measure) {
  return measure ? measure->impl.s : 0.0;
}

double bdoe_measure_phi(const bdoe_measure* measure) {
  return measure ? measure->impl.phi_value : 0.0;
}

int64_t bdoe_measure_iterations(const bdoe_measure* measure) {
  return measure ? measure->impl.iterations : 0;
}

double bdoe_measure_terminal_gap(const bdoe_measure* measure) {
  return measure ? measure->impl.terminal_gap : 0.0;
}

int32_t bdoe_measure_converged(const bdoe_measure* measure) {
  return measure && measure->converged ? 1 : 0;
}

/* designs ----------------------------------------------------------------- */

bdoe_status bdoe_design_from_replications(const bdoe_model* model,
                                          const int32_t* replications,
                                          bdoe_design** out_design) {
  if (!model || !replications || !out_design)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments");
  return guarded([&] {
    *out_design = new bdoe_design{bdoe::ExactDesign(
        std::vector<int>(replications, replications + model->impl.v()))};
  });
}

bdoe_status bdoe_design_from_labels(const bdoe_model* model,
                                    const int32_t* labels, int32_t n_runs,
                                    bdoe_design** out_design) {
  if (!model || !labels || n_runs < 1 || !out_design)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments");
  return guarded([&] {
    *out_design = new bdoe_design{bdoe::ExactDesign::from_labels(
        model->impl.v(), std::vector<int>(labels, labels + n_runs))};
  });
}

bdoe_status bdoe_design_read(const bdoe_model* model, const char* path,
                             bdoe_design** out_design) {
  if (!model || !path || !out_design)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments");
  return guarded([&] {
    *out_design =
        new bdoe_design{bdoe::read_design_file(model->impl.space(), path)};
  });
}

bdoe_status bdoe_design_write(const bdoe_design* design, const char* path) {
  if (!design || !path) return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments");
  return guarded([&] { bdoe::write_design_file(design->impl, path); });
}

void bdoe_design_free(bdoe_design* design) { delete design; }

int32_t bdoe_design_num_runs(const bdoe_design* design) {
  return design ? design->impl.n_runs() : 0;
}

int32_t bdoe_design_is_binary(const bdoe_design* design) {
  return design && design->impl.is_binary() ? 1 : 0;
}

bdoe_status bdoe_design_replications(const bdoe_design* design,
                                     int32_t* out_replications) {
  if (!design || !out_replications)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments");
  const auto& reps = design->impl.replications();
  for (std::size_t k = 0; k < reps.size(); ++k) out_replications[k] = reps[k];
  return BDOE_OK;
}

bdoe_status bdoe_design_score(const bdoe_model* model,
                              const bdoe_design* design, double s,
                              const double* rhos, int32_t n_rhos,
                              bdoe_score* out_score, double* out_eff_lb_rho) {
  if (!model || !design || !out_score || n_rhos < 0 ||
      (n_rhos > 0 && (!rhos || !out_eff_lb_rho)))
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to design_score");
  return guarded([&] {
    const bdoe::DesignScore sc = bdoe::score_design(
        model->impl, design->impl, s, std::vector<double>(rhos, rhos + n_rhos));
    out_score->a_value = sc.a_value;
    out_score->eff_lb = sc.eff_lb;
    out_score->tr_v = sc.tr_v;
    out_score->is_binary = sc.is_binary ? 1 : 0;
    out_score->negative_bound = sc.negative_bound ? 1 : 0;
    for (int32_t i = 0; i < n_rhos; ++i) out_eff_lb_rho[i] = sc.eff_lb_rho[i];
  });
}

bdoe_status bdoe_design_psi(const bdoe_model* model, const bdoe_design* design,
                            double sigma2, double delta2, double* out_psi) {
  if (!model || !design || !out_psi)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to design_psi");
  return guarded([&] {
    *out_psi = bdoe::psi(design->impl, model->impl.z(), model->impl.trace_w(),
                         sigma2, delta2);
  });
}

bdoe_status bdoe_round_measure(const bdoe_model* model,
                               const bdoe_measure* measure, int32_t n_target,
                               bdoe_design** out_design) {
  if (!model || !measure || !out_design)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to round_measure");
  return guarded([&] {
    *out_design = new bdoe_design{
        bdoe::round_measure(measure->impl.p_hat, n_target, model->impl.z())};
  });
}

/* procedures -------------------------------------------------------------- */

bdoe_status bdoe_procedure_a(const bdoe_model* model,
                             const bdoe_measure* measure,
                             const bdoe_search_config* config,
                             const double* rhos, int32_t n_rhos,
                             bdoe_trace** out_trace) {
  return run_procedure(model, measure, config, rhos, n_rhos, out_trace,
                       [&](const bdoe::ProcedureConfig& cfg) {
                         return bdoe::procedure_a(model->impl,
                                                  measure->impl.p_hat,
                                                  measure->impl.s, cfg);
                       });
}

bdoe_status bdoe_procedure_b1(const bdoe_model* model,
                              const bdoe_measure* measure,
                              const bdoe_search_config* config,
                              const double* rhos, int32_t n_rhos,
                              bdoe_trace** out_trace) {
  return run_procedure(model, measure, config, rhos, n_rhos, out_trace,
                       [&](const bdoe::ProcedureConfig& cfg) {
                         return bdoe::procedure_b1(model->impl,
                                                   measure->impl.s, cfg);
                       });
}

bdoe_status bdoe_procedure_b2(const bdoe_model* model,
                              const bdoe_measure* measure,
                              const bdoe_search_config* config,
                              const double* rhos, int32_t n_rhos,
                              bdoe_trace** out_trace) {
  return run_procedure(model, measure, config, rhos, n_rhos, out_trace,
                       [&](const bdoe::ProcedureConfig& cfg) {
                         return bdoe::procedure_b2(model->impl,
                                                   measure->impl.s, cfg);
                       });
}

void bdoe_trace_free(bdoe_trace* trace) { delete trace; }

int32_t bdoe_trace_initial_n(const bdoe_trace* trace) {
  return trace ? trace->impl.initial_n() : 0;
}

double bdoe_trace_initial_eff_lb(const bdoe_trace* trace) {
  return trace ? trace->impl.initial_eff_lb : 0.0;
}

int32_t bdoe_trace_num_steps(const bdoe_trace* trace) {
  return trace ? static_cast<int32_t>(trace->impl.steps.size()) : 0;
}

bdoe_status bdoe_trace_step(const bdoe_trace* trace, int32_t index,
                            bdoe_step_info* out_step,
                            double* out_eff_lb_rho) {
  if (!trace || !out_step || index < 0 ||
      index >= static_cast<int32_t>(trace->impl.steps.size()))
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to trace_step");
  const bdoe::TraceStep& step = trace->impl.steps[index];
  out_step->n_runs = step.n_runs;
  out_step->deleted[0] = step.move.deleted[0];
  out_step->deleted[1] = step.move.deleted[1];
  out_step->added = step.move.added;
  out_step->eff_lb = step.eff_lb;
  if (out_eff_lb_rho) {
    for (std::size_t i = 0; i < step.eff_lb_rho.size(); ++i)
      out_eff_lb_rho[i] = step.eff_lb_rho[i];
  }
  return BDOE_OK;
}

bdoe_status bdoe_trace_design_at(const bdoe_trace* trace, int32_t n_runs,
                                 bdoe_design** out_design) {
  if (!trace || !out_design)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to trace_design_at");
  const bdoe::ExactDesign* d = trace->impl.design_at(n_runs);
  if (!d)
    return fail(BDOE_ERR_INVALID_ARGUMENT,
                "run size not visited by this trace");
  *out_design = new bdoe_design{*d};
  return BDOE_OK;
}

bdoe_status bdoe_trace_final_design(const bdoe_trace* trace,
                                    bdoe_design** out_design) {
  if (!trace || !out_design)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments");
  *out_design = new bdoe_design{trace->impl.final_design()};
  return BDOE_OK;
}

/* oracle ------------------------------------------------------------------ */

bdoe_status bdoe_oracle_run(const bdoe_model* model, int32_t n_runs,
                            const double* rhos, int32_t n_rhos,
                            uint64_t budget, bdoe_oracle** out_oracle) {
  if (!model || n_rhos < 0 || (n_rhos > 0 && !rhos) || !out_oracle)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to oracle_run");
  return guarded([&] {
    *out_oracle = new bdoe_oracle{bdoe::brute_force_binary_oracle(
        model->impl, n_runs, std::vector<double>(rhos, rhos + n_rhos),
        budget > 0 ? budget : 10'000'000ULL)};
  });
}

void bdoe_oracle_free(bdoe_oracle* oracle) { delete oracle; }

double bdoe_oracle_min_a_value(const bdoe_oracle* oracle) {
  return oracle ? oracle->impl.min_a_value : 0.0;
}

bdoe_status bdoe_oracle_best_design(const bdoe_oracle* oracle,
                                    bdoe_design** out_design) {
  if (!oracle || !out_design)
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments");
  *out_design = new bdoe_design{oracle->impl.best_design};
  return BDOE_OK;
}

bdoe_status bdoe_oracle_min_psi(const bdoe_oracle* oracle, int32_t rho_index,
                                double* out_psi) {
  if (!oracle || !out_psi || rho_index < 0 ||
      rho_index >= static_cast<int32_t>(oracle->impl.min_psi.size()))
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments to oracle_min_psi");
  *out_psi = oracle->impl.min_psi[rho_index];
  return BDOE_OK;
}

bdoe_status bdoe_oracle_psi_design(const bdoe_oracle* oracle,
                                   int32_t rho_index,
                                   bdoe_design** out_design) {
  if (!oracle || !out_design || rho_index < 0 ||
      rho_index >= static_cast<int32_t>(oracle->impl.psi_designs.size()))
    return fail(BDOE_ERR_INVALID_ARGUMENT, "bad arguments");
  *out_design = new bdoe_design{oracle->impl.psi_designs[rho_index]};
  return BDOE_OK;
}

uint64_t bdoe_oracle_num_candidates(const bdoe_oracle* oracle) {
  return oracle ? oracle->impl.candidates : 0;
}

uint64_t bdoe_oracle_num_nonsingular(const bdoe_oracle* oracle) {
  return oracle ? oracle->impl.nonsingular : 0;
}

}  // extern "C"

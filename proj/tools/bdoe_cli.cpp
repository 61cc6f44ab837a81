// bdoe — command-line front end for baseline-parametrized factorial design.
//
// Subcommands: optimize-measure, design, evaluate, oracle. Problem inputs
// come from flags or a spec file; everything numerical happens behind the
// C API in libbdoe.
//
// Exit codes: 0 success, 2 spec/parse error, 3 numerical or degeneracy
// failure, 4 enumeration budget refusal.

#include "bdoe.h"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitBudget = 4;

struct CliError {
  int exit_code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& msg) {
  throw CliError{code, msg};
}

int exit_code_for(bdoe_status status) {
  switch (status) {
    case BDOE_OK:
      return kExitOk;
    case BDOE_ERR_INVALID_ARGUMENT:
    case BDOE_ERR_IO:
    case BDOE_ERR_PARSE:
      return kExitParse;
    case BDOE_ERR_BUDGET_EXCEEDED:
      return kExitBudget;
    default:
      return kExitNumeric;
  }
}

void check(bdoe_status status, const std::string& what) {
  if (status != BDOE_OK)
    die(exit_code_for(status),
        what + ": " + bdoe_status_name(status) + " (" + bdoe_last_error() + ")");
}

/* ------------------------------------------------------------- handles */

struct ModelDeleter {
  void operator()(bdoe_model* p) const { bdoe_model_free(p); }
};
struct MeasureDeleter {
  void operator()(bdoe_measure* p) const { bdoe_measure_free(p); }
};
struct DesignDeleter {
  void operator()(bdoe_design* p) const { bdoe_design_free(p); }
};
struct TraceDeleter {
  void operator()(bdoe_trace* p) const { bdoe_trace_free(p); }
};
struct OracleDeleter {
  void operator()(bdoe_oracle* p) const { bdoe_oracle_free(p); }
};

using ModelPtr = std::unique_ptr<bdoe_model, ModelDeleter>;
using MeasurePtr = std::unique_ptr<bdoe_measure, MeasureDeleter>;
using DesignPtr = std::unique_ptr<bdoe_design, DesignDeleter>;
using TracePtr = std::unique_ptr<bdoe_trace, TraceDeleter>;
using OraclePtr = std::unique_ptr<bdoe_oracle, OracleDeleter>;

/* -------------------------------------------------------------- parsing */

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, sep)) out.push_back(trim(tok));
  return out;
}

int parse_int(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const int value = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    die(kExitParse, "cannot parse " + what + " from '" + s + "'");
  }
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    die(kExitParse, "cannot parse " + what + " from '" + s + "'");
  }
}

// Problem description shared by all subcommands; flags override spec-file
// keys of the same name.
struct ProblemSpec {
  std::string levels_text;
  std::string effects_text;
  std::string runs_text;
  std::string rho_text = "1,5";
  std::string procedure = "all";
  double t = 1e-10;
  long long max_iter = 1'000'000;
  std::string thresholds_text = "0.98,0.95";
  int n1_hint = 0;
  std::string format = "table";
  std::uint64_t budget = 10'000'000;
  int restarts = 1;

  std::vector<int32_t> levels;
  std::vector<std::vector<int32_t>> effects;
  std::vector<int> runs;
  std::vector<double> rhos;
  double init_threshold = 0.98;
  double keep_threshold = 0.95;
  std::vector<std::string> procedures;  // subset of {"A","B1","B2"}

  void load_file(const std::string& path);
  void finalize(bool need_runs);
};

void ProblemSpec::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) die(kExitParse, "cannot open spec file: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(line);
    if (body.empty() || body[0] == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      die(kExitParse, path + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key == "levels") levels_text = value;
    else if (key == "effects") effects_text = value;
    else if (key == "runs") runs_text = value;
    else if (key == "rho") rho_text = value;
    else if (key == "procedure") procedure = value;
    else if (key == "t") t = parse_double(value, "t");
    else if (key == "max_iter") max_iter = parse_int(value, "max_iter");
    else if (key == "thresholds") thresholds_text = value;
    else if (key == "n1_hint") n1_hint = parse_int(value, "n1_hint");
    else if (key == "restarts") restarts = parse_int(value, "restarts");
    else if (key == "format") format = value;
    else if (key == "budget") budget = std::strtoull(value.c_str(), nullptr, 10);
    else
      die(kExitParse, path + ":" + std::to_string(lineno) +
                          ": unknown key '" + key + "'");
  }
}

void ProblemSpec::finalize(bool need_runs) {
  if (levels_text.empty()) die(kExitParse, "missing 'levels'");
  for (const std::string& tok : split(levels_text, ',')) {
    if (tok.empty()) die(kExitParse, "empty entry in 'levels'");
    levels.push_back(parse_int(tok, "levels"));
  }

  if (effects_text.empty()) die(kExitParse, "missing 'effects'");
  for (const std::string& effect : split(effects_text, ';')) {
    if (effect.empty()) die(kExitParse, "empty effect in 'effects'");
    std::vector<int32_t> factors;
    for (const std::string& tok : split(effect, 'x'))
      factors.push_back(parse_int(tok, "effect factor"));
    effects.push_back(std::move(factors));
  }

  for (const std::string& tok : split(rho_text, ','))
    if (!tok.empty()) rhos.push_back(parse_double(tok, "rho"));
  for (double rho : rhos)
    if (rho < 0) die(kExitParse, "rho values must be nonnegative");

  const auto th = split(thresholds_text, ',');
  if (th.size() != 2) die(kExitParse, "'thresholds' needs two values");
  init_threshold = parse_double(th[0], "thresholds");
  keep_threshold = parse_double(th[1], "thresholds");

  if (procedure == "all") procedures = {"A", "B1", "B2"};
  else if (procedure == "A" || procedure == "B1" || procedure == "B2")
    procedures = {procedure};
  else
    die(kExitParse, "procedure must be A, B1, B2 or all");

  if (need_runs) {
    if (runs_text.empty()) die(kExitParse, "missing 'runs'");
    const auto dots = runs_text.find("..");
    if (dots != std::string::npos) {
      const int lo = parse_int(trim(runs_text.substr(0, dots)), "runs");
      const int hi = parse_int(trim(runs_text.substr(dots + 2)), "runs");
      if (lo > hi) die(kExitParse, "runs range is empty");
      for (int n = lo; n <= hi; ++n) runs.push_back(n);
    } else {
      for (const std::string& tok : split(runs_text, ','))
        if (!tok.empty()) runs.push_back(parse_int(tok, "runs"));
    }
    if (runs.empty()) die(kExitParse, "no run sizes given");
  }
}

/* ------------------------------------------------------------ the model */

ModelPtr build_model(const ProblemSpec& spec) {
  std::vector<int32_t> flat;
  std::vector<int32_t> sizes;
  for (const auto& effect : spec.effects) {
    sizes.push_back(static_cast<int32_t>(effect.size()));
    flat.insert(flat.end(), effect.begin(), effect.end());
  }
  bdoe_model* model = nullptr;
  check(bdoe_model_create(spec.levels.data(),
                          static_cast<int32_t>(spec.levels.size()),
                          flat.data(), sizes.data(),
                          static_cast<int32_t>(sizes.size()), &model),
        "building the model");
  for (int32_t i = 0; i < bdoe_model_num_warnings(model); ++i)
    std::cerr << "warning: " << bdoe_model_warning(model, i) << "\n";
  return ModelPtr(model);
}

MeasurePtr run_optimizer(const ProblemSpec& spec, const bdoe_model* model) {
  bdoe_measure* measure = nullptr;
  const bdoe_status status =
      bdoe_optimize_measure(model, spec.t, spec.max_iter, &measure);
  if (status == BDOE_ERR_NONCONVERGENCE) {
    MeasurePtr keep(measure);  // released with the error
    die(kExitNumeric, std::string("measure optimization did not converge: ") +
                          bdoe_last_error());
  }
  check(status, "optimizing the design measure");
  return MeasurePtr(measure);
}

std::string treatment_string(const bdoe_model* model, int32_t label) {
  const int32_t n = bdoe_model_num_factors(model);
  std::vector<int32_t> t(n);
  if (bdoe_model_unlabel(model, label, t.data()) != BDOE_OK) return "?";
  bool wide = false;
  for (int32_t i = 0; i < n; ++i) wide = wide || t[i] > 9;
  std::string out;
  for (int32_t i = 0; i < n; ++i) {
    if (wide && i) out += '-';
    out += std::to_string(t[i]);
  }
  return out;
}

std::string labels_string(const bdoe_model* model, const bdoe_design* design) {
  const int32_t v = bdoe_model_num_treatments(model);
  std::vector<int32_t> reps(v);
  check(bdoe_design_replications(design, reps.data()), "reading a design");
  std::string out;
  for (int32_t k = 0; k < v; ++k)
    for (int32_t i = 0; i < reps[k]; ++i) {
      if (!out.empty()) out += ',';
      out += std::to_string(k + 1);
    }
  return out;
}

std::string full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

std::string rho_key(double rho) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", rho);
  return buf;
}

/* -------------------------------------------------------------- reports */

// Spec echo lines shared by every report; the structured "report" format is
// the golden-diffable one, so field names stay fixed.
void emit_header(std::ostream& os, const ProblemSpec& spec,
                 const bdoe_model* model, const bdoe_measure* measure,
                 const std::string& command) {
  const std::string comment = spec.format == "report" ? "" : "# ";
  if (spec.format == "report") {
    os << "command = " << command << "\n";
    os << "spec.levels = " << spec.levels_text << "\n";
    os << "spec.effects = " << spec.effects_text << "\n";
    if (!spec.runs_text.empty()) os << "spec.runs = " << spec.runs_text << "\n";
    os << "spec.rho = " << spec.rho_text << "\n";
    os << "spec.procedure = " << spec.procedure << "\n";
    os << "spec.t = " << full(spec.t) << "\n";
    os << "spec.thresholds = " << full(spec.init_threshold) << ","
       << full(spec.keep_threshold) << "\n";
    if (spec.n1_hint > 0) os << "spec.n1_hint = " << spec.n1_hint << "\n";
    os << "model.v = " << bdoe_model_num_treatments(model) << "\n";
    os << "model.q = " << bdoe_model_num_params(model) << "\n";
    if (measure) {
      os << "measure.s = " << full(bdoe_measure_s(measure)) << "\n";
      os << "measure.iterations = " << bdoe_measure_iterations(measure) << "\n";
      os << "measure.terminal_gap = " << full(bdoe_measure_terminal_gap(measure))
         << "\n";
    }
  } else {
    os << comment << "bdoe " << command << "\n";
    os << comment << "levels " << spec.levels_text << " (v = "
       << bdoe_model_num_treatments(model)
       << "), effects " << spec.effects_text << " (q = "
       << bdoe_model_num_params(model) << ", q+1 = "
       << bdoe_model_num_params(model) + 1 << ")\n";
    os << comment << "t " << full(spec.t) << ", thresholds "
       << spec.init_threshold << "/" << spec.keep_threshold << ", rho "
       << spec.rho_text << "\n";
    if (measure) {
      os << comment << "s " << full(bdoe_measure_s(measure)) << " (iterations "
         << bdoe_measure_iterations(measure) << ", terminal gap "
         << full(bdoe_measure_terminal_gap(measure)) << ")\n";
    }
  }
}

/* ---------------------------------------------------- optimize-measure */

int cmd_optimize_measure(const ProblemSpec& spec) {
  ModelPtr model = build_model(spec);
  MeasurePtr measure = run_optimizer(spec, model.get());
  std::ostream& os = std::cout;

  emit_header(os, spec, model.get(), measure.get(), "optimize-measure");
  const int32_t v = bdoe_model_num_treatments(model.get());
  std::vector<double> masses(v);
  check(bdoe_measure_masses(measure.get(), masses.data()), "reading masses");

  if (spec.format == "report") {
    int idx = 0;
    for (int32_t k = 0; k < v; ++k) {
      if (masses[k] <= 0.0) continue;
      os << "mass[" << idx << "].label = " << k + 1 << "\n";
      os << "mass[" << idx << "].treatment = "
         << treatment_string(model.get(), k + 1) << "\n";
      os << "mass[" << idx << "].value = " << full(masses[k]) << "\n";
      ++idx;
    }
  } else if (spec.format == "csv") {
    os << "label,treatment,mass\n";
    for (int32_t k = 0; k < v; ++k)
      if (masses[k] > 0.0)
        os << k + 1 << "," << treatment_string(model.get(), k + 1) << ","
           << full(masses[k]) << "\n";
  } else {
    os << "\n  label  treatment  mass\n";
    for (int32_t k = 0; k < v; ++k)
      if (masses[k] > 0.0) {
        char line[96];
        std::snprintf(line, sizeof line, "  %5d  %-9s  %.6f\n", k + 1,
                      treatment_string(model.get(), k + 1).c_str(), masses[k]);
        os << line;
      }
  }
  return kExitOk;
}

/* ----------------------------------------------------------- cmd design */

struct Cell {
  int n = 0;
  std::string procedure;
  bool ok = false;
  std::string error;
  DesignPtr design;
  double eff_lb = 0.0;
  std::vector<double> eff_lb_rho;
  bool is_binary = false;
  bool negative_bound = false;
  bool best = false;
};

struct TraceRow {
  std::string procedure;
  int n_runs;
  std::string move;
  double eff_lb;
  std::vector<double> eff_lb_rho;
};

std::string move_string(const bdoe_step_info& step) {
  std::string out;
  if (step.added != 0) {
    out = "+ " + std::to_string(step.added) + " - (" +
          std::to_string(step.deleted[0]);
    if (step.deleted[1] != 0) out += ", " + std::to_string(step.deleted[1]);
    out += ")";
  } else {
    out = "- " + std::to_string(step.deleted[0]);
  }
  return out;
}

int cmd_design(const ProblemSpec& spec, const std::string& emit_dir,
               bool want_trace) {
  ModelPtr model = build_model(spec);
  const int32_t q = bdoe_model_num_params(model.get());
  for (int n : spec.runs)
    if (n < q + 1)
      die(kExitParse, "run size " + std::to_string(n) +
                          " cannot estimate the model: at least q+1 = " +
                          std::to_string(q + 1) + " runs are needed");
  const int32_t v = bdoe_model_num_treatments(model.get());
  for (const std::string& proc : spec.procedures)
    if (proc != "A")
      for (int n : spec.runs)
        if (n > v)
          die(kExitParse, "run size " + std::to_string(n) + " exceeds v = " +
                              std::to_string(v) + " for procedure " + proc);

  MeasurePtr measure = run_optimizer(spec, model.get());
  const double s = bdoe_measure_s(measure.get());
  const int target = *std::min_element(spec.runs.begin(), spec.runs.end());

  // One search per procedure, descending to the smallest requested size;
  // every larger requested size was visited on the way. A failing cell does
  // not disturb the rest of the grid.
  std::vector<Cell> cells;
  std::vector<TraceRow> trace_rows;
  for (const std::string& proc : spec.procedures) {
    bdoe_search_config cfg{};
    cfg.target_n = target;
    cfg.init_threshold = spec.init_threshold;
    cfg.keep_threshold = spec.keep_threshold;
    cfg.n1_hint = spec.n1_hint;
    cfg.restarts = spec.restarts;

    bdoe_trace* raw = nullptr;
    bdoe_status status;
    if (proc == "A")
      status = bdoe_procedure_a(model.get(), measure.get(), &cfg,
                                spec.rhos.data(),
                                static_cast<int32_t>(spec.rhos.size()), &raw);
    else if (proc == "B1")
      status = bdoe_procedure_b1(model.get(), measure.get(), &cfg,
                                 spec.rhos.data(),
                                 static_cast<int32_t>(spec.rhos.size()), &raw);
    else
      status = bdoe_procedure_b2(model.get(), measure.get(), &cfg,
                                 spec.rhos.data(),
                                 static_cast<int32_t>(spec.rhos.size()), &raw);
    TracePtr trace(raw);

    std::string proc_error;
    if (status != BDOE_OK && status != BDOE_ERR_DEAD_END)
      proc_error = std::string(bdoe_status_name(status)) + " (" +
                   bdoe_last_error() + ")";
    if (status == BDOE_ERR_DEAD_END)
      std::cerr << "warning: procedure " << proc
                << " stopped early: " << bdoe_last_error() << "\n";

    if (trace && want_trace) {
      const int32_t steps = bdoe_trace_num_steps(trace.get());
      for (int32_t i = 0; i < steps; ++i) {
        bdoe_step_info info{};
        std::vector<double> rho_values(spec.rhos.size());
        check(bdoe_trace_step(trace.get(), i, &info, rho_values.data()),
              "reading a trace step");
        trace_rows.push_back(
            {proc, info.n_runs, move_string(info), info.eff_lb, rho_values});
      }
    }

    for (int n : spec.runs) {
      Cell cell;
      cell.n = n;
      cell.procedure = proc;
      bdoe_design* draw = nullptr;
      if (!trace || bdoe_trace_design_at(trace.get(), n, &draw) != BDOE_OK) {
        cell.error = proc_error.empty()
                         ? std::string("descent stopped before this size")
                         : proc_error;
        cells.push_back(std::move(cell));
        continue;
      }
      cell.design.reset(draw);
      bdoe_score score{};
      cell.eff_lb_rho.resize(spec.rhos.size());
      const bdoe_status sc = bdoe_design_score(
          model.get(), cell.design.get(), s, spec.rhos.data(),
          static_cast<int32_t>(spec.rhos.size()), &score,
          cell.eff_lb_rho.data());
      if (sc != BDOE_OK) {
        cell.error = std::string(bdoe_status_name(sc)) + " (" +
                     bdoe_last_error() + ")";
      } else {
        cell.ok = true;
        cell.eff_lb = score.eff_lb;
        cell.is_binary = score.is_binary != 0;
        cell.negative_bound = score.negative_bound != 0;
      }
      cells.push_back(std::move(cell));
    }
  }

  // Best design per run size; ties go to the procedure order A, B1, B2.
  for (int n : spec.runs) {
    Cell* best = nullptr;
    for (Cell& cell : cells)
      if (cell.n == n && cell.ok && (!best || cell.eff_lb > best->eff_lb))
        best = &cell;
    if (best) best->best = true;
  }

  if (!emit_dir.empty()) {
    std::filesystem::create_directories(emit_dir);
    for (const Cell& cell : cells) {
      if (!cell.ok) continue;
      const std::string path = emit_dir + "/design_N" +
                               std::to_string(cell.n) + "_" + cell.procedure +
                               ".txt";
      check(bdoe_design_write(cell.design.get(), path.c_str()),
            "writing " + path);
    }
  }

  std::ostream& os = std::cout;
  emit_header(os, spec, model.get(), measure.get(), "design");
  if (spec.format == "report") {
    int idx = 0;
    for (const Cell& cell : cells) {
      const std::string p = "result[" + std::to_string(idx++) + "].";
      os << p << "N = " << cell.n << "\n";
      os << p << "procedure = " << cell.procedure << "\n";
      if (!cell.ok) {
        os << p << "error = " << cell.error << "\n";
        continue;
      }
      os << p << "design_labels = "
         << labels_string(model.get(), cell.design.get()) << "\n";
      os << p << "eff_lb = " << full(cell.eff_lb) << "\n";
      for (std::size_t r = 0; r < spec.rhos.size(); ++r)
        os << p << "eff_lb_rho[" << rho_key(spec.rhos[r])
           << "] = " << full(cell.eff_lb_rho[r]) << "\n";
      os << p << "binary = " << (cell.is_binary ? "true" : "false") << "\n";
      os << p << "best = " << (cell.best ? "true" : "false") << "\n";
    }
    int tidx = 0;
    for (const TraceRow& row : trace_rows) {
      const std::string p = "trace[" + std::to_string(tidx++) + "].";
      os << p << "procedure = " << row.procedure << "\n";
      os << p << "N = " << row.n_runs << "\n";
      os << p << "move = " << row.move << "\n";
      os << p << "eff_lb = " << full(row.eff_lb) << "\n";
    }
  } else if (spec.format == "csv") {
    os << "N,procedure,eff_lb";
    for (double rho : spec.rhos) os << ",eff_lb_rho_" << rho_key(rho);
    os << ",binary,best,design_labels\n";
    for (const Cell& cell : cells) {
      os << cell.n << "," << cell.procedure;
      if (!cell.ok) {
        os << ",error:" << cell.error << "\n";
        continue;
      }
      os << "," << full(cell.eff_lb);
      for (double value : cell.eff_lb_rho) os << "," << full(value);
      os << "," << (cell.is_binary ? 1 : 0) << "," << (cell.best ? 1 : 0)
         << "," << '"' << labels_string(model.get(), cell.design.get()) << '"'
         << "\n";
    }
  } else {
    os << "\n   N  proc  eff_lb ";
    for (double rho : spec.rhos) os << " eff_lb(" << rho_key(rho) << ")";
    os << "  best  design\n";
    for (const Cell& cell : cells) {
      char head[64];
      std::snprintf(head, sizeof head, "  %3d  %-4s", cell.n,
                    cell.procedure.c_str());
      os << head;
      if (!cell.ok) {
        os << "  error: " << cell.error << "\n";
        continue;
      }
      os << "  " << fixed4(cell.eff_lb);
      for (double value : cell.eff_lb_rho) os << "     " << fixed4(value);
      os << "     " << (cell.best ? "*" : " ") << "   "
         << labels_string(model.get(), cell.design.get());
      if (!cell.is_binary) os << "  (non-binary)";
      if (cell.negative_bound) os << "  (bound uninformative)";
      os << "\n";
    }
    if (want_trace && !trace_rows.empty()) {
      os << "\n  trace (proc, N, move, eff_lb)\n";
      for (const TraceRow& row : trace_rows)
        os << "  " << row.procedure << "  " << row.n_runs << "  " << row.move
           << "  " << fixed4(row.eff_lb) << "\n";
    }
  }

  for (const Cell& cell : cells)
    if (!cell.ok) return kExitNumeric;
  return kExitOk;
}

/* --------------------------------------------------------- cmd evaluate */

int cmd_evaluate(const ProblemSpec& spec, const std::string& design_path) {
  ModelPtr model = build_model(spec);
  bdoe_design* raw = nullptr;
  check(bdoe_design_read(model.get(), design_path.c_str(), &raw),
        "reading " + design_path);
  DesignPtr design(raw);

  const int32_t q = bdoe_model_num_params(model.get());
  if (bdoe_design_num_runs(design.get()) < q + 1)
    die(kExitNumeric,
        "the design has fewer than q+1 = " + std::to_string(q + 1) +
            " runs; the requirement-set parameters are not estimable");

  MeasurePtr measure = run_optimizer(spec, model.get());
  const double s = bdoe_measure_s(measure.get());

  bdoe_score score{};
  std::vector<double> rho_values(spec.rhos.size());
  const bdoe_status status = bdoe_design_score(
      model.get(), design.get(), s, spec.rhos.data(),
      static_cast<int32_t>(spec.rhos.size()), &score, rho_values.data());
  if (status == BDOE_ERR_SINGULAR)
    die(kExitNumeric, std::string("singular design: ") + bdoe_last_error());
  check(status, "scoring the design");

  std::ostream& os = std::cout;
  emit_header(os, spec, model.get(), measure.get(), "evaluate");
  if (spec.format == "report") {
    os << "design.file = " << design_path << "\n";
    os << "design.N = " << bdoe_design_num_runs(design.get()) << "\n";
    os << "design.labels = " << labels_string(model.get(), design.get())
       << "\n";
    os << "design.binary = " << (score.is_binary ? "true" : "false") << "\n";
    os << "design.a_value = " << full(score.a_value) << "\n";
    os << "design.tr_v = " << full(score.tr_v) << "\n";
    os << "design.eff_lb = " << full(score.eff_lb) << "\n";
    for (std::size_t r = 0; r < spec.rhos.size(); ++r)
      os << "design.eff_lb_rho[" << rho_key(spec.rhos[r])
         << "] = " << full(rho_values[r]) << "\n";
    os << "design.bound_informative = "
       << (score.negative_bound ? "false" : "true") << "\n";
  } else if (spec.format == "csv") {
    os << "N,binary,a_value,tr_v,eff_lb";
    for (double rho : spec.rhos) os << ",eff_lb_rho_" << rho_key(rho);
    os << "\n" << bdoe_design_num_runs(design.get()) << ","
       << (score.is_binary ? 1 : 0) << "," << full(score.a_value) << ","
       << full(score.tr_v) << "," << full(score.eff_lb);
    for (double value : rho_values) os << "," << full(value);
    os << "\n";
  } else {
    os << "\n  design     " << design_path << "\n";
    os << "  N          " << bdoe_design_num_runs(design.get()) << "\n";
    os << "  binary     " << (score.is_binary ? "yes" : "no") << "\n";
    os << "  tr(H^-1)   " << full(score.a_value) << "\n";
    os << "  tr(V)      " << full(score.tr_v) << "\n";
    os << "  eff_lb     " << fixed4(score.eff_lb) << "\n";
    for (std::size_t r = 0; r < spec.rhos.size(); ++r)
      os << "  eff_lb(" << rho_key(spec.rhos[r]) << ")  "
         << fixed4(rho_values[r]) << "\n";
    if (score.negative_bound)
      os << "  note: a bound numerator is negative; that bound is "
            "uninformative\n";
  }
  return kExitOk;
}

/* ----------------------------------------------------------- cmd oracle */

int cmd_oracle(const ProblemSpec& spec) {
  ModelPtr model = build_model(spec);
  const int32_t q = bdoe_model_num_params(model.get());
  const int32_t v = bdoe_model_num_treatments(model.get());
  for (int n : spec.runs) {
    if (n < q + 1)
      die(kExitParse, "run size " + std::to_string(n) +
                          " cannot estimate the model (q+1 = " +
                          std::to_string(q + 1) + ")");
    if (n > v)
      die(kExitParse, "binary designs cannot have more runs than v = " +
                          std::to_string(v));
  }

  MeasurePtr measure = run_optimizer(spec, model.get());
  const double s = bdoe_measure_s(measure.get());
  const double trace_w = bdoe_model_trace_w(model.get());
  const int target = *std::min_element(spec.runs.begin(), spec.runs.end());

  // The procedures' designs, to be measured against the oracle minima.
  std::map<std::string, TracePtr> traces;
  for (const std::string& proc : spec.procedures) {
    bdoe_search_config cfg{};
    cfg.target_n = target;
    cfg.init_threshold = spec.init_threshold;
    cfg.keep_threshold = spec.keep_threshold;
    cfg.n1_hint = spec.n1_hint;
    cfg.restarts = spec.restarts;
    bdoe_trace* raw = nullptr;
    bdoe_status status;
    if (proc == "A")
      status = bdoe_procedure_a(model.get(), measure.get(), &cfg, nullptr, 0,
                                &raw);
    else if (proc == "B1")
      status = bdoe_procedure_b1(model.get(), measure.get(), &cfg, nullptr, 0,
                                 &raw);
    else
      status = bdoe_procedure_b2(model.get(), measure.get(), &cfg, nullptr, 0,
                                 &raw);
    if (status != BDOE_OK && status != BDOE_ERR_DEAD_END)
      std::cerr << "warning: procedure " << proc << " failed: "
                << bdoe_last_error() << "\n";
    if (raw) traces.emplace(proc, TracePtr(raw));
  }

  std::ostream& os = std::cout;
  emit_header(os, spec, model.get(), measure.get(), "oracle");

  struct OracleRow {
    int n;
    std::uint64_t candidates;
    double min_a;
    std::vector<double> min_psi;
    struct ProcRow {
      std::string procedure;
      double a_value;
      double eff0;  // true efficiency under the assumed model
      std::vector<double> eff_rho;
    };
    std::vector<ProcRow> procs;
  };
  std::vector<OracleRow> rows;

  for (int n : spec.runs) {
    bdoe_oracle* raw = nullptr;
    const bdoe_status status =
        bdoe_oracle_run(model.get(), n, spec.rhos.data(),
                        static_cast<int32_t>(spec.rhos.size()),
                        spec.budget, &raw);
    if (status == BDOE_ERR_BUDGET_EXCEEDED)
      die(kExitBudget, std::string("oracle refused: ") + bdoe_last_error());
    check(status, "enumerating binary designs");
    OraclePtr oracle(raw);

    OracleRow row;
    row.n = n;
    row.candidates = bdoe_oracle_num_candidates(oracle.get());
    row.min_a = bdoe_oracle_min_a_value(oracle.get());
    for (std::size_t r = 0; r < spec.rhos.size(); ++r) {
      double value = 0.0;
      check(bdoe_oracle_min_psi(oracle.get(), static_cast<int32_t>(r), &value),
            "reading oracle minima");
      row.min_psi.push_back(value);
    }

    for (const auto& [proc, trace] : traces) {
      bdoe_design* draw = nullptr;
      if (bdoe_trace_design_at(trace.get(), n, &draw) != BDOE_OK) continue;
      DesignPtr design(draw);
      bdoe_score score{};
      std::vector<double> rho_values(spec.rhos.size());
      if (bdoe_design_score(model.get(), design.get(), s, spec.rhos.data(),
                            static_cast<int32_t>(spec.rhos.size()), &score,
                            rho_values.data()) != BDOE_OK)
        continue;
      OracleRow::ProcRow prow;
      prow.procedure = proc;
      prow.a_value = score.a_value;
      prow.eff0 = row.min_a / score.a_value;
      for (std::size_t r = 0; r < spec.rhos.size(); ++r) {
        const double psi =
            score.a_value + spec.rhos[r] * (score.tr_v - trace_w);
        prow.eff_rho.push_back(row.min_psi[r] / psi);
      }
      row.procs.push_back(std::move(prow));
    }
    rows.push_back(std::move(row));
  }

  if (spec.format == "report") {
    int idx = 0;
    for (const OracleRow& row : rows) {
      const std::string p = "oracle[" + std::to_string(idx++) + "].";
      os << p << "N = " << row.n << "\n";
      os << p << "candidates = " << row.candidates << "\n";
      os << p << "min_a_value = " << full(row.min_a) << "\n";
      for (std::size_t r = 0; r < spec.rhos.size(); ++r)
        os << p << "min_psi[" << rho_key(spec.rhos[r])
           << "] = " << full(row.min_psi[r]) << "\n";
      for (const auto& prow : row.procs) {
        os << p << prow.procedure << ".a_value = " << full(prow.a_value)
           << "\n";
        os << p << prow.procedure << ".true_eff[0] = " << full(prow.eff0)
           << "\n";
        for (std::size_t r = 0; r < spec.rhos.size(); ++r)
          os << p << prow.procedure << ".true_eff[" << rho_key(spec.rhos[r])
             << "] = " << full(prow.eff_rho[r]) << "\n";
      }
    }
  } else if (spec.format == "csv") {
    os << "N,candidates,min_a_value";
    for (double rho : spec.rhos) os << ",min_psi_" << rho_key(rho);
    os << ",procedure,a_value,true_eff_0";
    for (double rho : spec.rhos) os << ",true_eff_" << rho_key(rho);
    os << "\n";
    for (const OracleRow& row : rows) {
      for (const auto& prow : row.procs) {
        os << row.n << "," << row.candidates << "," << full(row.min_a);
        for (double value : row.min_psi) os << "," << full(value);
        os << "," << prow.procedure << "," << full(prow.a_value) << ","
           << full(prow.eff0);
        for (double value : prow.eff_rho) os << "," << full(value);
        os << "\n";
      }
    }
  } else {
    for (const OracleRow& row : rows) {
      os << "\n  N = " << row.n << "  (" << row.candidates
         << " binary designs)\n";
      os << "  oracle min tr(H^-1) = " << full(row.min_a) << "\n";
      for (std::size_t r = 0; r < spec.rhos.size(); ++r)
        os << "  oracle min psi(rho=" << rho_key(spec.rhos[r])
           << ") = " << full(row.min_psi[r]) << "\n";
      for (const auto& prow : row.procs) {
        os << "  " << prow.procedure << ": tr(H^-1) " << full(prow.a_value)
           << ", true efficiency " << fixed4(prow.eff0);
        for (std::size_t r = 0; r < spec.rhos.size(); ++r)
          os << " / " << fixed4(prow.eff_rho[r]) << " (rho="
             << rho_key(spec.rhos[r]) << ")";
        os << "\n";
      }
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust efficient factorial fractions under the baseline "
               "parametrization"};
  app.require_subcommand(1);

  ProblemSpec spec;
  std::string spec_file;
  std::string emit_dir;
  std::string design_file;
  bool want_trace = false;

  auto add_common = [&](CLI::App* cmd, bool with_runs) {
    cmd->add_option("--spec", spec_file, "spec file (key = value lines)");
    cmd->add_option("--levels", spec.levels_text,
                    "levels per factor, e.g. 2,2,2,2,2,3");
    cmd->add_option("--effects", spec.effects_text,
                    "semicolon-separated effects, e.g. 1;2;3;1x6");
    cmd->add_option("--rho", spec.rho_text, "rho list (default 1,5)");
    cmd->add_option("--t", spec.t, "optimality tolerance (default 1e-10)");
    cmd->add_option("--max-iter", spec.max_iter,
                    "iteration cap for the measure optimizer");
    cmd->add_option("--thresholds", spec.thresholds_text,
                    "init,keep thresholds (default 0.98,0.95)");
    cmd->add_option("--n1-hint", spec.n1_hint,
                    "starting size for procedure A / B1 prestart");
    cmd->add_option("--restarts", spec.restarts,
                    "seeded tie-shuffled descents per search (default 1)");
    cmd->add_option("--format", spec.format, "table | csv | report");
    if (with_runs)
      cmd->add_option("--runs", spec.runs_text,
                      "run sizes: one (16), list (13,15) or range (13..20)");
    cmd->add_option("--procedure", spec.procedure, "A | B1 | B2 | all");
  };

  CLI::App* c_opt = app.add_subcommand(
      "optimize-measure", "compute the optimal design measure and s");
  add_common(c_opt, false);

  CLI::App* c_design = app.add_subcommand(
      "design", "search exact designs for the requested run sizes");
  add_common(c_design, true);
  c_design->add_option("--emit-designs", emit_dir,
                       "write each design as a design file into this directory");
  c_design->add_flag("--trace", want_trace, "include per-step search traces");

  CLI::App* c_eval = app.add_subcommand(
      "evaluate", "score a design file under the model");
  c_eval->add_option("design_file", design_file, "design file to score")
      ->required();
  add_common(c_eval, false);

  CLI::App* c_oracle = app.add_subcommand(
      "oracle", "exhaustive binary-design enumeration and true efficiencies");
  add_common(c_oracle, true);
  c_oracle->add_option("--budget", spec.budget,
                       "enumeration budget (default 10^7)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitParse;
  }

  try {
    // Spec-file values fill whatever the flags left at their defaults.
    if (!spec_file.empty()) {
      ProblemSpec from_file;
      from_file.load_file(spec_file);
      auto keep = [&](std::string& flag_value, std::string& file_value) {
        if (flag_value.empty()) flag_value = file_value;
      };
      keep(spec.levels_text, from_file.levels_text);
      keep(spec.effects_text, from_file.effects_text);
      keep(spec.runs_text, from_file.runs_text);
      if (spec.rho_text == "1,5") spec.rho_text = from_file.rho_text;
      if (spec.procedure == "all") spec.procedure = from_file.procedure;
      if (spec.t == 1e-10) spec.t = from_file.t;
      if (spec.max_iter == 1'000'000) spec.max_iter = from_file.max_iter;
      if (spec.thresholds_text == "0.98,0.95")
        spec.thresholds_text = from_file.thresholds_text;
      if (spec.n1_hint == 0) spec.n1_hint = from_file.n1_hint;
      if (spec.restarts == 1) spec.restarts = from_file.restarts;
      if (spec.format == "table") spec.format = from_file.format;
      if (spec.budget == 10'000'000) spec.budget = from_file.budget;
    }
    if (spec.format != "table" && spec.format != "csv" &&
        spec.format != "report")
      die(kExitParse, "format must be table, csv or report");

    if (c_opt->parsed()) {
      spec.finalize(false);
      return cmd_optimize_measure(spec);
    }
    if (c_design->parsed()) {
      spec.finalize(true);
      return cmd_design(spec, emit_dir, want_trace);
    }
    if (c_eval->parsed()) {
      spec.finalize(false);
      return cmd_evaluate(spec, design_file);
    }
    spec.finalize(true);
    return cmd_oracle(spec);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  }
}

#pragma once

#include <armadillo>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exact_design.hpp"
#include "factorial_model.hpp"

namespace bdoe {

struct ProcedureConfig {
  int target_n = 0;
  double init_threshold = 0.98;  // required eff_lb of the initial design
  double keep_threshold = 0.95;  // deletion-only is kept at or above this
  std::vector<double> rho_list;
  std::optional<int> n1_hint;
  // Number of descents to run. Ties between equally scored moves leave the
  // procedures underdetermined; each restart resolves them with a different
  // (seeded, reproducible) order and the best final design wins. Restart 0
  // always uses the canonical smallest-label order.
  int restarts = 1;

  void validate(const Model& model) const;
};

// How a single descent resolves ties: seed 0 keeps the first candidate in
// (deleted pair, added label) order, any other seed ranks tied candidates by
// a hash of (seed, run size, move).
struct TiePolicy {
  std::uint64_t seed = 0;
  int step_n = 0;
};

// One accepted move: up to two deleted labels and one added label (0 when
// unused). A pure deletion has added == 0 and deleted[1] == 0.
struct MoveDescriptor {
  int deleted[2] = {0, 0};
  int added = 0;

  std::string to_string() const;
};

struct TraceStep {
  int n_runs = 0;
  MoveDescriptor move;
  double eff_lb = 0.0;
  std::vector<double> eff_lb_rho;
  ExactDesign design;
};

// Record of one descent: the initial design d(N1) and one step per run size
// down to the target. When the search ran several restarts, the steps tell
// the story of the winning descent, while best_by_size keeps the best design
// seen at every size across all of them.
struct SearchTrace {
  struct SizeBest {
    ExactDesign design;
    double eff_lb = 0.0;
    std::vector<double> eff_lb_rho;
  };

  std::string procedure;
  ExactDesign initial;
  double initial_eff_lb = 0.0;
  std::vector<double> initial_eff_lb_rho;
  std::vector<TraceStep> steps;
  std::map<int, SizeBest> best_by_size;

  SearchTrace(std::string proc, ExactDesign init)
      : procedure(std::move(proc)), initial(std::move(init)) {}

  int initial_n() const { return initial.n_runs(); }
  const ExactDesign& final_design() const;
  // Best design of the given run size, if that size was visited.
  const ExactDesign* design_at(int n_runs) const;
  const SizeBest* best_at(int n_runs) const;
};

// Thrown when every candidate move is singular; carries what was found so far.
class DeadEndError : public Error {
 public:
  DeadEndError(std::string msg, SearchTrace partial)
      : Error(ErrorCode::DeadEnd, std::move(msg)),
        partial_(std::move(partial)) {}

  const SearchTrace& partial() const { return partial_; }

 private:
  SearchTrace partial_;
};

struct Move {
  ExactDesign design;
  double eff_lb = 0.0;
  MoveDescriptor move;
};

// Best single-run deletion by eff_lb; near-exact ties are ordered by the
// next deletion they enable, then by the tie policy.
Move best_delete_one(const Model& model, const ExactDesign& d, double s,
                     const TiePolicy& ties = {});

// Best removal of two runs combined with one added run (which may recreate a
// deleted run, so plain deletions are part of the candidate space). With
// binary_only, candidates that would run any treatment twice are skipped.
// Ties resolve as in best_delete_one.
Move best_delete_two_add_one(const Model& model, const ExactDesign& d,
                             double s, bool binary_only,
                             const TiePolicy& ties = {});

// Procedure A: round the measure into a highly efficient d(N1), then walk down
// one run at a time, deleting a run while that keeps eff_lb at or above
// keep_threshold and otherwise exchanging two runs for one.
SearchTrace procedure_a(const Model& model, const arma::vec& p_hat, double s,
                        const ProcedureConfig& cfg);

// Procedure B1: as A, but starting from the full factorial (or from the
// design B2 reaches at n1_hint) and keeping every design binary.
SearchTrace procedure_b1(const Model& model, double s,
                         const ProcedureConfig& cfg);

// Procedure B2: greedy single-run deletion from the full factorial.
SearchTrace procedure_b2(const Model& model, double s,
                         const ProcedureConfig& cfg);

struct OracleResult {
  double min_a_value = 0.0;
  ExactDesign best_design;
  std::vector<double> rhos;
  std::vector<double> min_psi;  // sigma^2-normalized, per rho
  std::vector<ExactDesign> psi_designs;
  unsigned long long candidates = 0;
  unsigned long long nonsingular = 0;
};

// Exhaustive enumeration of all binary n-run designs, tracking the smallest
// tr(H^-1) and, per rho, the smallest normalized psi. Refuses to start when
// C(v, n) exceeds the budget.
OracleResult brute_force_binary_oracle(const Model& model, int n,
                                       const std::vector<double>& rhos,
                                       unsigned long long budget = 10'000'000);

}  // namespace bdoe

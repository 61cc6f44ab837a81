#include "discretization.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>

#include "spd.hpp"

namespace bdoe {

namespace {

constexpr double kDesignRelTol = 1e-10;

// Scores neighbor designs of a base design without allocating per candidate.
// The base is carried as the integer-valued pair G = Z' D(r) Z, g = Z' r;
// deltas of 0/1 rows touch only the few matching entries, so a candidate's
// H = G' - g'g'^T/N' is assembled exactly as it would be from scratch.
class ScoreWorkspace {
 public:
  explicit ScoreWorkspace(const Model& model)
      : model_(&model),
        q_(model.q()),
        g_(model.q(), model.q(), arma::fill::zeros),
        gv_(model.q(), arma::fill::zeros),
        h_(model.q(), model.q()),
        gv2_(model.q()) {}

  void set_base(const ExactDesign& d) {
    g_.zeros();
    gv_.zeros();
    n_ = d.n_runs();
    const auto& reps = d.replications();
    const auto& ones = model_->row_ones();
    for (std::size_t k = 0; k < reps.size(); ++k) {
      if (reps[k] == 0) continue;
      const double w = reps[k];
      for (int i : ones[k]) {
        gv_(i) += w;
        for (int j : ones[k]) g_(i, j) += w;
      }
    }
  }

  // tr(H^-1) of the base design with the runs `removed` (1-based labels,
  // up to two, repeats allowed) taken out and `added` (0 for none) put in.
  // Returns nothing when the candidate is singular.
  std::optional<double> score(int removed1, int removed2, int added) {
    h_ = g_;
    gv2_ = gv_;
    int n = n_;
    const auto& ones = model_->row_ones();
    for (int k : {removed1, removed2}) {
      if (k == 0) continue;
      --n;
      for (int i : ones[k - 1]) {
        gv2_(i) -= 1.0;
        for (int j : ones[k - 1]) h_(i, j) -= 1.0;
      }
    }
    if (added != 0) {
      ++n;
      for (int i : ones[added - 1]) {
        gv2_(i) += 1.0;
        for (int j : ones[added - 1]) h_(i, j) += 1.0;
      }
    }
    const double inv_n = 1.0 / n;
    for (int i = 0; i < q_; ++i) {
      const double gi = gv2_(i) * inv_n;
      for (int j = 0; j < q_; ++j) h_(i, j) -= gi * gv2_(j);
    }
    if (!solver_.factor(h_, kDesignRelTol)) return std::nullopt;
    return solver_.trace_inverse();
  }

 private:
  const Model* model_;
  int q_;
  int n_ = 0;
  arma::mat g_;
  arma::vec gv_;
  arma::mat h_;
  arma::vec gv2_;
  SpdSolver solver_;
};

ExactDesign apply_move(const ExactDesign& d, const MoveDescriptor& mv) {
  std::vector<int> reps = d.replications();
  for (int k : mv.deleted)
    if (k != 0) --reps[k - 1];
  if (mv.added != 0) ++reps[mv.added - 1];
  return ExactDesign(std::move(reps));
}

// Candidates whose tr(H^-1) agree to this relative tolerance count as tied.
// Symmetry-equivalent moves produce the same score up to rounding, so exact
// comparison would let last-bit noise pick the winner.
constexpr double kTieRelTol = 1e-9;

// Best single-deletion score reachable from d, or +inf when every deletion
// is singular. Used to order tied candidates one step ahead.
double successor_best_tr(const Model& model, ScoreWorkspace& ws,
                         const ExactDesign& d) {
  ws.set_base(d);
  double best = std::numeric_limits<double>::infinity();
  const auto& reps = d.replications();
  for (int k = 1; k <= model.v(); ++k) {
    if (reps[k - 1] == 0) continue;
    const auto tr = ws.score(k, 0, 0);
    if (tr && *tr < best) best = *tr;
  }
  return best;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t tie_key(const TiePolicy& ties, const MoveDescriptor& mv) {
  const std::uint64_t id = (std::uint64_t(mv.deleted[0]) << 40) |
                           (std::uint64_t(mv.deleted[1]) << 20) |
                           std::uint64_t(mv.added);
  return mix64(ties.seed ^ mix64(std::uint64_t(ties.step_n)) ^ mix64(id));
}

// Among near-tied moves under the canonical policy, prefer the one whose
// follow-up deletion scores best, then keep the first candidate in
// enumeration order. Seeded policies skip the follow-up filter and rank the
// whole tie set by hash, which is what gives restarts their diversity.
std::size_t resolve_ties(const Model& model, const ExactDesign& d,
                         const std::vector<MoveDescriptor>& ties,
                         const TiePolicy& policy, bool lookahead) {
  std::vector<std::size_t> front(ties.size());
  for (std::size_t i = 0; i < ties.size(); ++i) front[i] = i;
  if (policy.seed != 0) lookahead = false;

  if (lookahead && ties.size() > 1) {
    ScoreWorkspace ahead(model);
    std::vector<double> succ(ties.size());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ties.size(); ++i) {
      succ[i] = successor_best_tr(model, ahead, apply_move(d, ties[i]));
      best = std::min(best, succ[i]);
    }
    if (best < std::numeric_limits<double>::infinity()) {
      std::vector<std::size_t> filtered;
      for (std::size_t i : front)
        if (succ[i] <= best * (1 + kTieRelTol)) filtered.push_back(i);
      front = std::move(filtered);
    }
  }

  std::size_t pick = front[0];
  if (policy.seed != 0) {
    std::uint64_t best_key = tie_key(policy, ties[pick]);
    for (std::size_t i : front) {
      const std::uint64_t key = tie_key(policy, ties[i]);
      if (key < best_key) {
        best_key = key;
        pick = i;
      }
    }
  }
  return pick;
}

}  // namespace

void ProcedureConfig::validate(const Model& model) const {
  require(target_n >= model.q() + 1, ErrorCode::InvalidArgument,
          "target run size must be at least q+1 = " +
              std::to_string(model.q() + 1));
  require(keep_threshold > 0.0 && keep_threshold <= init_threshold &&
              init_threshold <= 1.0,
          ErrorCode::InvalidArgument,
          "thresholds must satisfy 0 < keep <= init <= 1");
  if (n1_hint)
    require(*n1_hint >= target_n, ErrorCode::InvalidArgument,
            "n1_hint is below the target run size");
}

std::string MoveDescriptor::to_string() const {
  std::string out;
  if (added != 0 || deleted[1] != 0) {
    out = "+ " + (added != 0 ? std::to_string(added) : std::string("(none)"));
    out += " - (" + std::to_string(deleted[0]);
    if (deleted[1] != 0) out += ", " + std::to_string(deleted[1]);
    out += ")";
  } else {
    out = "- " + std::to_string(deleted[0]);
  }
  return out;
}

const ExactDesign& SearchTrace::final_design() const {
  if (const SizeBest* best = best_at(steps.empty() ? initial.n_runs()
                                                   : steps.back().n_runs))
    return best->design;
  return steps.empty() ? initial : steps.back().design;
}

const SearchTrace::SizeBest* SearchTrace::best_at(int n_runs) const {
  const auto it = best_by_size.find(n_runs);
  return it == best_by_size.end() ? nullptr : &it->second;
}

const ExactDesign* SearchTrace::design_at(int n_runs) const {
  if (const SizeBest* best = best_at(n_runs)) return &best->design;
  if (n_runs == initial.n_runs()) return &initial;
  for (const TraceStep& step : steps)
    if (step.n_runs == n_runs) return &step.design;
  return nullptr;
}

Move best_delete_one(const Model& model, const ExactDesign& d, double s,
                     const TiePolicy& ties_policy) {
  require(d.n_runs() >= model.q() + 2, ErrorCode::InvalidArgument,
          "deleting a run would make the design too small");
  ScoreWorkspace ws(model);
  ws.set_base(d);

  double best_tr = std::numeric_limits<double>::infinity();
  const auto& reps = d.replications();
  for (int k = 1; k <= model.v(); ++k) {
    if (reps[k - 1] == 0) continue;
    const auto tr = ws.score(k, 0, 0);
    if (tr && *tr < best_tr) best_tr = *tr;
  }
  require(best_tr < std::numeric_limits<double>::infinity(),
          ErrorCode::DeadEnd, "every single-run deletion is singular");

  std::vector<MoveDescriptor> ties;
  std::vector<double> tie_tr;
  const double cutoff = best_tr * (1 + kTieRelTol);
  for (int k = 1; k <= model.v(); ++k) {
    if (reps[k - 1] == 0) continue;
    const auto tr = ws.score(k, 0, 0);
    if (tr && *tr <= cutoff) {
      MoveDescriptor mv;
      mv.deleted[0] = k;
      ties.push_back(mv);
      tie_tr.push_back(*tr);
    }
  }

  const bool lookahead = d.n_runs() - 1 >= model.q() + 2;
  const std::size_t pick = resolve_ties(model, d, ties, ties_policy, lookahead);

  Move mv;
  mv.move = ties[pick];
  mv.design = apply_move(d, mv.move);
  mv.eff_lb = s / (mv.design.n_runs() * tie_tr[pick]);
  return mv;
}

Move best_delete_two_add_one(const Model& model, const ExactDesign& d,
                             double s, bool binary_only,
                             const TiePolicy& ties_policy) {
  require(d.n_runs() >= model.q() + 2, ErrorCode::InvalidArgument,
          "design too small for a two-for-one exchange");
  ScoreWorkspace ws(model);
  ws.set_base(d);

  const auto& reps = d.replications();
  const int v = model.v();
  std::vector<int> support;
  std::vector<int> multi;  // labels run more than once
  for (int k = 1; k <= v; ++k) {
    if (reps[k - 1] > 0) support.push_back(k);
    if (reps[k - 1] > 1) multi.push_back(k);
  }

  // Whether the design after the move runs every treatment at most once.
  auto result_binary = [&](int k1, int k2, int a) {
    for (int x : multi)
      if (reps[x - 1] - (x == k1) - (x == k2) > 1) return false;
    if (a != 0 && reps[a - 1] - (a == k1) - (a == k2) + 1 > 1) return false;
    return true;
  };

  // Walks every exchange in (deleted pair, added label) order. An added run
  // equal to a deleted one reduces to a plain deletion of the other; such
  // duplicates are visited at their first appearance only.
  auto enumerate = [&](auto&& visit) {
    std::vector<char> seen_single(v + 1, 0);
    for (std::size_t i1 = 0; i1 < support.size(); ++i1) {
      const int k1 = support[i1];
      for (std::size_t i2 = i1; i2 < support.size(); ++i2) {
        const int k2 = support[i2];
        if (k1 == k2 && reps[k1 - 1] < 2) continue;
        for (int a = 1; a <= v; ++a) {
          MoveDescriptor mv;
          if (a == k1 || a == k2) {
            const int kept = (a == k1) ? k2 : k1;
            if (seen_single[kept]) continue;
            seen_single[kept] = 1;
            if (binary_only && !result_binary(kept, 0, 0)) continue;
            const auto tr = ws.score(kept, 0, 0);
            if (!tr) continue;
            mv.deleted[0] = kept;
            visit(*tr, mv);
          } else {
            if (binary_only && !result_binary(k1, k2, a)) continue;
            const auto tr = ws.score(k1, k2, a);
            if (!tr) continue;
            mv.deleted[0] = k1;
            mv.deleted[1] = k2;
            mv.added = a;
            visit(*tr, mv);
          }
        }
      }
    }
  };

  double best_tr = std::numeric_limits<double>::infinity();
  enumerate([&](double tr, const MoveDescriptor&) {
    best_tr = std::min(best_tr, tr);
  });
  require(best_tr < std::numeric_limits<double>::infinity(),
          ErrorCode::DeadEnd, "every two-for-one exchange is singular");

  std::vector<MoveDescriptor> ties;
  std::vector<double> tie_tr;
  const double cutoff = best_tr * (1 + kTieRelTol);
  enumerate([&](double tr, const MoveDescriptor& mv) {
    if (tr <= cutoff) {
      ties.push_back(mv);
      tie_tr.push_back(tr);
    }
  });

  const bool lookahead = d.n_runs() - 1 >= model.q() + 2;
  const std::size_t pick = resolve_ties(model, d, ties, ties_policy, lookahead);

  Move mv;
  mv.move = ties[pick];
  mv.design = apply_move(d, mv.move);
  mv.eff_lb = s / (mv.design.n_runs() * tie_tr[pick]);
  return mv;
}

namespace {

// Shared step-down loop: from the initial design to cfg.target_n, one run at
// a time. With exchanges disabled this is pure greedy deletion (B2).
SearchTrace run_descent(const Model& model, double s,
                        const ProcedureConfig& cfg, ExactDesign initial,
                        bool allow_exchange, bool binary_only,
                        std::string name, std::uint64_t seed) {
  SearchTrace trace(std::move(name), std::move(initial));
  {
    const DesignScore sc = score_design(model, trace.initial, s, cfg.rho_list);
    trace.initial_eff_lb = sc.eff_lb;
    trace.initial_eff_lb_rho = sc.eff_lb_rho;
  }

  ExactDesign current = trace.initial;
  while (current.n_runs() > cfg.target_n) {
    const TiePolicy ties{seed, current.n_runs()};
    Move mv;
    try {
      mv = best_delete_one(model, current, s, ties);
      if (allow_exchange && mv.eff_lb < cfg.keep_threshold &&
          current.n_runs() >= model.q() + 2) {
        // The exchange space subsumes plain deletions, so this never loses
        // ground on the deletion-only winner.
        mv = best_delete_two_add_one(model, current, s, binary_only, ties);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DeadEnd) throw;
      std::ostringstream os;
      os << "dead end at run size " << current.n_runs() << ": " << e.what();
      throw DeadEndError(os.str(), std::move(trace));
    }

    TraceStep step{mv.design.n_runs(), mv.move, mv.eff_lb, {}, mv.design};
    if (!cfg.rho_list.empty()) {
      const DesignScore sc = score_design(model, mv.design, s, cfg.rho_list);
      step.eff_lb = sc.eff_lb;
      step.eff_lb_rho = sc.eff_lb_rho;
    }
    current = step.design;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

// Runs one descent per restart, keeps the trace of the best final design,
// and records the best design seen at every size across restarts. Restart 0
// resolves ties canonically; later restarts reshuffle them, which is the one
// degree of freedom the procedures leave open.
template <typename MakeInitial>
SearchTrace best_of_restarts(const Model& model, double s,
                             const ProcedureConfig& cfg,
                             MakeInitial&& make_initial, bool allow_exchange,
                             bool binary_only, const char* name) {
  const int restarts = std::max(1, cfg.restarts);
  std::optional<SearchTrace> best;
  double best_eff = -1.0;
  std::map<int, SearchTrace::SizeBest> best_by_size;
  std::optional<DeadEndError> first_dead_end;

  auto offer = [&](int n_runs, const ExactDesign& d, double eff,
                   const std::vector<double>& eff_rho) {
    auto [it, fresh] = best_by_size.try_emplace(n_runs);
    if (fresh || eff > it->second.eff_lb * (1 + kTieRelTol)) {
      it->second.design = d;
      it->second.eff_lb = eff;
      it->second.eff_lb_rho = eff_rho;
    }
  };

  for (int r = 0; r < restarts; ++r) {
    const std::uint64_t seed = r == 0 ? 0 : mix64(std::uint64_t(r));
    try {
      SearchTrace trace =
          run_descent(model, s, cfg, make_initial(seed), allow_exchange,
                      binary_only, name, seed);
      offer(trace.initial.n_runs(), trace.initial, trace.initial_eff_lb,
            trace.initial_eff_lb_rho);
      for (const TraceStep& step : trace.steps)
        offer(step.n_runs, step.design, step.eff_lb, step.eff_lb_rho);
      const double eff = trace.steps.empty() ? trace.initial_eff_lb
                                             : trace.steps.back().eff_lb;
      if (!best || eff > best_eff * (1 + kTieRelTol)) {
        best_eff = eff;
        best = std::move(trace);
      }
    } catch (DeadEndError& e) {
      if (!first_dead_end) first_dead_end = std::move(e);
    }
  }
  if (!best) throw std::move(*first_dead_end);
  best->best_by_size = std::move(best_by_size);
  return std::move(*best);
}

}  // namespace

SearchTrace procedure_a(const Model& model, const arma::vec& p_hat, double s,
                        const ProcedureConfig& cfg) {
  cfg.validate(model);
  const int v = model.v();
  const int start =
      std::max(cfg.n1_hint ? *cfg.n1_hint : std::max(2 * v, cfg.target_n + 1),
               cfg.target_n);
  const int stop = start + 10 * v;

  std::optional<ExactDesign> initial;
  for (int n1 = start; n1 <= stop && !initial; ++n1) {
    try {
      ExactDesign d = round_measure(p_hat, n1, model.z());
      if (eff_lb(d, model.z(), s) >= cfg.init_threshold) initial = std::move(d);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoValidRounding &&
          e.code() != ErrorCode::Singular)
        throw;
    }
  }
  require(initial.has_value(), ErrorCode::NoInitialDesign,
          "rounding found no design with eff_lb >= " +
              std::to_string(cfg.init_threshold) + " for N1 in " +
              std::to_string(start) + ".." + std::to_string(stop));

  return best_of_restarts(
      model, s, cfg, [&](std::uint64_t) { return *initial; },
      /*allow_exchange=*/true, /*binary_only=*/false, "A");
}

SearchTrace procedure_b1(const Model& model, double s,
                         const ProcedureConfig& cfg) {
  cfg.validate(model);
  require(cfg.target_n <= model.v(), ErrorCode::InvalidArgument,
          "target run size exceeds the number of treatment combinations");
  if (cfg.n1_hint)
    require(*cfg.n1_hint <= model.v(), ErrorCode::InvalidArgument,
            "n1_hint exceeds the number of treatment combinations");

  auto make_initial = [&](std::uint64_t seed) {
    ExactDesign initial = ExactDesign::full_factorial(model.v());
    if (cfg.n1_hint && *cfg.n1_hint < model.v()) {
      // Fast start: let B2 walk down to the hinted size first.
      ProcedureConfig pre = cfg;
      pre.target_n = *cfg.n1_hint;
      pre.n1_hint.reset();
      pre.rho_list.clear();
      SearchTrace b2 = run_descent(model, s, pre, std::move(initial),
                                   /*allow_exchange=*/false,
                                   /*binary_only=*/true, "B2", seed);
      initial = b2.final_design();
    }
    return initial;
  };

  return best_of_restarts(model, s, cfg, make_initial,
                          /*allow_exchange=*/true, /*binary_only=*/true, "B1");
}

SearchTrace procedure_b2(const Model& model, double s,
                         const ProcedureConfig& cfg) {
  cfg.validate(model);
  require(cfg.target_n <= model.v(), ErrorCode::InvalidArgument,
          "target run size exceeds the number of treatment combinations");
  return best_of_restarts(
      model, s, cfg,
      [&](std::uint64_t) { return ExactDesign::full_factorial(model.v()); },
      /*allow_exchange=*/false, /*binary_only=*/true, "B2");
}

namespace {

// C(v, n) with saturation well above any usable budget.
unsigned long long binomial_capped(int v, int n) {
  constexpr unsigned long long cap = 1ULL << 62;
  if (n < 0 || n > v) return 0;
  n = std::min(n, v - n);
  unsigned __int128 result = 1;
  for (int i = 1; i <= n; ++i) {
    result = result * static_cast<unsigned>(v - n + i) / static_cast<unsigned>(i);
    if (result >= cap) return cap;
  }
  return static_cast<unsigned long long>(result);
}

}  // namespace

OracleResult brute_force_binary_oracle(const Model& model, int n,
                                       const std::vector<double>& rhos,
                                       unsigned long long budget) {
  const int v = model.v();
  require(n >= model.q() + 1, ErrorCode::InvalidArgument,
          "n must be at least q+1 = " + std::to_string(model.q() + 1));
  require(n <= v, ErrorCode::InvalidArgument,
          "a binary design cannot have more runs than treatments");

  const unsigned long long total = binomial_capped(v, n);
  if (total > budget) {
    std::ostringstream os;
    os << "enumeration needs " << total << " candidates, over the budget of "
       << budget;
    throw Error(ErrorCode::BudgetExceeded, os.str());
  }

  const int q = model.q();
  const auto& ones = model.row_ones();
  const double trace_w = model.trace_w();

  arma::mat g(q, q, arma::fill::zeros);
  arma::vec gv(q, arma::fill::zeros);
  arma::mat h(q, q);
  SpdSolver solver;
  std::vector<int> chosen;  // 0-based labels of the current subset
  chosen.reserve(n);

  OracleResult result;
  result.rhos = rhos;
  result.min_a_value = std::numeric_limits<double>::infinity();
  result.min_psi.assign(rhos.size(), std::numeric_limits<double>::infinity());
  std::vector<std::vector<int>> psi_best(rhos.size());
  std::vector<int> a_best;

  auto evaluate = [&]() {
    ++result.candidates;
    h = g;
    const double inv_n = 1.0 / n;
    for (int i = 0; i < q; ++i) {
      const double gi = gv(i) * inv_n;
      for (int j = 0; j < q; ++j) h(i, j) -= gi * gv(j);
    }
    if (!solver.factor(h, kDesignRelTol)) return;
    ++result.nonsingular;
    const double tr = solver.trace_inverse();
    if (tr < result.min_a_value) {
      result.min_a_value = tr;
      a_best = chosen;
    }
    for (std::size_t r = 0; r < rhos.size(); ++r) {
      const double psi_norm = (1.0 + rhos[r]) * tr - rhos[r] * trace_w;
      if (psi_norm < result.min_psi[r]) {
        result.min_psi[r] = psi_norm;
        psi_best[r] = chosen;
      }
    }
  };

  auto add = [&](int k, double sign) {
    for (int i : ones[k]) {
      gv(i) += sign;
      for (int j : ones[k]) g(i, j) += sign;
    }
  };

  // Depth-first walk over n-subsets in lexicographic order; ties therefore
  // resolve to the lexicographically smallest label set.
  auto rec = [&](auto&& self, int first, int depth) -> void {
    if (depth == n) {
      evaluate();
      return;
    }
    for (int k = first; k <= v - (n - depth); ++k) {
      add(k, +1.0);
      chosen.push_back(k);
      self(self, k + 1, depth + 1);
      chosen.pop_back();
      add(k, -1.0);
    }
  };
  rec(rec, 0, 0);

  require(result.nonsingular > 0, ErrorCode::Singular,
          "every binary design of this size is singular");

  auto to_design = [&](const std::vector<int>& subset) {
    std::vector<int> reps(v, 0);
    for (int k : subset) reps[k] = 1;
    return ExactDesign(std::move(reps));
  };
  result.best_design = to_design(a_best);
  for (auto& subset : psi_best)
    result.psi_designs.push_back(to_design(subset));
  return result;
}

}  // namespace bdoe

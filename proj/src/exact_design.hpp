#pragma once

#include <armadillo>
#include <string>
#include <vector>

#include "errors.hpp"
#include "factorial_model.hpp"

namespace bdoe {

// An exact N-run design: how often each of the v treatment combinations is
// run. Binary designs run no treatment more than once.
class ExactDesign {
 public:
  // Empty placeholder, only meaningful as an assignment target.
  ExactDesign() = default;

  explicit ExactDesign(std::vector<int> replications);
  static ExactDesign from_labels(int v, const std::vector<int>& labels);
  static ExactDesign full_factorial(int v);

  const std::vector<int>& replications() const { return replications_; }
  int n_runs() const { return n_runs_; }
  bool is_binary() const;

  // Multiset expansion of the design, labels ascending.
  std::vector<int> labels() const;

 private:
  std::vector<int> replications_;
  int n_runs_ = 0;
};

// H_d = Z' Delta(r_d) Z, symmetrized.
arma::mat info_of_design(const ExactDesign& d, const arma::mat& z);

// tr(H_d^-1); a singular design throws ErrorCode::Singular since the
// requirement-set parameters are then not estimable (N >= q+1 is necessary).
double a_value(const ExactDesign& d, const arma::mat& z);

// Efficiency lower bound s / (N tr(H_d^-1)) against the approximate-theory
// benchmark s.
double eff_lb(const ExactDesign& d, const arma::mat& z, double s);

// V_d = H_d^-1 Z' Delta(r_d) Delta(r_d) Z H_d^-1. Equals H_d^-1 for binary
// designs; V_d - H_d^-1 is nonnegative definite in general.
arma::mat v_matrix(const ExactDesign& d, const arma::mat& z);

// Worst-case expected MSE trace under bounded model misspecification:
// sigma2 tr(H_d^-1) + delta2 {tr(V_d) - trace_w}.
double psi(const ExactDesign& d, const arma::mat& z, double trace_w,
           double sigma2, double delta2);

struct RhoBound {
  double value;
  bool negative_numerator;  // bound uninformative, reported as-is
};

// Efficiency lower bound under misspecification with rho = delta2/sigma2:
// {(1+rho)(s/N) - rho trace_w} / {tr(H_d^-1) + rho (tr(V_d) - trace_w)}.
RhoBound eff_lb_rho(const ExactDesign& d, const arma::mat& z, double s,
                    double rho, double trace_w);

// All scores of one design in a single pass.
struct DesignScore {
  double a_value = 0.0;
  double eff_lb = 0.0;
  double tr_v = 0.0;
  bool is_binary = false;
  std::vector<double> eff_lb_rho;
  bool negative_bound = false;
};

DesignScore score_design(const Model& model, const ExactDesign& d, double s,
                         const std::vector<double>& rhos);

// Rounds the measure to an exact design of the requested size: finds a scalar
// c such that the nearest-integer roundings of c * p_hat sum to n_target.
// All half-integer crossing points of c * p_hat_k are enumerated in
// increasing c, which makes the existence of a valid c decidable; among valid
// c the smallest wins. Throws NoValidRounding when no c exists and Singular
// when the rounded design is not estimable.
ExactDesign round_measure(const arma::vec& p_hat, int n_target,
                          const arma::mat& z);

// Design files: one run per line, either a 1-based treatment label or
// comma-separated level indices; '#' lines are comments; repeated lines
// encode replication.
ExactDesign read_design_file(const FactorialSpace& space,
                             const std::string& path);
void write_design_file(const ExactDesign& d, const std::string& path);

}  // namespace bdoe

#pragma once

#include <armadillo>

#include "errors.hpp"

namespace bdoe {

// A design measure over the v treatment combinations: nonnegative masses
// summing to one.
struct DesignMeasure {
  arma::vec masses;

  explicit DesignMeasure(arma::vec m);
};

struct OptimizerResult {
  arma::vec p_hat;
  double s = 0.0;            // tr{M(p_hat)}^-1 - tol
  double phi_value = 0.0;    // tr{M(p_hat)}^-1
  long long iterations = 0;  // multiplicative updates applied
  double terminal_gap = 0.0; // max_k d_k - tr{M}^-1 at the returned measure
  bool phi_monotone = true;  // whether phi decreased at every update (observed)
};

// Thrown when the iteration cap is reached; carries the best iterate.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(std::string msg, OptimizerResult best)
      : Error(ErrorCode::Nonconvergence, std::move(msg)),
        best_(std::move(best)) {}

  const OptimizerResult& best() const { return best_; }

 private:
  OptimizerResult best_;
};

// M(p) = Z' Delta(p) Z with Delta(p) = diag(p) - p p', symmetrized.
arma::mat info_of_measure(const arma::vec& p, const arma::mat& z);

// tr{M(p)}^-1, or +infinity when M(p) is numerically singular.
double phi(const arma::vec& p, const arma::mat& z);

// d_k = (z_k - Z'p)' M^-1 M^-1 (z_k - Z'p) for the 1-based label k.
double variance_function(const arma::vec& p, const arma::mat& z, int label);

// One multiplicative update p_k <- p_k d_k / tr(M^-1), renormalized.
arma::vec multiplicative_step(const arma::vec& p, const arma::mat& z);

// One-sided derivative of phi at p toward p_tilde.
double directional_derivative(const arma::vec& p, const arma::vec& p_tilde,
                              const arma::mat& z);

// Runs the multiplicative algorithm from the uniform measure until
// max_k d_k - tr(M^-1) <= tol, and reports the benchmark constant
// s = tr{M(p_hat)}^-1 - tol.
OptimizerResult optimize(const arma::mat& z, double tol = 1e-10,
                         long long max_iter = 1'000'000);

}  // namespace bdoe

#pragma once

#include <armadillo>

namespace bdoe {

// Cholesky factorization for the small symmetric information matrices, with a
// relative pivot threshold. The matrices handled here are positive
// semidefinite by construction, so a rejected pivot means a singular design or
// measure, never an indefinite input. A factorization is rejected as soon as a
// pivot falls below rel_tol times the largest diagonal entry of the input.
//
// Buffers are reused across calls of the same order, which keeps the candidate
// scoring loops free of allocations.
class SpdSolver {
 public:
  // Factor h = L L^T. Returns false when h is numerically singular at the
  // given relative threshold.
  bool factor(const arma::mat& h, double rel_tol);

  // tr(h^-1), valid after a successful factor().
  double trace_inverse();

  // Explicit h^-1, valid after a successful factor().
  arma::mat inverse();

 private:
  void invert_lower();  // linv_ = L^-1

  arma::mat l_;
  arma::mat linv_;
  bool linv_valid_ = false;
};

}  // namespace bdoe

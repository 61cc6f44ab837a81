#include "spd.hpp"

#include <cmath>

namespace bdoe {

bool SpdSolver::factor(const arma::mat& h, double rel_tol) {
  const arma::uword q = h.n_rows;
  l_.set_size(q, q);
  linv_valid_ = false;

  double max_diag = 0.0;
  for (arma::uword i = 0; i < q; ++i) max_diag = std::max(max_diag, h(i, i));
  if (!(max_diag > 0.0)) return false;
  const double floor = rel_tol * max_diag;

  for (arma::uword j = 0; j < q; ++j) {
    double d = h(j, j);
    for (arma::uword k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
    if (!(d > floor)) return false;
    const double ljj = std::sqrt(d);
    l_(j, j) = ljj;
    for (arma::uword i = j + 1; i < q; ++i) {
      double s = h(i, j);
      for (arma::uword k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
      l_(i, j) = s / ljj;
    }
  }
  return true;
}

void SpdSolver::invert_lower() {
  if (linv_valid_) return;
  const arma::uword q = l_.n_rows;
  linv_.zeros(q, q);
  for (arma::uword j = 0; j < q; ++j) {
    linv_(j, j) = 1.0 / l_(j, j);
    for (arma::uword i = j + 1; i < q; ++i) {
      double s = 0.0;
      for (arma::uword k = j; k < i; ++k) s += l_(i, k) * linv_(k, j);
      linv_(i, j) = -s / l_(i, i);
    }
  }
  linv_valid_ = true;
}

double SpdSolver::trace_inverse() {
  invert_lower();
  const arma::uword q = l_.n_rows;
  double acc = 0.0;
  for (arma::uword j = 0; j < q; ++j)
    for (arma::uword i = j; i < q; ++i) acc += linv_(i, j) * linv_(i, j);
  return acc;
}

arma::mat SpdSolver::inverse() {
  invert_lower();
  return linv_.t() * linv_;
}

}  // namespace bdoe

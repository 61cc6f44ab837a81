#include "measure_optimizer.hpp"

#include <cmath>
#include <sstream>

#include "spd.hpp"

namespace bdoe {

namespace {

constexpr double kMeasureRelTol = 1e-12;  // pivot threshold for M(p)
constexpr double kMassFloor = 1e-300;     // masses below this are clamped to 0

}  // namespace

DesignMeasure::DesignMeasure(arma::vec m) : masses(std::move(m)) {
  require(masses.n_elem > 0, ErrorCode::InvalidArgument, "empty measure");
  require(masses.min() >= 0.0, ErrorCode::InvalidArgument,
          "measure has a negative mass");
  require(std::abs(arma::accu(masses) - 1.0) <= 1e-12,
          ErrorCode::InvalidArgument, "measure masses do not sum to 1");
}

arma::mat info_of_measure(const arma::vec& p, const arma::mat& z) {
  const arma::vec zp = z.t() * p;
  arma::mat m = z.t() * (z.each_col() % p) - zp * zp.t();
  return 0.5 * (m + m.t());
}

double phi(const arma::vec& p, const arma::mat& z) {
  SpdSolver solver;
  if (!solver.factor(info_of_measure(p, z), kMeasureRelTol))
    return std::numeric_limits<double>::infinity();
  return solver.trace_inverse();
}

namespace {

// Shared per-iteration quantities: M^-1, its trace, and the variance function
// d_k for every label.
struct MeasureStats {
  arma::mat m_inv;
  double trace_inv;
  arma::vec d;
};

bool compute_stats(const arma::vec& p, const arma::mat& z, MeasureStats& out) {
  SpdSolver solver;
  if (!solver.factor(info_of_measure(p, z), kMeasureRelTol)) return false;
  out.m_inv = solver.inverse();
  out.trace_inv = arma::trace(out.m_inv);
  arma::mat e = z;
  e.each_row() -= (z.t() * p).t();
  const arma::mat t = e * out.m_inv;
  out.d = arma::sum(t % t, 1);
  return true;
}

}  // namespace

double variance_function(const arma::vec& p, const arma::mat& z, int label) {
  require(label >= 1 && label <= static_cast<int>(z.n_rows),
          ErrorCode::InvalidArgument, "label out of range 1..v");
  SpdSolver solver;
  require(solver.factor(info_of_measure(p, z), kMeasureRelTol),
          ErrorCode::Singular, "M(p) is singular");
  const arma::mat m_inv = solver.inverse();
  const arma::vec e = z.row(label - 1).t() - z.t() * p;
  const arma::vec t = m_inv * e;
  return arma::dot(t, t);
}

arma::vec multiplicative_step(const arma::vec& p, const arma::mat& z) {
  MeasureStats stats;
  require(compute_stats(p, z, stats), ErrorCode::Singular, "M(p) is singular");
  arma::vec next = p % stats.d / stats.trace_inv;
  next.clean(kMassFloor);
  next /= arma::accu(next);
  return next;
}

double directional_derivative(const arma::vec& p, const arma::vec& p_tilde,
                              const arma::mat& z) {
  MeasureStats stats;
  require(compute_stats(p, z, stats), ErrorCode::Singular, "M(p) is singular");
  return stats.trace_inv - arma::dot(p_tilde, stats.d);
}

OptimizerResult optimize(const arma::mat& z, double tol, long long max_iter) {
  require(tol > 0.0, ErrorCode::InvalidArgument, "tolerance must be positive");
  const int v = static_cast<int>(z.n_rows);
  arma::vec p(v, arma::fill::value(1.0 / v));

  MeasureStats stats;
  require(compute_stats(p, z, stats), ErrorCode::DegenerateModel,
          "information matrix of the uniform measure is singular");

  bool monotone = true;
  double prev_phi = stats.trace_inv;

  for (long long iter = 0;; ++iter) {
    const double gap = stats.d.max() - stats.trace_inv;
    if (gap <= tol || iter >= max_iter) {
      OptimizerResult result;
      result.p_hat = p;
      result.phi_value = stats.trace_inv;
      result.s = stats.trace_inv - tol;
      result.iterations = iter;
      result.terminal_gap = gap;
      result.phi_monotone = monotone;
      if (gap <= tol) return result;
      std::ostringstream os;
      os << "multiplicative algorithm did not reach gap <= " << tol << " in "
         << max_iter << " iterations (gap " << gap << ")";
      throw NonconvergenceError(os.str(), result);
    }

    p = p % stats.d / stats.trace_inv;
    p.clean(kMassFloor);
    p /= arma::accu(p);
    require(compute_stats(p, z, stats), ErrorCode::Singular,
            "M(p) became singular during iteration");
    if (stats.trace_inv > prev_phi) monotone = false;
    prev_phi = stats.trace_inv;
  }
}

}  // namespace bdoe

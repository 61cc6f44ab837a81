#include "exact_design.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "spd.hpp"

namespace bdoe {

namespace {

constexpr double kDesignRelTol = 1e-10;  // pivot threshold for H_d

arma::vec replication_vec(const ExactDesign& d) {
  return arma::conv_to<arma::vec>::from(d.replications());
}

}  // namespace

ExactDesign::ExactDesign(std::vector<int> replications)
    : replications_(std::move(replications)) {
  require(!replications_.empty(), ErrorCode::InvalidArgument, "empty design");
  long long n = 0;
  for (int r : replications_) {
    require(r >= 0, ErrorCode::InvalidArgument,
            "replication counts must be nonnegative");
    n += r;
  }
  require(n >= 1, ErrorCode::InvalidArgument, "design has no runs");
  require(n <= std::numeric_limits<int>::max(), ErrorCode::InvalidArgument,
          "run count overflows");
  n_runs_ = static_cast<int>(n);
}

ExactDesign ExactDesign::from_labels(int v, const std::vector<int>& labels) {
  require(v >= 1, ErrorCode::InvalidArgument, "v must be positive");
  std::vector<int> reps(v, 0);
  for (int k : labels) {
    require(k >= 1 && k <= v, ErrorCode::InvalidArgument,
            "run label " + std::to_string(k) + " out of range 1.." +
                std::to_string(v));
    ++reps[k - 1];
  }
  return ExactDesign(std::move(reps));
}

ExactDesign ExactDesign::full_factorial(int v) {
  require(v >= 1, ErrorCode::InvalidArgument, "v must be positive");
  return ExactDesign(std::vector<int>(v, 1));
}

bool ExactDesign::is_binary() const {
  return std::all_of(replications_.begin(), replications_.end(),
                     [](int r) { return r <= 1; });
}

std::vector<int> ExactDesign::labels() const {
  std::vector<int> out;
  out.reserve(n_runs_);
  for (std::size_t k = 0; k < replications_.size(); ++k)
    for (int i = 0; i < replications_[k]; ++i)
      out.push_back(static_cast<int>(k) + 1);
  return out;
}

arma::mat info_of_design(const ExactDesign& d, const arma::mat& z) {
  const arma::vec r = replication_vec(d);
  const arma::vec zr = z.t() * r;
  arma::mat h =
      z.t() * (z.each_col() % r) - zr * zr.t() / static_cast<double>(d.n_runs());
  return 0.5 * (h + h.t());
}

double a_value(const ExactDesign& d, const arma::mat& z) {
  SpdSolver solver;
  require(solver.factor(info_of_design(d, z), kDesignRelTol),
          ErrorCode::Singular,
          "singular design: requirement-set parameters are not estimable "
          "(N >= q+1 runs on enough distinct treatments are needed)");
  return solver.trace_inverse();
}

double eff_lb(const ExactDesign& d, const arma::mat& z, double s) {
  return s / (d.n_runs() * a_value(d, z));
}

namespace {

// Delta(r) Z = D(r) Z - r (r'Z)/N, formed without the v x v matrix.
arma::mat delta_z(const ExactDesign& d, const arma::mat& z) {
  const arma::vec r = replication_vec(d);
  return (z.each_col() % r) - r * (z.t() * r).t() / static_cast<double>(d.n_runs());
}

}  // namespace

arma::mat v_matrix(const ExactDesign& d, const arma::mat& z) {
  SpdSolver solver;
  require(solver.factor(info_of_design(d, z), kDesignRelTol),
          ErrorCode::Singular, "singular design");
  const arma::mat h_inv = solver.inverse();
  const arma::mat a = delta_z(d, z) * h_inv;
  arma::mat v = a.t() * a;
  return 0.5 * (v + v.t());
}

double psi(const ExactDesign& d, const arma::mat& z, double trace_w,
           double sigma2, double delta2) {
  require(sigma2 > 0.0, ErrorCode::InvalidArgument, "sigma2 must be positive");
  require(delta2 >= 0.0, ErrorCode::InvalidArgument,
          "delta2 must be nonnegative");
  SpdSolver solver;
  require(solver.factor(info_of_design(d, z), kDesignRelTol),
          ErrorCode::Singular, "singular design");
  const arma::mat h_inv = solver.inverse();
  const arma::mat a = delta_z(d, z) * h_inv;
  return sigma2 * arma::trace(h_inv) + delta2 * (arma::accu(a % a) - trace_w);
}

RhoBound eff_lb_rho(const ExactDesign& d, const arma::mat& z, double s,
                    double rho, double trace_w) {
  require(rho >= 0.0, ErrorCode::InvalidArgument, "rho must be nonnegative");
  SpdSolver solver;
  require(solver.factor(info_of_design(d, z), kDesignRelTol),
          ErrorCode::Singular, "singular design");
  const arma::mat h_inv = solver.inverse();
  const arma::mat a = delta_z(d, z) * h_inv;
  const double tr_h_inv = arma::trace(h_inv);
  const double tr_v = arma::accu(a % a);
  const double num = (1.0 + rho) * (s / d.n_runs()) - rho * trace_w;
  const double den = tr_h_inv + rho * (tr_v - trace_w);
  return RhoBound{num / den, num < 0.0};
}

DesignScore score_design(const Model& model, const ExactDesign& d, double s,
                         const std::vector<double>& rhos) {
  SpdSolver solver;
  require(solver.factor(info_of_design(d, model.z()), kDesignRelTol),
          ErrorCode::Singular,
          "singular design: requirement-set parameters are not estimable");
  const arma::mat h_inv = solver.inverse();
  const arma::mat a = delta_z(d, model.z()) * h_inv;

  DesignScore score;
  score.a_value = arma::trace(h_inv);
  score.tr_v = arma::accu(a % a);
  score.is_binary = d.is_binary();
  score.eff_lb = s / (d.n_runs() * score.a_value);
  score.eff_lb_rho.reserve(rhos.size());
  for (double rho : rhos) {
    require(rho >= 0.0, ErrorCode::InvalidArgument, "rho must be nonnegative");
    const double num = (1.0 + rho) * (s / d.n_runs()) - rho * model.trace_w();
    const double den =
        score.a_value + rho * (score.tr_v - model.trace_w());
    score.eff_lb_rho.push_back(num / den);
    if (num < 0.0) score.negative_bound = true;
  }
  return score;
}

ExactDesign round_measure(const arma::vec& p_hat, int n_target,
                          const arma::mat& z) {
  const int v = static_cast<int>(p_hat.n_elem);
  require(n_target >= 1, ErrorCode::InvalidArgument,
          "target run size must be positive");
  require(v == static_cast<int>(z.n_rows), ErrorCode::InvalidArgument,
          "measure length does not match the model");

  // Collect every c at which some c * p_k crosses a half-integer. Beyond
  // c_max the rounded sum must exceed n_target, since it is at least
  // c - (support size)/2.
  const double c_max = n_target + 0.5 * v + 1.0;
  std::vector<double> breakpoints;
  for (int k = 0; k < v; ++k) {
    const double p = p_hat(k);
    if (p <= 0.0) continue;
    for (long long j = 0;; ++j) {
      const double c = (j + 0.5) / p;
      if (c > c_max) break;
      breakpoints.push_back(c);
    }
  }
  std::sort(breakpoints.begin(), breakpoints.end());
  breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()),
                    breakpoints.end());
  breakpoints.push_back(c_max + 1.0);

  // The rounded sum is a nondecreasing step function of c, so probing the
  // midpoint of every interval between crossings visits each attainable sum
  // once, in increasing order.
  std::vector<int> reps(v, 0);
  double prev = 0.0;
  for (double bp : breakpoints) {
    const double c = 0.5 * (prev + bp);
    prev = bp;
    long long sum = 0;
    for (int k = 0; k < v; ++k) {
      reps[k] = p_hat(k) > 0.0
                    ? static_cast<int>(std::lround(c * p_hat(k)))
                    : 0;
      sum += reps[k];
    }
    if (sum == n_target) {
      ExactDesign d(reps);
      SpdSolver solver;
      require(solver.factor(info_of_design(d, z), kDesignRelTol),
              ErrorCode::Singular,
              "rounding produced a singular design for N = " +
                  std::to_string(n_target));
      return d;
    }
    if (sum > n_target) break;
  }
  throw Error(ErrorCode::NoValidRounding,
              "no rounding constant reaches N = " + std::to_string(n_target));
}

ExactDesign read_design_file(const FactorialSpace& space,
                             const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open design file: " + path);
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    if (line[begin] == '#') continue;
    std::size_t end = line.find_last_not_of(" \t\r");
    const std::string body = line.substr(begin, end - begin + 1);
    try {
      if (body.find(',') != std::string::npos) {
        std::vector<int> treatment;
        std::stringstream ss(body);
        std::string tok;
        while (std::getline(ss, tok, ','))
          treatment.push_back(std::stoi(tok));
        labels.push_back(space.label(treatment));
      } else {
        std::size_t used = 0;
        const int k = std::stoi(body, &used);
        require(used == body.size(), ErrorCode::Parse, "trailing characters");
        require(k >= 1 && k <= space.num_treatments(), ErrorCode::Parse,
                "label out of range 1.." +
                    std::to_string(space.num_treatments()));
        labels.push_back(k);
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(lineno) +
                                        ": " + e.what());
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, path + ":" + std::to_string(lineno) +
                                        ": malformed run line '" + body + "'");
    }
  }
  require(!labels.empty(), ErrorCode::Parse,
          "design file lists no runs: " + path);
  return ExactDesign::from_labels(space.num_treatments(), labels);
}

void write_design_file(const ExactDesign& d, const std::string& path) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::Io, "cannot open for writing: " + path);
  out << "# " << d.n_runs() << " runs, one 1-based treatment label per line\n";
  for (int k : d.labels()) out << k << "\n";
  require(out.good(), ErrorCode::Io, "failed writing design file: " + path);
}

}  // namespace bdoe

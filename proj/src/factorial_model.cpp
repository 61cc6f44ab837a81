#include "factorial_model.hpp"

#include <algorithm>
#include <limits>
#include <set>
#include <sstream>

#include "spd.hpp"

namespace bdoe {

FactorialSpace::FactorialSpace(std::vector<int> levels)
    : levels_(std::move(levels)) {
  require(!levels_.empty(), ErrorCode::InvalidArgument,
          "factor space needs at least one factor");
  long long v = 1;
  for (int m : levels_) {
    require(m >= 2, ErrorCode::InvalidArgument,
            "every factor needs at least 2 levels");
    v *= m;
    require(v <= std::numeric_limits<int>::max(), ErrorCode::InvalidArgument,
            "treatment count overflows");
  }
  v_ = static_cast<int>(v);
  strides_.resize(levels_.size());
  int mu = v_;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    mu /= levels_[i];
    strides_[i] = mu;
  }
}

int FactorialSpace::label(const std::vector<int>& treatment) const {
  require(treatment.size() == levels_.size(), ErrorCode::InvalidArgument,
          "treatment has wrong number of factors");
  int k = 1;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    const int j = treatment[i];
    if (j < 0 || j >= levels_[i]) {
      std::ostringstream os;
      os << "level " << j << " out of range for factor " << (i + 1)
         << " (0.." << levels_[i] - 1 << ")";
      throw Error(ErrorCode::InvalidArgument, os.str());
    }
    k += strides_[i] * j;
  }
  return k;
}

std::vector<int> FactorialSpace::unlabel(int label) const {
  require(label >= 1 && label <= v_, ErrorCode::InvalidArgument,
          "label out of range 1..v");
  std::vector<int> treatment(levels_.size());
  int rem = label - 1;
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    treatment[i] = rem / strides_[i];
    rem %= strides_[i];
  }
  return treatment;
}

Effect make_effect(std::vector<int> factors, const FactorialSpace& space) {
  require(!factors.empty(), ErrorCode::InvalidArgument,
          "an effect needs at least one factor");
  std::sort(factors.begin(), factors.end());
  require(std::adjacent_find(factors.begin(), factors.end()) == factors.end(),
          ErrorCode::InvalidArgument, "effect lists a factor twice");
  require(factors.front() >= 1 && factors.back() <= space.num_factors(),
          ErrorCode::InvalidArgument, "effect factor index out of range");
  return Effect{std::move(factors)};
}

int effect_dimension(const FactorialSpace& space, const Effect& effect) {
  int dim = 1;
  for (int f : effect.factors) dim *= space.levels()[f - 1] - 1;
  return dim;
}

RequirementSet::RequirementSet(const FactorialSpace& space,
                               std::vector<Effect> effects)
    : effects_(std::move(effects)) {
  require(!effects_.empty(), ErrorCode::InvalidArgument,
          "requirement set is empty");
  std::set<std::vector<int>> seen;
  q_ = 0;
  for (const Effect& e : effects_) {
    require(seen.insert(e.factors).second, ErrorCode::InvalidArgument,
            "requirement set lists an effect twice");
    q_ += effect_dimension(space, e);
  }
  require(q_ + 1 <= space.num_treatments(), ErrorCode::InvalidArgument,
          "model has more parameters than treatment combinations");
}

namespace {

std::string effect_name(const Effect& e) {
  std::string s;
  for (std::size_t i = 0; i < e.factors.size(); ++i) {
    if (i) s += 'x';
    s += 'F';
    s += std::to_string(e.factors[i]);
  }
  return s;
}

}  // namespace

Model::Model(FactorialSpace space, std::vector<Effect> effects_in)
    : space_(std::move(space)),
      reqset_(space_, [&] {
        std::vector<Effect> es;
        es.reserve(effects_in.size());
        for (auto& e : effects_in) es.push_back(make_effect(e.factors, space_));
        return es;
      }()) {
  const int v = space_.num_treatments();
  const int q = reqset_.q();
  const auto& effects = reqset_.effects();

  // Hierarchy notes for absent parent main effects.
  std::set<int> mains;
  for (const Effect& e : effects)
    if (e.factors.size() == 1) mains.insert(e.factors.front());
  for (const Effect& e : effects) {
    if (e.factors.size() < 2) continue;
    for (int f : e.factors) {
      if (!mains.count(f)) {
        warnings_.push_back("interaction " + effect_name(e) +
                            " lacks its parent main effect F" +
                            std::to_string(f));
      }
    }
  }

  // Column offset of each effect block.
  std::vector<int> block_start(effects.size());
  int col = 0;
  for (std::size_t e = 0; e < effects.size(); ++e) {
    block_start[e] = col;
    col += effect_dimension(space_, effects[e]);
  }

  // A treatment activates exactly one column per effect whose factors are all
  // away from baseline: the column of the tuple matching its levels. Within a
  // block, tuples are in lexicographic (row-major mixed radix) order.
  row_ones_.resize(v);
  z_.zeros(v, q);
  for (int k = 0; k < v; ++k) {
    const std::vector<int> t = space_.unlabel(k + 1);
    for (std::size_t e = 0; e < effects.size(); ++e) {
      int offset = 0;
      bool active = true;
      for (int f : effects[e].factors) {
        const int j = t[f - 1];
        if (j == 0) {
          active = false;
          break;
        }
        offset = offset * (space_.levels()[f - 1] - 1) + (j - 1);
      }
      if (active) {
        const int c = block_start[e] + offset;
        z_(k, c) = 1.0;
        row_ones_[k].push_back(c);
      }
    }
  }

  x_ = arma::join_rows(arma::ones(v, 1), z_);

  {
    const arma::vec sv = arma::svd(x_);
    require(sv.min() > 1e-10 * sv.max(), ErrorCode::DegenerateModel,
            "full-model matrix X is column-rank deficient");
  }

  const arma::rowvec colsum = arma::sum(z_, 0);
  arma::mat info = z_.t() * z_ - colsum.t() * colsum / static_cast<double>(v);
  info = 0.5 * (info + info.t());
  SpdSolver solver;
  require(solver.factor(info, 1e-12), ErrorCode::DegenerateModel,
          "Z' Delta(1_v) Z is singular");
  w_ = solver.inverse();
  w_ = 0.5 * (w_ + w_.t());
  trace_w_ = arma::trace(w_);
}

arma::mat build_orthocomplement(const arma::mat& x) {
  const arma::uword v = x.n_rows;
  const arma::uword cols = x.n_cols;
  require(v > cols, ErrorCode::InvalidArgument,
          "orthocomplement needs more rows than columns");
  {
    const arma::vec sv = arma::svd(x);
    require(sv.min() > 1e-10 * sv.max(), ErrorCode::DegenerateModel,
            "matrix is column-rank deficient");
  }
  arma::mat qmat, rmat;
  require(arma::qr(qmat, rmat, x), ErrorCode::DegenerateModel,
          "QR factorization failed");
  return qmat.cols(cols, v - 1);
}

}  // namespace bdoe

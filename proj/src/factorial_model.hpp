#pragma once

#include <armadillo>
#include <string>
#include <vector>

#include "errors.hpp"

namespace bdoe {

// Mixed-level factor space. Factor i has levels 0..levels[i]-1, with level 0
// the baseline. The v = prod(levels) treatment combinations carry 1-based
// labels in lexicographic order of their level vectors.
class FactorialSpace {
 public:
  explicit FactorialSpace(std::vector<int> levels);

  int num_factors() const { return static_cast<int>(levels_.size()); }
  int num_treatments() const { return v_; }
  const std::vector<int>& levels() const { return levels_; }
  const std::vector<int>& strides() const { return strides_; }

  // Label of a treatment (one level index per factor), in 1..v.
  int label(const std::vector<int>& treatment) const;

  // Treatment for a label in 1..v; inverse of label().
  std::vector<int> unlabel(int label) const;

 private:
  std::vector<int> levels_;
  std::vector<int> strides_;
  int v_;
};

// One factorial effect: a nonempty set of distinct factor indices (1-based,
// stored strictly increasing).
struct Effect {
  std::vector<int> factors;

  bool operator==(const Effect&) const = default;
};

Effect make_effect(std::vector<int> factors, const FactorialSpace& space);

// Number of parameters the effect contributes: prod over its factors of
// (levels - 1).
int effect_dimension(const FactorialSpace& space, const Effect& effect);

// The ordered collection of effects kept in the model.
class RequirementSet {
 public:
  RequirementSet(const FactorialSpace& space, std::vector<Effect> effects);

  const std::vector<Effect>& effects() const { return effects_; }
  int q() const { return q_; }

 private:
  std::vector<Effect> effects_;
  int q_;
};

// The model's linear-algebraic skeleton: the v x q indicator matrix Z whose
// row k marks the effect parameters entering treatment k, the full-model
// matrix X = [1_v, Z], and W = (Z' Delta(1_v) Z)^-1.
//
// Columns of Z follow the requirement-set order; within an effect, the
// nonzero level tuples are enumerated lexicographically.
class Model {
 public:
  Model(FactorialSpace space, std::vector<Effect> effects);

  const FactorialSpace& space() const { return space_; }
  const RequirementSet& reqset() const { return reqset_; }
  int v() const { return space_.num_treatments(); }
  int q() const { return reqset_.q(); }

  const arma::mat& z() const { return z_; }
  const arma::mat& x() const { return x_; }
  const arma::mat& w() const { return w_; }
  double trace_w() const { return trace_w_; }

  // Column indices (0-based) of the ones in each row of Z. Rows of Z are
  // sparse: one column per effect whose factors are all away from baseline.
  const std::vector<std::vector<int>>& row_ones() const { return row_ones_; }

  // Hierarchy notes: one message per listed interaction whose parent main
  // effect is absent from the requirement set. Interpretation is left to the
  // caller; the model itself permits non-hierarchical sets.
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  FactorialSpace space_;
  RequirementSet reqset_;
  arma::mat z_;
  arma::mat x_;
  arma::mat w_;
  double trace_w_;
  std::vector<std::vector<int>> row_ones_;
  std::vector<std::string> warnings_;
};

// Orthonormal basis of the orthogonal complement of the column space of x,
// as a v x (v-q-1) matrix P with P'P = I and x'P = 0.
arma::mat build_orthocomplement(const arma::mat& x);

}  // namespace bdoe

#pragma once

#include <string>
#include <vector>

#include "limescope/explain.hpp"

namespace limescope {

/// n x d matrix of absolute feature weights, one row per explained instance.
struct ExplanationMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major, all >= 0
  std::vector<std::string> instance_ids;

  double at(std::size_t i, std::size_t j) const noexcept { return values[i * cols + j]; }
};

/// Builds W from explanations: W[i][j] = |coefficient j| when j is selected,
/// otherwise 0. Rows of different width are zero-padded to the widest.
ExplanationMatrix explanation_matrix(const std::vector<Explanation>& explanations,
                                     std::vector<std::string> instance_ids);

/// Throws BadParameter on negative or non-finite entries or a shape mismatch.
ExplanationMatrix make_explanation_matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

struct PickResult {
  std::vector<std::size_t> chosen;
  double coverage = 0.0;
  std::vector<double> marginal_gains;
};

/// I_j = sqrt(sum_i W[i][j]).
std::vector<double> feature_importance(const ExplanationMatrix& w);

/// c(V) = sum of I_j over features j with W[i][j] > 0 for some i in V.
double coverage(const ExplanationMatrix& w, const std::vector<double>& importance,
                const std::vector<std::size_t>& chosen);

/// Greedy maximization of c(V) under |V| <= budget. Each step takes the row
/// with the largest marginal gain (lowest index on ties) and the walk stops
/// early once no row adds positive gain.
PickResult submodular_pick(const ExplanationMatrix& w, std::size_t budget);

}  // namespace limescope

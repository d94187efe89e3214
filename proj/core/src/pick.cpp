#include "limescope/pick.hpp"

#include <algorithm>
#include <cmath>

#include "limescope/error.hpp"

namespace limescope {

ExplanationMatrix make_explanation_matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) fail(ErrorKind::ShapeError, "explanation matrix size mismatch");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::BadParameter, "explanation matrix entries must be finite and >= 0");
  }
  ExplanationMatrix w{rows, cols, std::move(values), {}};
  for (std::size_t i = 0; i < rows; ++i) w.instance_ids.push_back(std::to_string(i));
  return w;
}

ExplanationMatrix explanation_matrix(const std::vector<Explanation>& explanations,
                                     std::vector<std::string> instance_ids) {
  if (instance_ids.size() != explanations.size()) {
    fail(ErrorKind::LengthMismatch, "one instance id per explanation is required");
  }
  std::size_t cols = 0;
  for (const auto& e : explanations) cols = std::max(cols, e.coefficients.size());
  std::vector<double> values(explanations.size() * cols, 0.0);
  for (std::size_t i = 0; i < explanations.size(); ++i) {
    const auto& e = explanations[i];
    for (int j : e.selected) {
      values[i * cols + static_cast<std::size_t>(j)] = std::abs(e.coefficients.at(static_cast<std::size_t>(j)));
    }
  }
  ExplanationMatrix w = make_explanation_matrix(explanations.size(), cols, std::move(values));
  w.instance_ids = std::move(instance_ids);
  return w;
}

std::vector<double> feature_importance(const ExplanationMatrix& w) {
  std::vector<double> importance(w.cols, 0.0);
  for (std::size_t i = 0; i < w.rows; ++i) {
    for (std::size_t j = 0; j < w.cols; ++j) importance[j] += w.at(i, j);
  }
  for (double& v : importance) v = std::sqrt(v);
  return importance;
}

double coverage(const ExplanationMatrix& w, const std::vector<double>& importance,
                const std::vector<std::size_t>& chosen) {
  double total = 0.0;
  for (std::size_t j = 0; j < w.cols; ++j) {
    const bool covered = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t i) { return w.at(i, j) > 0.0; });
    if (covered) total += importance[j];
  }
  return total;
}

PickResult submodular_pick(const ExplanationMatrix& w, std::size_t budget) {
  const auto importance = feature_importance(w);
  std::vector<bool> covered(w.cols, false);
  std::vector<bool> taken(w.rows, false);
  PickResult result;
  while (result.chosen.size() < budget) {
    double best_gain = 0.0;
    std::size_t best = w.rows;
    for (std::size_t i = 0; i < w.rows; ++i) {
      if (taken[i]) continue;
      double gain = 0.0;
      for (std::size_t j = 0; j < w.cols; ++j) {
        if (!covered[j] && w.at(i, j) > 0.0) gain += importance[j];
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = i;
      }
    }
    if (best == w.rows) break;
    taken[best] = true;
    for (std::size_t j = 0; j < w.cols; ++j) {
      if (w.at(best, j) > 0.0) covered[j] = true;
    }
    result.chosen.push_back(best);
    result.marginal_gains.push_back(best_gain);
  }
  result.coverage = coverage(w, importance, result.chosen);
  return result;
}

}  // namespace limescope

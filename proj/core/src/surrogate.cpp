#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "limescope/error.hpp"
#include "limescope/explain.hpp"

namespace limescope {

namespace {

// Indices ordered by |coefficient| descending, lower index first on ties.
std::vector<int> top_features(const std::vector<double>& coefficients, int k) {
  std::vector<int> order(coefficients.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(coefficients[static_cast<std::size_t>(a)]) > std::abs(coefficients[static_cast<std::size_t>(b)]);
  });
  order.resize(std::min(order.size(), static_cast<std::size_t>(std::max(0, k))));
  return order;
}

}  // namespace

Explanation fit_surrogate(const PerturbationSet& perturbations, int class_index, double lambda, int num_features) {
  const std::size_t n = perturbations.size();
  const auto d = static_cast<std::size_t>(perturbations.num_features);
  if (n < 2) fail(ErrorKind::BadParameter, "surrogate fit needs at least 2 samples");
  if (d < 1) fail(ErrorKind::BadParameter, "surrogate fit needs at least 1 feature");
  if (perturbations.responses.size() != n || perturbations.weights.size() != n) {
    fail(ErrorKind::LengthMismatch, "perturbation set rows are inconsistent");
  }
  if (!(lambda >= 0.0)) fail(ErrorKind::BadParameter, "ridge lambda must be >= 0");
  if (num_features < 1) fail(ErrorKind::BadParameter, "number of selected features must be >= 1");
  if (class_index < 0) fail(ErrorKind::IndexOutOfRange, "class index must be non-negative");

  const auto cols = static_cast<Eigen::Index>(d + 1);
  Eigen::MatrixXd a(static_cast<Eigen::Index>(n), cols);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  Eigen::VectorXd weight(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = perturbations.design[i];
    if (row.size() != d) fail(ErrorKind::DimensionMismatch, "design row length differs from feature count");
    const auto& response = perturbations.responses[i];
    if (static_cast<std::size_t>(class_index) >= response.size()) {
      fail(ErrorKind::IndexOutOfRange, "class index " + std::to_string(class_index) + " not in responses");
    }
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < d; ++j) a(r, static_cast<Eigen::Index>(j)) = row[j];
    a(r, cols - 1) = 1.0;
    y(r) = response[static_cast<std::size_t>(class_index)];
    weight(r) = perturbations.weights[i];
    if (!(weight(r) >= 0.0) || !std::isfinite(weight(r))) fail(ErrorKind::BadParameter, "weights must be finite and >= 0");
  }

  Eigen::VectorXd solution;
  if (lambda == 0.0) {
    // Plain weighted least squares; a rank check stands in for silent regularization.
    const Eigen::VectorXd root = weight.cwiseSqrt();
    const Eigen::MatrixXd scaled = root.asDiagonal() * a;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    if (qr.rank() < cols) {
      fail(ErrorKind::SingularSystem, "design is rank-deficient (rank " + std::to_string(qr.rank()) + " of " +
                                          std::to_string(cols) + ") and lambda is 0");
    }
    solution = qr.solve(root.cwiseProduct(y));
  } else {
    Eigen::MatrixXd normal = a.transpose() * weight.asDiagonal() * a;
    normal.diagonal().head(cols - 1).array() += lambda;
    const Eigen::VectorXd rhs = a.transpose() * weight.cwiseProduct(y);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      fail(ErrorKind::SingularSystem, "ridge normal equations are not positive definite");
    }
    solution = ldlt.solve(rhs);
  }
  if (!solution.allFinite()) fail(ErrorKind::SingularSystem, "surrogate solution is not finite");

  Explanation e;
  e.target_class = class_index;
  e.coefficients.assign(solution.data(), solution.data() + d);
  e.intercept = solution(cols - 1);
  e.selected = top_features(e.coefficients, num_features);

  const Eigen::VectorXd fitted = a * solution;
  bool constant = true;
  for (Eigen::Index i = 1; i < y.size(); ++i) {
    if (weight(i) > 0.0 && y(i) != y(0)) {
      constant = false;
      break;
    }
  }
  if (constant) {
    e.r2 = 0.0;
  } else {
    const double mean = weight.dot(y) / weight.sum();
    const double total = weight.dot((y.array() - mean).square().matrix());
    const double residual = weight.dot((y - fitted).array().square().matrix());
    e.r2 = total > 0.0 ? 1.0 - residual / total : 0.0;
  }
  return e;
}

}  // namespace limescope

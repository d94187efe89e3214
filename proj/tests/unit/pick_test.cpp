#include <gtest/gtest.h>

#include <cmath>

#include "limescope/error.hpp"
#include "limescope/pick.hpp"
#include "limescope/rng.hpp"
#include "support.hpp"

namespace limescope {
namespace {

ExplanationMatrix random_sparse(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n * d, 0.0);
  for (double& x : v) {
    if (rng.uniform() < 0.3) x = rng.uniform(0.0, 2.0);
  }
  return make_explanation_matrix(n, d, v);
}

TEST(PickTest, ReferenceExample) {
  const auto w = make_explanation_matrix(3, 3, {2, 1, 0, 0, 1, 0, 0, 0, 3});
  const auto imp = feature_importance(w);
  EXPECT_NEAR(imp[0], std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(imp[1], std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(imp[2], std::sqrt(3.0), 1e-12);
  const auto r = submodular_pick(w, 2);
  EXPECT_EQ(r.chosen, (std::vector<std::size_t>{0, 2}));
  EXPECT_NEAR(r.coverage, 4.5604779323150675, 1e-12);
  EXPECT_NEAR(r.coverage, test::exhaustive_coverage(w, 2), 1e-12);
  ASSERT_EQ(r.marginal_gains.size(), 2u);
  EXPECT_NEAR(r.marginal_gains[0], 2.0 * std::sqrt(2.0), 1e-12);
}

TEST(PickTest, StopsWhenNothingIsGained) {
  const auto w = make_explanation_matrix(3, 2, {1, 0, 1, 0, 0, 0});
  const auto r = submodular_pick(w, 3);
  EXPECT_EQ(r.chosen, (std::vector<std::size_t>{0}));
}

TEST(PickTest, DuplicateRowsPickedOnce) {
  const auto w = make_explanation_matrix(4, 3, {1, 1, 0, 1, 1, 0, 1, 1, 0, 0, 0, 1});
  const auto r = submodular_pick(w, 4);
  EXPECT_EQ(r.chosen, (std::vector<std::size_t>{0, 3}));
}

TEST(PickTest, GreedyEqualsExhaustiveOnSmallInstances) {
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto w = random_sparse(9, 6, seed);
    for (std::size_t b = 1; b <= 4; ++b) {
      const double greedy = submodular_pick(w, b).coverage;
      const double best = test::exhaustive_coverage(w, b);
      EXPECT_LE(greedy, best + 1e-12);
      EXPECT_GE(greedy, (1.0 - 1.0 / std::exp(1.0)) * best - 1e-12);
      if (std::abs(greedy - best) < 1e-12) ++agree;
    }
  }
  EXPECT_GT(agree, 100);
}

TEST(PickTest, CoverageMonotoneInBudget) {
  const auto w = random_sparse(20, 12, 77);
  double previous = 0.0;
  for (std::size_t b = 0; b <= 20; ++b) {
    const auto r = submodular_pick(w, b);
    EXPECT_LE(r.chosen.size(), b);
    EXPECT_GE(r.coverage, previous - 1e-12);
    EXPECT_NEAR(r.coverage, coverage(w, feature_importance(w), r.chosen), 1e-12);
    previous = r.coverage;
  }
}

TEST(PickTest, MatrixFromExplanations) {
  Explanation a;
  a.coefficients = {0.5, -0.2, 0.1};
  a.selected = {0, 1};
  Explanation b;
  b.coefficients = {-0.3, 0.0};
  b.selected = {0};
  const auto w = explanation_matrix({a, b}, {"a", "b"});
  EXPECT_EQ(w.rows, 2u);
  EXPECT_EQ(w.cols, 3u);
  EXPECT_DOUBLE_EQ(w.at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(w.at(0, 1), 0.2);
  EXPECT_DOUBLE_EQ(w.at(0, 2), 0.0);
  EXPECT_DOUBLE_EQ(w.at(1, 0), 0.3);
  EXPECT_DOUBLE_EQ(w.at(1, 2), 0.0);
  EXPECT_THROW(explanation_matrix({a, b}, {"a"}), Error);
}

TEST(PickTest, RejectsBadMatrices) {
  EXPECT_THROW(make_explanation_matrix(2, 2, {1, 2, 3}), Error);
  EXPECT_THROW(make_explanation_matrix(1, 2, {1, -2}), Error);
  EXPECT_THROW(make_explanation_matrix(1, 1, {std::nan("")}), Error);
}

}  // namespace
}  // namespace limescope

#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "oracles.hpp"
#include "tadn/assignment.hpp"
#include "tadn/error.hpp"

using tadn::Match;
using tadn::SimilarityMatrix;

namespace {

SimilarityMatrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  SimilarityMatrix m(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

double total(const std::vector<Match>& ms) {
  double t = 0.0;
  for (const Match& m : ms) t += m.similarity;
  return t;
}

}  // namespace

TEST(SolveLap, TwoByTwo) {
  const auto s = mat({{0.9, 0.1}, {0.2, 0.8}});
  const auto all = tadn::solve_lap(s, 0.0);
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0], (Match{0, 0, 0.9}));
  EXPECT_EQ(all[1], (Match{1, 1, 0.8}));
  EXPECT_NEAR(total(all), 1.7, 1e-12);

  const auto gated = tadn::solve_lap(s, 0.85);
  ASSERT_EQ(gated.size(), 1u);
  EXPECT_EQ(gated[0], (Match{0, 0, 0.9}));
}

TEST(SolveLap, EmptyInputs) {
  EXPECT_TRUE(tadn::solve_lap(SimilarityMatrix(0, 3), 0.0).empty());
  EXPECT_TRUE(tadn::solve_lap(SimilarityMatrix(4, 0), 0.0).empty());
}

TEST(SolveLap, RectangularMatchesMinDimension) {
  const auto s = mat({{0.1, 0.9, 0.3, 0.2}, {0.8, 0.7, 0.1, 0.0}});
  const auto m = tadn::solve_lap(s, -1.0);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].col, 1u);
  EXPECT_EQ(m[1].col, 0u);
}

TEST(SolveLap, ForbiddenPairsAvoidedWhenPossible) {
  const double ninf = -std::numeric_limits<double>::infinity();
  const auto s = mat({{ninf, 0.2}, {0.3, 0.9}});
  const auto m = tadn::solve_lap(s, -10.0);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].col, 1u);
  EXPECT_EQ(m[1].col, 0u);
  // A threshold drops forbidden pairs that had to be used.
  const auto s2 = mat({{ninf}, {ninf}});
  EXPECT_TRUE(tadn::solve_lap(s2, -10.0).empty());
}

TEST(SolveLap, RejectsNanAndNonFiniteThreshold) {
  EXPECT_THROW(tadn::solve_lap(mat({{std::nan("")}}), 0.0), tadn::InvariantError);
  EXPECT_THROW(tadn::solve_lap(mat({{1.0}}), std::nan("")), tadn::InvariantError);
}

TEST(SolveLap, OutputIsOneToOneAndAboveThreshold) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 9);
  for (int k = 0; k < 300; ++k) {
    SimilarityMatrix s(dim(rng), dim(rng));
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
    const double th = u(rng);
    const auto m = tadn::solve_lap(s, th);
    std::vector<int> rows(s.rows(), 0), cols(s.cols(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (i > 0) {
        EXPECT_LT(m[i - 1].row, m[i].row);
      }
      EXPECT_EQ(++rows[m[i].row], 1);
      EXPECT_EQ(++cols[m[i].col], 1);
      EXPECT_GE(m[i].similarity, th);
      EXPECT_EQ(m[i].similarity, s(m[i].row, m[i].col));
    }
  }
}

TEST(MaxSimilarityMatching, EqualsBruteForceTotal) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int k = 0; k < 500; ++k) {
    SimilarityMatrix s(dim(rng), dim(rng));
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
    const auto got = tadn::max_similarity_matching(s);
    const auto ref = oracle::brute_force_matching(s);
    EXPECT_EQ(got.size(), ref.pairs.size());
    double t = 0.0;
    for (const Match& m : got) t += s(m.row, m.col);
    EXPECT_NEAR(t, ref.total, 1e-9);
  }
}

TEST(MaxSimilarityMatching, IntegerMatricesExactTotal) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> v(-20, 20);
  std::uniform_int_distribution<int> dim(1, 6);
  for (int k = 0; k < 500; ++k) {
    SimilarityMatrix s(dim(rng), dim(rng));
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = v(rng);
    double t = 0.0;
    for (const Match& m : tadn::max_similarity_matching(s)) t += s(m.row, m.col);
    EXPECT_EQ(t, oracle::brute_force_matching(s).total);
  }
}

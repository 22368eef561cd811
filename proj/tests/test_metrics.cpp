#include <gtest/gtest.h>

#include <random>

#include "cbss/metrics.hpp"
#include "support.hpp"

using namespace cbss;

TEST(Assignment, MatchesBruteForce) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t d = 1; d <= 6; ++d)
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<std::vector<double>> c(d, std::vector<double>(d));
      CostMatrix cm(d);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) cm(i, j) = c[i][j] = u(rng);
      const auto brute = oracle::brute_force_assignment(c);
      const Assignment a = solve_assignment(cm);
      EXPECT_NEAR(a.total, brute.total, 1e-12);
      EXPECT_EQ(a.column_of_row, brute.perm);
    }
}

TEST(Assignment, TiesResolveLexicographically) {
  // every permutation costs 0: identity wins
  const Assignment a = solve_assignment(CostMatrix(4));
  EXPECT_EQ(a.column_of_row, (std::vector<std::size_t>{0, 1, 2, 3}));
  // optima (1,0,2) and (2,0,1); the first one wins
  CostMatrix c(3, {1, 0, 0, 0, 1, 1, 1, 0, 0});
  const auto brute = oracle::brute_force_assignment({{1, 0, 0}, {0, 1, 1}, {1, 0, 0}});
  EXPECT_EQ(solve_assignment(c).column_of_row, brute.perm);
}

TEST(Assignment, IntegerCostsExact) {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<int> u(0, 3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 5;
    std::vector<std::vector<double>> c(d, std::vector<double>(d));
    CostMatrix cm(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cm(i, j) = c[i][j] = u(rng);
    const auto brute = oracle::brute_force_assignment(c, 0.5);
    const Assignment a = solve_assignment(cm);
    EXPECT_EQ(a.total, brute.total);
    EXPECT_EQ(a.column_of_row, brute.perm);
  }
}

TEST(Assignment, RejectsNonFinite) {
  CostMatrix c(2);
  c(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(solve_assignment(c), std::invalid_argument);
}

TEST(MdIndex, UpperTriangularExample) {
  EXPECT_NEAR(md_index_of_gain(CMat{{1.0, 1.0}, {0.0, 1.0}}), std::sqrt(0.5), 1e-12);
}

TEST(MdIndex, ZeroOnIdentifiabilityClass) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> scale(0.2, 5.0);
  for (std::size_t d = 2; d <= 6; ++d) {
    const CMat a = oracle::random_mixing(rng, d, 0.6);
    std::vector<double> s(d);
    for (auto& v : s) v = scale(rng);
    const CMat g = oracle::random_phase(rng, d) * oracle::random_permutation(rng, d) *
                   CMat::diagonal(std::span<const double>(s)) * inverse(a);
    EXPECT_LT(md_index(g, a), 1e-12) << d;
  }
}

TEST(MdIndex, PhaseInvariantAndBounded) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 50; ++trial) {
    const CMat g = oracle::random_matrix(rng, 4, 4);
    const CMat a = oracle::random_mixing(rng, 4);
    const double md = md_index(g, a);
    EXPECT_GE(md, 0.0);
    EXPECT_LE(md, 1.0);
    EXPECT_NEAR(md_index(oracle::random_phase(rng, 4) * g, a), md, 1e-12);
  }
}

TEST(MdIndex, WorstCaseIsOne) {
  // every row of the gain spreads evenly over all columns
  EXPECT_NEAR(md_index_of_gain(CMat{{1.0, kI}, {1.0, -1.0}}), 1.0, 1e-15);
  CMat flat(3, 3);
  for (auto& x : flat.data()) x = 1.0;
  EXPECT_NEAR(md_index_of_gain(flat), 1.0, 1e-15);
}

TEST(MdIndex, Errors) {
  EXPECT_THROW(md_index_of_gain(CMat{{1.0}}), std::invalid_argument);
  EXPECT_THROW(md_index_of_gain(CMat{{0.0, 0.0}, {0.0, 1.0}}), NumericalError);
  EXPECT_THROW(md_index(CMat::identity(2), CMat{{1.0, 1.0}, {1.0, 1.0}}), NumericalError);
  EXPECT_THROW(md_index(CMat::identity(2), CMat::identity(3)), DimensionError);
}

TEST(Assignment, HandValues) {
  const Assignment a = solve_assignment(CostMatrix(2, {0, 1, 1, 0}));
  EXPECT_EQ(a.column_of_row, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(a.total, 0.0);
  const Assignment b = solve_assignment(CostMatrix(2, {0.5, 0.5, 1, 0}));
  EXPECT_EQ(b.column_of_row, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(b.total, 0.5);
  const Assignment c = solve_assignment(CostMatrix(3, std::vector<double>(9, 0.25)));
  EXPECT_EQ(c.column_of_row, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(c.total, 0.75);
  EXPECT_EQ(md_index_of_gain(CMat::identity(3)), 0.0);
}

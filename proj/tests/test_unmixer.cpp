#include <gtest/gtest.h>

#include <random>

#include "cbss/genproc.hpp"
#include "cbss/metrics.hpp"
#include "cbss/unmixer.hpp"
#include "support.hpp"

using namespace cbss;

namespace {

ModelSpec ar_model(std::vector<double> phis) {
  std::vector<LatentComponentSpec> c;
  for (int part = 0; part < 2; ++part)
    for (double p : phis) c.push_back({Driver::ar1(p), Transform::identity(), {}});
  return ModelSpec::trivial(c);
}

} // namespace

TEST(Unmix, OneDimensionalHandExample) {
  const TimeSeries x(3, 1, {1.0, kI, -1.0});
  const UnmixingResult r = unmix(x, 1);
  EXPECT_NEAR(std::abs(r.gamma(0, 0) - Complex(std::sqrt(3.0) / 2.0)), 0.0, 1e-15);
  EXPECT_NEAR(r.lambdas[0], -1.0 / 6.0, 1e-15);
  EXPECT_TRUE(std::isinf(r.eigen_gap));
}

TEST(Unmix, LagRange) {
  const TimeSeries x(3, 1, {1.0, kI, -1.0});
  EXPECT_THROW(unmix(x, 0), std::out_of_range);
  EXPECT_THROW(unmix(x, 2), std::out_of_range);
}

TEST(Unmix, DegenerateCovariance) {
  TimeSeries x(20, 2);
  for (std::size_t t = 0; t < 20; ++t) x(t, 0) = x(t, 1) = Complex(std::sin(0.3 * t), 0.1 * t);
  EXPECT_THROW(unmix(x, 1), NumericalError);
}

TEST(Unmix, DefiningEquationsOnFittingSample) {
  ModelSpec m = ar_model({0.8, 0.2, -0.5});
  std::mt19937_64 rng(1);
  m.mixing = oracle::random_mixing(rng, 3);
  const Generated g = generate(m, 2000, 5);
  const UnmixingResult r = unmix(g.x, 2);
  const TimeSeries y = apply_unmixing(r, g.x);
  EXPECT_LT(max_abs_diff(autocov_sym(y, 0), CMat::identity(3)), 1e-8);
  const CMat st = autocov_sym(y, 2);
  for (std::size_t j = 0; j < 3; ++j)
    for (std::size_t k = 0; k < 3; ++k)
      if (j != k) EXPECT_LT(std::abs(st(j, k)), 1e-8);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_NEAR(st(j, j).real(), r.lambdas[j], 1e-8);
    // canonical phase: diagonal real and non-negative
    EXPECT_EQ(r.gamma(j, j).imag(), 0.0);
    EXPECT_GE(r.gamma(j, j).real(), 0.0);
  }
  EXPECT_TRUE(std::is_sorted(r.lambdas.rbegin(), r.lambdas.rend()));
}

TEST(Unmix, RecoversMixingAtLargeT) {
  ModelSpec m = ar_model({0.9, 0.5, 0.1});
  std::mt19937_64 rng(2);
  m.mixing = oracle::random_mixing(rng, 3);
  const Generated g = generate(m, 10000, 17);
  EXPECT_LT(md_index(unmix(g.x, 1).gamma, m.mixing), 0.1);
}

TEST(Unmix, AffineInvariance) {
  const Generated g = generate(ar_model({0.9, 0.4, -0.3}), 1500, 3);
  std::mt19937_64 rng(4);
  const UnmixingResult base = unmix(g.x, 1);
  for (int trial = 0; trial < 10; ++trial) {
    const CMat b = oracle::random_mixing(rng, 3, 0.8);
    const std::vector<Complex> shift{{1.0, 2.0}, {-3.0, 0.5}, {0.0, -1.0}};
    const UnmixingResult moved = unmix(affine_transform(g.x, b, shift), 1);
    const CMat expect = base.gamma * inverse(b);
    EXPECT_LT(max_abs_diff(align_phase_to(moved.gamma, expect), expect), 1e-6);
  }
}

TEST(Unmix, WhitenedFixedPoint) {
  // X already satisfies the defining equations: the estimate is the identity
  const Generated g = generate(ar_model({0.7, 0.1}), 3000, 9);
  const TimeSeries y = apply_unmixing(unmix(g.x, 1), g.x);
  EXPECT_LT(max_abs_diff(unmix(y, 1).gamma, CMat::identity(2)), 1e-10);
}

TEST(ApplyUnmixing, IdentityGammaSubtractsMean) {
  UnmixingResult r;
  r.gamma = CMat::identity(1);
  r.mu = {Complex(2.0, 1.0)};
  const TimeSeries y = apply_unmixing(r, TimeSeries(2, 1, {Complex(3.0, 1.0), Complex(0.0, 0.0)}));
  EXPECT_EQ(y(0, 0), Complex(1.0, 0.0));
  EXPECT_EQ(y(1, 0), Complex(-2.0, -1.0));
  EXPECT_THROW(apply_unmixing(r, TimeSeries(2, 2)), DimensionError);
}

TEST(Phase, StandardizeIsPhaseQuotient) {
  std::mt19937_64 rng(7);
  const CMat g = oracle::random_matrix(rng, 3, 3);
  const CMat j = oracle::random_phase(rng, 3);
  const PhaseStandardized a = standardize_phase(g), b = standardize_phase(j * g);
  EXPECT_LT(max_abs_diff(a.gamma, b.gamma), 1e-14);
  EXPECT_LT(max_abs_diff(a.shift.matrix() * g, a.gamma), 1e-14);
  for (double th : a.shift.phases) {
    EXPECT_GE(th, 0.0);
    EXPECT_LT(th, 2.0 * std::numbers::pi);
  }
  EXPECT_THROW(standardize_phase(CMat{{0.0, 1.0}, {1.0, 0.0}}), NumericalError);
}

TEST(Phase, AlignToReference) {
  const CMat aligned = align_phase_to(CMat{{kI}}, CMat{{1.0}});
  EXPECT_NEAR(std::abs(aligned(0, 0) - Complex(1.0)), 0.0, 1e-15);
  std::mt19937_64 rng(8);
  const CMat ref = oracle::random_matrix(rng, 4, 4);
  const CMat j = oracle::random_phase(rng, 4);
  EXPECT_LT(max_abs_diff(align_phase_to(j * ref, ref), ref), 1e-14);
  EXPECT_THROW(align_phase_to(CMat{{1.0, 0.0}}, CMat{{0.0, 1.0}}), NumericalError);
}

TEST(Phase, PermutedEstimateAnchorsOnLargestEntry) {
  const PhaseStandardized p = canonical_phase(CMat{{0.0, Complex(0.0, 2.0)}, {Complex(-3.0, 0.0), 0.0}});
  EXPECT_EQ(p.gamma(0, 1), Complex(2.0));
  EXPECT_EQ(p.gamma(1, 0), Complex(3.0));
}

TEST(LagSweep, OrdersByEigenGap) {
  const Generated g = generate(ar_model({0.9, 0.5}), 4000, 12);
  const std::vector<std::size_t> taus{1, 2, 40};
  const auto table = lag_sweep(g.x, taus);
  ASSERT_EQ(table.size(), 3u);
  // population gaps: 0.4 at lag 1, 0.56 at lag 2, ~0 at lag 40
  EXPECT_EQ(table.front().tau, 2u);
  EXPECT_EQ(table.back().tau, 40u);
  for (std::size_t i = 1; i < table.size(); ++i) EXPECT_GE(table[i - 1].eigen_gap, table[i].eigen_gap);
}

TEST(NearTies, FlaggedNotFatal) {
  const Generated g = generate(ar_model({0.5, 0.5}), 500, 2);
  const UnmixingResult r = unmix(g.x, 40);
  EXPECT_TRUE(std::isfinite(r.eigen_gap));
  UnmixingResult tied;
  tied.lambdas = {0.5, 0.5, 0.1};
  tied.eigen_gap = 0.0;
  EXPECT_TRUE(tied.has_near_ties());
}

TEST(Phase, HandValues) {
  const PhaseStandardized p = standardize_phase(CMat{{std::polar(1.0, std::numbers::pi / 4)}});
  EXPECT_NEAR(std::abs(p.gamma(0, 0) - Complex(1.0)), 0.0, 1e-15);
  EXPECT_NEAR(p.shift.phases[0], 7.0 * std::numbers::pi / 4, 1e-15);
  const PhaseStandardized q = standardize_phase(CMat{{2.0, kI}, {kI, 3.0}});
  EXPECT_EQ(q.shift.phases, (std::vector<double>{0.0, 0.0}));
  const CMat ref{{1.0, kI}, {2.0, 1.0}};
  EXPECT_EQ(align_phase_to(ref, ref).data(), ref.data());
}

TEST(LagSweep, WhiteNoiseHasSmallGaps) {
  std::vector<LatentComponentSpec> c(4, {Driver::iid(), Transform::identity(), {}});
  const Generated g = generate(ModelSpec::trivial(c), 5000, 3);
  const std::vector<std::size_t> taus{1, 2, 3};
  for (const auto& row : lag_sweep(g.x, taus)) {
    EXPECT_LT(std::abs(row.lambdas.front()), 0.1);
    EXPECT_LT(row.eigen_gap, 0.1);
  }
  const std::vector<std::size_t> one{1};
  EXPECT_EQ(lag_sweep(g.x, one).size(), 1u);
}

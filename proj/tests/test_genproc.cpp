#include <gtest/gtest.h>

#include <random>

#include "cbss/genproc.hpp"
#include "support.hpp"

using namespace cbss;

namespace {

ModelSpec ar_model(std::vector<double> phis) {
  std::vector<LatentComponentSpec> c;
  for (int part = 0; part < 2; ++part)
    for (double p : phis) c.push_back({Driver::ar1(p), Transform::identity(), {}});
  return ModelSpec::trivial(c);
}

ModelSpec with_parts(std::vector<Driver> re, std::vector<Driver> im, Transform f = Transform::identity()) {
  std::vector<LatentComponentSpec> c;
  for (const auto& d : re) c.push_back({d, f, {}});
  for (const auto& d : im) c.push_back({d, f, {}});
  return ModelSpec::trivial(c);
}

} // namespace

TEST(Hermite, MatchesRodriguesExpansion) {
  for (int k = 0; k <= 20; ++k) {
    const auto coef = oracle::rodrigues_hermite(k);
    for (double x : {-3.1, -1.0, -0.2, 0.0, 0.7, 1.0, 2.5}) {
      const double ref = oracle::eval_poly(coef, x);
      EXPECT_NEAR(hermite_poly(k, x), ref, 1e-12 * std::max(1.0, std::abs(ref))) << k << " " << x;
    }
  }
}

TEST(Hermite, HandValuesAndRange) {
  EXPECT_EQ(hermite_poly(2, 1.0), 0.0);
  EXPECT_EQ(hermite_poly(3, 2.0), 2.0);
  EXPECT_EQ(hermite_poly(0, 123.0), 1.0);
  EXPECT_NO_THROW(hermite_poly(60, 0.5));
  EXPECT_THROW(hermite_poly(61, 0.5), std::out_of_range);
  EXPECT_THROW(hermite_poly(-1, 0.5), std::out_of_range);
}

TEST(Fgn, Autocovariance) {
  for (std::size_t k = 1; k < 20; ++k) EXPECT_NEAR(fgn_autocov(0.5, k), 0.0, 1e-15);
  EXPECT_NEAR(fgn_autocov(0.75, 1), 0.414214, 1e-6);
  // naive formula at small lags
  for (double h : {0.6, 0.75, 0.9})
    for (std::size_t k = 1; k < 30; ++k) {
      const double kk = static_cast<double>(k);
      const double naive = 0.5 * (std::pow(kk + 1, 2 * h) - 2 * std::pow(kk, 2 * h) + std::pow(kk - 1, 2 * h));
      EXPECT_NEAR(fgn_autocov(h, k), naive, 1e-11);
    }
  // k^{2-2H} r(k) -> H(2H-1)
  for (double h : {0.6, 0.75, 0.9, 0.95}) {
    const double k = 1e6;
    const double scaled = std::pow(k, 2 - 2 * h) * fgn_autocov(h, 1000000);
    EXPECT_NEAR(scaled, h * (2 * h - 1), 0.01 * h * (2 * h - 1)) << h;
  }
  EXPECT_THROW(fgn_autocov(1.0, 3), std::out_of_range);
  EXPECT_THROW(fgn_autocov(0.4, 3), std::out_of_range);
}

TEST(Quadrature, GaussianMoments) {
  const auto& rule = gauss_hermite_128();
  ASSERT_EQ(rule.nodes.size(), 128u);
  double m0 = 0, m1 = 0, m2 = 0, m4 = 0, m6 = 0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double x = rule.nodes[i], w = rule.weights[i];
    m0 += w;
    m1 += w * x;
    m2 += w * x * x;
    m4 += w * std::pow(x, 4);
    m6 += w * std::pow(x, 6);
  }
  EXPECT_NEAR(m0, 1.0, 1e-14);
  EXPECT_NEAR(m1, 0.0, 1e-14);
  EXPECT_NEAR(m2, 1.0, 1e-12);
  EXPECT_NEAR(m4, 3.0, 1e-11);
  EXPECT_NEAR(m6, 15.0, 1e-10);
}

TEST(Quadrature, CubicCoefficients) {
  // x^3 = He_3 + 3 He_1
  const auto a = hermite_coefficients([](double x) { return x * x * x; }, 8);
  ASSERT_EQ(a.size(), 9u);
  EXPECT_NEAR(a[0], 0.0, 1e-12);
  EXPECT_NEAR(a[1], 3.0, 1e-12);
  EXPECT_NEAR(a[2], 0.0, 1e-12);
  EXPECT_NEAR(a[3], 1.0, 1e-12);
  for (std::size_t k = 4; k < a.size(); ++k) EXPECT_NEAR(a[k], 0.0, 1e-11);
}

TEST(Quadrature, TransformReproducesCoefficients) {
  const Transform t = Transform::from_coefficients({0.5, 0.0, 1.0, -0.25});
  for (double x : {-2.0, 0.3, 1.7}) {
    const double ref = 0.5 + hermite_poly(2, x) - 0.25 * hermite_poly(3, x);
    EXPECT_NEAR(t(x), ref, 1e-13);
  }
  const auto a = hermite_coefficients([&](double x) { return t(x); }, 6);
  EXPECT_NEAR(a[0], 0.5, 1e-12);
  EXPECT_NEAR(a[2], 1.0, 1e-12);
  EXPECT_NEAR(a[3], -0.25, 1e-12);
}

TEST(HermiteRank, Examples) {
  EXPECT_EQ(hermite_rank(Transform::identity()), (HermiteRanks{1, 2}));
  EXPECT_EQ(hermite_rank(Transform::hermite(2)).q1, 2);
  EXPECT_EQ(hermite_rank([](double x) { return x * x * x; }).q1, 1);
  EXPECT_EQ(hermite_rank(Transform::square_centered()), (HermiteRanks{2, 2}));
  EXPECT_THROW(hermite_rank([](double) { return 4.0; }), NumericalError);
}

TEST(HermiteRank, Validation) {
  EXPECT_THROW(Transform::hermite(0).validate(), std::invalid_argument);
  EXPECT_THROW(Transform::hermite(61).validate(), std::invalid_argument);
  EXPECT_THROW(Transform::from_coefficients({}).validate(), std::invalid_argument);
  EXPECT_THROW(Transform::from_coefficients({1.0, NAN}).validate(), std::invalid_argument);
}

TEST(Sampling, IidLagOne) {
  Rng rng(derive_seed(1, 0));
  const std::size_t n = 20000;
  const auto v = sample_driver(Driver::iid(), n, rng).values;
  double s = 0;
  for (std::size_t t = 0; t + 1 < n; ++t) s += v[t] * v[t + 1];
  EXPECT_LT(std::abs(s / (n - 1)), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Sampling, FgnAutocovarianceMonteCarlo) {
  const double h = 0.9;
  const std::size_t n = 1 << 14, reps = 200, lags = 5;
  std::vector<std::vector<double>> est(lags + 1);
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng(derive_seed(99, r));
    const auto v = sample_driver(Driver::fgn(h), n, rng).values;
    for (std::size_t k = 1; k <= lags; ++k) {
      double s = 0;
      for (std::size_t t = 0; t + k < n; ++t) s += v[t] * v[t + k];
      est[k].push_back(s / static_cast<double>(n - k));
    }
  }
  for (std::size_t k = 1; k <= lags; ++k) {
    double m = 0, ss = 0;
    for (double e : est[k]) m += e / reps;
    for (double e : est[k]) ss += (e - m) * (e - m);
    const double se = std::sqrt(ss / (reps - 1) / reps);
    EXPECT_LT(std::abs(m - fgn_autocov(h, k)), 5 * se) << "lag " << k;
  }
}

TEST(Sampling, EmbeddingIsNonNegative) {
  for (double h : {0.55, 0.7, 0.9, 0.95}) {
    Rng rng(3);
    EXPECT_LT(sample_driver(Driver::fgn(h), 1 << 16, rng).clamped_mass, 1e-8) << h;
  }
  EXPECT_EQ(embedding_lags(1000), 1025u);
  EXPECT_EQ(embedding_lags(1025), 1025u);
}

TEST(Sampling, Determinism) {
  for (const Driver& d : {Driver::iid(), Driver::ar1(0.6), Driver::fgn(0.8)}) {
    Rng a(42), b(42), c(43);
    const auto x = sample_driver(d, 500, a).values;
    EXPECT_EQ(x, sample_driver(d, 500, b).values);
    EXPECT_NE(x, sample_driver(d, 500, c).values);
  }
  EXPECT_EQ(derive_seed(5, 1), derive_seed(5, 1));
  EXPECT_NE(derive_seed(5, 1), derive_seed(5, 2));
  EXPECT_NE(derive_seed(5, 1), derive_seed(6, 1));
}

TEST(Sampling, StationaryGaussianChecks) {
  Rng rng(1);
  const std::vector<double> bad{2.0, 0.5};
  EXPECT_THROW(sample_stationary_gaussian(bad, 2, rng), std::invalid_argument);
  const std::vector<double> short_r{1.0, 0.5};
  EXPECT_THROW(sample_stationary_gaussian(short_r, 5, rng), std::invalid_argument);
}

TEST(Generate, TrivialMixingGivesLatent) {
  const Generated g = generate(ar_model({0.9, 0.3}), 1000, 7);
  EXPECT_EQ(g.x.values(), g.z.values());
  for (const auto& m : sample_mean(g.z)) EXPECT_LT(std::abs(m), 1e-12);
}

TEST(Generate, UnitVarianceAndIndependentParts) {
  const Generated g = generate(with_parts({Driver::iid(), Driver::fgn(0.7)}, {Driver::ar1(0.5), Driver::iid()},
                                         Transform::square_centered()),
                               40000, 11);
  const CMat s0 = autocov_sym(g.z, 0);
  EXPECT_NEAR(s0(0, 0).real(), 1.0, 0.06);
  EXPECT_NEAR(s0(1, 1).real(), 1.0, 0.15);
  EXPECT_LT(std::abs(s0(0, 1)), 0.05);
}

TEST(Generate, MixingAndLocation) {
  ModelSpec m = ar_model({0.8, -0.4});
  m.mixing = CMat{{1.0, kI}, {0.5, 2.0}};
  m.location = {Complex(3, 0), Complex(0, -1)};
  const Generated g = generate(m, 300, 2);
  for (std::size_t t = 0; t < 300; t += 37) {
    const Complex x0 = g.z(t, 0) + kI * g.z(t, 1) + Complex(3, 0);
    EXPECT_NEAR(std::abs(g.x(t, 0) - x0), 0.0, 1e-13);
  }
  EXPECT_EQ(generate(m, 300, 2).x.values(), g.x.values());
}

TEST(Generate, Validation) {
  EXPECT_THROW(generate(ar_model({0.5}), 15, 1), std::invalid_argument);
  EXPECT_THROW(generate(ar_model({1.0}), 100, 1), std::invalid_argument);
  EXPECT_THROW(generate(with_parts({Driver::fgn(1.0)}, {Driver::iid()}), 100, 1), std::invalid_argument);
  ModelSpec m = ar_model({0.5, 0.2});
  m.mixing = CMat{{1.0, 2.0}, {2.0, 4.0}};
  EXPECT_THROW(generate(m, 100, 1), std::invalid_argument);
  m = ar_model({0.5, 0.2});
  m.components.pop_back();
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = ar_model({0.5});
  m.components[0].transform = Transform::from_coefficients({1.0});
  EXPECT_THROW(m.validate(), std::invalid_argument);
}

TEST(Population, ArLambdasAreCoefficients) {
  const PopulationSolution p = population_solution(ar_model({0.3, 0.9, 0.5}), 1);
  ASSERT_EQ(p.lambdas.size(), 3u);
  EXPECT_NEAR(p.lambdas[0], 0.9, 1e-12);
  EXPECT_NEAR(p.lambdas[1], 0.5, 1e-12);
  EXPECT_NEAR(p.lambdas[2], 0.3, 1e-12);
  EXPECT_EQ(p.order, (std::vector<std::size_t>{1, 2, 0}));
  // mixed parts average with equal weight
  const PopulationSolution q = population_solution(with_parts({Driver::ar1(0.8)}, {Driver::ar1(0.2)}), 2);
  EXPECT_NEAR(q.lambdas[0], 0.5 * (0.64 + 0.04), 1e-12);
}

TEST(Population, GammaInvertsMixing) {
  ModelSpec m = ar_model({0.3, 0.9});
  m.mixing = CMat{{2.0, kI}, {0.0, 1.0}};
  const PopulationSolution p = population_solution(m, 1);
  const CMat g = p.gamma * m.mixing;
  EXPECT_LT(max_abs_diff(g, CMat{{0.0, 1.0}, {1.0, 0.0}}), 1e-14);
}

TEST(Theory, Regimes) {
  const RateTheory s = theoretical_gamma(ar_model({0.9, 0.5}));
  EXPECT_EQ(s.regime, RateTheory::Regime::short_range);
  EXPECT_EQ(s.exponent, 0.5);

  const RateTheory l = theoretical_gamma(with_parts({Driver::fgn(0.9), Driver::ar1(0.4)}, {Driver::ar1(0.8), Driver::iid()}));
  EXPECT_EQ(l.regime, RateTheory::Regime::long_range);
  EXPECT_NEAR(l.exponent, 0.2, 1e-12);
  EXPECT_TRUE(l.maximum_holds);
  EXPECT_TRUE(l.maximum2_holds);

  const RateTheory b = theoretical_gamma(with_parts({Driver::fgn(0.75)}, {Driver::iid()}));
  EXPECT_EQ(b.regime, RateTheory::Regime::boundary);
  EXPECT_NEAR(b.gamma_formula, 0.5, 1e-12);

  // two long-range parts of rank one: cross term ties the leading term
  const RateTheory t = theoretical_gamma(with_parts({Driver::fgn(0.9)}, {Driver::fgn(0.9)}));
  EXPECT_FALSE(t.maximum_holds);

  // rank-two transform on fgn: q2 = 2 still
  const RateTheory h = theoretical_gamma(with_parts({Driver::fgn(0.9)}, {Driver::iid()}, Transform::hermite(2)));
  EXPECT_NEAR(h.exponent, 0.2, 1e-12);
  EXPECT_EQ(h.indices.front().ranks.q1, 2);

  // H = 0.6 with q2 = 2 is short range: 2 (1.2 - 2) = -1.6 < -1
  EXPECT_EQ(theoretical_gamma(with_parts({Driver::fgn(0.6)}, {Driver::iid()})).regime, RateTheory::Regime::short_range);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cbss/error.hpp"
#include "cbss/estimators.hpp"
#include "cbss/fft.hpp"
#include "cbss/linalg.hpp"

namespace cbss {

inline constexpr int kMaxHermiteDegree = 60;

// Probabilists' Hermite polynomial He_k(x) by the three-term recurrence.
inline double hermite_poly(int k, double x) {
  if (k < 0 || k > kMaxHermiteDegree)
    throw std::out_of_range("hermite_poly: degree " + std::to_string(k) + " outside [0, 60]");
  if (k == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int j = 1; j < k; ++j) {
    const double next = x * cur - j * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

// fGn autocovariance 0.5(|k+1|^2H - 2k^2H + |k-1|^2H). For k >= 2 the
// bracket is evaluated as k^2H [expm1(2H log1p(1/k)) + expm1(2H log1p(-1/k))]
// to avoid cancellation at large lags.
inline double fgn_autocov(double hurst, std::size_t lag) {
  if (!(hurst >= 0.5 && hurst < 1.0)) throw std::out_of_range("fgn_autocov: Hurst index outside [0.5, 1)");
  if (lag == 0) return 1.0;
  const double h2 = 2.0 * hurst;
  const double k = static_cast<double>(lag);
  if (lag == 1) return 0.5 * (std::pow(2.0, h2) - 2.0);
  const double inv = 1.0 / k;
  const double bracket = std::expm1(h2 * std::log1p(inv)) + std::expm1(h2 * std::log1p(-inv));
  return 0.5 * std::pow(k, h2) * bracket;
}

// ---------------------------------------------------------------------------
// Gauss-Hermite quadrature for the standard normal law.

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 1
};

namespace detail {

// Orthonormal Hermite values p_0..p_{n} at x, p_k = He_k / sqrt(k!).
inline void orthonormal_hermite(double x, std::size_t n, std::vector<double>& p) {
  p.assign(n + 1, 0.0);
  p[0] = 1.0;
  if (n == 0) return;
  p[1] = x;
  for (std::size_t k = 1; k < n; ++k)
    p[k + 1] = (x * p[k] - std::sqrt(static_cast<double>(k)) * p[k - 1]) / std::sqrt(static_cast<double>(k + 1));
}

inline QuadratureRule build_gauss_hermite(std::size_t n) {
  // Golub-Welsch: eigenvalues of the Jacobi matrix with off-diagonal sqrt(k)
  CMat jac(n, n);
  for (std::size_t k = 1; k < n; ++k) jac(k - 1, k) = jac(k, k - 1) = std::sqrt(static_cast<double>(k));
  const HermEig eig = hermitian_eig(jac);
  QuadratureRule rule;
  rule.nodes.assign(eig.values.rbegin(), eig.values.rend());
  std::vector<double> p;
  for (auto& x : rule.nodes) {
    for (int it = 0; it < 3; ++it) {
      orthonormal_hermite(x, n, p);
      const double deriv = std::sqrt(static_cast<double>(n)) * p[n - 1];
      if (deriv == 0.0) break;
      x -= p[n] / deriv;
    }
  }
  // symmetric rule: average mirrored nodes so that odd moments vanish exactly
  for (std::size_t i = 0; i < n / 2; ++i) {
    const double m = 0.5 * (rule.nodes[n - 1 - i] - rule.nodes[i]);
    rule.nodes[i] = -m;
    rule.nodes[n - 1 - i] = m;
  }
  if (n % 2) rule.nodes[n / 2] = 0.0;
  rule.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    orthonormal_hermite(rule.nodes[i], n - 1, p);
    double s = 0.0;
    for (double v : p) s += v * v;
    rule.weights[i] = 1.0 / s;
  }
  const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
  for (auto& w : rule.weights) w /= total;
  return rule;
}

} // namespace detail

inline const QuadratureRule& gauss_hermite_128() {
  static const QuadratureRule rule = detail::build_gauss_hermite(128);
  return rule;
}

// a_0..a_K with f = sum a_k He_k under the standard normal law.
inline std::vector<double> hermite_coefficients(const std::function<double(double)>& f, int max_degree = kMaxHermiteDegree) {
  const auto& rule = gauss_hermite_128();
  std::vector<double> b(static_cast<std::size_t>(max_degree) + 1, 0.0);
  std::vector<double> p;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double fx = f(rule.nodes[i]) * rule.weights[i];
    detail::orthonormal_hermite(rule.nodes[i], static_cast<std::size_t>(max_degree), p);
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += fx * p[k];
  }
  double log_fact = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    if (k > 0) log_fact += std::log(static_cast<double>(k));
    b[k] /= std::exp(0.5 * log_fact);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Subordinating transforms.

struct Transform {
  enum class Kind { identity, hermite, square_centered, coefficients };
  Kind kind = Kind::identity;
  int degree = 1;                     // hermite
  std::vector<double> coefficients;  // a_0..a_K in the He basis

  static Transform identity() { return {}; }
  static Transform hermite(int k) { return {Kind::hermite, k, {}}; }
  static Transform square_centered() { return {Kind::square_centered, 2, {}}; }
  static Transform from_coefficients(std::vector<double> a) { return {Kind::coefficients, 0, std::move(a)}; }

  double operator()(double x) const {
    switch (kind) {
    case Kind::identity: return x;
    case Kind::hermite: return hermite_poly(degree, x);
    case Kind::square_centered: return x * x - 1.0;
    case Kind::coefficients: {
      double prev = 1.0, cur = x, s = coefficients.empty() ? 0.0 : coefficients[0];
      for (std::size_t k = 1; k < coefficients.size(); ++k) {
        s += coefficients[k] * cur;
        const double next = x * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
      }
      return s;
    }
    }
    return x;
  }

  void validate() const {
    if (kind == Kind::hermite && (degree < 1 || degree > kMaxHermiteDegree))
      throw std::invalid_argument("transform: hermite degree must be in [1, 60]");
    if (kind == Kind::coefficients) {
      if (coefficients.empty() || coefficients.size() > kMaxHermiteDegree + 1)
        throw std::invalid_argument("transform: coefficient list must have 1..61 entries");
      for (double a : coefficients)
        if (!std::isfinite(a)) throw std::invalid_argument("transform: non-finite coefficient");
    }
  }
};

struct HermiteRanks {
  int q1 = 0;  // rank of f
  int q2 = 0;  // rank of (f - E f)^2
  friend bool operator==(const HermiteRanks&, const HermiteRanks&) = default;
};

namespace detail {

inline int first_nonzero(const std::vector<double>& a) {
  for (std::size_t k = 1; k < a.size(); ++k)
    if (std::abs(a[k]) > 1e-9) return static_cast<int>(k);
  throw NumericalError("hermite_rank: all coefficients up to degree 60 vanish");
}

} // namespace detail

inline HermiteRanks hermite_rank(const std::function<double(double)>& f) {
  const auto a = hermite_coefficients(f);
  const double mean = a[0];
  const auto sq = hermite_coefficients([&](double x) {
    const double c = f(x) - mean;
    return c * c;
  });
  return {detail::first_nonzero(a), detail::first_nonzero(sq)};
}

inline HermiteRanks hermite_rank(const Transform& t) {
  return hermite_rank([&t](double x) { return t(x); });
}

// ---------------------------------------------------------------------------
// Gaussian drivers.

struct Driver {
  enum class Kind { iid, ar1, fgn };
  Kind kind = Kind::iid;
  double phi = 0.0;    // ar1
  double hurst = 0.5;  // fgn

  static Driver iid() { return {}; }
  static Driver ar1(double phi) { return {Kind::ar1, phi, 0.5}; }
  static Driver fgn(double hurst) { return {Kind::fgn, 0.0, hurst}; }

  double autocov(std::size_t lag) const {
    switch (kind) {
    case Kind::iid: return lag == 0 ? 1.0 : 0.0;
    case Kind::ar1: return std::pow(phi, static_cast<double>(lag));
    case Kind::fgn: return fgn_autocov(hurst, lag);
    }
    return 0.0;
  }

  bool long_range() const { return kind == Kind::fgn && hurst > 0.5; }

  void validate() const {
    if (kind == Kind::ar1 && !(std::abs(phi) < 1.0)) throw std::invalid_argument("driver: ar1 requires |phi| < 1");
    if (kind == Kind::fgn && !(hurst >= 0.5 && hurst < 1.0))
      throw std::invalid_argument("driver: fgn requires H in [0.5, 1)");
  }
};

// Counter-based seed derivation so that (seed, stream...) always maps to the
// same engine state regardless of scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

using Rng = std::mt19937_64;

struct GaussianDraw {
  std::vector<double> values;
  double clamped_mass = 0.0;  // sum of negative embedding eigenvalues / m
};

// Exact circulant-embedding draw of n values of a stationary Gaussian
// sequence with autocovariance r(0..N-1), N >= n, using an embedding of
// size m = 2(N-1).
inline GaussianDraw sample_stationary_gaussian(std::span<const double> autocov, std::size_t n, Rng& rng) {
  if (n == 0) return {};
  if (autocov.size() < n) throw std::invalid_argument("sample_stationary_gaussian: need r(0..n-1)");
  if (std::abs(autocov[0] - 1.0) > 1e-12) throw std::invalid_argument("sample_stationary_gaussian: r(0) must be 1");
  std::normal_distribution<double> normal;
  if (autocov.size() == 1) return {{normal(rng)}, 0.0};

  const std::size_t big_n = autocov.size();
  const std::size_t m = 2 * (big_n - 1);
  std::vector<Complex> c(m);
  for (std::size_t k = 0; k < big_n; ++k) c[k] = autocov[k];
  for (std::size_t k = 1; k + 1 < big_n; ++k) c[m - k] = autocov[k];
  const Spectrum eig = fft(c);

  GaussianDraw out;
  std::vector<Complex> w(m);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    double lam = eig[k].real();
    if (lam < 0.0) {
      out.clamped_mass += -lam * inv_m;
      lam = 0.0;
    }
    const double amp = std::sqrt(lam * inv_m);
    const double re = normal(rng);
    const double im = normal(rng);
    w[k] = {amp * re, amp * im};
  }
  const Spectrum y = fft(w);
  out.values.resize(n);
  for (std::size_t t = 0; t < n; ++t) out.values[t] = y[t].real();
  return out;
}

// Embedding length rounded so that 2(N-1) is a power of two.
inline std::size_t embedding_lags(std::size_t n) {
  if (n <= 1) return 1;
  return detail::next_pow2(n - 1) + 1;
}

inline GaussianDraw sample_driver(const Driver& driver, std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal;
  GaussianDraw out;
  switch (driver.kind) {
  case Driver::Kind::iid:
    out.values.resize(n);
    for (auto& v : out.values) v = normal(rng);
    return out;
  case Driver::Kind::ar1: {
    out.values.resize(n);
    const double innov = std::sqrt(1.0 - driver.phi * driver.phi);
    double prev = normal(rng);
    for (std::size_t t = 0; t < n; ++t) {
      if (t > 0) prev = driver.phi * prev + innov * normal(rng);
      out.values[t] = prev;
    }
    return out;
  }
  case Driver::Kind::fgn: {
    std::vector<double> r(embedding_lags(n));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = fgn_autocov(driver.hurst, k);
    return sample_stationary_gaussian(r, n, rng);
  }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Latent model.

struct LatentComponentSpec {
  Driver driver;
  Transform transform;
  std::optional<HermiteRanks> declared_ranks;

  HermiteRanks ranks() const { return declared_ranks ? *declared_ranks : hermite_rank(transform); }
};

// Population moments of f(eta) for a unit-variance Gaussian driver.
struct PartMoments {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> chaos;  // b_k^2 = k! a_k^2, k >= 1; cov(lag) = sum b_k^2 r(lag)^k

  double autocov(double driver_corr) const {
    double s = 0.0, pw = 1.0;
    for (double c : chaos) {
      pw *= driver_corr;
      s += c * pw;
    }
    return s;
  }
};

inline PartMoments part_moments(const Transform& t) {
  const auto& rule = gauss_hermite_128();
  PartMoments m;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) m.mean += rule.weights[i] * t(rule.nodes[i]);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double c = t(rule.nodes[i]) - m.mean;
    m.variance += rule.weights[i] * c * c;
  }
  const auto a = hermite_coefficients([&t](double x) { return t(x); });
  double log_fact = 0.0;
  for (std::size_t k = 1; k < a.size(); ++k) {
    log_fact += std::log(static_cast<double>(k));
    m.chaos.push_back(a[k] * a[k] * std::exp(log_fact));
  }
  return m;
}

struct ModelSpec {
  std::size_t d = 1;
  std::vector<LatentComponentSpec> components;  // real parts 0..d-1, imaginary parts d..2d-1
  CMat mixing;                                  // A
  std::vector<Complex> location;                // mu_x
  bool normalize = true;                        // unit variance per component
  bool empirical_center = true;                 // subtract the sample mean of z

  const LatentComponentSpec& real_part(std::size_t k) const { return components[k]; }
  const LatentComponentSpec& imag_part(std::size_t k) const { return components[k + d]; }

  void validate() const {
    if (d == 0) throw std::invalid_argument("model: d must be positive");
    if (components.size() != 2 * d) throw std::invalid_argument("model: need 2d component specs");
    for (const auto& c : components) {
      c.driver.validate();
      c.transform.validate();
      if (!(part_moments(c.transform).variance > 1e-12))
        throw std::invalid_argument("model: transform has zero variance");
    }
    if (mixing.rows() != d || mixing.cols() != d) throw DimensionError("model: mixing must be d x d");
    if (location.size() != d) throw DimensionError("model: location must have d entries");
    try {
      (void)inverse(mixing);
    } catch (const NumericalError&) {
      throw std::invalid_argument("model: mixing matrix is singular");
    }
  }

  static ModelSpec trivial(std::vector<LatentComponentSpec> comps) {
    ModelSpec m;
    m.d = comps.size() / 2;
    m.components = std::move(comps);
    m.mixing = CMat::identity(m.d);
    m.location.assign(m.d, Complex{});
    return m;
  }
};

struct Generated {
  TimeSeries x;
  TimeSeries z;
  double clamped_mass = 0.0;
  std::vector<Complex> latent_mean;  // sample mean of z before any empirical centering
};

// z_k = b_k + i c_k from 2d independent subordinated drivers, each part
// centred by its population mean; with normalize each part is scaled to
// variance 1/2 so that E|z_k|^2 = 1. x_t = A z_t + mu_x.
inline Generated generate(const ModelSpec& model, std::size_t length, std::uint64_t seed) {
  model.validate();
  if (length < 16) throw std::invalid_argument("generate: T must be at least 16");
  const std::size_t d = model.d;
  Generated out{TimeSeries(length, d), TimeSeries(length, d), 0.0, {}};
  for (std::size_t p = 0; p < 2 * d; ++p) {
    const auto& spec = model.components[p];
    Rng rng(derive_seed(seed, p));
    const GaussianDraw eta = sample_driver(spec.driver, length, rng);
    out.clamped_mass = std::max(out.clamped_mass, eta.clamped_mass);
    const PartMoments mom = part_moments(spec.transform);
    const double scale = model.normalize ? 1.0 / std::sqrt(2.0 * mom.variance) : 1.0;
    const std::size_t k = p % d;
    const bool imag = p >= d;
    for (std::size_t t = 0; t < length; ++t) {
      const double v = (spec.transform(eta.values[t]) - mom.mean) * scale;
      if (imag)
        out.z(t, k) += Complex{0.0, v};
      else
        out.z(t, k) += Complex{v, 0.0};
    }
  }
  out.latent_mean = sample_mean(out.z);
  if (model.empirical_center) {
    const auto& mu = out.latent_mean;
    for (std::size_t t = 0; t < length; ++t)
      for (std::size_t k = 0; k < d; ++k) out.z(t, k) -= mu[k];
  }
  out.x = affine_transform(out.z, model.mixing, model.location);
  return out;
}

// Population unmixing matrix for lag tau, rows ordered by non-increasing
// lambda (stable in component index).
struct PopulationSolution {
  CMat gamma;
  std::vector<double> lambdas;
  std::vector<std::size_t> order;  // order[j] = latent component in row j
  std::vector<double> variances;   // E|z_k|^2 by latent index
};

inline PopulationSolution population_solution(const ModelSpec& model, std::size_t tau) {
  model.validate();
  const std::size_t d = model.d;
  std::vector<double> lam(d), var(d);
  for (std::size_t k = 0; k < d; ++k) {
    const auto& re = model.real_part(k);
    const auto& im = model.imag_part(k);
    const PartMoments mb = part_moments(re.transform), mc = part_moments(im.transform);
    const double vb = model.normalize ? 0.5 : mb.variance;
    const double vc = model.normalize ? 0.5 : mc.variance;
    const double cb = vb * mb.autocov(re.driver.autocov(tau)) / mb.variance;
    const double cc = vc * mc.autocov(im.driver.autocov(tau)) / mc.variance;
    var[k] = vb + vc;
    lam[k] = (cb + cc) / var[k];
  }
  PopulationSolution out;
  out.order.resize(d);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) { return lam[a] > lam[b]; });
  const CMat a_inv = inverse(model.mixing);
  out.gamma = CMat(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    const std::size_t k = out.order[j];
    out.lambdas.push_back(lam[k]);
    const double s = 1.0 / std::sqrt(var[k]);
    for (std::size_t c = 0; c < d; ++c) out.gamma(j, c) = s * a_inv(k, c);
  }
  out.variances = var;
  return out;
}

// ---------------------------------------------------------------------------
// Convergence-rate theory for mixed short/long-range designs.

struct LongRangeIndex {
  std::size_t part = 0;  // index into ModelSpec::components
  double hurst = 0.5;
  HermiteRanks ranks;
};

struct RateTheory {
  enum class Regime { short_range, long_range, boundary };
  Regime regime = Regime::short_range;
  double exponent = 0.5;       // rate T^exponent used for slope comparisons
  double gamma_formula = 0.5;  // -1/2 max q2 (2H - 2), or 0.5 without long-range parts
  bool maximum_holds = true;   // max q2(2H-2) > max{q1_k(2H_k-2) + q1_j(2H_j-2), -1}
  bool maximum2_holds = true;  // max q2(2H-2) >= q1_k(4H_k-4) for all k
  std::vector<LongRangeIndex> indices;
};

inline RateTheory theoretical_gamma(const ModelSpec& model) {
  RateTheory th;
  for (std::size_t p = 0; p < model.components.size(); ++p) {
    const auto& c = model.components[p];
    if (c.driver.long_range()) th.indices.push_back({p, c.driver.hurst, c.ranks()});
  }
  if (th.indices.empty()) return th;

  constexpr double kTol = 1e-12;
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& i : th.indices) top = std::max(top, i.ranks.q2 * (2.0 * i.hurst - 2.0));
  double rhs = -1.0;
  for (std::size_t a = 0; a < th.indices.size(); ++a)
    for (std::size_t b = 0; b < th.indices.size(); ++b) {
      if (a == b) continue;
      const auto& j = th.indices[a];
      const auto& k = th.indices[b];
      rhs = std::max(rhs, j.ranks.q1 * (2.0 * j.hurst - 2.0) + k.ranks.q1 * (2.0 * k.hurst - 2.0));
    }
  th.maximum_holds = top > rhs + kTol;
  th.maximum2_holds = std::all_of(th.indices.begin(), th.indices.end(), [&](const LongRangeIndex& k) {
    return top >= k.ranks.q1 * (4.0 * k.hurst - 4.0) - kTol;
  });
  th.gamma_formula = -0.5 * top;
  if (std::abs(top + 1.0) <= kTol) {
    th.regime = RateTheory::Regime::boundary;
    th.exponent = 0.5;
  } else if (top < -1.0) {
    th.regime = RateTheory::Regime::short_range;
    th.exponent = 0.5;
  } else {
    th.regime = RateTheory::Regime::long_range;
    th.exponent = th.gamma_formula;
  }
  return th;
}

} // namespace cbss

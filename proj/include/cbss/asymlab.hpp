#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cbss/error.hpp"
#include "cbss/estimators.hpp"
#include "cbss/genproc.hpp"
#include "cbss/linalg.hpp"
#include "cbss/metrics.hpp"
#include "cbss/unmixer.hpp"

namespace cbss {

enum class ErrorMetric { md, frobenius_after_alignment, elementwise };

inline const char* to_string(ErrorMetric m) {
  switch (m) {
  case ErrorMetric::md: return "md";
  case ErrorMetric::frobenius_after_alignment: return "frobenius_after_alignment";
  case ErrorMetric::elementwise: return "elementwise";
  }
  return "?";
}

struct RateExperimentConfig {
  ModelSpec model;
  std::size_t tau = 1;
  std::vector<std::size_t> t_grid;
  std::size_t replications = 200;
  std::uint64_t seed = 0;
  ErrorMetric error_metric = ErrorMetric::frobenius_after_alignment;
  std::size_t normality_replications = 0;  // replications at the largest T; 0 = same as replications
  unsigned threads = 0;                    // 0 = CBSS_THREADS or all cores

  void validate() const {
    model.validate();
    if (t_grid.size() < 3) throw std::invalid_argument("rate config: t_grid needs at least 3 points");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
      if (t_grid[i] <= t_grid[i - 1]) throw std::invalid_argument("rate config: t_grid must be strictly increasing");
    if (replications < 50) throw std::invalid_argument("rate config: replications must be at least 50");
    if (tau == 0) throw std::invalid_argument("rate config: tau must be at least 1");
    if (t_grid.front() < 16 || t_grid.front() < tau + 2)
      throw std::invalid_argument("rate config: smallest T must be at least max(16, tau + 2)");
    if (error_metric == ErrorMetric::md && model.d < 2)
      throw std::invalid_argument("rate config: md metric needs d >= 2");
  }

  std::size_t reps_at(std::size_t grid_index) const {
    return grid_index + 1 == t_grid.size() ? std::max(replications, normality_replications) : replications;
  }
};

// ---------------------------------------------------------------------------
// Small statistics helpers.

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
};

// Ordinary least squares of log(y) on log(x).
inline LogLogFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("fit_loglog_slope: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit_loglog_slope: need at least two points");
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("fit_loglog_slope: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog_slope: x values are all equal");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ly[i] - fit.intercept - fit.slope * lx[i];
      rss += r * r;
    }
    fit.stderr_slope = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

// Linear-interpolated sample quantile (R type 7).
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct KSResult {
  double statistic = 0.0;
  std::size_t n = 0;
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Two-sided KS distance to N(0,1). With standardize the samples are centred
// and scaled by their sample sd first (n >= 20 required).
inline KSResult normality_diagnostic(std::span<const double> samples, bool standardize = true) {
  const std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("normality_diagnostic: no samples");
  if (standardize && n < 20) throw std::invalid_argument("normality_diagnostic: need at least 20 samples");
  std::vector<double> v(samples.begin(), samples.end());
  if (standardize) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0) || !std::isfinite(sd)) throw NumericalError("normality_diagnostic: zero variance");
    for (auto& x : v) x = (x - m) / sd;
  }
  std::sort(v.begin(), v.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = normal_cdf(v[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {std::clamp(d, 0.0, 1.0), n};
}

inline double skewness(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 3) return std::numeric_limits<double>::quiet_NaN();
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    m2 += (x - m) * (x - m);
    m3 += (x - m) * (x - m) * (x - m);
  }
  m2 /= n;
  m3 /= n;
  return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

// ---------------------------------------------------------------------------
// Worker pool: items are claimed from an atomic counter and write only to
// their own slot, so results do not depend on the number of workers.

inline unsigned resolve_threads(unsigned requested) {
  unsigned n = requested;
  if (n == 0) {
    if (const char* env = std::getenv("CBSS_THREADS")) {
      char* end = nullptr;
      const unsigned long v = std::strtoul(env, &end, 10);
      if (end != env && *end == '\0') n = static_cast<unsigned>(v);
    }
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

inline void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Replications.

struct ReplicationRecord {
  bool ok = false;
  double metric = 0.0;
  double diag_error = 0.0;     // ||diag(Delta)||_F
  double offdiag_error = 0.0;  // ||offdiag(Delta)||_F
  CMat delta;                  // latent gain minus I, rows and columns in population order
  // residuals of the finite-sample expansion, max over entries (trivial mixing only)
  double thm3_diag = 0.0, thm3_off = 0.0;
  double thm3_diag_sample = 0.0, thm3_off_sample = 0.0;
  double mu_offdiag = 0.0;  // max_{j != k} |mu_j conj(mu_k)| of the latent sample mean
  double mu_diag = 0.0;     // max_j |mu_j|^2
  double clamped_mass = 0.0;
};

struct GridBlock {
  std::size_t length = 0;
  std::vector<ReplicationRecord> reps;
  std::size_t failures = 0;
};

struct ExperimentData {
  RateExperimentConfig cfg;
  RateTheory theory;
  PopulationSolution truth;
  std::vector<GridBlock> blocks;
  std::size_t attempted = 0;
  std::size_t failures = 0;
  bool trivial_mixing = false;
};

struct ExpansionResiduals {
  double diag = 0.0;     // max_j |(G_jj - 1) - (1 - [S0]_jj) / 2|
  double offdiag = 0.0;  // max_{j!=k} |(l_k - l_j) G_jk - (l_j [S0]_jk - [S_tau]_jk)|
};

// Remainders of the first-order expansion of the phase-standardized gain G
// around I under trivial mixing; S0, S_tau and lambdas in the row order of G.
inline ExpansionResiduals expansion_residuals(const CMat& g, const CMat& s0, const CMat& s_tau,
                                              std::span<const double> lambdas) {
  const std::size_t d = g.rows();
  if (!g.square() || s0.rows() != d || s_tau.rows() != d || lambdas.size() != d)
    throw DimensionError("expansion_residuals: dimension mismatch");
  ExpansionResiduals r;
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) {
      if (j == k)
        r.diag = std::max(r.diag, std::abs((g(j, j) - 1.0) - 0.5 * (1.0 - s0(j, j))));
      else
        r.offdiag = std::max(r.offdiag,
                             std::abs((lambdas[k] - lambdas[j]) * g(j, k) - (lambdas[j] * s0(j, k) - s_tau(j, k))));
    }
  return r;
}

namespace detail {

inline bool is_identity(const CMat& a) { return a.square() && max_abs_diff(a, CMat::identity(a.rows())) == 0.0; }

inline bool is_zero(std::span<const Complex> v) {
  return std::all_of(v.begin(), v.end(), [](Complex c) { return c == Complex{}; });
}

inline ReplicationRecord run_replication(const ExperimentData& ctx, std::size_t length, std::uint64_t seed) {
  const auto& cfg = ctx.cfg;
  const std::size_t d = cfg.model.d;
  const Generated gen = generate(cfg.model, length, seed);
  const UnmixingResult est = unmix(gen.x, cfg.tau);

  ReplicationRecord rec;
  rec.clamped_mass = gen.clamped_mass;
  const auto& order = ctx.truth.order;
  std::vector<double> scale(d);  // 1/sqrt(E|z_k|^2) in population order
  for (std::size_t k = 0; k < d; ++k) scale[k] = 1.0 / std::sqrt(ctx.truth.variances[order[k]]);

  const CMat gain = est.gamma * cfg.model.mixing;
  CMat latent(d, d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) latent(j, k) = gain(j, order[k]) / scale[k];
  const CMat g_hat = standardize_phase(latent).gamma;
  rec.delta = g_hat - CMat::identity(d);

  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k) (j == k ? rec.diag_error : rec.offdiag_error) += std::norm(rec.delta(j, k));
  rec.diag_error = std::sqrt(rec.diag_error);
  rec.offdiag_error = std::sqrt(rec.offdiag_error);

  switch (cfg.error_metric) {
  case ErrorMetric::md: rec.metric = md_index(est.gamma, cfg.model.mixing); break;
  case ErrorMetric::frobenius_after_alignment:
    rec.metric = frobenius_norm(align_phase_to(est.gamma, ctx.truth.gamma) - ctx.truth.gamma);
    break;
  case ErrorMetric::elementwise: rec.metric = max_abs(rec.delta); break;
  }

  if (ctx.trivial_mixing && cfg.model.normalize) {
    CMat s0 = autocov_sym(gen.x, 0), st = autocov_sym(gen.x, cfg.tau);
    CMat s0p(d, d), stp(d, d);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) {
        s0p(j, k) = s0(order[j], order[k]);
        stp(j, k) = st(order[j], order[k]);
      }
    const auto pop = expansion_residuals(g_hat, s0p, stp, ctx.truth.lambdas);
    const auto smp = expansion_residuals(g_hat, s0p, stp, est.lambdas);
    rec.thm3_diag = pop.diag;
    rec.thm3_off = pop.offdiag;
    rec.thm3_diag_sample = smp.diag;
    rec.thm3_off_sample = smp.offdiag;
  }

  for (std::size_t j = 0; j < d; ++j) {
    const Complex mj = gen.latent_mean[order[j]] * scale[j];
    rec.mu_diag = std::max(rec.mu_diag, std::norm(mj));
    for (std::size_t k = 0; k < d; ++k)
      if (j != k) rec.mu_offdiag = std::max(rec.mu_offdiag, std::abs(mj * std::conj(gen.latent_mean[order[k]] * scale[k])));
  }

  rec.ok = std::isfinite(rec.metric) && std::isfinite(rec.diag_error) && std::isfinite(rec.offdiag_error);
  return rec;
}

} // namespace detail

inline std::uint64_t replication_seed(std::uint64_t base, std::size_t grid_index, std::size_t rep) {
  return derive_seed(derive_seed(base, grid_index), rep);
}

// Runs every (T, replication) pair. Throws ReplicationError if more than 1% fail.
inline ExperimentData collect_replications(const RateExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData data;
  data.cfg = cfg;
  data.theory = theoretical_gamma(cfg.model);
  data.truth = population_solution(cfg.model, cfg.tau);
  data.trivial_mixing = detail::is_identity(cfg.model.mixing) && detail::is_zero(cfg.model.location);

  std::vector<std::pair<std::size_t, std::size_t>> items;
  for (std::size_t g = 0; g < cfg.t_grid.size(); ++g) {
    data.blocks.push_back({cfg.t_grid[g], std::vector<ReplicationRecord>(cfg.reps_at(g)), 0});
    for (std::size_t r = 0; r < cfg.reps_at(g); ++r) items.emplace_back(g, r);
  }
  parallel_for(items.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    const auto [g, r] = items[i];
    auto& slot = data.blocks[g].reps[r];
    try {
      slot = detail::run_replication(data, cfg.t_grid[g], replication_seed(cfg.seed, g, r));
    } catch (const NumericalError&) {
      slot = ReplicationRecord{};
    } catch (const std::out_of_range&) {
      slot = ReplicationRecord{};
    }
  });
  for (auto& b : data.blocks) {
    b.failures = static_cast<std::size_t>(std::count_if(b.reps.begin(), b.reps.end(), [](const auto& r) { return !r.ok; }));
    data.failures += b.failures;
    data.attempted += b.reps.size();
  }
  if (data.failures * 100 > data.attempted)
    throw ReplicationError("rate experiment: " + std::to_string(data.failures) + " of " +
                           std::to_string(data.attempted) + " replications failed (limit 1%)");
  return data;
}

// ---------------------------------------------------------------------------
// Reports.

struct PerTRow {
  std::size_t length = 0;
  double median_error = 0.0;
  double iqr = 0.0;
  double diag_median = 0.0;
  double offdiag_median = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
};

struct ElementKS {
  std::size_t row = 0, col = 0;
  bool imaginary = false;  // off-diagonal entries are tested per real/imaginary part
  KSResult ks;
};

struct ScaleDiagnostics {
  double diag_constant = 0.0;     // C in diag median ~ C T^slope
  double offdiag_constant = 0.0;
  std::vector<double> diag_skewness;  // shape of T^gamma (G_jj - 1) at the largest T
};

struct RateExperimentReport {
  std::vector<PerTRow> per_t;
  LogLogFit metric_fit, diag_fit, offdiag_fit;
  bool offdiag_fit_valid = false;
  double fitted_slope = 0.0;  // diagonal slope under long-range dependence, metric slope otherwise
  double fitted_slope_stderr = 0.0;
  double theoretical_exponent = -0.5;
  RateTheory theory;
  std::vector<ElementKS> gaussianity;
  ScaleDiagnostics scale_diag;
  std::size_t replication_failures = 0;
  double max_clamped_mass = 0.0;

  double max_ks() const {
    double m = 0.0;
    for (const auto& e : gaussianity) m = std::max(m, e.ks.statistic);
    return m;
  }
  double max_ks_diag() const {
    double m = 0.0;
    for (const auto& e : gaussianity)
      if (e.row == e.col) m = std::max(m, e.ks.statistic);
    return m;
  }
};

namespace detail {

template <class F>
std::vector<double> collect_ok(const GridBlock& b, F field) {
  std::vector<double> out;
  out.reserve(b.reps.size());
  for (const auto& r : b.reps)
    if (r.ok) out.push_back(field(r));
  return out;
}

} // namespace detail

inline RateExperimentReport summarize(const ExperimentData& data) {
  RateExperimentReport rep;
  rep.theory = data.theory;
  rep.theoretical_exponent = -data.theory.exponent;
  rep.replication_failures = data.failures;
  std::vector<double> ts, metric, diag, off;
  for (const auto& b : data.blocks) {
    PerTRow row;
    row.length = b.length;
    const auto m = detail::collect_ok(b, [](const auto& r) { return r.metric; });
    row.median_error = median(m);
    row.iqr = quantile(m, 0.75) - quantile(m, 0.25);
    row.diag_median = median(detail::collect_ok(b, [](const auto& r) { return r.diag_error; }));
    row.offdiag_median = median(detail::collect_ok(b, [](const auto& r) { return r.offdiag_error; }));
    row.replications = b.reps.size();
    row.failures = b.failures;
    for (const auto& r : b.reps) rep.max_clamped_mass = std::max(rep.max_clamped_mass, r.clamped_mass);
    rep.per_t.push_back(row);
    ts.push_back(static_cast<double>(b.length));
    metric.push_back(row.median_error);
    diag.push_back(row.diag_median);
    off.push_back(row.offdiag_median);
  }
  rep.metric_fit = fit_loglog_slope(ts, metric);
  rep.diag_fit = fit_loglog_slope(ts, diag);
  rep.offdiag_fit_valid = std::all_of(off.begin(), off.end(), [](double v) { return v > 0.0; });
  if (rep.offdiag_fit_valid) rep.offdiag_fit = fit_loglog_slope(ts, off);
  const LogLogFit& headline =
      data.theory.regime == RateTheory::Regime::long_range ? rep.diag_fit : rep.metric_fit;
  rep.fitted_slope = headline.slope;
  rep.fitted_slope_stderr = headline.stderr_slope;
  rep.scale_diag.diag_constant = std::exp(rep.diag_fit.intercept);
  rep.scale_diag.offdiag_constant = rep.offdiag_fit_valid ? std::exp(rep.offdiag_fit.intercept) : 0.0;

  // entrywise Gaussianity at the largest T
  const GridBlock& last = data.blocks.back();
  const std::size_t d = data.cfg.model.d;
  const double root_t = std::sqrt(static_cast<double>(last.length));
  const double rate = std::pow(static_cast<double>(last.length), data.theory.exponent);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k)
      for (int part = 0; part < (j == k ? 1 : 2); ++part) {
        const auto v = detail::collect_ok(last, [&](const auto& r) {
          const Complex e = r.delta(j, k) * root_t;
          return part ? e.imag() : e.real();
        });
        rep.gaussianity.push_back({j, k, part == 1, normality_diagnostic(v)});
      }
  for (std::size_t j = 0; j < d; ++j) {
    const auto v = detail::collect_ok(last, [&](const auto& r) { return r.delta(j, j).real() * rate; });
    rep.scale_diag.diag_skewness.push_back(skewness(v));
  }
  return rep;
}

inline RateExperimentReport run_rate_experiment(const RateExperimentConfig& cfg) {
  return summarize(collect_replications(cfg));
}

enum class Verdict { pass, fail, not_applicable };

inline const char* to_string(Verdict v) {
  switch (v) {
  case Verdict::pass: return "pass";
  case Verdict::fail: return "fail";
  case Verdict::not_applicable: return "not_applicable";
  }
  return "?";
}

struct DiagonalLimitReport {
  std::vector<double> ratios;  // median(T^g offdiag) / median(T^g diag) per T
  bool monotone_decreasing = false;
  bool halved = false;  // ratio(T_max) < ratio(T_min) / 2
  Verdict verdict = Verdict::not_applicable;
};

inline DiagonalLimitReport diagonal_limit_check(const ExperimentData& data) {
  DiagonalLimitReport out;
  if (data.theory.regime != RateTheory::Regime::long_range) return out;
  if (data.cfg.model.d == 1) {
    out.ratios.assign(data.blocks.size(), 0.0);
    out.monotone_decreasing = out.halved = true;
    out.verdict = Verdict::pass;
    return out;
  }
  for (const auto& b : data.blocks) {
    const double off = median(detail::collect_ok(b, [](const auto& r) { return r.offdiag_error; }));
    const double dia = median(detail::collect_ok(b, [](const auto& r) { return r.diag_error; }));
    out.ratios.push_back(off / dia);
  }
  out.monotone_decreasing = true;
  for (std::size_t i = 1; i < out.ratios.size(); ++i)
    if (!(out.ratios[i] < out.ratios[i - 1])) out.monotone_decreasing = false;
  out.halved = out.ratios.back() < 0.5 * out.ratios.front();
  out.verdict = out.halved && out.monotone_decreasing ? Verdict::pass : Verdict::fail;
  return out;
}

inline DiagonalLimitReport diagonal_limit_check(const RateExperimentConfig& cfg) {
  if (theoretical_gamma(cfg.model).regime != RateTheory::Regime::long_range) return {};
  return diagonal_limit_check(collect_replications(cfg));
}

struct ExpansionCheckReport {
  std::vector<std::size_t> lengths;
  std::vector<double> diag_median, offdiag_median, combined_median;
  std::vector<double> ratios;  // combined_median[i+1] / combined_median[i]
  bool sample_lambdas = false;
};

// Residuals of the finite-sample expansion around the trivial-mixing solution.
inline ExpansionCheckReport expansion_residual_check(const ExperimentData& data, bool use_sample_lambdas = false) {
  if (!data.trivial_mixing) throw std::invalid_argument("expansion_residual_check: requires A = I and zero location");
  if (!data.cfg.model.normalize) throw std::invalid_argument("expansion_residual_check: requires normalized latent components");
  ExpansionCheckReport out;
  out.sample_lambdas = use_sample_lambdas;
  for (const auto& b : data.blocks) {
    out.lengths.push_back(b.length);
    const auto dia = detail::collect_ok(b, [&](const auto& r) { return use_sample_lambdas ? r.thm3_diag_sample : r.thm3_diag; });
    const auto off = detail::collect_ok(b, [&](const auto& r) { return use_sample_lambdas ? r.thm3_off_sample : r.thm3_off; });
    std::vector<double> both(dia.size());
    for (std::size_t i = 0; i < dia.size(); ++i) both[i] = std::max(dia[i], off[i]);
    out.diag_median.push_back(median(dia));
    out.offdiag_median.push_back(data.cfg.model.d > 1 ? median(off) : 0.0);
    out.combined_median.push_back(median(both));
  }
  for (std::size_t i = 1; i < out.combined_median.size(); ++i)
    out.ratios.push_back(out.combined_median[i] / out.combined_median[i - 1]);
  return out;
}

inline ExpansionCheckReport expansion_residual_check(const RateExperimentConfig& cfg, bool use_sample_lambdas = false) {
  return expansion_residual_check(collect_replications(cfg), use_sample_lambdas);
}

struct MuContributionReport {
  double gamma = 0.0;
  std::vector<double> offdiag_median;  // median max_{j!=k} |T^g mu_j conj(mu_k)|
  std::vector<double> diag_median;     // reported only
  bool decreasing = false;             // offdiag at T_max < offdiag at T_min
  bool known_mean = false;
};

// With known_mean the latent mean is taken as exactly zero.
inline MuContributionReport mu_contribution_check(const ExperimentData& data, bool known_mean = false) {
  if (data.theory.regime != RateTheory::Regime::long_range)
    throw std::invalid_argument("mu_contribution_check: requires a long-range design");
  MuContributionReport out;
  out.gamma = data.theory.exponent;
  out.known_mean = known_mean;
  for (const auto& b : data.blocks) {
    const double scale = std::pow(static_cast<double>(b.length), out.gamma);
    if (known_mean) {
      out.offdiag_median.push_back(0.0);
      out.diag_median.push_back(0.0);
      continue;
    }
    out.offdiag_median.push_back(scale * median(detail::collect_ok(b, [](const auto& r) { return r.mu_offdiag; })));
    out.diag_median.push_back(scale * median(detail::collect_ok(b, [](const auto& r) { return r.mu_diag; })));
  }
  out.decreasing = known_mean || out.offdiag_median.back() < out.offdiag_median.front();
  return out;
}

inline MuContributionReport mu_contribution_check(const RateExperimentConfig& cfg, bool known_mean = false) {
  return mu_contribution_check(collect_replications(cfg), known_mean);
}

} // namespace cbss

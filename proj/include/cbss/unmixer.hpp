#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "cbss/error.hpp"
#include "cbss/estimators.hpp"
#include "cbss/linalg.hpp"

namespace cbss {

// Diagonal unitary J = diag(exp(i theta_j)), theta_j in [0, 2pi).
struct PhaseShift {
  std::vector<double> phases;

  static PhaseShift from_unit(std::span<const Complex> units) {
    PhaseShift out;
    out.phases.reserve(units.size());
    for (const auto& u : units) {
      double th = std::arg(u);
      if (th < 0) th += 2.0 * std::numbers::pi;
      if (th >= 2.0 * std::numbers::pi) th = 0.0;
      out.phases.push_back(th);
    }
    return out;
  }

  CMat matrix() const {
    CMat j(phases.size(), phases.size());
    for (std::size_t k = 0; k < phases.size(); ++k) j(k, k) = std::polar(1.0, phases[k]);
    return j;
  }
};

struct UnmixingResult {
  CMat gamma;                  // rows are unmixing directions, phase-standardized
  std::vector<double> lambdas; // diag of Gamma S_tau Gamma^H, non-increasing
  std::vector<Complex> mu;
  std::size_t tau = 0;
  double eigen_gap = std::numeric_limits<double>::infinity();  // min consecutive lambda gap

  // Components separated by less than 1e-3 of the eigenvalue spread are not
  // reliably identified.
  bool has_near_ties() const {
    if (lambdas.size() < 2) return false;
    const double spread = lambdas.front() - lambdas.back();
    return eigen_gap < 1e-3 * spread || spread == 0.0;
  }
};

struct PhaseStandardized {
  CMat gamma;
  PhaseShift shift;
};

// Rotates each row so its diagonal entry is real and non-negative.
inline PhaseStandardized standardize_phase(const CMat& gamma) {
  if (!gamma.square()) throw DimensionError("standardize_phase: matrix is not square");
  const std::size_t d = gamma.rows();
  std::vector<Complex> units(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double r = std::abs(gamma(j, j));
    if (!(r > 1e-14)) throw NumericalError("standardize_phase: zero diagonal entry, phase undefined");
    units[j] = std::conj(gamma(j, j)) / r;
  }
  PhaseStandardized out{gamma, PhaseShift::from_unit(units)};
  for (std::size_t j = 0; j < d; ++j) {
    for (auto& v : out.gamma.row(j)) v *= units[j];
    out.gamma(j, j) = std::abs(gamma(j, j));
  }
  return out;
}

// J * gamma_hat with the phase-shift J minimizing ||J gamma_hat - gamma_ref||_F.
inline CMat align_phase_to(const CMat& gamma_hat, const CMat& gamma_ref) {
  if (gamma_hat.rows() != gamma_ref.rows() || gamma_hat.cols() != gamma_ref.cols())
    throw DimensionError("align_phase_to: shape mismatch");
  CMat out = gamma_hat;
  for (std::size_t j = 0; j < gamma_hat.rows(); ++j) {
    Complex u{};
    for (std::size_t k = 0; k < gamma_hat.cols(); ++k) u += gamma_hat(j, k) * std::conj(gamma_ref(j, k));
    const double r = std::abs(u);
    if (!(r > 1e-14)) throw NumericalError("align_phase_to: row is orthogonal to its reference");
    const Complex unit = std::conj(u) / r;
    for (auto& v : out.row(j)) v *= unit;
  }
  return out;
}

// Canonical representative used by unmix: the diagonal rule where it is well
// defined; a row whose diagonal is negligible (a permuted estimate) is
// anchored on its largest-magnitude entry instead.
inline PhaseStandardized canonical_phase(const CMat& gamma) {
  const std::size_t d = gamma.rows();
  std::vector<Complex> units(d);
  PhaseStandardized out{gamma, {}};
  for (std::size_t j = 0; j < d; ++j) {
    const auto row = gamma.row(j);
    std::size_t pivot = 0;
    double norm2 = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      norm2 += std::norm(row[k]);
      if (std::abs(row[k]) > std::abs(row[pivot])) pivot = k;
    }
    if (std::abs(row[j]) > 1e-8 * std::sqrt(norm2)) pivot = j;
    const double r = std::abs(row[pivot]);
    if (!(r > 0.0)) throw NumericalError("unmix: zero row in the unmixing matrix");
    units[j] = std::conj(row[pivot]) / r;
    for (auto& v : out.gamma.row(j)) v *= units[j];
    out.gamma(j, pivot) = r;
  }
  out.shift = PhaseShift::from_unit(units);
  return out;
}

inline double min_consecutive_gap(std::span<const double> sorted_desc) {
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < sorted_desc.size(); ++k) gap = std::min(gap, sorted_desc[k - 1] - sorted_desc[k]);
  return gap;
}

// Gamma = V^H S0^{-1/2}, where S0^{-1/2} S_tau S0^{-1/2} = V diag(lambda) V^H.
inline UnmixingResult unmix(const TimeSeries& x, std::size_t tau) {
  if (tau == 0) throw std::out_of_range("unmix: lag must be at least 1");
  if (x.length() < 2 || tau > x.length() - 2)
    throw std::out_of_range("unmix: lag " + std::to_string(tau) + " outside [1, T-2]");
  const CMat s0 = autocov_sym(x, 0);
  const CMat s_tau = autocov_sym(x, tau);
  CMat whitener;
  try {
    whitener = herm_inv_sqrt(s0);
  } catch (const NumericalError&) {
    throw NumericalError("unmix: sample covariance is degenerate");
  }
  const HermEig eig = hermitian_eig(hermitian_part(whitener * s_tau * whitener));

  UnmixingResult out;
  out.gamma = canonical_phase(conj_transpose(eig.vectors) * whitener).gamma;
  out.lambdas = eig.values;
  out.mu = sample_mean(x);
  out.tau = tau;
  out.eigen_gap = min_consecutive_gap(out.lambdas);
  return out;
}

// Row t of the output is Gamma (X_t - mu).
inline TimeSeries apply_unmixing(const UnmixingResult& result, const TimeSeries& x) {
  if (result.gamma.cols() != x.dim() || result.mu.size() != x.dim())
    throw DimensionError("apply_unmixing: dimension mismatch");
  std::vector<Complex> shift = matvec(result.gamma, result.mu);
  for (auto& s : shift) s = -s;
  return affine_transform(x, result.gamma, shift);
}

struct LagSummary {
  std::size_t tau = 0;
  std::vector<double> lambdas;
  double eigen_gap = 0.0;
};

// One summary per lag, best separated (largest eigen_gap) first.
inline std::vector<LagSummary> lag_sweep(const TimeSeries& x, std::span<const std::size_t> taus) {
  std::vector<LagSummary> table;
  table.reserve(taus.size());
  for (std::size_t tau : taus) {
    const UnmixingResult r = unmix(x, tau);
    table.push_back({tau, r.lambdas, r.eigen_gap});
  }
  std::stable_sort(table.begin(), table.end(),
                   [](const LagSummary& a, const LagSummary& b) { return a.eigen_gap > b.eigen_gap; });
  return table;
}

} // namespace cbss

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cbss/error.hpp"
#include "cbss/linalg.hpp"

namespace cbss {

// T x d complex observations, row t is the observation at time t.
class TimeSeries {
public:
  TimeSeries() = default;
  TimeSeries(std::size_t length, std::size_t dim) : length_(length), dim_(dim), values_(length * dim) {}
  TimeSeries(std::size_t length, std::size_t dim, std::vector<Complex> values)
      : length_(length), dim_(dim), values_(std::move(values)) {
    if (values_.size() != length_ * dim_) throw DimensionError("TimeSeries: value count does not match T*d");
  }

  std::size_t length() const noexcept { return length_; }
  std::size_t dim() const noexcept { return dim_; }

  Complex& operator()(std::size_t t, std::size_t k) { return values_[t * dim_ + k]; }
  const Complex& operator()(std::size_t t, std::size_t k) const { return values_[t * dim_ + k]; }

  std::span<Complex> row(std::size_t t) { return {values_.data() + t * dim_, dim_}; }
  std::span<const Complex> row(std::size_t t) const { return {values_.data() + t * dim_, dim_}; }

  const std::vector<Complex>& values() const noexcept { return values_; }
  std::vector<Complex>& values() noexcept { return values_; }

  bool all_finite() const {
    for (const auto& v : values_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
  std::size_t length_ = 0;
  std::size_t dim_ = 0;
  std::vector<Complex> values_;
};

// Row-wise affine map: row t -> B x_t + b, i.e. X B^T + 1 b^T.
inline TimeSeries affine_transform(const TimeSeries& x, const CMat& b_mat, std::span<const Complex> shift) {
  if (b_mat.cols() != x.dim() || shift.size() != b_mat.rows())
    throw DimensionError("affine_transform: dimension mismatch");
  TimeSeries out(x.length(), b_mat.rows());
  for (std::size_t t = 0; t < x.length(); ++t) {
    auto src = x.row(t);
    for (std::size_t i = 0; i < b_mat.rows(); ++i) {
      Complex s = shift[i];
      for (std::size_t k = 0; k < x.dim(); ++k) s += b_mat(i, k) * src[k];
      out(t, i) = s;
    }
  }
  return out;
}

inline std::vector<Complex> sample_mean(const TimeSeries& x) {
  if (x.length() == 0) throw std::invalid_argument("sample_mean: empty series");
  std::vector<Complex> mu(x.dim());
  for (std::size_t t = 0; t < x.length(); ++t)
    for (std::size_t k = 0; k < x.dim(); ++k) mu[k] += x(t, k);
  for (auto& m : mu) m /= static_cast<double>(x.length());
  return mu;
}

// (1/div) sum_j (Z_j - mu)(Z_{j+tau} - mu)^H with div = T-1 at lag 0 and
// T-tau otherwise. Centering always uses the full-sample mean.
inline CMat autocov_unsym(const TimeSeries& x, std::size_t tau) {
  const std::size_t n = x.length();
  if (n < 2 || tau > n - 2)
    throw std::out_of_range("autocov: lag " + std::to_string(tau) + " outside [0, " +
                            std::to_string(n < 2 ? 0 : n - 2) + "]");
  const std::size_t d = x.dim();
  const auto mu = sample_mean(x);
  std::vector<Complex> centered(x.values().size());
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = 0; k < d; ++k) centered[t * d + k] = x(t, k) - mu[k];

  CMat s(d, d);
  for (std::size_t t = 0; t + tau < n; ++t) {
    const Complex* a = centered.data() + t * d;
    const Complex* b = centered.data() + (t + tau) * d;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) s(i, j) += a[i] * std::conj(b[j]);
  }
  const double div = tau == 0 ? static_cast<double>(n - 1) : static_cast<double>(n - tau);
  s *= 1.0 / div;
  return s;
}

inline CMat autocov_sym(const TimeSeries& x, std::size_t tau) {
  return hermitian_part(autocov_unsym(x, tau));
}

struct GaussianParams {
  std::vector<Complex> mu;
  CMat sigma;     // E[(y-mu)(y-mu)^H]
  CMat relation;  // E[(y-mu)(y-mu)^T]
};

inline GaussianParams gaussian_params(const TimeSeries& samples) {
  const std::size_t n = samples.length();
  if (n < 2) throw std::invalid_argument("gaussian_params: need at least two samples");
  const std::size_t d = samples.dim();
  GaussianParams out{sample_mean(samples), CMat(d, d), CMat(d, d)};
  std::vector<Complex> c(d);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t k = 0; k < d; ++k) c[k] = samples(t, k) - out.mu[k];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        out.sigma(i, j) += c[i] * std::conj(c[j]);
        out.relation(i, j) += c[i] * c[j];
      }
  }
  out.sigma *= 1.0 / static_cast<double>(n - 1);
  out.relation *= 1.0 / static_cast<double>(n - 1);
  return out;
}

struct ComplexCovariance {
  CMat sigma;
  CMat relation;
};

// Covariance and relation matrix of x + iy from the real block covariance
// [[Sx, Sxy], [Sxy^T, Sy]].
inline ComplexCovariance realblock_to_complex(const CMat& sigma_x, const CMat& sigma_y, const CMat& sigma_xy) {
  const std::size_t d = sigma_x.rows();
  for (const CMat* m : {&sigma_x, &sigma_y, &sigma_xy})
    if (m->rows() != d || m->cols() != d) throw DimensionError("realblock_to_complex: blocks must be d x d");
  const CMat sxy_t = transpose(sigma_xy);
  ComplexCovariance out{CMat(d, d), CMat(d, d)};
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      out.sigma(i, j) = sigma_x(i, j) + sigma_y(i, j) + kI * (sxy_t(i, j) - sigma_xy(i, j));
      out.relation(i, j) = sigma_x(i, j) - sigma_y(i, j) + kI * (sxy_t(i, j) + sigma_xy(i, j));
    }
  return out;
}

} // namespace cbss

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "cbss/linalg.hpp"

namespace cbss {

// Forward DFT: X_k = sum_n x_n exp(-2 pi i n k / N). The inverse carries 1/N.
// Power-of-two lengths use iterative radix-2; other lengths go through
// Bluestein's chirp-z with a power-of-two convolution.

namespace detail {

inline bool is_pow2(std::size_t n) { return n && !(n & (n - 1)); }

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place radix-2, sign = -1 forward, +1 backward (unnormalized).
inline void fft_radix2(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  std::vector<Complex> tw;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    tw.resize(half);
    for (std::size_t k = 0; k < half; ++k) {
      const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(len);
      tw[k] = {std::cos(ang), std::sin(ang)};
    }
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = a[i + k];
        const Complex v = a[i + k + half] * tw[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
}

inline void fft_bluestein(std::vector<Complex>& a, int sign) {
  const std::size_t n = a.size();
  const std::size_t m = next_pow2(2 * n - 1);
  // chirp_k = exp(sign * i pi k^2 / n); k^2 reduced mod 2n keeps the angle small
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto k2 = static_cast<unsigned long long>(k) * k % (2ULL * n);
    const double ang = sign * std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = {std::cos(ang), std::sin(ang)};
  }
  std::vector<Complex> u(m), w(m);
  for (std::size_t k = 0; k < n; ++k) u[k] = a[k] * chirp[k];
  w[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) w[k] = w[m - k] = std::conj(chirp[k]);
  fft_radix2(u, -1);
  fft_radix2(w, -1);
  for (std::size_t k = 0; k < m; ++k) u[k] *= w[k];
  fft_radix2(u, +1);
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = u[k] * inv_m * chirp[k];
}

inline void transform(std::vector<Complex>& a, int sign) {
  if (a.empty()) throw std::invalid_argument("fft: empty input");
  if (is_pow2(a.size()))
    fft_radix2(a, sign);
  else
    fft_bluestein(a, sign);
}

} // namespace detail

using Spectrum = std::vector<Complex>;

inline Spectrum fft(std::span<const Complex> x) {
  Spectrum out(x.begin(), x.end());
  detail::transform(out, -1);
  return out;
}

inline std::vector<Complex> ifft(std::span<const Complex> x) {
  std::vector<Complex> out(x.begin(), x.end());
  detail::transform(out, +1);
  const double inv_n = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) v *= inv_n;
  return out;
}

} // namespace cbss

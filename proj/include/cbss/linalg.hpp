#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "cbss/error.hpp"

namespace cbss {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};

// Dense complex matrix, row-major.
class CMat {
public:
  CMat() = default;
  CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  CMat(std::size_t rows, std::size_t cols, std::vector<Complex> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw DimensionError("CMat: data length does not match rows*cols");
  }
  CMat(std::initializer_list<std::initializer_list<Complex>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("CMat: ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static CMat identity(std::size_t n) {
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static CMat diagonal(std::span<const double> values) {
    CMat m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  static CMat diagonal(std::span<const Complex> values) {
    CMat m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  Complex& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Complex& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<Complex> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const Complex> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<Complex>& data() noexcept { return data_; }
  const std::vector<Complex>& data() const noexcept { return data_; }

  bool is_hermitian(double tol) const;
  bool is_unitary(double tol) const;

  CMat& operator+=(const CMat& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  CMat& operator-=(const CMat& o) {
    check_same(o);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  CMat& operator*=(Complex s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend bool operator==(const CMat&, const CMat&) = default;

private:
  void check_same(const CMat& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("CMat: shape mismatch");
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Complex> data_;
};

inline CMat operator+(CMat a, const CMat& b) { return a += b; }
inline CMat operator-(CMat a, const CMat& b) { return a -= b; }
inline CMat operator*(Complex s, CMat a) { return a *= s; }

inline CMat matmul(const CMat& a, const CMat& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                         " times " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  CMat out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const Complex aik = a(i, k);
      if (aik == Complex{}) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

inline CMat operator*(const CMat& a, const CMat& b) { return matmul(a, b); }

inline std::vector<Complex> matvec(const CMat& a, std::span<const Complex> v) {
  if (a.cols() != v.size()) throw DimensionError("matvec: dimension mismatch");
  std::vector<Complex> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Complex s{};
    for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * v[k];
    out[i] = s;
  }
  return out;
}

inline CMat conj_transpose(const CMat& a) {
  CMat out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = std::conj(a(i, j));
  return out;
}

inline CMat transpose(const CMat& a) {
  CMat out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

inline double frobenius_norm(const CMat& m) {
  double s = 0.0;
  for (const auto& v : m.data()) s += std::norm(v);
  return std::sqrt(s);
}

inline double max_abs(const CMat& m) {
  double best = 0.0;
  for (const auto& v : m.data()) best = std::max(best, std::abs(v));
  return best;
}

inline double max_abs_diff(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("max_abs_diff: shape mismatch");
  double best = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) best = std::max(best, std::abs(a.data()[i] - b.data()[i]));
  return best;
}

inline bool CMat::is_hermitian(double tol) const {
  if (!square()) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i; j < cols_; ++j)
      if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
  return true;
}

inline bool CMat::is_unitary(double tol) const {
  if (!square()) return false;
  return max_abs_diff(conj_transpose(*this) * (*this), identity(rows_)) <= tol;
}

inline CMat hermitian_part(const CMat& m) {
  CMat h = m + conj_transpose(m);
  h *= 0.5;
  return h;
}

struct HermEig {
  std::vector<double> values;  // non-increasing
  CMat vectors;                // columns are eigenvectors
};

namespace detail {

inline double max_off_diagonal(const CMat& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) best = std::max(best, std::abs(a(i, j)));
  return best;
}

} // namespace detail

// Cyclic-by-row complex Jacobi. Each rotation first removes the phase of
// a(p,q) with a diagonal unitary and then applies a real plane rotation, so
// the combined 2x2 block of U is
//   [ c              s           ]
//   [ -s e^{-i phi}  c e^{-i phi} ]
// and a <- U^H a U annihilates a(p,q).
inline HermEig hermitian_eig(const CMat& m) {
  if (!m.square()) throw DimensionError("hermitian_eig: matrix is not square");
  const double scale = frobenius_norm(m);
  if (!m.is_hermitian(1e-9 * std::max(1.0, scale)))
    throw std::invalid_argument("hermitian_eig: matrix is not Hermitian");

  const std::size_t n = m.rows();
  CMat a = hermitian_part(m);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = a(i, i).real();
  CMat v = CMat::identity(n);

  constexpr int kMaxSweeps = 100;
  const double threshold = 1e-12 * scale;
  bool converged = false;
  for (int sweep = 0; sweep <= kMaxSweeps; ++sweep) {
    if (detail::max_off_diagonal(a) <= threshold) {
      converged = true;
      break;
    }
    if (sweep == kMaxSweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double r = std::abs(apq);
        if (r == 0.0) continue;
        const Complex phase = apq / r;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const Complex upp = c, upq = s;
        const Complex uqp = -s * std::conj(phase), uqq = c * std::conj(phase);

        // a <- a U (columns p, q)
        for (std::size_t k = 0; k < n; ++k) {
          const Complex akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        // a <- U^H a (rows p, q)
        for (std::size_t k = 0; k < n; ++k) {
          const Complex apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = app - t * r;
        a(q, q) = aqq + t * r;
        for (std::size_t k = 0; k < n; ++k) {
          const Complex vkp = v(k, p), vkq = v(k, q);
          v(k, p) = vkp * upp + vkq * uqp;
          v(k, q) = vkp * upq + vkq * uqq;
        }
      }
    }
  }
  if (!converged) throw NumericalError("hermitian_eig: Jacobi sweeps did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() > a(j, j).real(); });

  HermEig out;
  out.values.resize(n);
  out.vectors = CMat(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    out.values[col] = a(order[col], order[col]).real();
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, col) = v(k, order[col]);
  }
  return out;
}

// Hermitian P with P m P = I. Rejects eigenvalues <= 1e-12 * largest.
inline CMat herm_inv_sqrt(const CMat& m) {
  const HermEig eig = hermitian_eig(m);
  const double top = eig.values.empty() ? 0.0 : eig.values.front();
  if (top <= 0.0 || eig.values.back() <= 1e-12 * top)
    throw NumericalError("herm_inv_sqrt: matrix is not positive definite");
  const std::size_t n = m.rows();
  CMat p(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = 1.0 / std::sqrt(eig.values[k]);
    for (std::size_t i = 0; i < n; ++i) {
      const Complex vik = eig.vectors(i, k) * w;
      for (std::size_t j = 0; j < n; ++j) p(i, j) += vik * std::conj(eig.vectors(j, k));
    }
  }
  return hermitian_part(p);
}

// LU with partial pivoting. A pivot below 1e-13 * max|m| counts as singular.
inline CMat inverse(const CMat& m) {
  if (!m.square()) throw DimensionError("inverse: matrix is not square");
  const std::size_t n = m.rows();
  const double tol = 1e-13 * max_abs(m);
  CMat lu = m;
  CMat inv = CMat::identity(n);
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(lu(r, col)) > std::abs(lu(piv, col))) piv = r;
    if (std::abs(lu(piv, col)) <= tol || tol == 0.0) throw NumericalError("inverse: matrix is singular");
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) {
        std::swap(lu(piv, k), lu(col, k));
        std::swap(inv(piv, k), inv(col, k));
      }
    }
    const Complex d = lu(col, col);
    for (std::size_t r = col + 1; r < n; ++r) {
      const Complex f = lu(r, col) / d;
      if (f == Complex{}) continue;
      for (std::size_t k = col; k < n; ++k) lu(r, k) -= f * lu(col, k);
      for (std::size_t k = 0; k < n; ++k) inv(r, k) -= f * inv(col, k);
    }
  }
  for (std::size_t col = n; col-- > 0;) {
    const Complex d = lu(col, col);
    for (std::size_t k = 0; k < n; ++k) {
      Complex s = inv(col, k);
      for (std::size_t j = col + 1; j < n; ++j) s -= lu(col, j) * inv(j, k);
      inv(col, k) = s / d;
    }
  }
  return inv;
}

} // namespace cbss

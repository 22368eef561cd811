#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "cbss/error.hpp"
#include "cbss/linalg.hpp"

namespace cbss {

// Square cost matrix, row-major.
class CostMatrix {
public:
  explicit CostMatrix(std::size_t n) : n_(n), c_(n * n, 0.0) {}
  CostMatrix(std::size_t n, std::vector<double> values) : n_(n), c_(std::move(values)) {
    if (c_.size() != n_ * n_) throw DimensionError("CostMatrix: need n*n entries");
  }
  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t r, std::size_t c) { return c_[r * n_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return c_[r * n_ + c]; }

private:
  std::size_t n_;
  std::vector<double> c_;
};

struct Assignment {
  std::vector<std::size_t> column_of_row;
  double total = 0.0;
};

namespace detail {

// Shortest augmenting path Hungarian method (potentials), O(n^3).
// rows/cols select a sub-problem of the full matrix.
inline double hungarian_value(const CostMatrix& cost, const std::vector<std::size_t>& rows,
                              const std::vector<std::size_t>& cols, std::vector<std::size_t>* match = nullptr) {
  const std::size_t n = rows.size();
  if (n == 0) return 0.0;
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(rows[i0 - 1], cols[j - 1]) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  if (match) match->assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) {
    total += cost(rows[p[j] - 1], cols[j - 1]);
    if (match) (*match)[p[j] - 1] = j - 1;
  }
  return total;
}

} // namespace detail

// Exact minimum-cost permutation. Among optimal permutations the
// lexicographically smallest column sequence is returned: each row in turn
// takes the smallest column that still admits an optimal completion.
inline Assignment solve_assignment(const CostMatrix& cost) {
  const std::size_t n = cost.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(cost(i, j))) throw std::invalid_argument("solve_assignment: non-finite cost");

  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  const double optimum = detail::hungarian_value(cost, all, all);

  double scale = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(cost(i, j)));
  const double tol = 1e-12 * scale * static_cast<double>(n + 1);

  Assignment out;
  out.column_of_row.assign(n, 0);
  std::vector<std::size_t> free_cols = all;
  double fixed = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    std::vector<std::size_t> rest_rows;
    for (std::size_t k = r + 1; k < n; ++k) rest_rows.push_back(k);
    bool placed = false;
    for (std::size_t ci = 0; ci < free_cols.size() && !placed; ++ci) {
      const std::size_t c = free_cols[ci];
      std::vector<std::size_t> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(ci));
      const double value = fixed + cost(r, c) + detail::hungarian_value(cost, rest_rows, rest_cols);
      if (value <= optimum + tol) {
        out.column_of_row[r] = c;
        fixed += cost(r, c);
        free_cols = std::move(rest_cols);
        placed = true;
      }
    }
    assert(placed);
  }
  out.total = 0.0;
  for (std::size_t r = 0; r < n; ++r) out.total += cost(r, out.column_of_row[r]);
  return out;
}

// cost(j, k) = 1 - |G_jk|^2 / ||row_j(G)||^2: the residual of the best
// complex multiple of row j that matches unit vector e_k.
inline CostMatrix md_cost(const CMat& gain) {
  const std::size_t d = gain.rows();
  CostMatrix cost(d);
  for (std::size_t j = 0; j < d; ++j) {
    double row_norm2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) row_norm2 += std::norm(gain(j, k));
    if (!(row_norm2 > 1e-28)) throw NumericalError("md_index: gain matrix has a zero row");
    for (std::size_t k = 0; k < d; ++k) cost(j, k) = 1.0 - std::norm(gain(j, k)) / row_norm2;
  }
  return cost;
}

// MD of a gain matrix G = Gamma_hat * A:
//   (1/sqrt(d-1)) * min_{C} ||C G - I||_F
// over C with exactly one nonzero complex entry per row and column.
inline double md_index_of_gain(const CMat& gain) {
  if (!gain.square()) throw DimensionError("md_index: gain matrix is not square");
  const std::size_t d = gain.rows();
  if (d < 2) throw std::invalid_argument("md_index: undefined for d < 2");
  const Assignment best = solve_assignment(md_cost(gain));
  const double raw = std::sqrt(std::max(0.0, best.total) / static_cast<double>(d - 1));
  assert(raw <= 1.0 + 1e-9);
  return std::clamp(raw, 0.0, 1.0);
}

inline double md_index(const CMat& gamma_hat, const CMat& mixing) {
  if (gamma_hat.rows() != mixing.rows() || !gamma_hat.square() || !mixing.square())
    throw DimensionError("md_index: both matrices must be d x d");
  // singular mixing is rejected up front
  (void)inverse(mixing);
  return md_index_of_gain(gamma_hat * mixing);
}

} // namespace cbss

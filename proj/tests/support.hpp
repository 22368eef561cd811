#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls the library code it is meant to check.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "cbss/linalg.hpp"
#include "cbss/estimators.hpp"

namespace oracle {

using cbss::CMat;
using cbss::Complex;

inline CMat random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::normal_distribution<double> n;
  CMat m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = {n(rng), n(rng)};
  return m;
}

inline CMat random_hermitian(std::mt19937_64& rng, std::size_t d) {
  CMat a = random_matrix(rng, d, d);
  CMat h(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) h(i, j) = 0.5 * (a(i, j) + std::conj(a(j, i)));
  return h;
}

// Well-conditioned random mixing: identity plus a moderate perturbation.
inline CMat random_mixing(std::mt19937_64& rng, std::size_t d, double spread = 0.4) {
  std::uniform_real_distribution<double> u(-spread, spread);
  CMat a = CMat::identity(d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) += Complex{u(rng), u(rng)};
  return a;
}

inline CMat random_phase(std::mt19937_64& rng, std::size_t d) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  CMat j(d, d);
  for (std::size_t k = 0; k < d; ++k) j(k, k) = std::polar(1.0, u(rng));
  return j;
}

inline CMat random_permutation(std::mt19937_64& rng, std::size_t d) {
  std::vector<std::size_t> p(d);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::shuffle(p.begin(), p.end(), rng);
  CMat m(d, d);
  for (std::size_t k = 0; k < d; ++k) m(k, p[k]) = 1.0;
  return m;
}

inline std::vector<Complex> direct_dft(const std::vector<Complex>& x) {
  const std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex s{};
    for (std::size_t t = 0; t < n; ++t) {
      // reduce the exponent exactly before converting to an angle
      const auto e = static_cast<long double>((static_cast<unsigned long long>(t) * k) % n);
      const long double ang = -2.0L * std::numbers::pi_v<long double> * e / n;
      s += x[t] * Complex(static_cast<double>(std::cos(ang)), static_cast<double>(std::sin(ang)));
    }
    out[k] = s;
  }
  return out;
}

// Double loop over raw samples, mean from scratch.
inline CMat naive_autocov(const cbss::TimeSeries& x, std::size_t tau) {
  const std::size_t n = x.length(), d = x.dim();
  std::vector<Complex> mean(d);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t k = 0; k < d; ++k) mean[k] += x(t, k);
  for (auto& m : mean) m /= static_cast<double>(n);
  CMat s(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      Complex acc{};
      for (std::size_t t = 0; t + tau < n; ++t) acc += (x(t, i) - mean[i]) * std::conj(x(t + tau, j) - mean[j]);
      s(i, j) = acc / static_cast<double>(tau == 0 ? n - 1 : n - tau);
    }
  return s;
}

struct BruteAssignment {
  std::vector<std::size_t> perm;
  double total = std::numeric_limits<double>::infinity();
};

// Enumerates permutations in lexicographic order; keeps the first optimum.
inline BruteAssignment brute_force_assignment(const std::vector<std::vector<double>>& cost, double tie_tol = 1e-12) {
  const std::size_t n = cost.size();
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  BruteAssignment best;
  do {
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) t += cost[i][p[i]];
    if (t < best.total - tie_tol) {
      best.total = t;
      best.perm = p;
    }
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

// Hermite polynomial coefficients from Rodrigues' formula:
// He_k(x) e^{-x^2/2} = (-1)^k d^k/dx^k e^{-x^2/2}, so q_{k+1} = x q_k - q_k'.
inline std::vector<double> rodrigues_hermite(int k) {
  std::vector<double> q{1.0};
  for (int step = 0; step < k; ++step) {
    std::vector<double> next(q.size() + 1, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i) next[i + 1] += q[i];
    for (std::size_t i = 1; i < q.size(); ++i) next[i - 1] -= static_cast<double>(i) * q[i];
    q = next;
  }
  return q;
}

inline double eval_poly(const std::vector<double>& c, double x) {
  double s = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) s = s * x + c[i];
  return s;
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Exit status of a shell command.
inline int run(const std::string& cmd) {
  const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

inline std::string capture(const std::string& cmd) {
  std::string out;
  if (FILE* p = popen(cmd.c_str(), "r")) {
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    pclose(p);
  }
  return out;
}

} // namespace oracle

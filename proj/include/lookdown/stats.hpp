#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "lookdown/random.hpp"

namespace lookdown {

struct Summary {
  double mean = 0.0;
  double se = 0.0;
  std::size_t count = 0;
};

inline Summary summarize(std::span<const double> xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  if (xs.size() > 1) var /= (xs.size() - 1);
  s.se = std::sqrt(var / xs.size());
  return s;
}

inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  double pos = q * (xs.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, xs.size() - 1);
  double frac = pos - lo;
  return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

// Kolmogorov distribution tail, Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 l^2).
inline double kolmogorov_tail(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-12) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                             static_cast<double>(j) / b.size()));
  }
  double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
  double sq = std::sqrt(ne);
  KsResult r;
  r.statistic = d;
  r.p_value = kolmogorov_tail((sq + 0.12 + 0.11 / sq) * d);
  return r;
}

// Regularized upper incomplete gamma Q(a, x) via series / continued fraction.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) {
    // lower series
    double ap = a;
    double term = 1.0 / a;
    double sum = term;
    for (int k = 0; k < 500; ++k) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    double p = sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  // continued fraction for Q
  double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int k = 1; k <= 500; ++k) {
    double an = -static_cast<double>(k) * (k - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  double q = h * std::exp(-x + a * std::log(x) - std::lgamma(a));
  return std::clamp(q, 0.0, 1.0);
}

inline double chi_square_sf(double x, double dof) { return gamma_q(0.5 * dof, 0.5 * x); }

// Pearson chi-square on two frequency tables over shared categories.
inline double chi_square_two_sample_p(const std::vector<long long>& a,
                                      const std::vector<long long>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("chi2: category mismatch");
  double na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    na += a[k];
    nb += b[k];
  }
  double stat = 0.0;
  int dof = -1;
  for (std::size_t k = 0; k < a.size(); ++k) {
    double tot = a[k] + b[k];
    if (tot == 0.0) continue;
    double ea = tot * na / (na + nb);
    double eb = tot * nb / (na + nb);
    stat += (a[k] - ea) * (a[k] - ea) / ea + (b[k] - eb) * (b[k] - eb) / eb;
    ++dof;
  }
  if (dof < 1) return 1.0;
  return chi_square_sf(stat, dof);
}

// Energy-distance permutation test between two samples of feature vectors.
inline double energy_test_p(const std::vector<std::vector<double>>& a,
                            const std::vector<std::vector<double>>& b, int permutations,
                            Rng& rng) {
  auto dist = [](const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
    return std::sqrt(s);
  };
  std::vector<std::vector<double>> pool = a;
  pool.insert(pool.end(), b.begin(), b.end());
  std::size_t na = a.size(), nb = b.size(), n = pool.size();
  std::vector<std::vector<double>> dmat(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dmat[i][j] = dmat[j][i] = dist(pool[i], pool[j]);
  auto energy = [&](const std::vector<std::size_t>& idx) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = na; j < n; ++j) ab += dmat[idx[i]][idx[j]];
    for (std::size_t i = 0; i < na; ++i)
      for (std::size_t j = i + 1; j < na; ++j) aa += dmat[idx[i]][idx[j]];
    for (std::size_t i = na; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) bb += dmat[idx[i]][idx[j]];
    return 2.0 * ab / (na * nb) - 2.0 * aa / (na * na) - 2.0 * bb / (nb * nb);
  };
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  double observed = energy(idx);
  int exceed = 0;
  for (int p = 0; p < permutations; ++p) {
    for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    if (energy(idx) >= observed) ++exceed;
  }
  return static_cast<double>(exceed + 1) / (permutations + 1);
}

// Nodes and weights of Gauss-Legendre quadrature on [-1, 1].
inline void gauss_legendre(int order, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(order);
  weights.resize(order);
  for (int i = 0; i < order; ++i) {
    double x = std::cos(3.14159265358979323846 * (i + 0.75) / (order + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 0; k < order; ++k) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
      }
      double dp = order * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = x;
    double p0 = 1.0, p1 = 0.0;
    for (int k = 0; k < order; ++k) {
      double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * k + 1.0) * x * p1 - k * p2) / (k + 1.0);
    }
    double dp = order * (x * p0 - p1) / (x * x - 1.0);
    weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
}

}  // namespace lookdown

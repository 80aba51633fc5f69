#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lookdown/partition.hpp"
#include "lookdown/random.hpp"

namespace lookdown {

inline constexpr double kInfiniteRate = std::numeric_limits<double>::infinity();

// Point of the ranked simplex: finitely many positive, nonincreasing entries
// with sum at most one. The leftover 1-|x|_1 is the dust interval.
class SimplexPoint {
 public:
  SimplexPoint() = default;

  explicit SimplexPoint(std::vector<double> entries) : entries_(std::move(entries)) {
    double prev = std::numeric_limits<double>::infinity();
    for (double e : entries_) {
      if (!(e > 0.0)) throw std::invalid_argument("simplex point: entries must be positive");
      if (e > prev) throw std::invalid_argument("simplex point: entries must be nonincreasing");
      prev = e;
      l1_ += e;
      l2sq_ += e * e;
    }
    if (l1_ > 1.0 + 1e-15) throw std::invalid_argument("simplex point: entries sum above one");
  }

  const std::vector<double>& entries() const { return entries_; }
  int support() const { return static_cast<int>(entries_.size()); }
  double l1() const { return l1_; }
  double l2sq() const { return l2sq_; }
  double dust() const { return std::max(0.0, 1.0 - l1_); }

  // Member of the finite part of the simplex: finite support of full mass.
  bool is_finite_unit() const { return !entries_.empty() && l1_ >= 1.0 - 1e-12; }

 private:
  std::vector<double> entries_;
  double l1_ = 0.0;
  double l2sq_ = 0.0;
};

struct XiAtom {
  double weight = 0.0;
  SimplexPoint point;
};

enum class LambdaFamily { none, beta, uniform, dirac };
enum class DustClass { dust, no_dust };
enum class RateScope { changes_gamma, touches_level };

// Reproduction law Xi = a*delta_0 + sum_k w_k*delta_{x(k)}, or a closed-form
// Lambda family (beta / uniform / dirac) with unit mass. All event rates are
// derived from this object.
class XiMeasure {
 public:
  XiMeasure() = default;

  static XiMeasure kingman(double a = 1.0) {
    XiMeasure m;
    m.kingman_mass_ = a;
    return m;
  }

  static XiMeasure from_atoms(std::vector<XiAtom> atoms, double kingman_mass = 0.0) {
    XiMeasure m;
    m.kingman_mass_ = kingman_mass;
    for (auto& at : atoms) {
      if (!(at.weight > 0.0)) throw std::invalid_argument("xi measure: atom weight must be positive");
      if (at.point.support() == 0) throw std::invalid_argument("xi measure: atom point must be nonzero");
      if (at.point.support() > kMaxAtomSupport)
        throw std::invalid_argument("xi measure: atom support exceeds cap");
    }
    m.atoms_ = std::move(atoms);
    return m;
  }

  static XiMeasure beta_family(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("beta family: parameters must be positive");
    XiMeasure m;
    m.family_ = LambdaFamily::beta;
    m.fam_a_ = a;
    m.fam_b_ = b;
    return m;
  }

  static XiMeasure uniform_family() {
    XiMeasure m;
    m.family_ = LambdaFamily::uniform;
    return m;
  }

  static XiMeasure dirac_family(double p) {
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("dirac family: p must lie in (0,1]");
    XiMeasure m;
    m.family_ = LambdaFamily::dirac;
    m.fam_p_ = p;
    return m;
  }

  double kingman_mass() const { return kingman_mass_; }
  const std::vector<XiAtom>& atoms() const { return atoms_; }
  LambdaFamily family() const { return family_; }
  double family_beta_a() const { return fam_a_; }
  double family_beta_b() const { return fam_b_; }
  double family_dirac_p() const { return fam_p_; }

  bool is_zero() const {
    return kingman_mass_ == 0.0 && atoms_.empty() && family_ == LambdaFamily::none;
  }

  // Xi(Delta) = a + total atom/family mass; also the pair-event rate.
  double total_mass() const {
    double m = kingman_mass_;
    for (const auto& at : atoms_) m += at.weight;
    if (family_ != LambdaFamily::none) m += 1.0;
    return m;
  }

  // Rate of a single k-out-of-n merge for the Lambda part of a closed-form
  // family: the integral of x^(k-2) (1-x)^(n-k) against Lambda_0. Returned
  // as a log so that binomial prefactors can be folded in without overflow;
  // +inf flags a divergent integral, -inf a vanishing one.
  double family_block_log_rate(int k, int n) const {
    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    switch (family_) {
      case LambdaFamily::none:
        return neg_inf;
      case LambdaFamily::beta: {
        if (fam_a_ + k - 2 <= 0.0) return kInfiniteRate;
        return log_beta(fam_a_ + k - 2, fam_b_ + n - k) - log_beta(fam_a_, fam_b_);
      }
      case LambdaFamily::uniform: {
        if (k < 2) return kInfiniteRate;
        return log_beta(static_cast<double>(k - 1), static_cast<double>(n - k + 1));
      }
      case LambdaFamily::dirac: {
        double lg = (k - 2) * std::log(fam_p_);
        if (n > k) {
          if (fam_p_ >= 1.0) return neg_inf;
          lg += (n - k) * std::log1p(-fam_p_);
        }
        return lg;
      }
    }
    return neg_inf;
  }

  double family_block_rate(int k, int n) const {
    double lg = family_block_log_rate(k, n);
    if (std::isinf(lg) && lg > 0.0) return kInfiniteRate;
    return std::exp(lg);
  }

  // lambda_{n,sigma}: rate of reproduction events whose visible trace on
  // {1..n} equals sigma. Blocks of sigma occupy pairwise distinct simplex
  // entries; the remaining n - |union sigma| levels sit in the dust interval.
  double rate_sigma(int n, const SubsetSystem& sigma) const {
    if (sigma.n() != n) throw std::invalid_argument("rate_sigma: truncation mismatch");
    int ell = sigma.subset_count();
    if (ell == 0) throw std::invalid_argument("rate_sigma: empty system has no rate");
    std::vector<int> sizes;
    for (const auto& b : sigma.subsets()) sizes.push_back(static_cast<int>(b.size()));
    // canonical size order: the rate depends on sizes only, and a fixed
    // summation order keeps it bitwise permutation-invariant
    std::sort(sizes.begin(), sizes.end(), std::greater<int>());
    int covered = 0;
    for (int k : sizes) covered += k;

    double rate = 0.0;
    if (ell == 1) {
      if (sizes[0] == 1 && kingman_mass_ > 0.0) return kInfiniteRate;
      if (sizes[0] == 2) rate += kingman_mass_;
      if (family_ != LambdaFamily::none) {
        double fr = family_block_rate(sizes[0], n);
        if (std::isinf(fr)) return kInfiniteRate;
        rate += fr;
      }
    }
    for (const auto& at : atoms_) {
      double s = injective_power_sum(at.point, sizes, n - covered);
      rate += at.weight * s / at.point.l2sq();
    }
    return rate;
  }

  // lambda_pi for pi with at least one non-singleton block: the sum of
  // lambda_{n,sigma} over the systems sigma equivalent to pi, i.e. over all
  // dust / non-dust completions of pi's singletons.
  double rate_pi(int n, const Partition& pi) const {
    if (pi.n() != n) throw std::invalid_argument("rate_pi: truncation mismatch");
    std::vector<std::vector<int>> big;
    std::vector<int> singles;
    for (const auto& b : pi.blocks()) {
      if (b.size() >= 2)
        big.push_back(b);
      else
        singles.push_back(b.front());
    }
    if (big.empty()) throw std::invalid_argument("rate_pi: partition has no non-singleton block");

    double rate = 0.0;
    // Kingman part survives only for a bare pair.
    if (big.size() == 1 && big[0].size() == 2) rate += kingman_mass_;
    if (family_ != LambdaFamily::none && big.size() == 1)
      rate += family_block_rate(static_cast<int>(big[0].size()), n);

    if (!atoms_.empty()) {
      if (singles.size() > 24) throw std::invalid_argument("rate_pi: too many singletons to enumerate");
      std::vector<int> sizes;
      for (const auto& b : big) sizes.push_back(static_cast<int>(b.size()));
      int covered_big = 0;
      for (int k : sizes) covered_big += k;
      std::sort(sizes.begin(), sizes.end(), std::greater<int>());
      for (std::uint64_t mask = 0; mask < (1ULL << singles.size()); ++mask) {
        std::vector<int> all_sizes = sizes;
        int extra = 0;
        for (std::size_t i = 0; i < singles.size(); ++i)
          if (mask & (1ULL << i)) {
            all_sizes.push_back(1);
            ++extra;
          }
        for (const auto& at : atoms_) {
          double s = injective_power_sum(at.point, all_sizes, n - covered_big - extra);
          rate += at.weight * s / at.point.l2sq();
        }
      }
    }
    return rate;
  }

  // Rate of events visible at level 1: finite iff the model contains dust.
  double lonely_level_rate() const {
    if (kingman_mass_ > 0.0) return kInfiniteRate;
    double r = 0.0;
    for (const auto& at : atoms_) r += at.weight * at.point.l1() / at.point.l2sq();
    switch (family_) {
      case LambdaFamily::none:
        break;
      case LambdaFamily::beta:
        if (fam_a_ <= 1.0) return kInfiniteRate;
        r += std::exp(log_beta(fam_a_ - 1.0, fam_b_) - log_beta(fam_a_, fam_b_));
        break;
      case LambdaFamily::uniform:
        return kInfiniteRate;
      case LambdaFamily::dirac:
        r += 1.0 / fam_p_;
        break;
    }
    return r;
  }

  DustClass classify_dust() const {
    return std::isinf(lonely_level_rate()) ? DustClass::no_dust : DustClass::dust;
  }

  // Total rate of events visible at truncation n: events that change the
  // restricted partition (changes_gamma) or merely touch one of the first n
  // levels (touches_level; infinite without dust).
  double visible_rate(int n, RateScope scope) const {
    double rate = 0.0;
    if (scope == RateScope::changes_gamma) {
      rate += kingman_mass_ * 0.5 * n * (n - 1);
      for (const auto& at : atoms_)
        rate += at.weight * (1.0 - trivial_restriction_prob(at.point, n)) / at.point.l2sq();
      if (family_ != LambdaFamily::none) {
        for (int k = 2; k <= n; ++k) {
          double lg = family_block_log_rate(k, n);
          if (std::isinf(lg) && lg > 0.0) return kInfiniteRate;
          rate += std::exp(log_choose(n, k) + lg);
        }
      }
    } else {
      if (kingman_mass_ > 0.0) return kInfiniteRate;
      for (const auto& at : atoms_)
        rate += at.weight * (1.0 - std::pow(at.point.dust(), n)) / at.point.l2sq();
      switch (family_) {
        case LambdaFamily::none:
          break;
        case LambdaFamily::beta: {
          if (fam_a_ <= 1.0) return kInfiniteRate;
          // integral of x^{-2}(1-(1-x)^n) = sum_{j<n} integral of x^{-1}(1-x)^j
          for (int j = 0; j < n; ++j)
            rate += std::exp(log_beta(fam_a_ - 1.0, fam_b_ + j) - log_beta(fam_a_, fam_b_));
          break;
        }
        case LambdaFamily::uniform:
          return kInfiniteRate;
        case LambdaFamily::dirac:
          rate += (1.0 - std::pow(1.0 - fam_p_, n)) / (fam_p_ * fam_p_);
          break;
      }
    }
    return rate;
  }

  // Probability that a paintbox with ranked entries x leaves the partition
  // of {1..n} trivial: no simplex entry catches two of the n marks.
  static double trivial_restriction_prob(const SimplexPoint& x, int n) {
    const auto& e = x.entries();
    int m = x.support();
    double d = x.dust();
    // elementary symmetric polynomials of the entries
    std::vector<double> esym(m + 1, 0.0);
    esym[0] = 1.0;
    for (int i = 0; i < m; ++i)
      for (int j = std::min(i + 1, m); j >= 1; --j) esym[j] += e[i] * esym[j - 1];
    double p = 0.0;
    for (int j = 0; j <= std::min(n, m); ++j) {
      double falling = 1.0;  // n (n-1) ... (n-j+1)
      for (int t = 0; t < j; ++t) falling *= (n - t);
      int dust_marks = n - j;
      double dpow = (dust_marks == 0) ? 1.0 : std::pow(d, dust_marks);
      if (dpow == 0.0) continue;
      p += falling * esym[j] * dpow;
    }
    return std::min(p, 1.0);
  }

  static double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  }

  static double log_choose(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  }

  static double choose(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    return std::exp(log_choose(n, k));
  }

  static constexpr int kMaxAtomSupport = 12;

 private:
  // Sum over pairwise-distinct entry indices i_1,...,i_l of
  // x_{i_1}^{k_1} ... x_{i_l}^{k_l} * dust^{dust_marks}.
  static double injective_power_sum(const SimplexPoint& x, const std::vector<int>& sizes,
                                    int dust_marks) {
    double dpow = (dust_marks == 0) ? 1.0 : std::pow(x.dust(), dust_marks);
    if (dpow == 0.0) return 0.0;
    int m = x.support();
    int ell = static_cast<int>(sizes.size());
    if (ell > m) return 0.0;
    std::vector<char> used(m, 0);
    std::function<double(int)> rec = [&](int b) -> double {
      if (b == ell) return 1.0;
      double s = 0.0;
      for (int q = 0; q < m; ++q) {
        if (used[q]) continue;
        used[q] = 1;
        s += std::pow(x.entries()[q], sizes[b]) * rec(b + 1);
        used[q] = 0;
      }
      return s;
    };
    return dpow * rec(0);
  }

  double kingman_mass_ = 0.0;
  std::vector<XiAtom> atoms_;
  LambdaFamily family_ = LambdaFamily::none;
  double fam_a_ = 0.0;
  double fam_b_ = 0.0;
  double fam_p_ = 0.0;
};

// Paintbox trace on {1..n}: every group of marks landing in one simplex
// entry forms a subset (size one included; the family continues above the
// truncation), dust marks are left uncovered.
inline SubsetSystem paintbox_sigma(const SimplexPoint& x, int n, Rng& rng) {
  std::vector<std::vector<int>> groups(x.support());
  for (int i = 1; i <= n; ++i) {
    double u = rng.uniform();
    double acc = 0.0;
    for (int q = 0; q < x.support(); ++q) {
      acc += x.entries()[q];
      if (u < acc) {
        groups[q].push_back(i);
        break;
      }
    }
  }
  std::vector<std::vector<int>> nonempty;
  for (auto& g : groups)
    if (!g.empty()) nonempty.push_back(std::move(g));
  return SubsetSystem::from_subsets(n, std::move(nonempty));
}

// Paintbox partition of {1..n}: same-entry marks share a block, dust marks
// are singletons.
inline Partition paintbox_sample(const SimplexPoint& x, int n, Rng& rng) {
  return paintbox_sigma(x, n, rng).to_partition();
}

// JSON model descriptor:
//   {"kingman": a, "atoms": [{"w": w, "x": [..]}],
//    "family": {"beta": [a,b]} | {"uniform": {}} | {"dirac": p}}
inline nlohmann::json xi_to_json(const XiMeasure& m) {
  nlohmann::json j = nlohmann::json::object();
  if (m.kingman_mass() != 0.0) j["kingman"] = m.kingman_mass();
  if (!m.atoms().empty()) {
    auto arr = nlohmann::json::array();
    for (const auto& at : m.atoms()) arr.push_back({{"w", at.weight}, {"x", at.point.entries()}});
    j["atoms"] = arr;
  }
  switch (m.family()) {
    case LambdaFamily::none:
      break;
    case LambdaFamily::beta:
      j["family"] = {{"beta", {m.family_beta_a(), m.family_beta_b()}}};
      break;
    case LambdaFamily::uniform:
      j["family"] = {{"uniform", nlohmann::json::object()}};
      break;
    case LambdaFamily::dirac:
      j["family"] = {{"dirac", m.family_dirac_p()}};
      break;
  }
  return j;
}

inline XiMeasure xi_from_json(const nlohmann::json& j) {
  double a = j.value("kingman", 0.0);
  std::vector<XiAtom> atoms;
  if (j.contains("atoms")) {
    for (const auto& aj : j.at("atoms")) {
      XiAtom at;
      at.weight = aj.at("w").get<double>();
      at.point = SimplexPoint(aj.at("x").get<std::vector<double>>());
      atoms.push_back(std::move(at));
    }
  }
  if (j.contains("family")) {
    if (!atoms.empty())
      throw std::invalid_argument("xi model: family tag and atom list are exclusive");
    const auto& f = j.at("family");
    XiMeasure m;
    if (f.contains("beta")) {
      auto ab = f.at("beta").get<std::vector<double>>();
      if (ab.size() != 2) throw std::invalid_argument("xi model: beta needs [a,b]");
      m = XiMeasure::beta_family(ab[0], ab[1]);
    } else if (f.contains("uniform")) {
      m = XiMeasure::uniform_family();
    } else if (f.contains("dirac")) {
      m = XiMeasure::dirac_family(f.at("dirac").get<double>());
    } else {
      throw std::invalid_argument("xi model: unknown family tag");
    }
    if (a != 0.0) throw std::invalid_argument("xi model: family tag excludes a kingman part");
    return m;
  }
  return XiMeasure::from_atoms(std::move(atoms), a);
}

}  // namespace lookdown

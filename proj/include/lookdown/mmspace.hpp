#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "lookdown/matrix.hpp"
#include "lookdown/random.hpp"

namespace lookdown {

// Finite metric measure space, optionally with one nonnegative mark per
// point.
struct FiniteMMSpace {
  Matrix dist;
  std::vector<double> weights;
  std::vector<double> marks;  // empty when unmarked

  int size() const { return dist.n(); }
  bool marked() const { return !marks.empty(); }

  void validate(double weight_tol = 1e-12, double triangle_tol = 1e-9) const {
    if (static_cast<int>(weights.size()) != size())
      throw std::invalid_argument("mm space: weight length mismatch");
    if (marked() && static_cast<int>(marks.size()) != size())
      throw std::invalid_argument("mm space: mark length mismatch");
    double s = 0.0;
    for (double w : weights) {
      if (w < 0.0) throw std::invalid_argument("mm space: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > weight_tol)
      throw std::invalid_argument("mm space: weights do not sum to one");
    for (double u : marks)
      if (u < 0.0) throw std::invalid_argument("mm space: negative mark");
    if (dist.triangle_violation() > triangle_tol)
      throw std::invalid_argument("mm space: triangle inequality violated");
  }

  // Support view: zero-weight points removed. Keeping them matters for the
  // isometry class of the whole space, so callers choose.
  FiniteMMSpace support() const {
    FiniteMMSpace out;
    std::vector<int> keep;
    for (int i = 0; i < size(); ++i)
      if (weights[i] > 0.0) keep.push_back(i);
    out.dist = Matrix(static_cast<int>(keep.size()));
    for (std::size_t a = 0; a < keep.size(); ++a)
      for (std::size_t b = a + 1; b < keep.size(); ++b)
        out.dist.set(static_cast<int>(a) + 1, static_cast<int>(b) + 1,
                     dist.at(keep[a] + 1, keep[b] + 1));
    for (int i : keep) out.weights.push_back(weights[i]);
    if (marked())
      for (int i : keep) out.marks.push_back(marks[i]);
    return out;
  }
};

inline nlohmann::json space_to_json(const FiniteMMSpace& s) {
  nlohmann::json j;
  auto rows = nlohmann::json::array();
  for (int i = 1; i <= s.size(); ++i) {
    auto row = nlohmann::json::array();
    for (int k = 1; k <= s.size(); ++k) row.push_back(s.dist.at(i, k));
    rows.push_back(row);
  }
  j["dist"] = rows;
  j["w"] = s.weights;
  if (s.marked()) j["marks"] = s.marks;
  return j;
}

inline FiniteMMSpace space_from_json(const nlohmann::json& j) {
  FiniteMMSpace s;
  auto rows = j.at("dist");
  int n = static_cast<int>(rows.size());
  s.dist = Matrix(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != n)
      throw std::invalid_argument("mm space json: ragged distance matrix");
    for (int k = 0; k < n; ++k) s.dist.set(i + 1, k + 1, rows[i][k].get<double>());
  }
  s.weights = j.at("w").get<std::vector<double>>();
  if (j.contains("marks")) s.marks = j.at("marks").get<std::vector<double>>();
  s.validate();
  return s;
}

// Relation between the points of two spaces; indices are 0-based.
struct Correspondence {
  std::vector<std::pair<int, int>> pairs;
  bool full_cover = false;
};

// Largest discrepancy of paired distances; an empty or singleton relation
// has distortion zero.
inline double distortion(const Correspondence& rel, const FiniteMMSpace& a,
                         const FiniteMMSpace& b) {
  double worst = 0.0;
  for (const auto& [i, j] : rel.pairs)
    for (const auto& [k, l] : rel.pairs)
      worst = std::max(worst,
                       std::abs(a.dist.at(i + 1, k + 1) - b.dist.at(j + 1, l + 1)));
  return worst;
}

namespace detail {

// Max flow (Edmonds-Karp) on a dense capacity matrix; used for transport
// feasibility on small instances.
class MaxFlow {
 public:
  explicit MaxFlow(int nodes) : n_(nodes), cap_(static_cast<std::size_t>(nodes) * nodes, 0.0) {}

  void add(int u, int v, double c) { cap_[idx(u, v)] += c; }

  double run(int s, int t) {
    double flow = 0.0;
    while (true) {
      std::vector<int> parent(n_, -1);
      parent[s] = s;
      std::deque<int> q{s};
      while (!q.empty() && parent[t] < 0) {
        int u = q.front();
        q.pop_front();
        for (int v = 0; v < n_; ++v)
          if (parent[v] < 0 && cap_[idx(u, v)] > kEps) {
            parent[v] = u;
            q.push_back(v);
          }
      }
      if (parent[t] < 0) break;
      double aug = std::numeric_limits<double>::infinity();
      for (int v = t; v != s; v = parent[v]) aug = std::min(aug, cap_[idx(parent[v], v)]);
      for (int v = t; v != s; v = parent[v]) {
        cap_[idx(parent[v], v)] -= aug;
        cap_[idx(v, parent[v])] += aug;
      }
      flow += aug;
    }
    return flow;
  }

  static constexpr double kEps = 1e-14;

 private:
  std::size_t idx(int u, int v) const { return static_cast<std::size_t>(u) * n_ + v; }
  int n_;
  std::vector<double> cap_;
};

// Largest coupling mass placeable on the allowed cells.
inline double max_coupling_mass(const std::vector<double>& p, const std::vector<double>& q,
                                const std::vector<std::pair<int, int>>& cells) {
  int na = static_cast<int>(p.size()), nb = static_cast<int>(q.size());
  MaxFlow mf(na + nb + 2);
  int src = na + nb, dst = na + nb + 1;
  for (int i = 0; i < na; ++i) mf.add(src, i, p[i]);
  for (int j = 0; j < nb; ++j) mf.add(na + j, dst, q[j]);
  for (const auto& [i, j] : cells) mf.add(i, na + j, 2.0);
  return mf.run(src, dst);
}

}  // namespace detail

// Exact Prohorov distance between two weight vectors on a shared finite
// space. The objective is piecewise constant between the pairwise distances,
// and on each piece the smallest admissible eps is either the piece boundary
// or the unmatched mass, so a scan over those candidates is exact. The
// strict form of the coupling condition makes this an infimum; the infimum
// value is returned even when it is not attained.
inline double prohorov_distance(const std::vector<double>& p, const std::vector<double>& q,
                                const Matrix& dist) {
  int m = dist.n();
  if (static_cast<int>(p.size()) != m || static_cast<int>(q.size()) != m)
    throw std::invalid_argument("prohorov: weight length mismatch");
  std::vector<double> levels{0.0};
  for (int i = 1; i <= m; ++i)
    for (int j = i + 1; j <= m; ++j) levels.push_back(dist.at(i, j));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < levels.size(); ++k) {
    double eps = levels[k];
    std::vector<std::pair<int, int>> cells;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        if (dist.at(i + 1, j + 1) <= eps) cells.emplace_back(i, j);
    double unmatched = std::max(0.0, 1.0 - detail::max_coupling_mass(p, q, cells));
    double next = (k + 1 < levels.size()) ? levels[k + 1]
                                          : std::numeric_limits<double>::infinity();
    if (unmatched < eps + 1e-15)
      best = std::min(best, eps);
    else if (unmatched < next)
      best = std::min(best, unmatched);
  }
  return best;
}

struct GpResult {
  double value = 0.0;   // exact value, or the certified upper bound
  double lower = 0.0;   // equal to value in exact mode
  double upper = 0.0;
  bool exact = false;
};

inline constexpr int kExactSolverMaxPoints = 6;

namespace detail {

struct GpProblem {
  const FiniteMMSpace* a;
  const FiniteMMSpace* b;
  bool marked;
  bool need_cover;  // full correspondence (Hausdorff part)
};

// Feasibility at a fixed eps: a pairwise-compatible cell set (distortion at
// most 2 eps) carrying coupling mass at least 1 - eps, covering both sides
// when required. Branch and bound over cells with a max-flow upper bound.
inline bool gp_feasible(const GpProblem& prob, double eps) {
  const auto& A = *prob.a;
  const auto& B = *prob.b;
  int na = A.size(), nb = B.size();
  std::vector<std::pair<int, int>> cells;
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j) {
      if (prob.marked && !prob.need_cover && std::abs(A.marks[i] - B.marks[j]) > eps + 1e-15)
        continue;  // off-band cells never help a relation without cover duty
      cells.emplace_back(i, j);
    }

  auto compatible = [&](const std::pair<int, int>& c1, const std::pair<int, int>& c2) {
    return std::abs(A.dist.at(c1.first + 1, c2.first + 1) -
                    B.dist.at(c1.second + 1, c2.second + 1)) <= 2.0 * eps + 1e-15;
  };
  auto in_band = [&](const std::pair<int, int>& c) {
    return !prob.marked || std::abs(A.marks[c.first] - B.marks[c.second]) <= eps + 1e-15;
  };

  double need = 1.0 - eps - 1e-12;

  std::function<bool(std::vector<std::pair<int, int>>&, std::vector<std::pair<int, int>>&)> rec =
      [&](std::vector<std::pair<int, int>>& chosen,
          std::vector<std::pair<int, int>>& candidates) -> bool {
    // cover pruning: every point must be reachable from chosen or candidates
    if (prob.need_cover) {
      std::vector<char> rowc(na, 0), colc(nb, 0);
      for (const auto& c : chosen) rowc[c.first] = colc[c.second] = 1;
      for (const auto& c : candidates) rowc[c.first] = colc[c.second] = 1;
      for (int i = 0; i < na; ++i)
        if (!rowc[i]) return false;
      for (int j = 0; j < nb; ++j)
        if (!colc[j]) return false;
    }
    // mass bound on everything still available
    std::vector<std::pair<int, int>> avail;
    for (const auto& c : chosen)
      if (in_band(c)) avail.push_back(c);
    for (const auto& c : candidates)
      if (in_band(c)) avail.push_back(c);
    if (max_coupling_mass(A.weights, B.weights, avail) < need) return false;

    if (candidates.empty()) {
      if (prob.need_cover) {
        std::vector<char> rowc(na, 0), colc(nb, 0);
        for (const auto& c : chosen) rowc[c.first] = colc[c.second] = 1;
        for (int i = 0; i < na; ++i)
          if (!rowc[i]) return false;
        for (int j = 0; j < nb; ++j)
          if (!colc[j]) return false;
      }
      std::vector<std::pair<int, int>> banded;
      for (const auto& c : chosen)
        if (in_band(c)) banded.push_back(c);
      return max_coupling_mass(A.weights, B.weights, banded) >= need;
    }

    std::pair<int, int> pick = candidates.back();
    candidates.pop_back();
    // include
    {
      std::vector<std::pair<int, int>> sub;
      for (const auto& c : candidates)
        if (compatible(pick, c)) sub.push_back(c);
      chosen.push_back(pick);
      if (rec(chosen, sub)) return true;
      chosen.pop_back();
    }
    // exclude
    if (rec(chosen, candidates)) return true;
    candidates.push_back(pick);
    return false;
  };

  // heaviest cells explored first: feasible sets are found early and the
  // mass bound prunes the rest
  std::sort(cells.begin(), cells.end(), [&](const auto& c1, const auto& c2) {
    return std::min(A.weights[c1.first], B.weights[c1.second]) <
           std::min(A.weights[c2.first], B.weights[c2.second]);
  });
  std::vector<std::pair<int, int>> chosen;
  return rec(chosen, cells);
}

inline std::vector<double> gp_candidates(const GpProblem& prob) {
  const auto& A = *prob.a;
  const auto& B = *prob.b;
  std::vector<double> cand{0.0};
  for (int i = 1; i <= A.size(); ++i)
    for (int k = 1; k <= A.size(); ++k)
      for (int j = 1; j <= B.size(); ++j)
        for (int l = 1; l <= B.size(); ++l)
          cand.push_back(0.5 * std::abs(A.dist.at(i, k) - B.dist.at(j, l)));
  if (prob.marked)
    for (int i = 0; i < A.size(); ++i)
      for (int j = 0; j < B.size(); ++j) cand.push_back(std::abs(A.marks[i] - B.marks[j]));
  // mass thresholds: subset weight differences
  auto partial_sums = [](const std::vector<double>& w) {
    std::vector<double> sums{0.0};
    for (double x : w) {
      std::size_t sz = sums.size();
      for (std::size_t k = 0; k < sz; ++k) sums.push_back(sums[k] + x);
    }
    std::sort(sums.begin(), sums.end());
    sums.erase(std::unique(sums.begin(), sums.end()), sums.end());
    return sums;
  };
  auto pa = partial_sums(A.weights);
  auto pb = partial_sums(B.weights);
  for (double x : pa)
    for (double y : pb) {
      double v = x - y;
      if (v > 0.0 && v <= 1.0) cand.push_back(v);
      v = y - x;
      if (v > 0.0 && v <= 1.0) cand.push_back(v);
    }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  return cand;
}

inline double gp_exact(const GpProblem& prob) {
  auto cand = gp_candidates(prob);
  std::size_t lo = 0, hi = cand.size() - 1;
  if (gp_feasible(prob, cand[lo])) return cand[lo];
  if (!gp_feasible(prob, cand[hi]))
    throw std::runtime_error("gp solver: no feasible candidate (unexpected)");
  while (lo + 1 < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (gp_feasible(prob, cand[mid]))
      hi = mid;
    else
      lo = mid;
  }
  return cand[hi];
}

// Smallest eps at which a fixed relation carries enough band mass. The
// relevant thresholds are the relation's half distortion, its mark gaps, and
// the unmatched-mass values those produce.
inline double relation_value(const GpProblem& prob, const std::vector<std::pair<int, int>>& rel) {
  const auto& A = *prob.a;
  const auto& B = *prob.b;
  Correspondence c{rel, prob.need_cover};
  double half_dis = 0.5 * distortion(c, A, B);
  std::vector<double> cand{half_dis};
  if (prob.marked)
    for (const auto& [i, j] : rel) {
      double g = std::abs(A.marks[i] - B.marks[j]);
      if (g > half_dis) cand.push_back(g);
    }
  auto unmatched_at = [&](double eps) {
    std::vector<std::pair<int, int>> banded;
    for (const auto& p : rel)
      if (!prob.marked || std::abs(A.marks[p.first] - B.marks[p.second]) <= eps + 1e-15)
        banded.push_back(p);
    return std::max(0.0, 1.0 - max_coupling_mass(A.weights, B.weights, banded));
  };
  std::size_t base = cand.size();
  for (std::size_t k = 0; k < base; ++k) cand.push_back(std::max(cand[k], unmatched_at(cand[k])));
  std::sort(cand.begin(), cand.end());
  for (double eps : cand) {
    if (eps < half_dis) continue;
    if (unmatched_at(eps) <= eps + 1e-12) return eps;
  }
  return std::max(half_dis, unmatched_at(half_dis));
}

// Greedy alignment by weight-profile similarity: a valid relation, hence a
// certified upper bound.
inline std::vector<std::pair<int, int>> greedy_relation(const FiniteMMSpace& A,
                                                        const FiniteMMSpace& B, bool need_cover) {
  auto profile = [](const FiniteMMSpace& s, int i) {
    std::vector<double> prof;
    for (int k = 1; k <= s.size(); ++k) prof.push_back(s.dist.at(i + 1, k));
    std::sort(prof.begin(), prof.end());
    return prof;
  };
  auto prof_dist = [](const std::vector<double>& x, const std::vector<double>& y) {
    double d = 0.0;
    std::size_t n = std::max(x.size(), y.size());
    for (std::size_t k = 0; k < n; ++k) {
      double xv = k < x.size() ? x[k] : x.back();
      double yv = k < y.size() ? y[k] : y.back();
      d = std::max(d, std::abs(xv - yv));
    }
    return d;
  };
  std::vector<std::pair<int, int>> rel;
  std::vector<char> covered_b(B.size(), 0);
  for (int i = 0; i < A.size(); ++i) {
    int best = 0;
    double bestd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < B.size(); ++j) {
      double d = prof_dist(profile(A, i), profile(B, j));
      if (d < bestd) {
        bestd = d;
        best = j;
      }
    }
    rel.emplace_back(i, best);
    covered_b[best] = 1;
  }
  if (need_cover)
    for (int j = 0; j < B.size(); ++j) {
      if (covered_b[j]) continue;
      int best = 0;
      double bestd = std::numeric_limits<double>::infinity();
      for (int i = 0; i < A.size(); ++i) {
        double d = prof_dist(profile(A, i), profile(B, j));
        if (d < bestd) {
          bestd = d;
          best = i;
        }
      }
      rel.emplace_back(best, j);
    }
  return rel;
}

// Distance-distribution discrepancy: half the Prohorov distance between the
// two pairwise-distance laws lower-bounds the relation characterization.
inline double distance_law_lower_bound(const FiniteMMSpace& A, const FiniteMMSpace& B) {
  auto law = [](const FiniteMMSpace& s) {
    std::vector<std::pair<double, double>> vw;
    for (int i = 0; i < s.size(); ++i)
      for (int j = 0; j < s.size(); ++j)
        vw.emplace_back(s.dist.at(i + 1, j + 1), s.weights[i] * s.weights[j]);
    std::sort(vw.begin(), vw.end());
    std::vector<std::pair<double, double>> out;
    for (const auto& [v, w] : vw) {
      if (!out.empty() && out.back().first == v)
        out.back().second += w;
      else
        out.emplace_back(v, w);
    }
    return out;
  };
  auto la = law(A), lb = law(B);
  // shared support
  std::vector<double> values;
  for (const auto& [v, w] : la) values.push_back(v);
  for (const auto& [v, w] : lb) values.push_back(v);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  double slack = 0.0;
  if (values.size() > 80) {
    // coarsen to keep the scan tractable; the rounding radius is refunded
    double lo = values.front(), hi = values.back();
    double width = (hi - lo) / 64.0;
    slack = width;
    std::vector<double> coarse;
    for (int k = 0; k <= 64; ++k) coarse.push_back(lo + k * width);
    auto snap = [&](double v) {
      double idx = std::floor((v - lo) / width);
      return lo + std::min(idx, 64.0) * width;
    };
    auto apply = [&](std::vector<std::pair<double, double>>& l) {
      std::vector<std::pair<double, double>> out;
      for (auto& [v, w] : l) {
        double sv = snap(v);
        if (!out.empty() && out.back().first == sv)
          out.back().second += w;
        else
          out.emplace_back(sv, w);
      }
      l = std::move(out);
    };
    apply(la);
    apply(lb);
    values = coarse;
  }
  int m = static_cast<int>(values.size());
  Matrix dist(m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) dist.set(i + 1, j + 1, std::abs(values[i] - values[j]));
  std::vector<double> p(m, 0.0), q(m, 0.0);
  auto place = [&](const std::vector<std::pair<double, double>>& l, std::vector<double>& w) {
    for (const auto& [v, mass] : l) {
      auto it = std::lower_bound(values.begin(), values.end(), v);
      w[static_cast<std::size_t>(it - values.begin())] += mass;
    }
  };
  place(la, p);
  place(lb, q);
  double d = prohorov_distance(p, q, dist);
  return std::max(0.0, 0.5 * (d - slack));
}

inline GpResult gp_solve(const FiniteMMSpace& a_in, const FiniteMMSpace& b_in, bool marked,
                         bool need_cover, bool drop_zero_weight) {
  FiniteMMSpace a = drop_zero_weight ? a_in.support() : a_in;
  FiniteMMSpace b = drop_zero_weight ? b_in.support() : b_in;
  if (marked && (!a.marked() || !b.marked()))
    throw std::invalid_argument("gp solver: marked comparison needs marks on both spaces");
  if (!marked) {
    a.marks.clear();
    b.marks.clear();
  }
  GpProblem prob{&a, &b, marked, need_cover};
  GpResult res;
  if (a.size() <= kExactSolverMaxPoints && b.size() <= kExactSolverMaxPoints) {
    res.value = gp_exact(prob);
    res.lower = res.upper = res.value;
    res.exact = true;
    return res;
  }
  res.exact = false;
  res.upper = relation_value(prob, greedy_relation(a, b, need_cover));
  res.lower = distance_law_lower_bound(a, b);
  res.lower = std::min(res.lower, res.upper);
  res.value = res.upper;
  return res;
}

}  // namespace detail

// Gromov-Prohorov distance (marked when both spaces carry marks and `marked`
// is set): exact for at most kExactSolverMaxPoints points per side, a
// certified bound pair beyond that.
inline GpResult gromov_prohorov_small(const FiniteMMSpace& a, const FiniteMMSpace& b,
                                      bool marked = false, bool drop_zero_weight = true) {
  return detail::gp_solve(a, b, marked, /*need_cover=*/false, drop_zero_weight);
}

// Gromov-Hausdorff-Prohorov distance: full correspondences, unmarked.
inline GpResult ghp_small(const FiniteMMSpace& a, const FiniteMMSpace& b,
                          bool drop_zero_weight = true) {
  return detail::gp_solve(a, b, /*marked=*/false, /*need_cover=*/true, drop_zero_weight);
}

struct SampledMatrix {
  Matrix dist;
  std::vector<double> marks;  // empty when the space is unmarked
};

// k iid weight-distributed point draws and their pairwise distances.
inline SampledMatrix sample_distance_matrix(const FiniteMMSpace& s, int k, Rng& rng) {
  if (k < 1) throw std::invalid_argument("sample_distance_matrix: k must be positive");
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i)
    idx[i] = static_cast<int>(rng.discrete(std::span<const double>(s.weights)));
  SampledMatrix out;
  out.dist = Matrix(k);
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j) out.dist.set(i + 1, j + 1, s.dist.at(idx[i] + 1, idx[j] + 1));
  if (s.marked()) {
    out.marks.resize(k);
    for (int i = 0; i < k; ++i) out.marks[i] = s.marks[idx[i]];
  }
  return out;
}

// Finite stand-in for the reconstruction maps: uniform weights on the matrix
// points, zero-distance points merged (marks must agree exactly to merge).
inline FiniteMMSpace finite_space_from_matrix(const Matrix& rho,
                                              const std::vector<double>* marks = nullptr) {
  rho.validate_semimetric();
  int k = rho.n();
  if (marks && static_cast<int>(marks->size()) != k)
    throw std::invalid_argument("finite_space_from_matrix: mark length mismatch");
  std::vector<int> rep;  // representative original index per merged point
  std::vector<double> w;
  std::vector<int> assign(k, -1);
  for (int i = 0; i < k; ++i) {
    for (std::size_t r = 0; r < rep.size(); ++r) {
      bool same = rho.at(rep[r] + 1, i + 1) == 0.0;
      if (same && marks) same = (*marks)[rep[r]] == (*marks)[i];
      if (same) {
        assign[i] = static_cast<int>(r);
        break;
      }
    }
    if (assign[i] < 0) {
      assign[i] = static_cast<int>(rep.size());
      rep.push_back(i);
      w.push_back(0.0);
    }
    w[assign[i]] += 1.0 / k;
  }
  FiniteMMSpace out;
  out.dist = Matrix(static_cast<int>(rep.size()));
  for (std::size_t a = 0; a < rep.size(); ++a)
    for (std::size_t b = a + 1; b < rep.size(); ++b)
      out.dist.set(static_cast<int>(a) + 1, static_cast<int>(b) + 1,
                   rho.at(rep[a] + 1, rep[b] + 1));
  out.weights = std::move(w);
  if (marks)
    for (int r : rep) out.marks.push_back((*marks)[r]);
  return out;
}

// Ultrametric and four-point diagnostics with worst violations.
struct TreeCheckReport {
  bool ultrametric = true;
  bool four_point = true;
  double ultrametric_violation = 0.0;
  double four_point_violation = 0.0;
};

inline TreeCheckReport tree_checks(const Matrix& rho, double tol = 1e-9) {
  TreeCheckReport rep;
  int n = rho.n();
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k) {
        double v = rho.at(i, k) - std::max(rho.at(i, j), rho.at(j, k));
        rep.ultrametric_violation = std::max(rep.ultrametric_violation, v);
      }
  for (int x = 1; x <= n; ++x)
    for (int y = 1; y <= n; ++y)
      for (int z = 1; z <= n; ++z)
        for (int t = 1; t <= n; ++t) {
          double lhs = rho.at(x, y) + rho.at(z, t);
          double rhs = std::max(rho.at(x, z) + rho.at(y, t), rho.at(y, z) + rho.at(x, t));
          rep.four_point_violation = std::max(rep.four_point_violation, lhs - rhs);
        }
  rep.ultrametric = rep.ultrametric_violation <= tol;
  rep.four_point = rep.four_point_violation <= tol;
  return rep;
}

}  // namespace lookdown

#pragma once

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lookdown/matrix.hpp"
#include "lookdown/partition.hpp"
#include "lookdown/random.hpp"
#include "lookdown/xi_measure.hpp"

namespace lookdown {

// Reproduction event restricted to n levels. `sigma` holds one subset per
// simplex entry that caught at least one mark (singletons included);
// `full_restriction` is the induced partition of {1..n}.
struct ReproductionEvent {
  static constexpr int kOriginKingman = -1;
  static constexpr int kOriginFamily = -2;
  static constexpr int kOriginCategorical = -3;

  double time = 0.0;
  SubsetSystem sigma;
  Partition full_restriction;
  int origin = kOriginKingman;  // >= 0: atom index
  bool atom_finite = false;

  bool is_atom_origin() const { return origin != kOriginKingman && origin != kOriginCategorical; }

  std::string origin_text() const {
    if (origin == kOriginKingman) return "kingman";
    if (origin == kOriginFamily) return "family";
    if (origin == kOriginCategorical) return "categorical";
    return "atom:" + std::to_string(origin);
  }
};

enum class GenerationMode { thinning, categorical };

// Time-ordered reproduction events visible at truncation n on a window.
// Identical (model, n, window, scope, seed) reproduce the stream bit for bit.
struct EventStream {
  int n = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  RateScope scope = RateScope::changes_gamma;
  SeedSpec seed;
  std::vector<ReproductionEvent> events;

  // Events in (s, t], ascending; binary search on the sorted times.
  std::size_t first_after(double s) const {
    std::size_t lo = 0, hi = events.size();
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (events[mid].time <= s)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

  // Lossless consistency map to a lower truncation: intersect every event
  // with {1..m} and drop the ones no longer visible for the scope.
  EventStream restrict(int m) const {
    if (m > n) throw std::invalid_argument("event stream: cannot restrict upward");
    EventStream out;
    out.n = m;
    out.t_start = t_start;
    out.t_end = t_end;
    out.scope = scope;
    out.seed = seed;
    for (const auto& ev : events) {
      SubsetSystem s = ev.sigma.restrict(m);
      if (scope == RateScope::touches_level) {
        if (s.empty()) continue;
      } else {
        if (s.to_partition().is_trivial()) continue;
      }
      ReproductionEvent r;
      r.time = ev.time;
      r.full_restriction = s.to_partition();
      r.sigma = std::move(s);
      r.origin = ev.origin;
      r.atom_finite = ev.atom_finite;
      out.events.push_back(std::move(r));
    }
    return out;
  }
};

namespace detail {

inline ReproductionEvent make_pair_event(double t, int n, int i, int j) {
  ReproductionEvent ev;
  ev.time = t;
  ev.sigma = SubsetSystem::from_subsets(n, {{i, j}});
  ev.full_restriction = ev.sigma.to_partition();
  ev.origin = ReproductionEvent::kOriginKingman;
  return ev;
}

// Weights for the exact single-block sampler of a closed-form Lambda family:
// index k-2 (changes_gamma) or k-1 (touches_level) holds C(n,k) * lambda_k.
inline std::vector<double> family_merge_weights(const XiMeasure& xi, int n, RateScope scope) {
  std::vector<double> w;
  int kmin = scope == RateScope::changes_gamma ? 2 : 1;
  for (int k = kmin; k <= n; ++k) {
    double lg = xi.family_block_log_rate(k, n);
    if (std::isinf(lg) && lg > 0.0)
      throw std::invalid_argument("event stream: divergent family rate");
    w.push_back(std::exp(XiMeasure::log_choose(n, k) + lg));
  }
  return w;
}

}  // namespace detail

// Poisson stream of reproduction events on (t_start, t_end], restricted to n
// levels. Atom events are thinned: candidates fire at the unrestricted atom
// rate and invisible restrictions are dropped, which reproduces the
// restricted law exactly. Closed-form families use an exact single-block
// sampler instead.
inline EventStream generate_events(const XiMeasure& xi, int n, double t_start, double t_end,
                                   RateScope scope, SeedSpec seed,
                                   GenerationMode mode = GenerationMode::thinning) {
  if (n < 1) throw std::invalid_argument("event stream: n must be positive");
  if (t_end < t_start) throw std::invalid_argument("event stream: empty window");
  double visible = xi.visible_rate(n, scope);
  if (std::isinf(visible)) throw std::invalid_argument("event stream: infinite visible rate");

  EventStream stream;
  stream.n = n;
  stream.t_start = t_start;
  stream.t_end = t_end;
  stream.scope = scope;
  stream.seed = seed;
  if (xi.is_zero()) return stream;

  Rng rng = seed.make_rng();

  if (mode == GenerationMode::categorical) {
    if (n > 8) throw std::invalid_argument("event stream: categorical mode capped at n = 8");
    // Tabulate the visible event law directly.
    std::vector<ReproductionEvent> shapes;
    std::vector<double> weights;
    if (scope == RateScope::changes_gamma) {
      for (const auto& pi : enumerate_partitions(n)) {
        if (pi.is_trivial()) continue;
        double w = xi.rate_pi(n, pi);
        if (w <= 0.0) continue;
        ReproductionEvent ev;
        ev.full_restriction = pi;
        ev.sigma = pi.restrict_non_singleton(n);
        ev.origin = ReproductionEvent::kOriginCategorical;
        shapes.push_back(std::move(ev));
        weights.push_back(w);
      }
    } else {
      for (const auto& s : enumerate_subset_systems(n)) {
        if (s.empty()) continue;
        double w = xi.rate_sigma(n, s);
        if (w <= 0.0) continue;
        ReproductionEvent ev;
        ev.sigma = s;
        ev.full_restriction = s.to_partition();
        ev.origin = ReproductionEvent::kOriginCategorical;
        shapes.push_back(std::move(ev));
        weights.push_back(w);
      }
    }
    double total = 0.0;
    for (double w : weights) total += w;
    double t = t_start;
    while (true) {
      double dt = rng.exponential(total);
      while (dt == 0.0) dt = rng.exponential(total);
      t += dt;
      if (t > t_end) break;
      ReproductionEvent ev = shapes[rng.discrete(weights)];
      ev.time = t;
      stream.events.push_back(std::move(ev));
    }
    return stream;
  }

  // Candidate components: kingman pairs, thinned atoms, exact family merges.
  std::vector<double> comp_rates;
  std::vector<int> comp_kind;  // -1 kingman, -2 family, >=0 atom index
  if (xi.kingman_mass() > 0.0) {
    comp_rates.push_back(xi.kingman_mass() * 0.5 * n * (n - 1));
    comp_kind.push_back(ReproductionEvent::kOriginKingman);
  }
  for (std::size_t k = 0; k < xi.atoms().size(); ++k) {
    comp_rates.push_back(xi.atoms()[k].weight / xi.atoms()[k].point.l2sq());
    comp_kind.push_back(static_cast<int>(k));
  }
  std::vector<double> fam_weights;
  int fam_kmin = scope == RateScope::changes_gamma ? 2 : 1;
  if (xi.family() != LambdaFamily::none) {
    fam_weights = detail::family_merge_weights(xi, n, scope);
    double fam_total = 0.0;
    for (double w : fam_weights) fam_total += w;
    comp_rates.push_back(fam_total);
    comp_kind.push_back(ReproductionEvent::kOriginFamily);
  }
  double total = 0.0;
  for (double r : comp_rates) total += r;
  if (total <= 0.0) return stream;

  double t = t_start;
  while (true) {
    double dt = rng.exponential(total);
    while (dt == 0.0) dt = rng.exponential(total);
    t += dt;
    if (t > t_end) break;
    int kind = comp_kind[rng.discrete(comp_rates)];
    if (kind == ReproductionEvent::kOriginKingman) {
      std::uint64_t pick = rng.below(static_cast<std::uint64_t>(n) * (n - 1) / 2);
      int i = 1;
      while (pick >= static_cast<std::uint64_t>(n - i)) {
        pick -= static_cast<std::uint64_t>(n - i);
        ++i;
      }
      int j = i + 1 + static_cast<int>(pick);
      stream.events.push_back(detail::make_pair_event(t, n, i, j));
    } else if (kind == ReproductionEvent::kOriginFamily) {
      int k = fam_kmin + static_cast<int>(rng.discrete(fam_weights));
      auto idx = rng.sample_distinct(n, k);
      std::vector<int> subset(idx.size());
      for (std::size_t q = 0; q < idx.size(); ++q) subset[q] = idx[q] + 1;
      ReproductionEvent ev;
      ev.time = t;
      ev.sigma = SubsetSystem::from_subsets(n, {subset});
      ev.full_restriction = ev.sigma.to_partition();
      ev.origin = ReproductionEvent::kOriginFamily;
      ev.atom_finite = xi.family() == LambdaFamily::dirac && xi.family_dirac_p() >= 1.0;
      stream.events.push_back(std::move(ev));
    } else {
      const XiAtom& atom = xi.atoms()[kind];
      SubsetSystem sigma = paintbox_sigma(atom.point, n, rng);
      bool visible_event = scope == RateScope::touches_level
                               ? !sigma.empty()
                               : !sigma.to_partition().is_trivial();
      if (!visible_event) continue;  // thinning
      ReproductionEvent ev;
      ev.time = t;
      ev.full_restriction = sigma.to_partition();
      ev.sigma = std::move(sigma);
      ev.origin = kind;
      ev.atom_finite = atom.point.is_finite_unit();
      stream.events.push_back(std::move(ev));
    }
  }
  return stream;
}

// Stream on (-lookback, horizon] for equilibrium sampling.
inline EventStream generate_two_sided(const XiMeasure& xi, int n, double lookback, double horizon,
                                      RateScope scope, SeedSpec seed) {
  return generate_events(xi, n, -lookback, horizon, scope, seed);
}

// Newborn / involvement counts and the running frequency sums over
// atom-origin events. Family-origin events carry no explicit simplex point
// and are excluded from the U / V sums.
struct EventDiagnostics {
  long long newborn = 0;        // sum of b_l over events
  long long involved = 0;       // sum of b_(l) over events
  double sum_l2sq = 0.0;        // U
  double sum_l1 = 0.0;          // V
};

inline EventDiagnostics event_diagnostics(const EventStream& stream, const XiMeasure& xi,
                                          int level) {
  if (level > stream.n) throw std::invalid_argument("diagnostics: level exceeds truncation");
  EventDiagnostics d;
  for (const auto& ev : stream.events) {
    Partition restricted = ev.full_restriction.restrict(level);
    d.newborn += level - restricted.block_count();
    d.involved += ev.sigma.restrict(level).covered_count();
    if (ev.origin >= 0) {
      const auto& pt = xi.atoms()[ev.origin].point;
      d.sum_l2sq += pt.l2sq();
      d.sum_l1 += pt.l1();
    }
  }
  return d;
}

// CSV dump: time, origin, sigma (partition text encoding), atom_finite.
inline void write_events_csv(std::ostream& out, const EventStream& stream) {
  out << "time,origin,sigma,atom_finite\n";
  for (const auto& ev : stream.events) {
    out << format_double(ev.time) << ',' << ev.origin_text() << ',' << encode_subsets(ev.sigma)
        << ',' << (ev.atom_finite ? 1 : 0) << "\n";
  }
}

}  // namespace lookdown

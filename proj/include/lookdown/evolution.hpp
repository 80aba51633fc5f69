#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lookdown/event_stream.hpp"
#include "lookdown/matrix.hpp"
#include "lookdown/partition.hpp"

namespace lookdown {

// Pathwise distance-matrix state. Between events every off-diagonal entry
// grows with slope 2, so entries are stored as offsets against 2t: growth is
// a clock advance, and an event only rewrites the rows of newborn levels.
// Levels map to matrix slots through a permutation; merged levels keep
// exact -2*tau offsets, which makes flow-partition thresholds exact.
class PlainState {
 public:
  PlainState() = default;

  static PlainState zero(int n) { return PlainState(Matrix(n)); }

  explicit PlainState(const Matrix& rho0, double time = 0.0) : n_(rho0.n()), time_(time) {
    slot_.resize(n_ + 1);
    for (int i = 1; i <= n_; ++i) slot_[i] = i - 1;
    base_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    for (int i = 1; i <= n_; ++i)
      for (int j = 1; j <= n_; ++j)
        if (i != j) base_ref(i - 1, j - 1) = rho0.at(i, j) - 2.0 * time;
  }

  int n() const { return n_; }
  double time() const { return time_; }

  double distance(int i, int j) const {
    if (i == j) return 0.0;
    return base(slot_[i], slot_[j]) + 2.0 * time_;
  }

  // Threshold offset used by flow partitions: distance(i,j) < 2(t-s) is
  // equivalent to offset(i,j) < -2s, with exactly stored offsets.
  double offset(int i, int j) const { return base(slot_[i], slot_[j]); }

  void grow(double dt) {
    if (dt < 0.0) throw std::invalid_argument("grow: negative increment");
    time_ += dt;
  }

  // Reproduction event: the particle at pre-event level b occupies all
  // levels of block b; levels past the block count are pushed out.
  void apply(const Partition& pi) {
    if (pi.n() != n_) throw std::invalid_argument("apply: truncation mismatch");
    int m = pi.block_count();
    std::vector<int> freed;
    for (int a = m + 1; a <= n_; ++a) freed.push_back(slot_[a]);
    std::vector<int> new_slot(n_ + 1, -1);
    std::size_t next_free = 0;
    std::vector<int> block_slots;  // slots occupied by the current block
    for (int b = 1; b <= m; ++b) {
      const auto& blk = pi.block(b);
      int parent_slot = slot_[b];
      block_slots.clear();
      for (std::size_t q = 0; q < blk.size(); ++q) {
        int level = blk[q];
        if (q == 0) {
          new_slot[level] = parent_slot;
        } else {
          int fresh = freed[next_free++];
          for (int s = 0; s < n_; ++s) {
            base_ref(fresh, s) = base(parent_slot, s);
            base_ref(s, fresh) = base(s, parent_slot);
          }
          new_slot[level] = fresh;
        }
        block_slots.push_back(new_slot[level]);
      }
      double zero_offset = -2.0 * time_;
      for (std::size_t a = 0; a < block_slots.size(); ++a)
        for (std::size_t c = 0; c < block_slots.size(); ++c)
          base_ref(block_slots[a], block_slots[c]) = (a == c) ? 0.0 : zero_offset;
    }
    slot_ = std::move(new_slot);
  }

  Matrix matrix() const {
    Matrix m(n_);
    for (int i = 1; i <= n_; ++i)
      for (int j = i + 1; j <= n_; ++j) m.set(i, j, distance(i, j));
    return m;
  }

 private:
  double& base_ref(int s, int t) { return base_[static_cast<std::size_t>(s) * n_ + t]; }
  double base(int s, int t) const { return base_[static_cast<std::size_t>(s) * n_ + t]; }

  int n_ = 0;
  double time_ = 0.0;
  std::vector<int> slot_;
  std::vector<double> base_;
};

// Marked state (r, u). The matrix r is constant between events and addressed
// through the same slot permutation; u grows with slope 1 and is stored per
// level as u_i(t) = t + ubase_i, so dust comparisons u_i = u_j reduce to
// exact equality of reset bookkeeping.
class MarkedState {
 public:
  MarkedState() = default;

  static MarkedState zero(int n) {
    return MarkedState(Matrix(n), std::vector<double>(n, 0.0));
  }

  MarkedState(const Matrix& r0, std::vector<double> u0, double time = 0.0)
      : n_(r0.n()), time_(time) {
    if (static_cast<int>(u0.size()) != n_)
      throw std::invalid_argument("marked state: u length mismatch");
    slot_.resize(n_ + 1);
    for (int i = 1; i <= n_; ++i) slot_[i] = i - 1;
    r_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    for (int i = 1; i <= n_; ++i)
      for (int j = 1; j <= n_; ++j)
        if (i != j) r_ref(i - 1, j - 1) = r0.at(i, j);
    ubase_.resize(n_ + 1);
    for (int i = 1; i <= n_; ++i) ubase_[i] = u0[i - 1] - time;
  }

  int n() const { return n_; }
  double time() const { return time_; }

  double u(int i) const { return time_ + ubase_[i]; }
  double u_offset(int i) const { return ubase_[i]; }

  double r(int i, int j) const {
    if (i == j) return 0.0;
    return r_at(slot_[i], slot_[j]);
  }

  // Composed genealogical distance rho_ij = u_i + r_ij + u_j off diagonal.
  double rho(int i, int j) const {
    if (i == j) return 0.0;
    return u(i) + r(i, j) + u(j);
  }

  void grow(double dt) {
    if (dt < 0.0) throw std::invalid_argument("grow: negative increment");
    time_ += dt;
  }

  // sigma action: covered levels drop their mark into the internal matrix,
  // newborn levels copy the parent row, pairs within one family reset to
  // exact zero. The trailing indicator is on equal ancestor levels, which is
  // what makes the composition with rho commute with the plain action.
  void apply(const SubsetSystem& sigma) {
    if (sigma.n() != n_) throw std::invalid_argument("apply: truncation mismatch");
    Partition pi = sigma.to_partition();
    int m = pi.block_count();

    std::vector<char> covered(n_ + 1, 0);
    for (const auto& b : sigma.subsets())
      for (int el : b) covered[el] = 1;

    // u at event time of the pre-event ancestor levels, before any rewrite
    std::vector<double> add(n_ + 1, 0.0);  // mark folded into the row of level i
    std::vector<double> new_ubase(n_ + 1, 0.0);
    for (int i = 1; i <= n_; ++i) {
      int a = pi.block_index(i);
      if (covered[i]) {
        add[i] = time_ + ubase_[a];
        new_ubase[i] = -time_;
      } else {
        add[i] = 0.0;
        new_ubase[i] = ubase_[a];
      }
    }

    // slot remap with row copies for newborn levels
    std::vector<int> freed;
    for (int a = m + 1; a <= n_; ++a) freed.push_back(slot_[a]);
    std::vector<int> new_slot(n_ + 1, -1);
    std::size_t next_free = 0;
    for (int b = 1; b <= m; ++b) {
      const auto& blk = pi.block(b);
      int parent_slot = slot_[b];
      for (std::size_t q = 0; q < blk.size(); ++q) {
        int level = blk[q];
        if (q == 0) {
          new_slot[level] = parent_slot;
        } else {
          int fresh = freed[next_free++];
          for (int s = 0; s < n_; ++s) {
            r_ref(fresh, s) = r_at(parent_slot, s);
            r_ref(s, fresh) = r_at(s, parent_slot);
          }
          new_slot[level] = fresh;
        }
      }
    }
    slot_ = std::move(new_slot);

    // fold the released marks of covered levels into their rows
    for (int i = 1; i <= n_; ++i) {
      if (add[i] == 0.0) continue;
      for (int j = 1; j <= n_; ++j) {
        if (pi.same_block(i, j)) continue;
        r_ref(slot_[i], slot_[j]) += add[i];
        r_ref(slot_[j], slot_[i]) += add[i];
      }
    }
    // exact zeros within each family
    for (int b = 1; b <= m; ++b) {
      const auto& blk = pi.block(b);
      for (std::size_t a = 0; a < blk.size(); ++a)
        for (std::size_t c = 0; c < blk.size(); ++c)
          if (a != c) r_ref(slot_[blk[a]], slot_[blk[c]]) = 0.0;
    }
    ubase_ = std::move(new_ubase);
  }

  Matrix r_matrix() const {
    Matrix m(n_);
    for (int i = 1; i <= n_; ++i)
      for (int j = i + 1; j <= n_; ++j) m.set(i, j, r(i, j));
    return m;
  }

  std::vector<double> u_vector() const {
    std::vector<double> v(n_);
    for (int i = 1; i <= n_; ++i) v[i - 1] = u(i);
    return v;
  }

  Matrix compose() const {
    Matrix m(n_);
    for (int i = 1; i <= n_; ++i)
      for (int j = i + 1; j <= n_; ++j) m.set(i, j, rho(i, j));
    return m;
  }

 private:
  double& r_ref(int s, int t) { return r_[static_cast<std::size_t>(s) * n_ + t]; }
  double r_at(int s, int t) const { return r_[static_cast<std::size_t>(s) * n_ + t]; }

  int n_ = 0;
  double time_ = 0.0;
  std::vector<int> slot_;
  std::vector<double> r_;
  std::vector<double> ubase_;    // u_i(t) = t + ubase_[i]
};

// Single-step actions on materialized matrices (spot checks and generators).
inline Matrix apply_pi(const Matrix& rho, const Partition& pi) {
  if (rho.n() != pi.n()) throw std::invalid_argument("apply_pi: size mismatch");
  Matrix out(rho.n());
  for (int i = 1; i <= rho.n(); ++i)
    for (int j = i + 1; j <= rho.n(); ++j) {
      int a = pi.block_index(i), b = pi.block_index(j);
      out.set(i, j, a == b ? 0.0 : rho.at(a, b));
    }
  return out;
}

struct MarkedMatrix {
  Matrix r;
  std::vector<double> u;

  Matrix compose() const {
    Matrix m(r.n());
    for (int i = 1; i <= r.n(); ++i)
      for (int j = i + 1; j <= r.n(); ++j)
        m.set(i, j, u[i - 1] + r.at(i, j) + u[j - 1]);
    return m;
  }
};

inline MarkedMatrix apply_sigma(const MarkedMatrix& in, const SubsetSystem& sigma) {
  int n = in.r.n();
  if (sigma.n() != n) throw std::invalid_argument("apply_sigma: size mismatch");
  Partition pi = sigma.to_partition();
  MarkedMatrix out;
  out.r = Matrix(n);
  out.u.resize(n);
  for (int i = 1; i <= n; ++i) {
    int a = pi.block_index(i);
    out.u[i - 1] = sigma.covers(i) ? 0.0 : in.u[a - 1];
  }
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      int a = pi.block_index(i), b = pi.block_index(j);
      if (a == b) continue;
      double v = in.r.at(a, b);
      if (sigma.covers(i)) v += in.u[a - 1];
      if (sigma.covers(j)) v += in.u[b - 1];
      out.r.set(i, j, v);
    }
  return out;
}

// Evolve a plain state through the events of (state.time, t].
inline void evolve(PlainState& state, const EventStream& stream, double t) {
  if (t < state.time()) throw std::invalid_argument("evolve: horizon before current time");
  if (t > stream.t_end || state.time() < stream.t_start)
    throw std::invalid_argument("evolve: window does not cover the horizon");
  for (std::size_t k = stream.first_after(state.time()); k < stream.events.size(); ++k) {
    const auto& ev = stream.events[k];
    if (ev.time > t) break;
    state.grow(ev.time - state.time());
    state.apply(ev.full_restriction);
  }
  state.grow(t - state.time());
}

// Evolve a marked state; dust semantics needs touches_level events.
inline void evolve(MarkedState& state, const EventStream& stream, double t) {
  if (t < state.time()) throw std::invalid_argument("evolve: horizon before current time");
  if (t > stream.t_end || state.time() < stream.t_start)
    throw std::invalid_argument("evolve: window does not cover the horizon");
  for (std::size_t k = stream.first_after(state.time()); k < stream.events.size(); ++k) {
    const auto& ev = stream.events[k];
    if (ev.time > t) break;
    state.grow(ev.time - state.time());
    state.apply(ev.sigma);
  }
  state.grow(t - state.time());
}

// Level of the ancestor at time s of the individual (t, i): replay the
// events of (s, t] backwards through the alpha map.
inline int ancestral_level(const EventStream& stream, double t, int i, double s) {
  if (s > t) throw std::invalid_argument("ancestral_level: s must not exceed t");
  std::size_t lo = stream.first_after(s);
  std::size_t hi = stream.first_after(t);  // events with time <= t sit below hi
  int level = i;
  for (std::size_t k = hi; k > lo; --k)
    level = stream.events[k - 1].full_restriction.block_index(level);
  return level;
}

// Lowest level occupied at time t by a descendant of (s, i); nullopt once
// the descendant set leaves the truncation.
inline std::optional<int> descendant_level(const EventStream& stream, double s, int i, double t) {
  if (t < s) throw std::invalid_argument("descendant_level: t must not precede s");
  int level = i;
  for (std::size_t k = stream.first_after(s); k < stream.events.size(); ++k) {
    const auto& ev = stream.events[k];
    if (ev.time > t) break;
    if (level > ev.full_restriction.block_count()) return std::nullopt;
    level = ev.full_restriction.block(level).front();
  }
  return level;
}

// Genealogical distance between the individuals (s,i) and (t,j); rho0 gives
// the distances of the time-origin ancestors when the lines never meet.
inline double pair_distance(const EventStream& stream, const Matrix& rho0, double s, int i,
                            double t, int j) {
  if (s == t && i == j) return 0.0;
  double c = std::min(s, t);
  int li = ancestral_level(stream, s, i, c);
  int lj = ancestral_level(stream, t, j, c);
  if (li == lj) return s + t - 2.0 * c;
  std::size_t lo = stream.first_after(stream.t_start);
  std::size_t hi = stream.first_after(c);
  for (std::size_t k = hi; k > lo; --k) {
    const auto& ev = stream.events[k - 1];
    li = ev.full_restriction.block_index(li);
    lj = ev.full_restriction.block_index(lj);
    if (li == lj) return s + t - 2.0 * ev.time;
  }
  return s + t + rho0.at(li, lj);
}

// Partition of levels at the state time t by common ancestor at time s:
// i ~ j iff rho_t(i,j) < 2(t-s). Thresholding uses the stored offsets, so
// the comparison is exact. Throws if the relation fails to be transitive.
inline Partition flow_partition(const PlainState& state, double s) {
  if (s > state.time()) throw std::invalid_argument("flow_partition: s after state time");
  int n = state.n();
  std::vector<int> group(n + 1, -1);
  std::vector<int> reps;
  for (int i = 1; i <= n; ++i) {
    bool placed = false;
    for (std::size_t g = 0; g < reps.size(); ++g) {
      if (state.offset(reps[g], i) < -2.0 * s) {
        group[i] = static_cast<int>(g);
        placed = true;
        break;
      }
    }
    if (!placed) {
      group[i] = static_cast<int>(reps.size());
      reps.push_back(i);
    }
  }
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      bool related = state.offset(i, j) < -2.0 * s;
      if (related != (group[i] == group[j]))
        throw std::runtime_error("flow_partition: threshold relation is not transitive");
    }
  std::vector<int> assign(n);
  for (int i = 1; i <= n; ++i) assign[i - 1] = group[i];
  return Partition::from_assignment(assign);
}

// Family partition in the dust regime: i ~ j iff the marks agree below the
// state time and the internal distance vanishes; the dust part collects the
// levels never yet involved. Mark equality compares reset bookkeeping, not
// accumulated floats.
struct DustPartition {
  Partition partition;       // non-singleton families + singletons
  std::vector<int> dust;     // levels with u_{t,i} >= t
};

inline DustPartition dust_partition(const MarkedState& state) {
  int n = state.n();
  std::vector<int> group(n + 1, -1);
  std::vector<int> reps;
  for (int i = 1; i <= n; ++i) {
    bool placed = false;
    if (state.u_offset(i) < 0.0) {
      for (std::size_t g = 0; g < reps.size(); ++g) {
        int rep = reps[g];
        if (state.u_offset(rep) == state.u_offset(i) && state.r(rep, i) == 0.0) {
          group[i] = static_cast<int>(g);
          placed = true;
          break;
        }
      }
    }
    if (!placed) {
      group[i] = static_cast<int>(reps.size());
      reps.push_back(i);
    }
  }
  std::vector<int> assign(n);
  for (int i = 1; i <= n; ++i) assign[i - 1] = group[i];
  DustPartition out;
  out.partition = Partition::from_assignment(assign);
  for (int i = 1; i <= n; ++i)
    if (state.u_offset(i) >= 0.0) out.dust.push_back(i);
  return out;
}

// Jump-time classification of a stream. theta: atom-origin event times.
// theta_f: the subset coming from finite full-mass simplex points. The
// extinction proxy records the event times at which some pre-event level is
// pushed past the truncation, i.e. a visible descendant set escapes; it is
// exact for theta_f events and a truncation heuristic otherwise.
struct JumpLog {
  std::vector<double> theta;
  std::vector<double> theta_f;
  std::vector<double> theta_prime_proxy;
};

inline JumpLog detect_jumps(const EventStream& stream) {
  JumpLog log;
  for (const auto& ev : stream.events) {
    if (ev.is_atom_origin()) {
      log.theta.push_back(ev.time);
      if (ev.atom_finite) log.theta_f.push_back(ev.time);
    }
    if (ev.full_restriction.block_count() < stream.n) log.theta_prime_proxy.push_back(ev.time);
  }
  return log;
}

// Weighted finite support standing in for the population measure.
struct WeightedAtomMeasure {
  struct Entry {
    int level = 0;
    double weight = 0.0;
    double mark = 0.0;
  };
  std::vector<Entry> atoms;
  double dust_weight = 0.0;  // remainder attached to the time-0 state
  double dust_shift = 0.0;   // mark shift applied to the initial measure
};

// Uniform weights on the first n levels.
inline WeightedAtomMeasure sampling_measure_uniform(int n) {
  WeightedAtomMeasure m;
  for (int i = 1; i <= n; ++i) m.atoms.push_back({i, 1.0 / n, 0.0});
  return m;
}

// Flow approximation at lookback s: block frequencies placed at block
// minima. Its coupling distance to the untruncated limit is at most 2(t-s).
inline WeightedAtomMeasure sampling_measure_flow(const PlainState& state, double s) {
  Partition pi = flow_partition(state, s);
  WeightedAtomMeasure m;
  for (const auto& b : pi.blocks())
    m.atoms.push_back({b.front(), static_cast<double>(b.size()) / state.n(), 0.0});
  return m;
}

// Dust decomposition: one weighted atom per non-singleton family carrying
// its mark, plus the dust remainder shifted by the state time.
inline WeightedAtomMeasure sampling_measure_dust(const MarkedState& state) {
  DustPartition dp = dust_partition(state);
  WeightedAtomMeasure m;
  int n = state.n();
  for (const auto& b : dp.partition.blocks()) {
    if (b.size() < 2) continue;
    m.atoms.push_back({b.front(), static_cast<double>(b.size()) / n, state.u(b.front())});
  }
  m.dust_weight = static_cast<double>(dp.dust.size()) / n;
  m.dust_shift = state.time();
  return m;
}

}  // namespace lookdown

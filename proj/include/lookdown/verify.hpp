#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lookdown/coalescent.hpp"
#include "lookdown/event_stream.hpp"
#include "lookdown/evolution.hpp"
#include "lookdown/matrix.hpp"
#include "lookdown/mmspace.hpp"
#include "lookdown/parallel.hpp"
#include "lookdown/stats.hpp"
#include "lookdown/testfn.hpp"
#include "lookdown/version.hpp"
#include "lookdown/xi_measure.hpp"

namespace lookdown {

struct CriterionResult {
  std::string name;
  double statistic = 0.0;
  double tolerance = 0.0;
  std::string rule;  // how pass/fail is decided
  bool pass = false;
};

struct TestReport {
  std::string suite;
  SeedSpec seed;
  int replicates = 0;
  std::vector<CriterionResult> criteria;

  bool all_pass() const {
    for (const auto& c : criteria)
      if (!c.pass) return false;
    return true;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = kVersion;
    j["suite"] = suite;
    j["root_seed"] = seed.root_seed;
    j["stream_id"] = seed.stream_id;
    j["replicates"] = replicates;
    j["pass"] = all_pass();
    auto arr = nlohmann::json::array();
    for (const auto& c : criteria)
      arr.push_back({{"name", c.name},
                     {"statistic", c.statistic},
                     {"tolerance", c.tolerance},
                     {"rule", c.rule},
                     {"pass", c.pass}});
    j["criteria"] = arr;
    return j;
  }
};

inline Matrix corner(const Matrix& m, int n) {
  Matrix out(n);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) out.set(i, j, m.at(i, j));
  return out;
}

// --- generators -----------------------------------------------------------

// Precomputed visible event laws at a truncation.
struct GeneratorTables {
  std::vector<std::pair<Partition, double>> pi_rates;       // nontrivial partitions
  std::vector<std::pair<SubsetSystem, double>> sigma_rates; // nonempty systems

  static GeneratorTables plain(const XiMeasure& xi, int n) {
    GeneratorTables t;
    for (const auto& pi : enumerate_partitions(n)) {
      if (pi.is_trivial()) continue;
      double r = xi.rate_pi(n, pi);
      if (r > 0.0) t.pi_rates.emplace_back(pi, r);
    }
    return t;
  }

  static GeneratorTables marked(const XiMeasure& xi, int n) {
    if (std::isinf(xi.visible_rate(n, RateScope::touches_level)))
      throw std::invalid_argument("generator: rates diverge without dust");
    GeneratorTables t;
    for (const auto& s : enumerate_subset_systems(n)) {
      if (s.empty()) continue;
      double r = xi.rate_sigma(n, s);
      if (r > 0.0) t.sigma_rates.emplace_back(s, r);
    }
    return t;
  }
};

// Growth plus reproduction generator on plain distance matrices.
inline double generator_omega1(const TestFunction& phi, const Matrix& rho, const XiMeasure& xi,
                               const GeneratorTables* tables = nullptr) {
  if (phi.marked()) throw std::invalid_argument("generator_omega1: needs a plain test function");
  int n = phi.arity();
  Matrix g = corner(rho, n);
  double out = 2.0 * phi.entry_gradient_sum(g);
  GeneratorTables local;
  if (!tables) {
    local = GeneratorTables::plain(xi, n);
    tables = &local;
  }
  double base = phi.value_plain(g);
  for (const auto& [pi, rate] : tables->pi_rates)
    out += rate * (phi.value_plain(apply_pi(g, pi)) - base);
  return out;
}

// Growth plus reproduction generator on marked matrices (dust regime).
inline double generator_omega2(const TestFunction& phi, const MarkedMatrix& rm,
                               const XiMeasure& xi, const GeneratorTables* tables = nullptr) {
  if (!phi.marked()) throw std::invalid_argument("generator_omega2: needs a marked test function");
  int n = phi.arity();
  MarkedMatrix g{corner(rm.r, n), std::vector<double>(rm.u.begin(), rm.u.begin() + n)};
  double out = phi.mark_gradient_sum(g);
  GeneratorTables local;
  if (!tables) {
    local = GeneratorTables::marked(xi, n);
    tables = &local;
  }
  double base = phi.value_marked(g);
  for (const auto& [sigma, rate] : tables->sigma_rates)
    out += rate * (phi.value_marked(apply_sigma(g, sigma)) - base);
  return out;
}

// --- martingale residuals --------------------------------------------------

struct ResidualReport {
  double residual = 0.0;
  double se = 0.0;
  bool within(double k) const { return std::abs(residual) <= k * se; }
};

namespace detail {

// One plain path contribution: phi(X_t) - phi(X_0) - int Omega1 phi ds. The
// growth part integrates exactly by the chain rule; the jump part is
// quadratured per inter-event segment where the path is an affine drift.
inline double residual_path_plain(const TestFunction& phi, const Matrix& rho0,
                                  const GeneratorTables& tables, double t,
                                  const EventStream& stream, const std::vector<double>& gl_nodes,
                                  const std::vector<double>& gl_weights) {
  int n = phi.arity();
  PlainState state(corner(rho0, n));
  double growth_int = 0.0;
  double jump_int = 0.0;

  auto segment = [&](const Matrix& at_start, double a, double b) {
    // chain rule: the drift part integrates to boundary differences
    Matrix end = at_start;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j) end.set(i, j, at_start.at(i, j) + 2.0 * (b - a));
    growth_int += phi.value_plain(end) - phi.value_plain(at_start);
    for (std::size_t q = 0; q < gl_nodes.size(); ++q) {
      double s = a + 0.5 * (gl_nodes[q] + 1.0) * (b - a);
      Matrix mid = at_start;
      for (int i = 1; i <= n; ++i)
        for (int j = i + 1; j <= n; ++j) mid.set(i, j, at_start.at(i, j) + 2.0 * (s - a));
      double base = phi.value_plain(mid);
      double jump = 0.0;
      for (const auto& [pi, rate] : tables.pi_rates)
        jump += rate * (phi.value_plain(apply_pi(mid, pi)) - base);
      jump_int += 0.5 * (b - a) * gl_weights[q] * jump;
    }
  };

  double phi0 = phi.value_plain(state.matrix());
  double seg_start = 0.0;
  Matrix seg_matrix = state.matrix();
  for (const auto& ev : stream.events) {
    if (ev.time > t) break;
    segment(seg_matrix, seg_start, ev.time);
    state.grow(ev.time - state.time());
    state.apply(ev.full_restriction);
    seg_start = ev.time;
    seg_matrix = state.matrix();
  }
  segment(seg_matrix, seg_start, t);
  state.grow(t - state.time());
  double phit = phi.value_plain(state.matrix());
  return phit - phi0 - growth_int - jump_int;
}

inline double residual_path_marked(const TestFunction& phi, const MarkedMatrix& init,
                                   const GeneratorTables& tables, double t,
                                   const EventStream& stream, const std::vector<double>& gl_nodes,
                                   const std::vector<double>& gl_weights) {
  int n = phi.arity();
  MarkedState state(corner(init.r, n), std::vector<double>(init.u.begin(), init.u.begin() + n));
  double growth_int = 0.0;
  double jump_int = 0.0;

  auto segment = [&](const MarkedMatrix& at_start, double a, double b) {
    MarkedMatrix end = at_start;
    for (double& u : end.u) u += (b - a);
    growth_int += phi.value_marked(end) - phi.value_marked(at_start);
    for (std::size_t q = 0; q < gl_nodes.size(); ++q) {
      double s = a + 0.5 * (gl_nodes[q] + 1.0) * (b - a);
      MarkedMatrix mid = at_start;
      for (double& u : mid.u) u += (s - a);
      double base = phi.value_marked(mid);
      double jump = 0.0;
      for (const auto& [sigma, rate] : tables.sigma_rates)
        jump += rate * (phi.value_marked(apply_sigma(mid, sigma)) - base);
      jump_int += 0.5 * (b - a) * gl_weights[q] * jump;
    }
  };

  auto snapshot = [&]() { return MarkedMatrix{state.r_matrix(), state.u_vector()}; };
  MarkedMatrix seg = snapshot();
  double phi0 = phi.value_marked(seg);
  double seg_start = 0.0;
  for (const auto& ev : stream.events) {
    if (ev.time > t) break;
    segment(seg, seg_start, ev.time);
    state.grow(ev.time - state.time());
    state.apply(ev.sigma);
    seg_start = ev.time;
    seg = snapshot();
  }
  segment(seg, seg_start, t);
  state.grow(t - state.time());
  double phit = phi.value_marked(snapshot());
  return phit - phi0 - growth_int - jump_int;
}

}  // namespace detail

inline ResidualReport martingale_residual_plain(const XiMeasure& xi, const Matrix& rho0,
                                                const TestFunction& phi, double t, int replicates,
                                                SeedSpec seed, int threads = 1) {
  int n = phi.arity();
  GeneratorTables tables = GeneratorTables::plain(xi, n);
  std::vector<double> nodes, weights;
  gauss_legendre(24, nodes, weights);
  std::vector<double> vals(replicates);
  parallel_for(replicates, threads, [&](std::size_t rep) {
    SeedSpec s{seed.root_seed, seed.stream_id + rep};
    EventStream stream = generate_events(xi, n, 0.0, t, RateScope::changes_gamma, s);
    vals[rep] = detail::residual_path_plain(phi, rho0, tables, t, stream, nodes, weights);
  });
  Summary sum = summarize(vals);
  return ResidualReport{sum.mean, sum.se};
}

inline ResidualReport martingale_residual_marked(const XiMeasure& xi, const MarkedMatrix& init,
                                                 const TestFunction& phi, double t, int replicates,
                                                 SeedSpec seed, int threads = 1) {
  int n = phi.arity();
  GeneratorTables tables = GeneratorTables::marked(xi, n);
  std::vector<double> nodes, weights;
  gauss_legendre(24, nodes, weights);
  std::vector<double> vals(replicates);
  parallel_for(replicates, threads, [&](std::size_t rep) {
    SeedSpec s{seed.root_seed, seed.stream_id + rep};
    EventStream stream = generate_events(xi, n, 0.0, t, RateScope::touches_level, s);
    vals[rep] = detail::residual_path_marked(phi, init, tables, t, stream, nodes, weights);
  });
  Summary sum = summarize(vals);
  return ResidualReport{sum.mean, sum.se};
}

// --- duality ---------------------------------------------------------------

struct DualReport {
  double forward = 0.0;
  double forward_se = 0.0;
  double dual = 0.0;
  double dual_se = 0.0;

  double gap() const { return std::abs(forward - dual); }
  double se() const { return std::sqrt(forward_se * forward_se + dual_se * dual_se); }
  bool within(double k) const { return gap() <= k * se() || gap() == 0.0; }
};

// Forward expectation E[phi(X_t)] against the function-valued dual run: the
// dual jumps phi -> phi o sigma at the sigma rates and shifts the mark (or
// distance) coordinates between jumps; both start from the same initial
// sample law.
inline DualReport dual_consistency_marked(const XiMeasure& xi, const FiniteMMSpace& initial,
                                          const TestFunction& phi, double t, int replicates,
                                          SeedSpec seed, int threads = 1) {
  int n = phi.arity();
  GeneratorTables tables = GeneratorTables::marked(xi, n);
  double total_rate = 0.0;
  std::vector<double> rates;
  for (const auto& [sigma, r] : tables.sigma_rates) {
    rates.push_back(r);
    total_rate += r;
  }

  auto sample_initial = [&](Rng& rng) {
    SampledMatrix sm = sample_distance_matrix(initial, n, rng);
    MarkedMatrix rm;
    rm.r = sm.dist;
    rm.u = sm.marks.empty() ? std::vector<double>(n, 0.0) : sm.marks;
    return rm;
  };

  std::vector<double> fwd(replicates), dual(replicates);
  parallel_for(replicates, threads, [&](std::size_t rep) {
    // common initial draw for the two estimators
    Rng init_rng = Rng::stream(seed.root_seed, seed.stream_id + rep).split(1);
    Rng init_rng2 = Rng::stream(seed.root_seed, seed.stream_id + rep).split(1);
    // forward
    {
      MarkedMatrix rm = sample_initial(init_rng);
      MarkedState state(rm.r, rm.u);
      EventStream stream = generate_events(xi, n, 0.0, t, RateScope::touches_level,
                                           SeedSpec{seed.root_seed, seed.stream_id + rep});
      evolve(state, stream, t);
      fwd[rep] = phi.value_marked(MarkedMatrix{state.r_matrix(), state.u_vector()});
    }
    // dual
    {
      MarkedMatrix rm = sample_initial(init_rng2);
      Rng rng = Rng::stream(seed.root_seed, seed.stream_id + rep).split(2);
      struct Step {
        double shift = 0.0;
        int jump = -1;  // index into tables
      };
      std::vector<Step> steps;
      double clock = 0.0;
      while (total_rate > 0.0) {
        double dt = rng.exponential(total_rate);
        if (clock + dt >= t) break;
        clock += dt;
        steps.push_back({dt, static_cast<int>(rng.discrete(rates))});
      }
      double tail = t - clock;
      // evaluate phi_t(R): transforms applied to the argument newest first
      MarkedMatrix arg = rm;
      auto shift = [&](double ds) {
        for (double& u : arg.u) u += ds;
      };
      shift(tail);
      for (std::size_t k = steps.size(); k > 0; --k) {
        arg = apply_sigma(arg, tables.sigma_rates[steps[k - 1].jump].first);
        shift(steps[k - 1].shift);
      }
      dual[rep] = phi.value_marked(arg);
    }
  });
  Summary sf = summarize(fwd), sd = summarize(dual);
  return DualReport{sf.mean, sf.se, sd.mean, sd.se};
}

inline DualReport dual_consistency_plain(const XiMeasure& xi, const FiniteMMSpace& initial,
                                         const TestFunction& phi, double t, int replicates,
                                         SeedSpec seed, int threads = 1) {
  int n = phi.arity();
  GeneratorTables tables = GeneratorTables::plain(xi, n);
  double total_rate = 0.0;
  std::vector<double> rates;
  for (const auto& [pi, r] : tables.pi_rates) {
    rates.push_back(r);
    total_rate += r;
  }

  auto sample_initial = [&](Rng& rng) { return sample_distance_matrix(initial, n, rng).dist; };

  std::vector<double> fwd(replicates), dual(replicates);
  parallel_for(replicates, threads, [&](std::size_t rep) {
    Rng init_rng = Rng::stream(seed.root_seed, seed.stream_id + rep).split(1);
    Rng init_rng2 = Rng::stream(seed.root_seed, seed.stream_id + rep).split(1);
    {
      Matrix rho0 = sample_initial(init_rng);
      PlainState state(rho0);
      EventStream stream = generate_events(xi, n, 0.0, t, RateScope::changes_gamma,
                                           SeedSpec{seed.root_seed, seed.stream_id + rep});
      evolve(state, stream, t);
      fwd[rep] = phi.value_plain(state.matrix());
    }
    {
      Matrix arg = sample_initial(init_rng2);
      Rng rng = Rng::stream(seed.root_seed, seed.stream_id + rep).split(2);
      struct Step {
        double shift = 0.0;
        int jump = -1;
      };
      std::vector<Step> steps;
      double clock = 0.0;
      while (total_rate > 0.0) {
        double dt = rng.exponential(total_rate);
        if (clock + dt >= t) break;
        clock += dt;
        steps.push_back({dt, static_cast<int>(rng.discrete(rates))});
      }
      double tail = t - clock;
      auto shift = [&](double ds) {
        for (int i = 1; i <= n; ++i)
          for (int j = i + 1; j <= n; ++j) arg.set(i, j, arg.at(i, j) + 2.0 * ds);
      };
      shift(tail);
      for (std::size_t k = steps.size(); k > 0; --k) {
        arg = apply_pi(arg, tables.pi_rates[steps[k - 1].jump].first);
        shift(steps[k - 1].shift);
      }
      dual[rep] = phi.value_plain(arg);
    }
  });
  Summary sf = summarize(fwd), sd = summarize(dual);
  return DualReport{sf.mean, sf.se, sd.mean, sd.se};
}

// --- exchangeability --------------------------------------------------------

struct ExchangeabilityReport {
  KsResult unconditional;  // law(rho_{t,1,2}) vs law(rho_{t,2,3})
  KsResult conditional;    // permuted coordinates above b on no-P_b paths
  std::size_t conditional_paths = 0;
};

inline ExchangeabilityReport exchangeability_test(const XiMeasure& xi, int n, int b, double t,
                                                  int replicates, SeedSpec seed, int threads = 1) {
  if (n < b + 2 || n < 3) throw std::invalid_argument("exchangeability: need n >= max(3, b+2)");
  std::vector<double> e12(replicates), e23(replicates);
  std::vector<double> c1(replicates), c2(replicates);
  std::vector<char> kept(replicates, 0);
  parallel_for(replicates, threads, [&](std::size_t rep) {
    SeedSpec s{seed.root_seed, seed.stream_id + rep};
    EventStream stream = generate_events(xi, n, 0.0, t, RateScope::changes_gamma, s);
    PlainState state = PlainState::zero(n);
    evolve(state, stream, t);
    e12[rep] = state.distance(1, 2);
    e23[rep] = state.distance(2, 3);
    bool no_pb = true;
    if (b >= 2)
      for (const auto& ev : stream.events)
        if (!ev.full_restriction.restrict(b).is_trivial()) {
          no_pb = false;
          break;
        }
    if (no_pb) {
      kept[rep] = 1;
      c1[rep] = state.distance(std::max(1, b), b + 1);
      c2[rep] = state.distance(std::max(1, b), b + 2);
    }
  });
  ExchangeabilityReport rep;
  rep.unconditional = ks_two_sample(e12, e23);
  std::vector<double> k1, k2;
  for (int r = 0; r < replicates; ++r)
    if (kept[r]) {
      k1.push_back(c1[r]);
      k2.push_back(c2[r]);
    }
  rep.conditional_paths = k1.size();
  rep.conditional = k1.size() >= 20 ? ks_two_sample(k1, k2) : KsResult{0.0, 1.0};
  return rep;
}

// --- resampling -------------------------------------------------------------

// Corner law of fresh evolutions against exchangeable k-subsample resampling
// of independently evolved matrices. Distinct uniform indices make the two
// laws equal at every finite n, which is the finite-size form of the
// resampling identity.
inline double resampling_test_p(const XiMeasure& xi, int n, int k, double t, int replicates,
                                SeedSpec seed, int threads = 1) {
  auto features = [&](const Matrix& m, const std::vector<int>& idx) {
    std::vector<double> f;
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = a + 1; b < idx.size(); ++b) f.push_back(m.at(idx[a], idx[b]));
    return f;
  };
  std::vector<std::vector<double>> corner_side(replicates), resample_side(replicates);
  parallel_for(replicates, threads, [&](std::size_t rep) {
    {
      SeedSpec s{seed.root_seed, seed.stream_id + 2 * rep};
      EventStream stream = generate_events(xi, n, 0.0, t, RateScope::changes_gamma, s);
      PlainState state = PlainState::zero(n);
      evolve(state, stream, t);
      std::vector<int> lead(k);
      for (int i = 0; i < k; ++i) lead[i] = i + 1;
      corner_side[rep] = features(state.matrix(), lead);
    }
    {
      SeedSpec s{seed.root_seed, seed.stream_id + 2 * rep + 1};
      EventStream stream = generate_events(xi, n, 0.0, t, RateScope::changes_gamma, s);
      PlainState state = PlainState::zero(n);
      evolve(state, stream, t);
      Rng rng = s.make_rng().split(7);
      auto pick = rng.sample_distinct(n, k);
      std::vector<int> idx(pick.size());
      for (std::size_t q = 0; q < pick.size(); ++q) idx[q] = pick[q] + 1;
      resample_side[rep] = features(state.matrix(), idx);
    }
  });
  Rng perm_rng = seed.make_rng().split(99);
  return energy_test_p(corner_side, resample_side, 200, perm_rng);
}

// --- frequency uniformity ----------------------------------------------------

struct FrequencyUniformityReport {
  std::vector<int> ladder;
  std::vector<double> median_sup_diff;  // per ladder entry, against the top level
  bool decreasing = false;
};

// Block frequencies of the same flow partition read at nested truncations:
// the sup over the grid of |freq_m - freq_top| should shrink as m grows.
inline FrequencyUniformityReport frequency_uniformity_test(const XiMeasure& xi, int b,
                                                           const std::vector<double>& grid,
                                                           std::vector<int> ladder, int replicates,
                                                           SeedSpec seed, int threads = 1) {
  std::sort(ladder.begin(), ladder.end());
  int top = ladder.back();
  double horizon = 0.0;
  for (double t : grid) horizon = std::max(horizon, t);
  std::vector<std::vector<double>> sup(ladder.size(), std::vector<double>(replicates, 0.0));
  parallel_for(replicates, threads, [&](std::size_t rep) {
    SeedSpec s{seed.root_seed, seed.stream_id + rep};
    EventStream stream = generate_events(xi, top, 0.0, horizon, RateScope::changes_gamma, s);
    PlainState state = PlainState::zero(top);
    for (double t : grid) {
      evolve(state, stream, t);
      Partition flow = flow_partition(state, 0.0);
      double f_top = flow.block_freq(b, top);
      for (std::size_t l = 0; l + 1 < ladder.size(); ++l) {
        double f_m = flow.block_freq(b, ladder[l]);
        sup[l][rep] = std::max(sup[l][rep], std::abs(f_m - f_top));
      }
    }
  });
  FrequencyUniformityReport rep;
  rep.ladder = ladder;
  for (std::size_t l = 0; l + 1 < ladder.size(); ++l)
    rep.median_sup_diff.push_back(quantile(sup[l], 0.5));
  rep.median_sup_diff.push_back(0.0);  // the top level against itself
  rep.decreasing = true;
  for (std::size_t l = 0; l + 2 < ladder.size(); ++l)
    if (rep.median_sup_diff[l] <= rep.median_sup_diff[l + 1]) rep.decreasing = false;
  return rep;
}

// Closed-form pair-law oracle: with pair rate lambda and growth slope 2,
// m(t) = E[exp(-rho_12(t))] solves m' = lambda - (2 + lambda) m from m(0)=1.
inline double pair_exponential_moment(double t, double lambda) {
  double stat = lambda / (2.0 + lambda);
  return stat + (1.0 - stat) * std::exp(-(2.0 + lambda) * t);
}

}  // namespace lookdown

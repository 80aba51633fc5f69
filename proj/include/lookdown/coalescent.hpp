#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "lookdown/matrix.hpp"
#include "lookdown/partition.hpp"
#include "lookdown/random.hpp"
#include "lookdown/xi_measure.hpp"

namespace lookdown {

// Backward-in-time jump chain on partitions of {1..n}, coarsening by
// coagulation at every jump.
struct CoalescentPath {
  int n = 0;
  std::vector<double> times;        // jump times, increasing
  std::vector<Partition> states;    // state after each jump
  bool reached_mrca = false;

  Partition state_at(double t) const {
    Partition cur = Partition::singletons(n);
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (times[k] > t) break;
      cur = states[k];
    }
    return cur;
  }

  int block_count_at(double t) const { return state_at(t).block_count(); }
};

struct CoalescentLimits {
  double horizon = std::numeric_limits<double>::infinity();  // infinite: run to the MRCA
  std::uint64_t max_events = 10'000'000;                     // lookback guard
};

// Simulate the coalescent: from a state with b blocks, merge patterns fire
// at the block-level event rates. Multi-entry atoms are sampled by paintbox
// thinning, closed-form families and single-entry atoms by exact k-merges.
inline CoalescentPath simulate_coalescent(const XiMeasure& xi, int n, SeedSpec seed,
                                          CoalescentLimits limits = {}) {
  if (n < 2) throw std::invalid_argument("coalescent: need at least two lineages");
  Rng rng = seed.make_rng();
  CoalescentPath path;
  path.n = n;
  Partition state = Partition::singletons(n);
  double t = 0.0;
  std::uint64_t guard = 0;
  while (state.block_count() > 1) {
    int b = state.block_count();
    // candidate components on the current block count
    std::vector<double> rates;
    std::vector<int> kinds;  // -1 kingman, -2 family, >=0 atom
    if (xi.kingman_mass() > 0.0) {
      rates.push_back(xi.kingman_mass() * 0.5 * b * (b - 1));
      kinds.push_back(-1);
    }
    for (std::size_t k = 0; k < xi.atoms().size(); ++k) {
      rates.push_back(xi.atoms()[k].weight / xi.atoms()[k].point.l2sq());
      kinds.push_back(static_cast<int>(k));
    }
    std::vector<double> fam_weights;
    if (xi.family() != LambdaFamily::none) {
      double fam_total = 0.0;
      for (int k = 2; k <= b; ++k) {
        double lg = xi.family_block_log_rate(k, b);
        if (std::isinf(lg) && lg > 0.0)
          throw std::invalid_argument("coalescent: divergent family rate");
        fam_weights.push_back(std::exp(XiMeasure::log_choose(b, k) + lg));
        fam_total += fam_weights.back();
      }
      rates.push_back(fam_total);
      kinds.push_back(-2);
    }
    double total = 0.0;
    for (double r : rates) total += r;
    if (!(total > 0.0)) break;  // absorbing: no further merges possible

    double dt = rng.exponential(total);
    while (dt == 0.0) dt = rng.exponential(total);
    t += dt;
    if (t > limits.horizon) break;
    if (++guard > limits.max_events)
      throw std::runtime_error("coalescent: event cap reached before the MRCA");

    int kind = kinds[rng.discrete(rates)];
    std::optional<Partition> merge;
    if (kind == -1) {
      std::uint64_t pick = rng.below(static_cast<std::uint64_t>(b) * (b - 1) / 2);
      int i = 1;
      while (pick >= static_cast<std::uint64_t>(b - i)) {
        pick -= static_cast<std::uint64_t>(b - i);
        ++i;
      }
      int j = i + 1 + static_cast<int>(pick);
      merge = SubsetSystem::from_subsets(b, {{i, j}}).to_partition();
    } else if (kind == -2) {
      int k = 2 + static_cast<int>(rng.discrete(fam_weights));
      auto idx = rng.sample_distinct(b, k);
      std::vector<int> subset(idx.size());
      for (std::size_t q = 0; q < idx.size(); ++q) subset[q] = idx[q] + 1;
      merge = SubsetSystem::from_subsets(b, {subset}).to_partition();
    } else {
      Partition pi = paintbox_sample(xi.atoms()[kind].point, b, rng);
      if (pi.is_trivial()) continue;  // thinned candidate
      merge = std::move(pi);
    }
    state = coagulate(state, *merge);
    path.times.push_back(t);
    path.states.push_back(state);
  }
  path.reached_mrca = state.block_count() == 1;
  return path;
}

// Ultrametric leaf tree: pair distances, external branch lengths, and the
// internal matrix with rho_ij = u_i + r_ij + u_j.
struct CoalescentTree {
  int n = 0;
  Matrix rho;
  std::vector<double> u;
  Matrix r;
};

// Equilibrium genealogy of n lineages, built by running the coalescent
// backward to the MRCA: leaf distances are twice the pair coalescence
// times, u_i is the first time lineage i joins a non-singleton block.
inline CoalescentTree equilibrium_tree(const XiMeasure& xi, int n, SeedSpec seed,
                                       CoalescentLimits limits = {}) {
  if (!(xi.total_mass() > 0.0))
    throw std::invalid_argument("equilibrium tree: zero measure never coalesces");
  CoalescentPath path = simulate_coalescent(xi, n, seed, limits);
  if (!path.reached_mrca)
    throw std::runtime_error("equilibrium tree: coalescent did not reach the MRCA");
  CoalescentTree tree;
  tree.n = n;
  tree.rho = Matrix(n);
  // meet times via the merge history
  std::vector<int> cluster(n + 1);
  for (int i = 1; i <= n; ++i) cluster[i] = i;
  Partition prev = Partition::singletons(n);
  for (std::size_t k = 0; k < path.times.size(); ++k) {
    const Partition& cur = path.states[k];
    double tau = path.times[k];
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j)
        if (cur.same_block(i, j) && !prev.same_block(i, j)) tree.rho.set(i, j, 2.0 * tau);
    prev = cur;
  }
  tree.u.assign(n, 0.0);
  for (int i = 1; i <= n; ++i) {
    double first = std::numeric_limits<double>::infinity();
    for (int j = 1; j <= n; ++j)
      if (j != i) first = std::min(first, 0.5 * tree.rho.at(i, j));
    tree.u[i - 1] = first;
  }
  tree.r = Matrix(n);
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j)
      tree.r.set(i, j, tree.rho.at(i, j) - tree.u[i - 1] - tree.u[j - 1]);
  return tree;
}

// External branch statistics: the marks and the partition of leaves whose
// external branches start at the same branchpoint (r_ij = 0 exactly).
struct ExternalBranchStats {
  std::vector<double> u;
  Partition branchpoints;
};

inline ExternalBranchStats external_branches(const CoalescentTree& tree) {
  ExternalBranchStats out;
  out.u = tree.u;
  int n = tree.n;
  std::vector<int> group(n + 1, -1);
  std::vector<int> reps;
  for (int i = 1; i <= n; ++i) {
    bool placed = false;
    for (std::size_t g = 0; g < reps.size(); ++g)
      if (tree.r.at(reps[g], i) == 0.0 && reps[g] != i) {
        group[i] = static_cast<int>(g);
        placed = true;
        break;
      }
    if (!placed) {
      group[i] = static_cast<int>(reps.size());
      reps.push_back(i);
    }
  }
  std::vector<int> assign(n);
  for (int i = 1; i <= n; ++i) assign[i - 1] = group[i];
  out.branchpoints = Partition::from_assignment(assign);
  return out;
}

// Block counts over a time grid across replicates and population sizes; the
// stabilization of counts in n at fixed t is the empirical probe for coming
// down from infinity.
struct BlockCountRow {
  int n = 0;
  double t = 0.0;
  double mean_blocks = 0.0;
  double q05 = 0.0;
  double q95 = 0.0;
};

inline std::vector<BlockCountRow> block_count_profile(const XiMeasure& xi,
                                                      const std::vector<int>& sizes,
                                                      const std::vector<double>& grid,
                                                      int replicates, SeedSpec seed) {
  std::vector<BlockCountRow> rows;
  double horizon = 0.0;
  for (double t : grid) horizon = std::max(horizon, t);
  for (int n : sizes) {
    std::vector<std::vector<double>> counts(grid.size());
    for (int rep = 0; rep < replicates; ++rep) {
      SeedSpec s{seed.root_seed, seed.stream_id + 0x10000ULL * n + rep};
      CoalescentLimits lim;
      lim.horizon = horizon;
      CoalescentPath path = simulate_coalescent(xi, n, s, lim);
      for (std::size_t g = 0; g < grid.size(); ++g)
        counts[g].push_back(static_cast<double>(path.block_count_at(grid[g])));
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
      auto& v = counts[g];
      std::sort(v.begin(), v.end());
      BlockCountRow row;
      row.n = n;
      row.t = grid[g];
      double sum = 0.0;
      for (double x : v) sum += x;
      row.mean_blocks = sum / v.size();
      row.q05 = v[static_cast<std::size_t>(0.05 * (v.size() - 1))];
      row.q95 = v[static_cast<std::size_t>(0.95 * (v.size() - 1))];
      rows.push_back(row);
    }
  }
  return rows;
}

inline void write_block_counts_csv(std::ostream& out, const std::vector<BlockCountRow>& rows) {
  out << "n,t,mean_blocks,q05,q95\n";
  for (const auto& r : rows)
    out << r.n << ',' << format_double(r.t) << ',' << format_double(r.mean_blocks) << ','
        << format_double(r.q05) << ',' << format_double(r.q95) << "\n";
}

namespace detail {

struct NewickNode {
  double height = 0.0;
  std::vector<NewickNode> children;
  int leaf = 0;  // leaf label, 0 for internal nodes

  void serialize(std::ostream& out, double parent_height, bool root) const {
    if (children.empty()) {
      out << leaf;
    } else {
      out << '(';
      for (std::size_t k = 0; k < children.size(); ++k) {
        if (k) out << ',';
        children[k].serialize(out, height, false);
      }
      out << ')';
    }
    if (!root) out << ':' << format_double(parent_height - height);
  }
};

}  // namespace detail

// Newick text with branch lengths. Requires an ultrametric distance matrix;
// merge heights are read off as half distances, simultaneous merges become
// multifurcations.
inline std::string to_newick(const CoalescentTree& tree, double tol = 1e-9) {
  int n = tree.n;
  if (n < 1) throw std::invalid_argument("newick: empty tree");
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      for (int k = 1; k <= n; ++k)
        if (tree.rho.at(i, k) >
            std::max(tree.rho.at(i, j), tree.rho.at(j, k)) + tol)
          throw std::invalid_argument("newick: matrix is not ultrametric");

  std::vector<detail::NewickNode> clusters(n);
  std::vector<std::vector<int>> members(n);
  for (int i = 0; i < n; ++i) {
    clusters[i].leaf = i + 1;
    clusters[i].height = 0.0;
    members[i] = {i + 1};
  }
  auto cross = [&](int a, int b) { return tree.rho.at(members[a][0], members[b][0]); };
  while (clusters.size() > 1) {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a)
      for (std::size_t b = a + 1; b < clusters.size(); ++b) lo = std::min(lo, cross(a, b));
    // group everything within tol of the minimal height
    std::vector<int> group_of(clusters.size(), -1);
    int groups = 0;
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      if (group_of[a] >= 0) continue;
      group_of[a] = groups;
      for (std::size_t b = a + 1; b < clusters.size(); ++b)
        if (group_of[b] < 0 && cross(a, b) <= lo + tol) group_of[b] = groups;
      ++groups;
    }
    std::vector<detail::NewickNode> next;
    std::vector<std::vector<int>> next_members;
    for (int g = 0; g < groups; ++g) {
      std::vector<int> idx;
      for (std::size_t a = 0; a < clusters.size(); ++a)
        if (group_of[a] == g) idx.push_back(static_cast<int>(a));
      if (idx.size() == 1) {
        next.push_back(std::move(clusters[idx[0]]));
        next_members.push_back(std::move(members[idx[0]]));
      } else {
        detail::NewickNode node;
        node.height = 0.5 * lo;
        std::vector<int> mem;
        for (int a : idx) {
          node.children.push_back(std::move(clusters[a]));
          mem.insert(mem.end(), members[a].begin(), members[a].end());
        }
        next.push_back(std::move(node));
        next_members.push_back(std::move(mem));
      }
    }
    if (next.size() == clusters.size())
      throw std::invalid_argument("newick: merge stalled on a non-ultrametric matrix");
    clusters = std::move(next);
    members = std::move(next_members);
  }
  std::ostringstream out;
  clusters[0].serialize(out, clusters[0].height, true);
  out << ';';
  return out.str();
}

// Newick parser used for round trips: returns the leaf distance matrix with
// leaves indexed by their integer labels.
inline Matrix parse_newick(const std::string& text) {
  struct Leaf {
    int label;
    double depth;
  };
  std::size_t pos = 0;
  auto peek = [&]() -> char { return pos < text.size() ? text[pos] : '\0'; };
  auto expect = [&](char c) {
    if (peek() != c) throw std::invalid_argument("newick parse: expected '" + std::string(1, c) + "'");
    ++pos;
  };
  Matrix result;
  std::vector<std::tuple<int, int, double>> dists;

  std::function<std::vector<Leaf>()> node = [&]() -> std::vector<Leaf> {
    std::vector<Leaf> leaves;
    if (peek() == '(') {
      ++pos;
      std::vector<std::vector<Leaf>> kids;
      while (true) {
        kids.push_back(node());
        if (peek() == ',') {
          ++pos;
          continue;
        }
        break;
      }
      expect(')');
      // cross-child distances are fixed at this node
      for (std::size_t a = 0; a < kids.size(); ++a)
        for (std::size_t b = a + 1; b < kids.size(); ++b)
          for (const auto& x : kids[a])
            for (const auto& y : kids[b]) dists.emplace_back(x.label, y.label, x.depth + y.depth);
      for (auto& k : kids) leaves.insert(leaves.end(), k.begin(), k.end());
    } else {
      int label = 0;
      bool any = false;
      while (std::isdigit(static_cast<unsigned char>(peek()))) {
        label = 10 * label + (peek() - '0');
        ++pos;
        any = true;
      }
      if (!any) throw std::invalid_argument("newick parse: expected a leaf label");
      leaves.push_back({label, 0.0});
    }
    if (peek() == ':') {
      ++pos;
      std::size_t used = 0;
      double len = std::stod(text.substr(pos), &used);
      pos += used;
      for (auto& l : leaves) l.depth += len;
    }
    return leaves;
  };

  auto leaves = node();
  expect(';');
  int n = static_cast<int>(leaves.size());
  result = Matrix(n);
  for (const auto& l : leaves)
    if (l.label < 1 || l.label > n)
      throw std::invalid_argument("newick parse: leaf labels must be 1..n");
  for (const auto& [a, b, d] : dists) result.set(a, b, d);
  return result;
}

}  // namespace lookdown

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lookdown {

class SubsetSystem;

// Partition of {1..n} with blocks ordered by least element. Keeps both a
// level -> block-index map and the explicit block list in sync; block
// indices are 1-based so that block_index(i) matches the usual alpha map.
class Partition {
 public:
  Partition() = default;

  static Partition singletons(int n) {
    Partition p;
    p.n_ = n;
    p.blocks_.resize(n);
    p.block_of_.resize(n + 1);
    for (int i = 1; i <= n; ++i) {
      p.blocks_[i - 1] = {i};
      p.block_of_[i] = i;
    }
    return p;
  }

  static Partition single_block(int n) {
    Partition p;
    p.n_ = n;
    p.blocks_.resize(n > 0 ? 1 : 0);
    p.block_of_.assign(n + 1, 1);
    for (int i = 1; i <= n; ++i) p.blocks_[0].push_back(i);
    return p;
  }

  static Partition from_blocks(int n, std::vector<std::vector<int>> blocks) {
    Partition p;
    p.n_ = n;
    p.block_of_.assign(n + 1, 0);
    for (auto& b : blocks) {
      if (b.empty()) throw std::invalid_argument("partition: empty block");
      std::sort(b.begin(), b.end());
    }
    std::sort(blocks.begin(), blocks.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    int covered = 0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      for (int el : blocks[k]) {
        if (el < 1 || el > n) throw std::invalid_argument("partition: element out of range");
        if (p.block_of_[el] != 0) throw std::invalid_argument("partition: overlapping blocks");
        p.block_of_[el] = static_cast<int>(k) + 1;
        ++covered;
      }
    }
    if (covered != n) throw std::invalid_argument("partition: blocks do not cover {1..n}");
    p.blocks_ = std::move(blocks);
    return p;
  }

  // Partition from a level -> group-id map (group ids arbitrary).
  static Partition from_assignment(const std::vector<int>& group_of_level) {
    int n = static_cast<int>(group_of_level.size());
    std::vector<std::vector<int>> blocks;
    std::vector<int> seen;         // group id -> block slot + 1
    std::vector<int> ids;
    for (int i = 0; i < n; ++i) {
      int g = group_of_level[i];
      int slot = -1;
      for (std::size_t k = 0; k < ids.size(); ++k)
        if (ids[k] == g) { slot = static_cast<int>(k); break; }
      if (slot < 0) {
        ids.push_back(g);
        blocks.emplace_back();
        slot = static_cast<int>(blocks.size()) - 1;
      }
      blocks[slot].push_back(i + 1);
    }
    return from_blocks(n, std::move(blocks));
  }

  int n() const { return n_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& block(int k) const { return blocks_.at(k - 1); }  // 1-based

  // 1-based index of the block containing level i (the alpha map).
  int block_index(int i) const { return block_of_.at(i); }

  bool same_block(int i, int j) const { return block_of_.at(i) == block_of_.at(j); }

  bool is_trivial() const { return block_count() == n_; }  // all singletons

  bool operator==(const Partition& o) const {
    return n_ == o.n_ && blocks_ == o.blocks_;
  }
  bool operator!=(const Partition& o) const { return !(*this == o); }

  // {B cap {1..m} : B in pi} \ {emptyset}; m = 0 yields the empty partition.
  Partition restrict(int m) const {
    if (m > n_) throw std::invalid_argument("restrict: m exceeds ground set");
    if (m <= 0) return Partition::singletons(0);
    std::vector<std::vector<int>> bl;
    for (const auto& b : blocks_) {
      std::vector<int> nb;
      for (int el : b)
        if (el <= m) nb.push_back(el);
      if (!nb.empty()) bl.push_back(std::move(nb));
    }
    return from_blocks(m, std::move(bl));
  }

  // Restriction keeping only blocks that still have at least two elements.
  SubsetSystem restrict_non_singleton(int m) const;

  // Relative frequency of the block containing level b among the first m levels.
  double block_freq(int b, int m) const {
    const auto& blk = blocks_[block_of_.at(b) - 1];
    int cnt = 0;
    for (int el : blk)
      if (el <= m) ++cnt;
    return static_cast<double>(cnt) / static_cast<double>(m);
  }

 private:
  int n_ = 0;
  std::vector<int> block_of_;  // index 0 unused
  std::vector<std::vector<int>> blocks_;
};

// System of disjoint nonempty subsets of {1..n}. Unlike a partition it need
// not cover the ground set, and singleton subsets are meaningful: they mark
// levels that take part in a reproduction event without a visible partner.
class SubsetSystem {
 public:
  SubsetSystem() = default;
  explicit SubsetSystem(int n) : n_(n) {}

  static SubsetSystem from_subsets(int n, std::vector<std::vector<int>> subsets) {
    SubsetSystem s(n);
    std::vector<char> used(n + 1, 0);
    for (auto& b : subsets) {
      if (b.empty()) throw std::invalid_argument("subset system: empty subset");
      std::sort(b.begin(), b.end());
      for (int el : b) {
        if (el < 1 || el > n) throw std::invalid_argument("subset system: element out of range");
        if (used[el]) throw std::invalid_argument("subset system: overlapping subsets");
        used[el] = 1;
      }
    }
    std::sort(subsets.begin(), subsets.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    s.subsets_ = std::move(subsets);
    return s;
  }

  int n() const { return n_; }
  bool empty() const { return subsets_.empty(); }
  int subset_count() const { return static_cast<int>(subsets_.size()); }
  const std::vector<std::vector<int>>& subsets() const { return subsets_; }

  bool covers(int i) const {
    for (const auto& b : subsets_)
      for (int el : b)
        if (el == i) return true;
    return false;
  }

  int covered_count() const {
    int c = 0;
    for (const auto& b : subsets_) c += static_cast<int>(b.size());
    return c;
  }

  // The partition whose non-singleton blocks are the subsets of size >= 2;
  // all remaining levels become singletons.
  Partition to_partition() const {
    std::vector<std::vector<int>> bl;
    std::vector<char> used(n_ + 1, 0);
    for (const auto& b : subsets_) {
      if (b.size() >= 2) {
        bl.push_back(b);
        for (int el : b) used[el] = 1;
      }
    }
    for (int i = 1; i <= n_; ++i)
      if (!used[i]) bl.push_back({i});
    return Partition::from_blocks(n_, std::move(bl));
  }

  // sigma ~ sigma' iff they have the same subsets of size >= 2.
  bool equivalent(const SubsetSystem& o) const {
    auto big = [](const SubsetSystem& s) {
      std::vector<std::vector<int>> v;
      for (const auto& b : s.subsets_)
        if (b.size() >= 2) v.push_back(b);
      return v;
    };
    return n_ == o.n_ && big(*this) == big(o);
  }

  // Consistency map to a lower truncation: intersect every subset with
  // {1..m} and drop the empty ones. Singleton intersections stay, since the
  // parent family extends beyond the truncation.
  SubsetSystem restrict(int m) const {
    std::vector<std::vector<int>> sub;
    for (const auto& b : subsets_) {
      std::vector<int> nb;
      for (int el : b)
        if (el <= m) nb.push_back(el);
      if (!nb.empty()) sub.push_back(std::move(nb));
    }
    return from_subsets(m, std::move(sub));
  }

  bool operator==(const SubsetSystem& o) const { return n_ == o.n_ && subsets_ == o.subsets_; }

 private:
  int n_ = 0;
  std::vector<std::vector<int>> subsets_;
};

inline SubsetSystem Partition::restrict_non_singleton(int m) const {
  if (m > n_) throw std::invalid_argument("restrict: m exceeds ground set");
  std::vector<std::vector<int>> sub;
  for (const auto& b : blocks_) {
    std::vector<int> nb;
    for (int el : b)
      if (el <= m) nb.push_back(el);
    if (nb.size() >= 2) sub.push_back(std::move(nb));
  }
  return SubsetSystem::from_subsets(std::max(m, 0), std::move(sub));
}

// 1-based index of the block of the induced partition containing level i:
// the level a particle occupied before the event that i descends from.
inline int alpha_index(const SubsetSystem& sigma, int i) {
  return sigma.to_partition().block_index(i);
}

inline int alpha_index(const Partition& pi, int i) { return pi.block_index(i); }

// Coagulation: block i of the result is the union of outer blocks B(outer,j)
// over j in the i-th inner block; inner blocks indexing past #outer
// contribute nothing.
inline Partition coagulate(const Partition& outer, const Partition& inner) {
  if (inner.n() < outer.block_count())
    throw std::invalid_argument("coagulate: inner partition too small to index outer blocks");
  std::vector<std::vector<int>> bl;
  for (const auto& ib : inner.blocks()) {
    std::vector<int> merged;
    for (int j : ib) {
      if (j <= outer.block_count()) {
        const auto& ob = outer.block(j);
        merged.insert(merged.end(), ob.begin(), ob.end());
      }
    }
    if (!merged.empty()) bl.push_back(std::move(merged));
  }
  return Partition::from_blocks(outer.n(), std::move(bl));
}

// 2^{-k} where k is the least level whose restrictions disagree; 0 if equal.
inline double partition_distance(const Partition& a, const Partition& b) {
  if (a.n() != b.n())
    throw std::invalid_argument("partition_distance: different truncation levels");
  for (int j = 2; j <= a.n(); ++j)
    for (int i = 1; i < j; ++i)
      if (a.same_block(i, j) != b.same_block(i, j)) return std::ldexp(1.0, -j);
  return 0.0;
}

// Block frequencies held as exact counts; weights sum to one by construction.
struct BlockFrequencies {
  std::vector<long long> counts;  // one per reported block
  long long dust_count = 0;       // pooled singletons when requested
  long long total = 0;

  std::vector<double> weights() const {
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
      w[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return w;
  }
  double dust_weight() const {
    return static_cast<double>(dust_count) / static_cast<double>(total);
  }
};

inline BlockFrequencies block_frequencies(const Partition& pi, bool separate_dust) {
  BlockFrequencies f;
  f.total = pi.n();
  for (const auto& b : pi.blocks()) {
    if (separate_dust && b.size() == 1)
      f.dust_count += 1;
    else
      f.counts.push_back(static_cast<long long>(b.size()));
  }
  return f;
}

// Text codec: blocks joined by '|', elements by ',', e.g. "1,3|2|4".
inline std::string encode_partition(const Partition& pi) {
  std::ostringstream out;
  bool first_block = true;
  for (const auto& b : pi.blocks()) {
    if (!first_block) out << '|';
    first_block = false;
    bool first_el = true;
    for (int el : b) {
      if (!first_el) out << ',';
      first_el = false;
      out << el;
    }
  }
  return out.str();
}

inline std::string encode_subsets(const SubsetSystem& s) {
  std::ostringstream out;
  bool first_block = true;
  for (const auto& b : s.subsets()) {
    if (!first_block) out << '|';
    first_block = false;
    bool first_el = true;
    for (int el : b) {
      if (!first_el) out << ',';
      first_el = false;
      out << el;
    }
  }
  return out.str();
}

namespace detail {
inline std::vector<std::vector<int>> parse_block_text(const std::string& text) {
  std::vector<std::vector<int>> blocks;
  std::string block;
  std::istringstream stream(text);
  while (std::getline(stream, block, '|')) {
    std::vector<int> b;
    std::istringstream bs(block);
    std::string tok;
    while (std::getline(bs, tok, ',')) {
      std::size_t pos = 0;
      int v = std::stoi(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument("partition text: bad element '" + tok + "'");
      b.push_back(v);
    }
    if (!b.empty()) blocks.push_back(std::move(b));
  }
  return blocks;
}
}  // namespace detail

// Parses "1,3|2|4"; the ground set size is the element count, and the input
// must cover {1..n} without overlap.
inline Partition parse_partition(const std::string& text) {
  auto blocks = detail::parse_block_text(text);
  int n = 0;
  for (const auto& b : blocks) n += static_cast<int>(b.size());
  return Partition::from_blocks(n, std::move(blocks));
}

inline SubsetSystem parse_subsets(const std::string& text, int n) {
  return SubsetSystem::from_subsets(n, detail::parse_block_text(text));
}

// All partitions of {1..n} via restricted growth strings.
inline std::vector<Partition> enumerate_partitions(int n) {
  std::vector<Partition> out;
  if (n == 0) return out;
  std::vector<int> rgs(n, 0);
  std::function<void(int, int)> rec = [&](int level, int groups) {
    if (level == n) {
      out.push_back(Partition::from_assignment(rgs));
      return;
    }
    for (int g = 0; g <= groups; ++g) {
      rgs[level] = g;
      rec(level + 1, std::max(groups, g + 1));
    }
  };
  rec(0, 0);
  return out;
}

// All systems of disjoint nonempty subsets of {1..n} (including the empty
// system): each level joins an existing group, opens a new group, or stays
// out.
inline std::vector<SubsetSystem> enumerate_subset_systems(int n) {
  std::vector<SubsetSystem> out;
  std::vector<int> assign(n, -1);  // -1 = uncovered, else group id
  std::function<void(int, int)> rec = [&](int level, int groups) {
    if (level == n) {
      std::vector<std::vector<int>> sub(groups);
      for (int i = 0; i < n; ++i)
        if (assign[i] >= 0) sub[assign[i]].push_back(i + 1);
      out.push_back(SubsetSystem::from_subsets(n, std::move(sub)));
      return;
    }
    assign[level] = -1;
    rec(level + 1, groups);
    for (int g = 0; g <= groups && g < n; ++g) {
      assign[level] = g;
      rec(level + 1, std::max(groups, g + 1));
    }
    assign[level] = -1;
  };
  rec(0, 0);
  return out;
}

}  // namespace lookdown

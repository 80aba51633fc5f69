#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace lookdown {

// Counter-based splittable random stream. The state is a 64-bit counter
// advanced by a fixed odd increment and finalized with the splitmix64 mixer,
// so identical (root_seed, stream_id) pairs reproduce identical output on
// every platform. Substreams are derived by hashing, never by jumping, which
// keeps replicates independent of evaluation order and thread count.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x5851f42d4c957f2dULL)) {}

  // Independent stream for (root_seed, stream_id).
  static Rng stream(std::uint64_t root_seed, std::uint64_t stream_id) {
    return Rng(mix(root_seed + 0x9e3779b97f4a7c15ULL * (stream_id + 1)));
  }

  // Derive a further substream, e.g. per (replicate, module).
  Rng split(std::uint64_t key) const {
    return Rng(mix(state_ + 0xd1b54a32d192ed03ULL * (key + 1)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  // Uniform on [0,1), 53-bit mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0,1].
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log(uniform_pos()) / rate;
  }

  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("below: n must be positive");
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Index sampled proportionally to the given nonnegative weights.
  std::size_t discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("discrete: weights sum to zero");
    double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  // k distinct values from {0,...,n-1}, ascending.
  std::vector<int> sample_distinct(int n, int k) {
    if (k > n) throw std::invalid_argument("sample_distinct: k > n");
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
      int j = i + static_cast<int>(below(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

struct SeedSpec {
  std::uint64_t root_seed = 0;
  std::uint64_t stream_id = 0;

  Rng make_rng() const { return Rng::stream(root_seed, stream_id); }
};

}  // namespace lookdown

#include <catch2/catch_amalgamated.hpp>

#include "lookdown/partition.hpp"
#include "lookdown/random.hpp"

using namespace lookdown;

namespace {

Partition random_partition(int n, Rng& rng) {
  std::vector<int> assign(n);
  int groups = 1;
  for (int i = 0; i < n; ++i) {
    int g = static_cast<int>(rng.below(groups + 1));
    assign[i] = g;
    groups = std::max(groups, g + 2);
  }
  return Partition::from_assignment(assign);
}

}  // namespace

TEST_CASE("coagulation", "[partition]") {
  SECTION("block-union formula") {
    auto outer = Partition::from_blocks(4, {{1, 3}, {2}, {4}});
    auto inner = Partition::from_blocks(3, {{1, 2}, {3}});
    auto result = coagulate(outer, inner);
    CHECK(result == Partition::from_blocks(4, {{1, 2, 3}, {4}}));
  }

  SECTION("all-singleton inner is the identity") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
      auto pi = random_partition(6, rng);
      CHECK(coagulate(pi, Partition::singletons(6)) == pi);
    }
  }

  SECTION("all-singleton outer reproduces the inner partition") {
    Rng rng(12);
    for (int rep = 0; rep < 20; ++rep) {
      auto pi = random_partition(5, rng);
      CHECK(coagulate(Partition::singletons(5), pi) == pi);
    }
  }

  SECTION("associativity against brute force") {
    Rng rng(13);
    for (int rep = 0; rep < 200; ++rep) {
      auto a = random_partition(6, rng);
      auto b = random_partition(6, rng);
      auto c = random_partition(6, rng);
      CHECK(coagulate(coagulate(a, b), c) == coagulate(a, coagulate(b, c)));
    }
  }

  SECTION("restriction commutes with coagulation") {
    Rng rng(14);
    for (int rep = 0; rep < 200; ++rep) {
      auto a = random_partition(6, rng);
      auto b = random_partition(6, rng);
      int m = 1 + static_cast<int>(rng.below(6));
      auto lhs = coagulate(a, b).restrict(m);
      auto ra = a.restrict(m);
      auto rhs = coagulate(ra, b.restrict(ra.block_count()));
      CHECK(lhs == rhs);
    }
  }

  SECTION("undersized inner partition is rejected") {
    auto outer = Partition::from_blocks(4, {{1}, {2}, {3}, {4}});
    auto inner = Partition::from_blocks(2, {{1, 2}});
    CHECK_THROWS_AS(coagulate(outer, inner), std::invalid_argument);
  }
}

TEST_CASE("restriction", "[partition]") {
  auto pi = Partition::from_blocks(4, {{1, 4}, {2, 3}});
  SECTION("full mode keeps singleton intersections") {
    CHECK(pi.restrict(3) == Partition::from_blocks(3, {{1}, {2, 3}}));
  }
  SECTION("non-singleton mode drops them") {
    auto sigma = pi.restrict_non_singleton(3);
    REQUIRE(sigma.subset_count() == 1);
    CHECK(sigma.subsets()[0] == std::vector<int>{2, 3});
  }
  SECTION("identity at the full level") { CHECK(pi.restrict(4) == pi); }
  SECTION("level zero is empty") { CHECK(pi.restrict(0).block_count() == 0); }
}

TEST_CASE("alpha index", "[partition]") {
  SECTION("pair on three levels") {
    auto sigma = SubsetSystem::from_subsets(3, {{1, 2}});
    CHECK(alpha_index(sigma, 1) == 1);
    CHECK(alpha_index(sigma, 2) == 1);
    CHECK(alpha_index(sigma, 3) == 2);
  }
  SECTION("empty system is the identity") {
    auto sigma = SubsetSystem::from_subsets(4, {});
    for (int i = 1; i <= 4; ++i) CHECK(alpha_index(sigma, i) == i);
  }
  SECTION("gap block shifts the levels above") {
    auto sigma = SubsetSystem::from_subsets(4, {{1, 3}});
    CHECK(alpha_index(sigma, 2) == 2);
    CHECK(alpha_index(sigma, 4) == 3);
  }
}

TEST_CASE("partition metric", "[partition]") {
  SECTION("identical partitions") {
    auto pi = Partition::from_blocks(3, {{1, 2}, {3}});
    CHECK(partition_distance(pi, pi) == 0.0);
  }
  SECTION("first disagreement at level two") {
    auto a = Partition::from_blocks(3, {{1, 2}, {3}});
    CHECK(partition_distance(a, Partition::singletons(3)) == 0.25);
  }
  SECTION("first disagreement at level four") {
    auto a = Partition::from_blocks(4, {{1}, {2}, {3, 4}});
    CHECK(partition_distance(a, Partition::singletons(4)) == 0.0625);
  }
  SECTION("ultrametric inequality holds exactly") {
    Rng rng(15);
    for (int rep = 0; rep < 300; ++rep) {
      auto a = random_partition(6, rng);
      auto b = random_partition(6, rng);
      auto c = random_partition(6, rng);
      CHECK(partition_distance(a, c) <=
            std::max(partition_distance(a, b), partition_distance(b, c)));
    }
  }
}

TEST_CASE("block frequencies", "[partition]") {
  SECTION("single block") {
    auto f = block_frequencies(Partition::single_block(5), false);
    REQUIRE(f.weights().size() == 1);
    CHECK(f.weights()[0] == 1.0);
  }
  SECTION("dust pooling") {
    auto pi = Partition::from_blocks(4, {{1, 2}, {3}, {4}});
    auto f = block_frequencies(pi, true);
    REQUIRE(f.weights().size() == 1);
    CHECK(f.weights()[0] == 0.5);
    CHECK(f.dust_weight() == 0.5);
  }
  SECTION("all singletons pool to dust one") {
    auto f = block_frequencies(Partition::singletons(7), true);
    CHECK(f.weights().empty());
    CHECK(f.dust_weight() == 1.0);
  }
  SECTION("counts always sum to n") {
    Rng rng(16);
    for (int rep = 0; rep < 50; ++rep) {
      auto pi = random_partition(8, rng);
      auto f = block_frequencies(pi, false);
      long long sum = 0;
      for (long long c : f.counts) sum += c;
      CHECK(sum == 8);
    }
  }
}

TEST_CASE("partition text codec", "[partition]") {
  SECTION("round trip") {
    auto pi = Partition::from_blocks(4, {{1, 3}, {2}, {4}});
    CHECK(encode_partition(pi) == "1,3|2|4");
    CHECK(parse_partition("1,3|2|4") == pi);
  }
  SECTION("rejects overlap") { CHECK_THROWS_AS(parse_partition("1,2|2,3"), std::invalid_argument); }
  SECTION("rejects non-covering input") {
    CHECK_THROWS_AS(parse_partition("1,2|4"), std::invalid_argument);
  }
}

TEST_CASE("enumerators", "[partition]") {
  SECTION("bell numbers") {
    CHECK(enumerate_partitions(1).size() == 1);
    CHECK(enumerate_partitions(3).size() == 5);
    CHECK(enumerate_partitions(5).size() == 52);
  }
  SECTION("subset systems of three levels") {
    auto all = enumerate_subset_systems(3);
    std::size_t nonempty = 0;
    for (const auto& s : all)
      if (!s.empty()) ++nonempty;
    CHECK(nonempty == 14);
  }
  SECTION("system restriction keeps singleton traces") {
    auto sigma = SubsetSystem::from_subsets(5, {{1, 4}, {3, 5}});
    auto r = sigma.restrict(3);
    REQUIRE(r.subset_count() == 2);
    CHECK(r.subsets()[0] == std::vector<int>{1});
    CHECK(r.subsets()[1] == std::vector<int>{3});
  }
}

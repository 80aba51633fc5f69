#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "lookdown/partition.hpp"
#include "lookdown/random.hpp"
#include "lookdown/xi_measure.hpp"

using namespace lookdown;
using Catch::Approx;

namespace {

XiAtom atom(double w, std::vector<double> x) { return XiAtom{w, SimplexPoint(std::move(x))}; }

XiMeasure star() { return XiMeasure::from_atoms({atom(1.0, {1.0})}); }

}  // namespace

TEST_CASE("simplex points", "[xi]") {
  SECTION("cached norms") {
    SimplexPoint x({0.5, 0.25});
    CHECK(x.l1() == Approx(0.75));
    CHECK(x.l2sq() == Approx(0.3125));
    CHECK(x.dust() == Approx(0.25));
    CHECK_FALSE(x.is_finite_unit());
    CHECK(SimplexPoint({1.0}).is_finite_unit());
  }
  SECTION("validation") {
    CHECK_THROWS_AS(SimplexPoint({0.25, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(SimplexPoint({0.8, 0.4}), std::invalid_argument);
    CHECK_THROWS_AS(SimplexPoint({0.0}), std::invalid_argument);
  }
}

TEST_CASE("paintbox sampling", "[xi]") {
  Rng rng(21);
  SECTION("full-mass single entry paints one block") {
    SimplexPoint x({1.0});
    for (int rep = 0; rep < 20; ++rep)
      CHECK(paintbox_sample(x, 5, rng) == Partition::single_block(5));
  }
  SECTION("empty point paints only dust") {
    SimplexPoint x{};
    for (int rep = 0; rep < 20; ++rep)
      CHECK(paintbox_sample(x, 4, rng) == Partition::singletons(4));
  }
  SECTION("pair probability for a half-length entry") {
    SimplexPoint x({0.5});
    int hits = 0;
    const int reps = 40000;
    for (int rep = 0; rep < reps; ++rep)
      if (paintbox_sample(x, 2, rng).block_count() == 1) ++hits;
    double freq = static_cast<double>(hits) / reps;
    double se = std::sqrt(0.25 * 0.75 / reps);
    CHECK(std::abs(freq - 0.25) <= 3.0 * se);
  }
}

TEST_CASE("sigma rates", "[xi]") {
  SECTION("kingman pair") {
    auto xi = XiMeasure::kingman(1.0);
    auto sigma = SubsetSystem::from_subsets(3, {{1, 2}});
    CHECK(xi.rate_sigma(3, sigma) == Approx(1.0));
  }
  SECTION("kingman lonely level diverges") {
    auto xi = XiMeasure::kingman(1.0);
    auto sigma = SubsetSystem::from_subsets(3, {{1}});
    CHECK(std::isinf(xi.rate_sigma(3, sigma)));
  }
  SECTION("half atom pair out of three") {
    auto xi = XiMeasure::from_atoms({atom(1.0, {0.5})});
    auto sigma = SubsetSystem::from_subsets(3, {{1, 2}});
    CHECK(xi.rate_sigma(3, sigma) == Approx(0.5));
  }
  SECTION("two-entry atom double singleton") {
    auto xi = XiMeasure::from_atoms({atom(1.0, {0.5, 0.25})});
    auto sigma = SubsetSystem::from_subsets(2, {{1}, {2}});
    CHECK(xi.rate_sigma(2, sigma) == Approx(0.8));
  }
  SECTION("permutation invariance is exact") {
    auto xi = XiMeasure::from_atoms({atom(0.7, {0.4, 0.3, 0.1}), atom(0.5, {0.6})});
    auto a = SubsetSystem::from_subsets(5, {{1, 2}, {3}});
    auto b = SubsetSystem::from_subsets(5, {{4, 1}, {5}});  // same size pattern
    CHECK(xi.rate_sigma(5, a) == xi.rate_sigma(5, b));
  }
  SECTION("consistency under adding one level") {
    auto xi = XiMeasure::from_atoms({atom(1.0, {0.4, 0.3}), atom(0.25, {0.2, 0.2, 0.1})});
    for (int n = 2; n <= 4; ++n) {
      auto systems_up = enumerate_subset_systems(n + 1);
      for (const auto& sigma0 : enumerate_subset_systems(n)) {
        if (sigma0.empty()) continue;
        double direct = xi.rate_sigma(n, sigma0);
        double summed = 0.0;
        for (const auto& up : systems_up)
          if (!up.empty() && up.restrict(n) == sigma0) summed += xi.rate_sigma(n + 1, up);
        CHECK(summed == Approx(direct).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("partition rates", "[xi]") {
  SECTION("kingman pair partition") {
    auto xi = XiMeasure::kingman(1.0);
    auto pi = Partition::from_blocks(3, {{1, 2}, {3}});
    CHECK(xi.rate_pi(3, pi) == Approx(1.0));
  }
  SECTION("star full merge") {
    for (int n : {2, 4, 6}) CHECK(star().rate_pi(n, Partition::single_block(n)) == Approx(1.0));
  }
  SECTION("pair rate equals the total mass") {
    auto xi = XiMeasure::from_atoms({atom(0.5, {0.5, 0.25}), atom(0.25, {0.9})}, 0.75);
    auto pair2 = Partition::from_blocks(2, {{1, 2}});
    CHECK(xi.rate_pi(2, pair2) == Approx(xi.total_mass()).epsilon(1e-12));
    CHECK(xi.total_mass() == Approx(1.5));
  }
  SECTION("partition rate is the sum over equivalent systems") {
    auto xi = XiMeasure::from_atoms({atom(1.0, {0.4, 0.2})});
    auto pi = Partition::from_blocks(4, {{1, 3}, {2}, {4}});
    double direct = xi.rate_pi(4, pi);
    double summed = 0.0;
    for (const auto& s : enumerate_subset_systems(4))
      if (!s.empty() && s.to_partition() == pi) summed += xi.rate_sigma(4, s);
    CHECK(summed == Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("dust classification", "[xi]") {
  SECTION("kingman has no dust") {
    CHECK(XiMeasure::kingman(1.0).classify_dust() == DustClass::no_dust);
  }
  SECTION("star has dust at unit rate") {
    CHECK(star().classify_dust() == DustClass::dust);
    CHECK(star().lonely_level_rate() == Approx(1.0));
  }
  SECTION("uniform family has no dust") {
    CHECK(XiMeasure::uniform_family().classify_dust() == DustClass::no_dust);
  }
  SECTION("beta threshold at a = 1") {
    CHECK(XiMeasure::beta_family(0.5, 1.0).classify_dust() == DustClass::no_dust);
    CHECK(XiMeasure::beta_family(1.0, 1.0).classify_dust() == DustClass::no_dust);
    CHECK(XiMeasure::beta_family(1.5, 1.0).classify_dust() == DustClass::dust);
    CHECK(XiMeasure::beta_family(2.0, 3.0).classify_dust() == DustClass::dust);
  }
  SECTION("dirac family dust rate") {
    CHECK(XiMeasure::dirac_family(0.5).lonely_level_rate() == Approx(2.0));
  }
}

TEST_CASE("visible rates", "[xi]") {
  SECTION("kingman pairs at truncation three") {
    CHECK(XiMeasure::kingman(1.0).visible_rate(3, RateScope::changes_gamma) == Approx(3.0));
  }
  SECTION("star is visible at unit rate in both scopes") {
    for (int n : {1, 2, 5, 20}) {
      if (n >= 2)
        CHECK(star().visible_rate(n, RateScope::changes_gamma) == Approx(1.0));
      CHECK(star().visible_rate(n, RateScope::touches_level) == Approx(1.0));
    }
  }
  SECTION("zero measure is silent") {
    XiMeasure zero;
    CHECK(zero.visible_rate(4, RateScope::changes_gamma) == 0.0);
    CHECK(zero.visible_rate(4, RateScope::touches_level) == 0.0);
  }
  SECTION("touches scope diverges without dust") {
    CHECK(std::isinf(XiMeasure::kingman(1.0).visible_rate(3, RateScope::touches_level)));
    CHECK(std::isinf(XiMeasure::uniform_family().visible_rate(3, RateScope::touches_level)));
  }
  SECTION("uniform family merge total is n - 1") {
    for (int n : {2, 5, 17})
      CHECK(XiMeasure::uniform_family().visible_rate(n, RateScope::changes_gamma) ==
            Approx(static_cast<double>(n - 1)).epsilon(1e-12));
  }
  SECTION("atom scope rates match the sigma-rate sums") {
    auto xi = XiMeasure::from_atoms({atom(0.8, {0.5, 0.25}), atom(0.3, {0.3})});
    for (int n : {2, 3, 4}) {
      double sum_gamma = 0.0, sum_touch = 0.0;
      for (const auto& pi : enumerate_partitions(n))
        if (!pi.is_trivial()) sum_gamma += xi.rate_pi(n, pi);
      for (const auto& s : enumerate_subset_systems(n))
        if (!s.empty()) sum_touch += xi.rate_sigma(n, s);
      CHECK(xi.visible_rate(n, RateScope::changes_gamma) == Approx(sum_gamma).epsilon(1e-11));
      CHECK(xi.visible_rate(n, RateScope::touches_level) == Approx(sum_touch).epsilon(1e-11));
    }
  }
}

TEST_CASE("closed-form families", "[xi]") {
  SECTION("beta block rates via the beta function") {
    auto xi = XiMeasure::beta_family(2.0, 1.0);
    // density 2x: the (k,n) integral is 2 B(k, n-k+1)
    CHECK(xi.family_block_rate(2, 3) == Approx(2.0 * std::exp(XiMeasure::log_beta(2, 2))));
    CHECK(xi.family_block_rate(3, 3) == Approx(2.0 * std::exp(XiMeasure::log_beta(3, 1))));
  }
  SECTION("dirac family equals the explicit atom") {
    auto fam = XiMeasure::dirac_family(0.5);
    auto at = XiMeasure::from_atoms({atom(1.0, {0.5})});
    for (int n : {2, 3, 5}) {
      auto pair = SubsetSystem::from_subsets(n, {{1, 2}});
      CHECK(fam.rate_sigma(n, pair) == Approx(at.rate_sigma(n, pair)).epsilon(1e-12));
      CHECK(fam.visible_rate(n, RateScope::touches_level) ==
            Approx(at.visible_rate(n, RateScope::touches_level)).epsilon(1e-12));
    }
  }
}

TEST_CASE("model descriptor json", "[xi]") {
  SECTION("atoms with kingman part") {
    auto xi = XiMeasure::from_atoms({atom(0.5, {0.5, 0.25})}, 1.0);
    auto back = xi_from_json(xi_to_json(xi));
    CHECK(back.kingman_mass() == 1.0);
    REQUIRE(back.atoms().size() == 1);
    CHECK(back.atoms()[0].point.entries() == std::vector<double>{0.5, 0.25});
  }
  SECTION("family tags") {
    for (const auto& xi :
         {XiMeasure::beta_family(2.0, 3.0), XiMeasure::uniform_family(), XiMeasure::dirac_family(0.25)}) {
      auto back = xi_from_json(xi_to_json(xi));
      CHECK(back.family() == xi.family());
    }
  }
  SECTION("family and atoms are exclusive") {
    auto j = nlohmann::json::parse(R"({"atoms":[{"w":1.0,"x":[0.5]}],"family":{"uniform":{}}})");
    CHECK_THROWS_AS(xi_from_json(j), std::invalid_argument);
  }
  SECTION("parses the plain kingman descriptor") {
    auto xi = xi_from_json(nlohmann::json::parse(R"({"kingman":1.0})"));
    CHECK(xi.kingman_mass() == 1.0);
    CHECK(xi.atoms().empty());
  }
}

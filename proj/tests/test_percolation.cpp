#include <doctest.h>

#include <cstdlib>

#include "cardylab/domain_approx.hpp"
#include "cardylab/percolation.hpp"

#include "fixtures.hpp"

using namespace cardylab;

TEST_CASE("wilson interval behaves at the extremes") {
  const auto mid = wilson_estimate(500, 1000, 0);
  CHECK(mid.value == doctest::Approx(0.5));
  CHECK(mid.half_width < 0.04);
  const auto zero = wilson_estimate(0, 1000, 0);
  CHECK(zero.value == 0.0);
  CHECK(zero.half_width > 0.0);
  CHECK(zero.half_width < 0.01);
}

TEST_CASE("duality form equals the direct separation oracle exhaustively") {
  // Small enough for all colorings, big enough to have nontrivial clusters.
  const auto dom = fixtures::unit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{0.25});
  const std::size_t k = dd.sites.size();
  REQUIRE(k <= 16);
  REQUIRE(k >= 8);
  int interior = -1;
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    bool all = dd.in_principal(static_cast<int>(i));
    for (const int nb : dd.adj[i]) all = all && nb >= 0;
    if (all) interior = static_cast<int>(i);
  }
  REQUIRE(interior >= 0);
  Coloring col(dd, Color::Blue);
  for (std::uint64_t mask = 0; mask < (1ull << k); ++mask) {
    for (std::size_t i = 0; i < k; ++i)
      col.colors[i] = static_cast<std::uint8_t>((mask >> i) & 1u);
    for (const CrossingFunc f :
         {CrossingFunc::U, CrossingFunc::V, CrossingFunc::W}) {
      for (const Color c : {Color::Blue, Color::Yellow}) {
        const CrossingSpec spec{f, c, dd.sites[interior]};
        REQUIRE(crossing_event(col, dd, spec) ==
                crossing_event_direct(col, dd, spec));
      }
    }
  }
}

TEST_CASE("estimates are invariant under the worker count") {
  const auto dom = fixtures::unit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 16});
  setenv("CARDYLAB_THREADS", "1", 1);
  const auto serial = estimate_cardy(dd, 2000, 99);
  setenv("CARDYLAB_THREADS", "8", 1);
  const auto parallel = estimate_cardy(dd, 2000, 99);
  setenv("CARDYLAB_THREADS", "1", 1);
  CHECK(serial.value == parallel.value);
  CHECK(serial.half_width == parallel.half_width);
}

TEST_CASE("square crossing estimate is near one half") {
  const auto dom = fixtures::unit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 16});
  const auto est = estimate_cardy(dd, 4000, 7);
  CHECK(std::abs(est.value - 0.5) < 0.05);
  // Color symmetry at p = 1/2.
  const auto yellow = estimate_crossing(
      dd, CrossingSpec{CrossingFunc::U, Color::Yellow, dd.sites[dd.probe_site]},
      4000, 7);
  CHECK(std::abs(yellow.value - est.value) <
        3 * (yellow.half_width + est.half_width));
}

TEST_CASE("boundary values: low near the dual arc, high near c") {
  const auto dom = fixtures::unit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 24});
  const SiteCoord near_c = site_containing({0.06, 0.9}, dd.scale);
  const SiteCoord near_C_arc = site_containing({0.5, 0.06}, dd.scale);
  const auto profile = boundary_decay_profile(
      dd, {near_C_arc, near_c}, 3000, 21);
  CHECK(profile[0].value < 0.35);
  CHECK(profile[1].value > 0.65);
  CHECK(profile[0].value < profile[1].value);
}

TEST_CASE("harris ring probabilities are positive and scale stable") {
  const auto dom = fixtures::unit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 48});
  // Rings anchored at a boundary point interior to arc A: the ring closes
  // through the arc, so the circuit probability plateaus well above zero.
  const AnnulusFamily fam = dyadic_annuli({1.0, 1.0}, 0.4, 4);
  const auto e0 =
      harris_ring_probability(dd, fam, 0, Color::Blue, 600, 5, ArcLabel::A);
  const auto e1 =
      harris_ring_probability(dd, fam, 1, Color::Blue, 600, 5, ArcLabel::A);
  CHECK(e0.value > 0.05);
  CHECK(e1.value > 0.05);
  CHECK(std::abs(e0.value - e1.value) <
        3 * (e0.half_width + e1.half_width));
  // Color exchangeability at p = 1/2.
  const auto y0 =
      harris_ring_probability(dd, fam, 0, Color::Yellow, 600, 6, ArcLabel::A);
  CHECK(std::abs(y0.value - e0.value) < 3 * (y0.half_width + e0.half_width));
  // Too-thin annulus at this lattice scale.
  CHECK_THROWS_WITH_AS(
      harris_ring_probability(dd, fam, 2, Color::Blue, 10, 5, ArcLabel::A),
      doctest::Contains("ANNULUS_TOO_THIN"), Error);
}

TEST_CASE("exploration runs from a toward c and is reproducible") {
  const auto dom = fixtures::unit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 16});
  ExploreStop stop;
  stop.target_nbhd = 3.0 / 16;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const ExploreResult res = explore(dd, seed, stop);
    CHECK(res.trace.start == dd.a_eps);
    CHECK(res.trace.edges.size() >= 1);
    CHECK(res.trace.stop_reason == StopReason::ReachedTargetNbhd);
    CHECK(dist(corner_pos(res.trace.tip, dd.scale),
               corner_pos(dd.c_eps, dd.scale)) < 4.0 / 16);
    const ExploreResult again = explore(dd, seed, stop);
    CHECK(again.trace.edges == res.trace.edges);
  }
}

TEST_CASE("slit cardy after exploration stays a probability") {
  auto dom = fixtures::unit_square();
  dom.a = Mark{{0.5, 1}, {}};
  dom.b = Mark{{0, 0}, {}};
  dom.c = Mark{{1, 0}, {}};
  dom.d = Mark{{0.5, 0}, {}};
  dom.z0 = {0.25, 0.25};
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 16});
  ExploreStop stop;
  stop.max_steps = 40;
  const ExploreResult res = explore(dd, 3, stop);
  REQUIRE(res.trace.edges.size() >= 2);
  const auto est = slit_cardy_after_exploration(dom, dd, res.trace, 1500, 8);
  CHECK(est.value >= 0.0);
  CHECK(est.value <= 1.0);
  CHECK(est.samples == 1500);
}

TEST_CASE("probe outside the principal component is rejected") {
  const auto dom = fixtures::unit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 16});
  const Coloring col = sample_coloring(dd, 1, 0);
  const CrossingSpec spec{CrossingFunc::U, Color::Blue, SiteCoord{1000, 1000}};
  CHECK_THROWS_WITH_AS(crossing_event(col, dd, spec),
                       doctest::Contains("PROBE_OUTSIDE"), Error);
}

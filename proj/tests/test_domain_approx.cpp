#include <doctest.h>

#include "cardylab/domain_approx.hpp"
#include "cardylab/percolation.hpp"

#include "fixtures.hpp"

using namespace cardylab;

namespace {

// Descend from a boundary corner into the interior: a zigzag corner path
// whose flanking tiles stay in the principal component.  Returns false if
// the walk gets stuck before taking `steps` edges.
bool try_descend(const DiscreteDomain& dd, Corner start, int steps,
                 CurveTrace& tr) {
  tr = CurveTrace{};
  tr.start = start;
  Corner cur = start, prev{start.x + 1000000, start.y};
  for (int i = 0; i < steps; ++i) {
    Corner best{};
    bool found = false;
    for (const Corner nb : detail::corner_neighbors(cur)) {
      if (nb == prev || nb.y >= cur.y) continue;
      std::array<SiteCoord, 2> fl;
      try {
        fl = sites_sharing_edge(cur, nb);
      } catch (const Error&) {
        continue;
      }
      const int i0 = dd.site_id(fl[0]), i1 = dd.site_id(fl[1]);
      if (i0 < 0 || i1 < 0 || !dd.in_principal(i0) || !dd.in_principal(i1))
        continue;
      if (!found || nb.y < best.y) {
        best = nb;
        found = true;
      }
    }
    if (!found) return false;
    tr.edges.push_back({cur, best});
    prev = cur;
    cur = best;
  }
  tr.tip = cur;
  return true;
}

// Nearest boundary vertex to `target` from which a `steps`-edge descent
// exists; the jagged discrete boundary leaves some vertices with no legal
// first edge.
CurveTrace descend_near(const DiscreteDomain& dd, Point target, int steps) {
  const auto& cy = dd.boundary[dd.principal_cycle];
  std::vector<std::pair<double, Corner>> cands;
  for (const auto& e : cy)
    cands.push_back({dist(corner_pos(e.from, dd.scale), target), e.from});
  std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
    return a.first < b.first;
  });
  CurveTrace tr;
  for (const auto& [d, c] : cands)
    if (try_descend(dd, c, steps, tr)) return tr;
  REQUIRE(false);
  return tr;
}

}  // namespace

TEST_CASE("canonical approximation of the square is structurally sound") {
  const auto dom = fixtures::unit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 16});
  CHECK(dd.sites.size() > 200);
  CHECK(dd.principal_cycle >= 0);
  const auto& cy = dd.boundary[dd.principal_cycle];
  // The cycle is closed and every edge's interior site exists.
  for (std::size_t j = 0; j < cy.size(); ++j) {
    CHECK(cy[j].to == cy[(j + 1) % cy.size()].from);
    CHECK(cy[j].interior_site >= 0);
    CHECK(cy[j].label != ArcLabel::None);
  }
  // Exactly three contiguous label runs.
  int changes = 0;
  for (std::size_t j = 0; j < cy.size(); ++j)
    if (cy[j].label != cy[(j + 1) % cy.size()].label) ++changes;
  CHECK(changes == 3);
  // Marked vertices land near the continuum marks.
  CHECK(dist(corner_pos(dd.a_eps, dd.scale), dom.a.p) < 0.2);
  CHECK(dist(corner_pos(dd.b_eps, dd.scale), dom.b.p) < 0.2);
  CHECK(dist(corner_pos(dd.c_eps, dd.scale), dom.c.p) < 0.2);
  CHECK(dd.probe_site >= 0);
}

TEST_CASE("interior conditions pass on all good fixtures") {
  for (const auto& dom : fixtures::good_fixtures()) {
    for (const double eps : {1.0 / 16, 1.0 / 32}) {
      const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{eps});
      const ApproxReport rep = check_interior_conditions(dd, dom);
      for (const auto& [name, cr] : rep.conditions) {
        INFO(name, ": ", cr.witness);
        CHECK(cr.pass);
      }
      // Arc sup-distance shrinks with the mesh (collar-sized bound).
      for (const auto& [arc, eta] : rep.eta) CHECK(eta < 8 * eps);
    }
  }
}

TEST_CASE("arc label leaking past a mark fails condition iii") {
  const auto dom = fixtures::unit_square();
  DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 16});
  auto& cy = dd.boundary[dd.principal_cycle];
  const int n = static_cast<int>(cy.size());
  int ib = -1;
  for (int j = 0; j < n; ++j)
    if (cy[j].from == dd.b_eps) ib = j;
  REQUIRE(ib >= 0);
  // Push arc C a long way past b into A territory.
  for (int j = 0; j < n / 4; ++j) cy[(ib + j) % n].label = ArcLabel::C;
  const ApproxReport rep = check_interior_conditions(dd, dom);
  CHECK_FALSE(rep.conditions.at("iii").pass);
  CHECK(rep.conditions.at("iii").witness.find("edge labeled C") !=
        std::string::npos);
}

TEST_CASE("mark too deep in a fjord is reported as swallowed") {
  // A narrow notch swallows the mark at small scales relative to delta.
  ContinuousDomain dom;
  dom.outer = Polygon({{0, 0},
                       {1, 0},
                       {1, 1},
                       {0.52, 1},
                       {0.52, 0.2},
                       {0.48, 0.2},
                       {0.48, 1},
                       {0, 1}});
  dom.a = Mark{{0.5, 0.2}, {}};  // at the notch bottom
  dom.b = Mark{{0, 0}, {}};
  dom.c = Mark{{1, 0}, {}};
  dom.z0 = {0.25, 0.5};
  CHECK_THROWS_WITH_AS(canonical_approximation(dom, LatticeScale{1.0 / 8}),
                       doctest::Contains("MARK_SWALLOWED"), Error);
}

TEST_CASE("kernel convergence holds for a matched scale sequence") {
  const auto dom = fixtures::l_shape();
  std::vector<DiscreteDomain> seq;
  for (const double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32})
    seq.push_back(canonical_approximation(dom, LatticeScale{eps}));
  std::vector<const DiscreteDomain*> ptrs;
  for (const auto& dd : seq) ptrs.push_back(&dd);
  std::vector<Point> probes;
  for (int i = 0; i <= 12; ++i)
    for (int j = 0; j <= 12; ++j)
      probes.push_back({2.0 * i / 12, 2.0 * j / 12});
  const ApproxReport rep = check_kernel_convergence(ptrs, dom, probes);
  for (const auto& [name, cr] : rep.conditions) {
    INFO(name, ": ", cr.witness);
    CHECK(cr.pass);
  }
}

TEST_CASE("kernel conditions flag mismatched domains") {
  const auto square = fixtures::unit_square();
  const auto half = fixtures::rectangle(0.5);
  std::vector<DiscreteDomain> sq, hf;
  for (const double eps : {1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    sq.push_back(canonical_approximation(square, LatticeScale{eps}));
    hf.push_back(canonical_approximation(half, LatticeScale{eps}));
  }
  std::vector<const DiscreteDomain*> psq, phf;
  for (const auto& dd : sq) psq.push_back(&dd);
  for (const auto& dd : hf) phf.push_back(&dd);
  const std::vector<Point> probes{{0.75, 0.5}};
  // Approximations of the big square deeply cover the small domain's exterior.
  CHECK_FALSE(
      check_kernel_convergence(psq, half, probes).conditions.at("e").pass);
  // Approximations of the half square never cover the big square's interior.
  CHECK_FALSE(
      check_kernel_convergence(phf, square, probes).conditions.at("i_I").pass);
  CHECK_THROWS_WITH_AS(
      check_kernel_convergence({psq[0], psq[1]}, square, probes),
      doctest::Contains("INSUFFICIENT_SEQUENCE"), Error);
}

TEST_CASE("sup-assembled slit domain carves a two-sided discrete slit") {
  auto base = fixtures::unit_square();
  base.a = Mark{{0.5, 1}, {}};
  base.b = Mark{{0, 0}, {}};
  base.c = Mark{{1, 0}, {}};
  base.d.reset();
  const LatticeScale sc{1.0 / 16};
  const DiscreteDomain plain = canonical_approximation(base, sc);
  const CurveTrace slit = descend_near(plain, {0.5, 1}, 14);
  const Corner start = slit.start;
  const DiscreteDomain dd = sup_assemble(base, slit, sc);
  CHECK(dd.a_eps == slit.tip);
  // Every carved edge shows up twice on the principal cycle (both sides).
  std::unordered_set<std::uint64_t> carved;
  for (const auto& [c1, c2] : slit.edges)
    carved.insert(undirected_edge_key(c1, c2));
  int seen = 0;
  for (const auto& e : dd.boundary[dd.principal_cycle])
    if (carved.count(undirected_edge_key(e.from, e.to))) ++seen;
  CHECK(seen == 2 * static_cast<int>(slit.edges.size()));

  SUBCASE("well organized on the true slit, violated after label corruption") {
    std::vector<int> runs;
    std::vector<int> c_edges;
    const auto& cy = dd.boundary[dd.principal_cycle];
    for (int j = 0; j < static_cast<int>(cy.size()); ++j) {
      const auto& e = cy[j];
      if (e.label != ArcLabel::C ||
          !carved.count(undirected_edge_key(e.from, e.to)))
        continue;
      c_edges.push_back(j);
      if (runs.empty() || runs.back() != e.run) runs.push_back(e.run);
    }
    REQUIRE(c_edges.size() >= 8);
    const auto mid = [&](int j) {
      return 0.5 * (corner_pos(cy[j].from, dd.scale) +
                    corner_pos(cy[j].to, dd.scale));
    };
    const Point p = mid(c_edges[1]);
    const Point pp = mid(c_edges[c_edges.size() - 2]);
    const double delta = 0.75 * sc.epsilon;
    const CheckResult ok = check_well_organized(dd, runs, p, pp, delta);
    INFO(ok.witness);
    CHECK(ok.ok);

    // Intermix boundary values along the side: the region turns bichromatic.
    DiscreteDomain bad = dd;
    auto& bcy = bad.boundary[bad.principal_cycle];
    const std::size_t h = c_edges.size() / 2;
    bcy[c_edges[h]].label = ArcLabel::B;
    bcy[c_edges[h + 1]].label = ArcLabel::B;
    const CheckResult cr = check_well_organized(bad, runs, p, pp, delta);
    CHECK_FALSE(cr.ok);
    CHECK(cr.witness.find("border the region") != std::string::npos);
  }

  SUBCASE("noncommensurate slit start is rejected") {
    CurveTrace off = slit;
    off.start = Corner{start.x + 1, start.y + 1};
    for (auto& e : off.edges) {
      e.first = Corner{e.first.x + 40, e.first.y};
      e.second = Corner{e.second.x + 40, e.second.y};
    }
    off.edges.resize(4);
    CHECK_THROWS_AS(sup_assemble(base, off, sc), Error);
  }
}

TEST_CASE("homotopical consistency below the a-b connector") {
  const auto dom = fixtures::slit_square();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{1.0 / 32});
  // Northwest of the tip-to-b wall: exits only through arc C.
  const CheckResult ok =
      check_homotopical_consistency(dd, dom, {0.2, 0.8}, 0.5, 0.05);
  INFO(ok.witness);
  CHECK(ok.ok);
  // East of the slit the walk reaches arc B.
  const CheckResult bad =
      check_homotopical_consistency(dd, dom, {0.8, 0.8}, 0.5, 0.05);
  CHECK_FALSE(bad.ok);
  CHECK(bad.witness.find("reached arc") != std::string::npos);
  CHECK_THROWS_WITH_AS(
      check_homotopical_consistency(dd, dom, {0.2, 0.8}, 0.1, 0.05),
      doctest::Contains("HOMOTOPY_INPUT"), Error);
}

TEST_CASE("box counting dimension of a straight segment is one") {
  const Polyline seg({{0, 0}, {1, 0.5}});
  const MinkowskiEstimate est = minkowski_dimension(
      {seg}, {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256});
  CHECK(est.fitted_dimension == doctest::Approx(1.0).epsilon(0.06));
  CHECK_THROWS_WITH_AS(minkowski_dimension({seg}, {0.5, 0.25}),
                       doctest::Contains("MINKOWSKI_SCALES"), Error);
}

TEST_CASE("dyadic annuli halve the linear scale") {
  const AnnulusFamily fam = dyadic_annuli({0.5, 0.5}, 0.4, 4);
  REQUIRE(fam.squares.size() == 4);
  for (int l = 0; l + 1 < 4; ++l)
    CHECK(fam.squares[l + 1].diameter() ==
          doctest::Approx(0.5 * fam.squares[l].diameter()));
}

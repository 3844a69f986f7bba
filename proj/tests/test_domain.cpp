#include <doctest.h>

#include <fstream>

#include "cardylab/domain.hpp"

#include "fixtures.hpp"

using namespace cardylab;

TEST_CASE("square boundary cycle") {
  const auto dom = fixtures::unit_square();
  const auto& cy = dom.cycle();
  CHECK(cy.size() == 4);
  CHECK(dom.cycle_length() == doctest::Approx(4.0));
  CHECK(cy.front().from.x == doctest::Approx(0.0));
  // Pieces chain head to tail.
  for (std::size_t i = 0; i < cy.size(); ++i)
    CHECK(dist(cy[i].to, cy[(i + 1) % cy.size()].from) < 1e-12);
  dom.validate();
}

TEST_CASE("slit square cycle walks both slit sides") {
  const auto dom = fixtures::slit_square();
  const auto& cy = dom.cycle();
  // 4 outer edges + split top edge + two slit sides = 7 pieces.
  CHECK(cy.size() == 7);
  CHECK(dom.cycle_length() == doctest::Approx(5.0));
  int left = 0, right = 0;
  for (const auto& pc : cy) {
    if (!pc.side) continue;
    (*pc.side == Side::Left ? left : right)++;
  }
  CHECK(left == 1);
  CHECK(right == 1);
  dom.validate();
}

TEST_CASE("mark order and arc pieces on the square") {
  const auto dom = fixtures::unit_square();
  const auto mp = dom.mark_params();
  CHECK(mp[0] < mp[1]);
  CHECK(mp[1] < mp[2]);
  const auto len = [&](ArcId a) {
    double L = 0;
    for (const auto& pc : dom.arc_pieces(a)) L += pc.len;
    return L;
  };
  CHECK(len(ArcId::C) == doctest::Approx(1.0));  // bottom edge a->b
  CHECK(len(ArcId::A) == doctest::Approx(2.0));  // right + top, b->c
  CHECK(len(ArcId::B) == doctest::Approx(1.0));  // left edge c->a
  CHECK(dom.arc_distance({0.5, 0.0}, ArcId::C) == doctest::Approx(0.0));
  CHECK(dom.arc_distance({0.5, 0.0}, ArcId::A) == doctest::Approx(0.5));
}

TEST_CASE("locate distinguishes slit sides") {
  const auto dom = fixtures::slit_square();
  // A point just east of the slit must land on the Left (east) piece.
  const Point east{0.52, 0.75};
  const auto pe = dom.locate(east);
  CHECK(dom.cycle()[pe.piece].side.has_value());
  CHECK(*dom.cycle()[pe.piece].side == Side::Left);
  const Point west{0.48, 0.75};
  const auto pw = dom.locate(west);
  CHECK(*dom.cycle()[pw.piece].side == Side::Right);
  // Explicit side request overrides position.
  const auto forced = dom.locate({0.52, 0.75}, Side::Right);
  CHECK(*dom.cycle()[forced.piece].side == Side::Right);
}

TEST_CASE("param and pos_at_param are mutually inverse") {
  const auto dom = fixtures::slit_square();
  for (double s = 0.05; s < 5.0; s += 0.37) {
    const CyclePos pos = dom.pos_at_param(s);
    CHECK(dom.param(pos) == doctest::Approx(s).epsilon(1e-9));
  }
}

TEST_CASE("inside and boundary distance respect the slit") {
  const auto dom = fixtures::slit_square();
  CHECK(dom.inside({0.25, 0.25}));
  CHECK_FALSE(dom.inside({0.5, 0.75}));   // on the slit
  CHECK_FALSE(dom.inside({1.5, 0.5}));    // outside
  CHECK(dom.boundary_distance({0.6, 0.75}) == doctest::Approx(0.1));
}

TEST_CASE("validate rejects bad configurations") {
  auto bad_z0 = fixtures::unit_square();
  bad_z0.z0 = {2.0, 2.0};
  CHECK_THROWS_WITH_AS(bad_z0.validate(), doctest::Contains("DOMAIN_Z0"),
                       Error);
  auto bad_order = fixtures::unit_square();
  std::swap(bad_order.b, bad_order.c);  // a, b, c now clockwise
  CHECK_THROWS_WITH_AS(bad_order.validate(), doctest::Contains("DOMAIN_MARKS"),
                       Error);
  auto bad_probe = fixtures::unit_square();
  bad_probe.d = Mark{{0.5, 0.0}, {}};  // on arc C, not A
  CHECK_THROWS_WITH_AS(bad_probe.validate(), doctest::Contains("DOMAIN_MARKS"),
                       Error);
}

TEST_CASE("json round trip") {
  const auto dom = fixtures::slit_square();
  const auto j = domain_to_json(dom);
  const auto back = domain_from_json(j);
  CHECK(back.outer.vertices.size() == dom.outer.vertices.size());
  CHECK(back.slits.size() == 1);
  CHECK(dist(back.a.p, dom.a.p) < 1e-15);
  CHECK(back.d.has_value());
  CHECK(dist(back.z0, dom.z0) < 1e-15);
  CHECK(domain_to_json(back) == j);
}

TEST_CASE("json parse failures carry the DOMAIN_PARSE code") {
  CHECK_THROWS_WITH_AS(domain_from_json(nlohmann::json::object()),
                       doctest::Contains("DOMAIN_PARSE"), Error);
  nlohmann::json j = domain_to_json(fixtures::unit_square());
  j["marks"]["a"]["point"] = {1, 2, 3};
  CHECK_THROWS_WITH_AS(domain_from_json(j), doctest::Contains("DOMAIN_PARSE"),
                       Error);
}

TEST_CASE("fixture files parse and validate") {
  for (const char* name :
       {"square.json", "rect2.json", "triangle.json", "lshape.json",
        "slit_square.json"}) {
    std::ifstream f(std::string(FIXTURE_DIR) + "/" + name);
    REQUIRE(f.good());
    nlohmann::json j;
    f >> j;
    CHECK_NOTHROW(domain_from_json(j));
  }
}

#include <doctest.h>

#include "cardylab/geometry.hpp"

using namespace cardylab;

TEST_CASE("point arithmetic and products") {
  const Point a{1, 2}, b{3, -1};
  CHECK((a + b).x == doctest::Approx(4));
  CHECK((a - b).y == doctest::Approx(3));
  CHECK(dot(a, b) == doctest::Approx(1));
  CHECK(cross(a, b) == doctest::Approx(-7));
  CHECK(dist(a, b) == doctest::Approx(std::sqrt(13.0)));
}

TEST_CASE("polygon normalizes to counterclockwise and rejects bad input") {
  const Polygon cw({{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  CHECK(cw.signed_area() == doctest::Approx(1.0));
  CHECK_THROWS_AS(Polygon({{0, 0}, {1, 0}}), Error);
  CHECK_THROWS_AS(Polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), Error);  // bowtie
  CHECK_THROWS_AS(Polygon({{0, 0}, {1, 0}, {2, 0}}), Error);  // degenerate
}

TEST_CASE("point in polygon classification") {
  const Polygon sq({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  CHECK(point_in_polygon({0.5, 0.5}, sq) == PointClass::Inside);
  CHECK(point_in_polygon({1.5, 0.5}, sq) == PointClass::Outside);
  CHECK(point_in_polygon({1.0, 0.5}, sq) == PointClass::OnBoundary);
  CHECK(point_in_polygon({0.0, 0.0}, sq) == PointClass::OnBoundary);
  // Nonconvex: the notch of an L is outside.
  const Polygon l({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  CHECK(point_in_polygon({1.5, 1.5}, l) == PointClass::Outside);
  CHECK(point_in_polygon({0.5, 1.5}, l) == PointClass::Inside);
}

TEST_CASE("segment intersection") {
  CHECK(segments_intersect({0, 0}, {1, 1}, {0, 1}, {1, 0}));
  CHECK_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
  CHECK(segments_intersect({0, 0}, {1, 0}, {0.5, 0}, {0.5, 1}));  // touching
}

TEST_CASE("distance helpers") {
  CHECK(dist_point_segment({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(dist_point_segment({2, 0}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
  const Polyline pl({{0, 0}, {1, 0}, {1, 1}});
  CHECK(distance_point_to_polyline({2, 1}, pl) == doctest::Approx(1.0));
}

TEST_CASE("discrete frechet on hand-checked paths") {
  const std::vector<Point> a{{0, 0}, {1, 0}, {2, 0}};
  const std::vector<Point> b{{0, 1}, {1, 1}, {2, 1}};
  CHECK(discrete_frechet(a, b) == doctest::Approx(1.0));
  // Reversing one path forces a large deviation.
  const std::vector<Point> r{{2, 1}, {1, 1}, {0, 1}};
  CHECK(discrete_frechet(a, r) == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("frechet distance of a translated polyline is the offset") {
  const Polyline g1({{0, 0}, {1, 0.2}, {2, 0}});
  Polyline g2 = g1;
  for (auto& p : g2.vertices) p.y += 0.5;
  CHECK(frechet_distance(g1, g2) == doctest::Approx(0.5).epsilon(0.02));
  CHECK(frechet_distance(g1, g1) == doctest::Approx(0.0));
}

TEST_CASE("frechet dominates hausdorff") {
  const Polyline g1({{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  const Polyline g2({{0, 0.1}, {1.5, 0.4}, {3, 0.1}});
  const double h = hausdorff_distance(g1, g2);
  const double f = frechet_distance(g1, g2);
  CHECK(f >= h - 1e-9);
  CHECK(h > 0.05);
}

TEST_CASE("densify keeps endpoints and spacing") {
  const Polyline g({{0, 0}, {1, 0}});
  const auto pts = densify(g, 0.3);
  CHECK(pts.front().x == doctest::Approx(0.0));
  CHECK(pts.back().x == doctest::Approx(1.0));
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    CHECK(dist(pts[i], pts[i + 1]) <= 0.3 + 1e-12);
}

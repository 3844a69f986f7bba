#pragma once

#include "cardylab/domain.hpp"

namespace fixtures {

using cardylab::ContinuousDomain;
using cardylab::Mark;
using cardylab::Point;
using cardylab::Polygon;
using cardylab::Polyline;
using cardylab::Slit;

// Marks a, b, c counterclockwise with the probe d on arc A (between b and c).

inline ContinuousDomain unit_square() {
  ContinuousDomain d;
  d.outer = Polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  d.a = Mark{{0, 0}, {}};
  d.b = Mark{{1, 0}, {}};
  d.c = Mark{{0, 1}, {}};
  d.d = Mark{{1, 1}, {}};
  d.z0 = {0.5, 0.5};
  return d;
}

// Horizontal crossing of an aspect-r rectangle: the crossing arcs are the two
// vertical sides, d at the top-right corner.
inline ContinuousDomain rectangle(double r) {
  ContinuousDomain d;
  d.outer = Polygon({{0, 0}, {r, 0}, {r, 1}, {0, 1}});
  d.a = Mark{{0, 0}, {}};
  d.b = Mark{{r, 0}, {}};
  d.c = Mark{{0, 1}, {}};
  d.d = Mark{{r, 1}, {}};
  d.z0 = {0.5 * r, 0.5};
  return d;
}

inline ContinuousDomain equilateral_triangle(double frac = 0.5) {
  ContinuousDomain d;
  const Point top{0.5, 0.8660254037844386};
  d.outer = Polygon({{0, 0}, {1, 0}, top});
  d.a = Mark{{0, 0}, {}};
  d.b = Mark{{1, 0}, {}};
  d.c = Mark{top, {}};
  d.d = Mark{Point{1, 0} + frac * (top - Point{1, 0}), {}};
  d.z0 = {0.5, 0.2886751345948129};
  return d;
}

inline ContinuousDomain l_shape() {
  ContinuousDomain d;
  d.outer = Polygon({{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}});
  d.a = Mark{{0, 0}, {}};
  d.b = Mark{{2, 0}, {}};
  d.c = Mark{{0, 2}, {}};
  d.d = Mark{{1.5, 1}, {}};
  d.z0 = {0.5, 0.5};
  return d;
}

// Square with a slit from the top-edge midpoint down to the center; mark a
// sits at the slit tip.
inline ContinuousDomain slit_square() {
  ContinuousDomain d;
  d.outer = Polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
  d.slits.push_back(Slit{Polyline({{0.5, 1}, {0.5, 0.5}})});
  d.a = Mark{{0.5, 0.5}, {}};
  d.b = Mark{{0, 0}, {}};
  d.c = Mark{{1, 0}, {}};
  d.d = Mark{{0.5, 0}, {}};
  d.z0 = {0.25, 0.25};
  return d;
}

inline std::vector<ContinuousDomain> good_fixtures() {
  return {unit_square(), rectangle(2.0), equilateral_triangle(), l_shape(),
          slit_square()};
}

}  // namespace fixtures

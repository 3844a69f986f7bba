#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cardylab/domain.hpp"
#include "cardylab/errors.hpp"
#include "cardylab/geometry.hpp"
#include "cardylab/lattice.hpp"

namespace cardylab {

// ---------------------------------------------------------------------------
// Report / auxiliary types

struct ConditionResult {
  bool pass = true;
  std::string witness;
};

struct ApproxReport {
  std::map<std::string, ConditionResult> conditions;
  std::map<std::string, double> eta;  // per-arc sup distance to continuum arc

  bool all_pass() const {
    for (const auto& [k, v] : conditions)
      if (!v.pass) return false;
    return true;
  }
  void fail(const std::string& name, const std::string& witness) {
    auto& c = conditions[name];
    if (c.pass) {
      c.pass = false;
      c.witness = witness;
    }
  }
  void touch(const std::string& name) { conditions[name]; }
};

struct AnnulusFamily {
  Point center;
  std::vector<Polygon> squares;  // nested, each half the linear scale
};

inline AnnulusFamily dyadic_annuli(Point center, double half0, int levels) {
  if (levels < 2 || !(half0 > 0))
    throw error("ANNULUS_FAMILY", "need half0 > 0 and at least 2 levels");
  AnnulusFamily fam;
  fam.center = center;
  double h = half0;
  for (int l = 0; l < levels; ++l, h *= 0.5)
    fam.squares.push_back(Polygon({{center.x - h, center.y - h},
                                   {center.x + h, center.y - h},
                                   {center.x + h, center.y + h},
                                   {center.x - h, center.y + h}}));
  return fam;
}

struct MinkowskiEstimate {
  std::vector<double> scales;
  std::vector<std::size_t> counts;
  double fitted_dimension = 0;
};

enum class StopReason : std::uint8_t { StepLimit, ReachedTargetNbhd, Trapped };

// A simple path of directed hex edges on the honeycomb (an explored interface
// or a hand-built discrete slit).
struct CurveTrace {
  std::vector<std::pair<Corner, Corner>> edges;
  Corner start{}, tip{};
  StopReason stop_reason = StopReason::StepLimit;
};

// ---------------------------------------------------------------------------
// Small lattice helpers

// Site whose tile contains p (hexagons are the Voronoi cells of the centers).
inline SiteCoord site_containing(Point p, const LatticeScale& sc) {
  const double sp = sc.spacing();
  const double vf = p.y / (sp * 0.8660254037844386);
  const double uf = p.x / sp - 0.5 * vf;
  SiteCoord best{};
  double bd = std::numeric_limits<double>::infinity();
  for (int dv = -1; dv <= 1; ++dv)
    for (int du = -1; du <= 1; ++du) {
      const SiteCoord s{static_cast<int>(std::lround(uf)) + du,
                        static_cast<int>(std::lround(vf)) + dv};
      const double d = dist(site_center(s, sc), p);
      if (d < bd) {
        bd = d;
        best = s;
      }
    }
  return best;
}

// The two sites whose tiles share the honeycomb edge (c1, c2).
inline std::array<SiteCoord, 2> sites_sharing_edge(Corner c1, Corner c2) {
  // Corner k and k+1 of a site with center (cx,cy) = (2u+v, 3v) sum to
  // 2*(cx,cy) + t_k with t_k from the list below.
  static constexpr std::array<std::array<int, 2>, 6> kSums{
      {{1, 3}, {-1, 3}, {-2, 0}, {-1, -3}, {1, -3}, {2, 0}}};
  const int sx = c1.x + c2.x, sy = c1.y + c2.y;
  std::array<SiteCoord, 2> out{};
  int found = 0;
  for (const auto& t : kSums) {
    const int cx2 = sx - t[0], cy2 = sy - t[1];
    if (cx2 % 2 != 0 || cy2 % 2 != 0) continue;
    const int cx = cx2 / 2, cy = cy2 / 2;
    if (cy % 3 != 0) continue;
    const int v = cy / 3;
    if ((cx - v) % 2 != 0) continue;
    const SiteCoord s{(cx - v) / 2, v};
    // Verify: the edge must actually be a corner pair of s.
    const auto cs = site_corners(s);
    for (int k = 0; k < 6; ++k) {
      const Corner p = cs[k], q = cs[(k + 1) % 6];
      if ((p == c1 && q == c2) || (p == c2 && q == c1)) {
        if (found < 2) out[found] = s;
        ++found;
        break;
      }
    }
  }
  if (found != 2) throw error("NONCOMMENSURATE", "not a honeycomb edge");
  return out;
}

inline std::uint64_t undirected_edge_key(Corner a, Corner b) {
  if (b < a) std::swap(a, b);
  const std::uint64_t h1 = CornerHash{}(a), h2 = CornerHash{}(b);
  return h1 * 0x9E3779B97F4A7C15ull ^ (h2 + 0xD1B54A32D192ED03ull);
}

inline double discrete_boundary_distance(const DiscreteDomain& dd, Point p) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& cy : dd.boundary)
    for (const auto& e : cy)
      best = std::min(best, dist_point_segment(p, corner_pos(e.from, dd.scale),
                                               corner_pos(e.to, dd.scale)));
  return best;
}

inline bool covers(const DiscreteDomain& dd, Point p) {
  const int id = dd.site_id(site_containing(p, dd.scale));
  return id >= 0 && dd.in_principal(id);
}

// Default collar width for arc assignment: delta/eps diverges slowly while
// delta itself vanishes.
inline double default_delta(double eps) {
  return eps * std::max(1.0, std::ceil(std::log(1.0 / eps)));
}

// ---------------------------------------------------------------------------
// Boundary tracing

namespace detail {

inline double edge_angle(Corner from, Corner to) {
  // corner_pos scales x by 1/2 and y by 1/(2*sqrt(3)).
  return std::atan2((to.y - from.y) / 1.7320508075688772,
                    static_cast<double>(to.x - from.x));
}

// Crossing-number test against a raw (possibly imperfect) loop.
inline bool inside_loop(const std::vector<Point>& loop, Point p) {
  bool in = false;
  const std::size_t n = loop.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = loop[i], b = loop[(i + 1) % n];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xi = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xi) in = !in;
    }
  }
  return in;
}

}  // namespace detail

// Trace all boundary cycles of dd from its adjacency (missing or blocked
// neighbors contribute one directed edge each, interior on the left).  At a
// pinch corner the walk continues with the clockwise-next outgoing edge after
// the reversed arrival direction, which keeps each face consistent.
inline void trace_boundary(DiscreteDomain& dd) {
  struct RawEdge {
    Corner from, to;
    int site;
    double angle;
  };
  std::vector<RawEdge> edges;
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    const auto cs = site_corners(dd.sites[i]);
    for (int k = 0; k < 6; ++k)
      if (dd.adj[i][k] < 0) {
        const Corner f = cs[k], t = cs[(k + 1) % 6];
        edges.push_back({f, t, static_cast<int>(i), detail::edge_angle(f, t)});
      }
  }
  std::unordered_map<Corner, std::vector<int>, CornerHash> out;
  for (std::size_t e = 0; e < edges.size(); ++e)
    out[edges[e].from].push_back(static_cast<int>(e));
  const auto next_edge = [&](int e) {
    const Corner v = edges[e].to;
    const double rev = detail::edge_angle(v, edges[e].from);
    const auto& cand = out.at(v);
    int best = -1, wrap = -1;
    for (const int c : cand) {
      const double th = edges[c].angle;
      if (th < rev - 1e-9) {
        if (best < 0 || th > edges[best].angle) best = c;
      }
      if (wrap < 0 || th > edges[wrap].angle) wrap = c;
    }
    return best >= 0 ? best : wrap;
  };
  std::vector<std::uint8_t> used(edges.size(), 0);
  dd.boundary.clear();
  for (std::size_t e0 = 0; e0 < edges.size(); ++e0) {
    if (used[e0]) continue;
    std::vector<DirEdge> cy;
    int e = static_cast<int>(e0);
    while (true) {
      if (used[e]) throw error("BOUNDARY_TRACE", "boundary walk revisits an edge");
      used[e] = 1;
      cy.push_back(DirEdge{edges[e].from, edges[e].to, edges[e].site,
                           ArcLabel::None, -1});
      e = next_edge(e);
      if (e == static_cast<int>(e0)) break;
    }
    dd.boundary.push_back(std::move(cy));
  }
  // Principal cycle: positively oriented (outer) cycle of the principal
  // component with the largest enclosed area.
  dd.principal_cycle = -1;
  double best_area = 0;
  for (std::size_t c = 0; c < dd.boundary.size(); ++c) {
    const auto& cy = dd.boundary[c];
    if (cy.empty() || !dd.in_principal(cy.front().interior_site)) continue;
    double area = 0;
    for (const auto& e : cy)
      area += cross(corner_pos(e.from, dd.scale), corner_pos(e.to, dd.scale));
    if (area > best_area) {
      best_area = area;
      dd.principal_cycle = static_cast<int>(c);
    }
  }
  if (dd.principal_cycle < 0)
    throw error("BOUNDARY_TRACE", "no outer cycle for the principal component");
}

// ---------------------------------------------------------------------------
// Arc assignment

namespace detail {

// Arc membership of the boundary point nearest to q, by cycle parameter.
struct ArcClassifier {
  const ContinuousDomain* dom;
  double L, pa, pb, pc;
  explicit ArcClassifier(const ContinuousDomain& d) : dom(&d) {
    L = d.cycle_length();
    const auto mp = d.mark_params();
    pa = mp[0];
    pb = mp[1];
    pc = mp[2];
  }
  ArcLabel operator()(Point q) const {
    double s = dom->param(dom->locate(q));
    while (s < pa) s += L;
    if (s < pb) return ArcLabel::C;
    if (s < pc) return ArcLabel::A;
    return ArcLabel::B;
  }
};

}  // namespace detail

// Label the principal cycle of dd into contiguous A, B, C runs and pick the
// marked vertices.  Each mark anchors to the cycle vertex inside its
// delta-neighborhood closest to the mark (side-filtered for slit marks);
// labels outside the neighborhoods are validated against the nearest
// continuum arc.  `a_corner` overrides the anchor for mark a (used when a
// slit tip becomes the mark).
inline void assign_boundary_arcs(
    DiscreteDomain& dd, const ContinuousDomain& dom, double delta = -1.0,
    std::optional<Corner> a_corner = std::nullopt,
    const std::unordered_set<std::uint64_t>* skip_validation = nullptr) {
  const double eps = dd.scale.epsilon;
  if (delta <= 0) delta = default_delta(eps);
  if (delta < 4 * eps) delta = 4 * eps;
  auto& cy = dd.boundary[dd.principal_cycle];
  const int n = static_cast<int>(cy.size());

  // Flank side of a cycle edge, from the continuum piece nearest its midpoint.
  const auto edge_flank = [&](const DirEdge& e) -> std::optional<Side> {
    const Point m = 0.5 * (corner_pos(e.from, dd.scale) + corner_pos(e.to, dd.scale));
    const auto pos = dom.locate(m);
    return dom.cycle()[pos.piece].side;
  };

  const auto anchor = [&](const Mark& m, const char* name) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    const double L = dom.cycle_length();
    const double s_mark = std::fmod(dom.param(dom.locate_mark(m)), L);
    for (int j = 0; j < n; ++j) {
      const Corner v = cy[j].from;
      const double d = dist(corner_pos(v, dd.scale), m.p);
      if (d > delta) continue;
      // The vertex must also be near the mark along the boundary; a mark at
      // the bottom of a fjord the lattice cannot resolve is otherwise
      // anchored across the fjord to an unrelated stretch of wall.
      const double s_v =
          std::fmod(dom.param(dom.locate(corner_pos(v, dd.scale))), L);
      double d_arc = std::abs(s_v - s_mark);
      d_arc = std::min(d_arc, L - d_arc);
      if (d_arc > 3 * delta) continue;
      if (m.side) {
        const auto f0 = edge_flank(cy[j]);
        const auto f1 = edge_flank(cy[(j - 1 + n) % n]);
        if (!((f0 && *f0 == *m.side) || (f1 && *f1 == *m.side))) continue;
      }
      if (d < bd - 1e-15 || (d < bd + 1e-15 && best >= 0 && v < cy[best].from)) {
        bd = d;
        best = j;
      }
    }
    if (best < 0)
      throw error("MARK_SWALLOWED",
                  std::string("no boundary vertex near mark ") + name);
    return best;
  };

  int ia;
  Point a_pos;
  if (a_corner) {
    ia = -1;
    for (int j = 0; j < n; ++j)
      if (cy[j].from == *a_corner) {
        ia = j;
        break;
      }
    if (ia < 0)
      throw error("MARK_SWALLOWED", "slit tip not on the principal cycle");
    a_pos = corner_pos(*a_corner, dd.scale);
  } else {
    ia = anchor(dom.a, "a");
    a_pos = dom.a.p;
  }
  const int ib = anchor(dom.b, "b");
  const int ic = anchor(dom.c, "c");
  if (ia == ib || ib == ic || ia == ic)
    throw error("MARK_SWALLOWED", "marked vertices collide");

  dd.a_eps = cy[ia].from;
  dd.b_eps = cy[ib].from;
  dd.c_eps = cy[ic].from;

  // Positional labels: C on [a,b), A on [b,c), B on [c,a), cyclically.
  const auto in_range = [&](int j, int lo, int hi) {
    if (lo <= hi) return j >= lo && j < hi;
    return j >= lo || j < hi;
  };
  for (int j = 0; j < n; ++j) {
    if (in_range(j, ia, ib))
      cy[j].label = ArcLabel::C;
    else if (in_range(j, ib, ic))
      cy[j].label = ArcLabel::A;
    else
      cy[j].label = ArcLabel::B;
  }
  int run = 0;
  for (int j = 0; j < n; ++j) {
    const int prev = (j - 1 + n) % n;
    if (j > 0 && cy[j].label != cy[prev].label) ++run;
    cy[j].run = run;
  }

  // Validation outside the mark neighborhoods: the nearest continuum arc must
  // agree with the positional label, and no edge may sit (within tolerance)
  // equidistant from two arcs away from a mark.
  const detail::ArcClassifier classify(dom);
  const double tau = kGeomTol * dom.diameter();
  // An edge is exempt from validation when it is itself in the skip set, or
  // when it lies in the "shadow" of skipped edges: reachable from skipped
  // edges in both cyclic directions without leaving its label run.  Wall
  // stretches between two bounce points of a carved slit inherit the
  // extended-arc label of the slit and must not be compared with the
  // continuum arcs.
  std::vector<char> in_set(n, 0), fwd_ok(n, 0), bwd_ok(n, 0);
  if (skip_validation) {
    for (int j = 0; j < n; ++j)
      in_set[j] = skip_validation->count(
                      undirected_edge_key(cy[j].from, cy[j].to))
                      ? 1
                      : 0;
    for (int pass = 0; pass < 2; ++pass)
      for (int j = n - 1; j >= 0; --j) {
        const int nx = (j + 1) % n;
        fwd_ok[j] = in_set[j] ||
                    (cy[nx].label == cy[j].label && fwd_ok[nx]);
      }
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < n; ++j) {
        const int pv = (j - 1 + n) % n;
        bwd_ok[j] = in_set[j] ||
                    (cy[pv].label == cy[j].label && bwd_ok[pv]);
      }
  }
  for (int j = 0; j < n; ++j) {
    if (fwd_ok[j] && bwd_ok[j]) continue;
    const Point m = 0.5 * (corner_pos(cy[j].from, dd.scale) +
                           corner_pos(cy[j].to, dd.scale));
    const double dm = std::min({dist(m, a_pos), dist(m, dom.b.p), dist(m, dom.c.p)});
    if (dm <= delta) continue;
    std::array<double, 3> d{dom.arc_distance(m, ArcId::A),
                            dom.arc_distance(m, ArcId::B),
                            dom.arc_distance(m, ArcId::C)};
    std::array<int, 3> ord{0, 1, 2};
    std::sort(ord.begin(), ord.end(), [&](int x, int y) { return d[x] < d[y]; });
    if (d[ord[1]] - d[ord[0]] <= tau)
      throw error("ARC_AMBIGUOUS", "boundary edge equidistant from two arcs away from marks");
    if (classify(m) != cy[j].label)
      throw error("ARC_AMBIGUOUS", "nearest continuum arc disagrees with contiguous labeling");
  }

  // Probe vertex on arc A.
  dd.d_eps.reset();
  dd.probe_site = -1;
  if (dom.d) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (cy[j].label != ArcLabel::A) continue;
      const double dj = dist(corner_pos(cy[j].from, dd.scale), dom.d->p);
      if (dj < bd) {
        bd = dj;
        best = j;
      }
    }
    if (best < 0) throw error("MARK_SWALLOWED", "no boundary vertex near probe d");
    dd.d_eps = cy[best].from;
    dd.probe_site = cy[best].interior_site;
  }

  // Refresh site-to-arc adjacency.
  dd.arc_touch.assign(dd.sites.size(), 0);
  for (const auto& cycle : dd.boundary)
    for (const auto& e : cycle)
      if (e.interior_site >= 0 && e.label != ArcLabel::None)
        dd.arc_touch[e.interior_site] |=
            static_cast<std::uint8_t>(1u << static_cast<int>(e.label));
}

// ---------------------------------------------------------------------------
// Canonical interior approximation

namespace detail {

inline bool tile_inside(const ContinuousDomain& dom, SiteCoord s,
                        const LatticeScale& sc,
                        const std::vector<Polyline>& walls) {
  const double eps = sc.epsilon;
  const Point c = site_center(s, sc);
  if (point_in_polygon(c, dom.outer) != PointClass::Inside) return false;
  const double bd = dom.boundary_distance(c);
  if (bd > 0.5 * eps * (1 + 1e-12)) return true;
  if (bd < 0.4330127018922193 * eps * (1 - 1e-12)) return false;
  const auto hex = hex_tile(s, sc);
  for (const auto& w : walls) {
    for (std::size_t i = 0; i + 1 < w.vertices.size(); ++i)
      for (int k = 0; k < 6; ++k)
        if (segments_intersect(hex.vertices[k], hex.vertices[(k + 1) % 6],
                               w.vertices[i], w.vertices[i + 1]))
          return false;
    for (const auto& v : w.vertices)
      if (point_in_polygon(v, hex) != PointClass::Outside) return false;
  }
  return true;
}

}  // namespace detail

// All tiles wholly (boundary included) inside the slit domain, with traced
// and labeled boundary.  Throws EMPTY_APPROX / NO_PRINCIPAL.
inline DiscreteDomain canonical_approximation(const ContinuousDomain& dom,
                                              const LatticeScale& scale,
                                              double delta = -1.0) {
  DiscreteDomain dd;
  dd.scale = scale;
  const auto walls = dom.boundary_polylines();
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& v : dom.outer.vertices) {
    xlo = std::min(xlo, v.x);
    xhi = std::max(xhi, v.x);
    ylo = std::min(ylo, v.y);
    yhi = std::max(yhi, v.y);
  }
  const double sp = scale.spacing();
  const int vlo = static_cast<int>(std::floor(ylo / (sp * 0.8660254037844386))) - 2;
  const int vhi = static_cast<int>(std::ceil(yhi / (sp * 0.8660254037844386))) + 2;
  for (int v = vlo; v <= vhi; ++v) {
    const int ulo = static_cast<int>(std::floor(xlo / sp - 0.5 * v)) - 2;
    const int uhi = static_cast<int>(std::ceil(xhi / sp - 0.5 * v)) + 2;
    for (int u = ulo; u <= uhi; ++u) {
      const SiteCoord s{u, v};
      if (detail::tile_inside(dom, s, scale, walls)) dd.sites.push_back(s);
    }
  }
  if (dd.sites.empty()) throw error("EMPTY_APPROX", "no tile fits in the domain");
  std::sort(dd.sites.begin(), dd.sites.end());
  dd.rebuild_site_index();
  dd.adj.assign(dd.sites.size(), {});
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    const auto nb = neighbors(dd.sites[i]);
    for (int k = 0; k < 6; ++k) dd.adj[i][k] = dd.site_id(nb[k]);
  }
  const SiteCoord seed = site_containing(dom.z0, scale);
  if (!dd.has(seed))
    throw error("NO_PRINCIPAL", "tile of z0 not in the approximation");
  dd.finalize(seed);
  trace_boundary(dd);
  assign_boundary_arcs(dd, dom, delta);
  return dd;
}

// ---------------------------------------------------------------------------
// Sup-approximation: canonical approximation with a discrete slit carved in

inline DiscreteDomain sup_assemble(const ContinuousDomain& base,
                                   const CurveTrace& slit,
                                   const LatticeScale& scale,
                                   double delta = -1.0) {
  DiscreteDomain dd = canonical_approximation(base, scale, delta);
  if (slit.edges.empty()) return dd;

  // The junction must land on the existing discrete boundary.
  bool anchored = false;
  for (const auto& e : dd.boundary[dd.principal_cycle])
    if (e.from == slit.start) {
      anchored = true;
      break;
    }
  if (!anchored)
    throw error("NONCOMMENSURATE", "slit start is not a boundary vertex");

  std::unordered_set<std::uint64_t> wall_edges;
  for (const auto& cycle : dd.boundary)
    for (const auto& e : cycle)
      wall_edges.insert(undirected_edge_key(e.from, e.to));
  for (const auto& [c1, c2] : slit.edges) {
    // Stretches of the trace that run along the existing boundary leave the
    // domain unchanged; only interior edges are carved.
    if (wall_edges.count(undirected_edge_key(c1, c2))) continue;
    const auto pair = sites_sharing_edge(c1, c2);
    const int i0 = dd.site_id(pair[0]), i1 = dd.site_id(pair[1]);
    if (i0 < 0 || i1 < 0 || !dd.in_principal(i0) || !dd.in_principal(i1))
      throw error("SLIT_ESCAPES", "slit edge leaves the approximated domain");
    for (int k = 0; k < 6; ++k) {
      if (dd.adj[i0][k] == i1) dd.adj[i0][k] = -1;
      if (dd.adj[i1][k] == i0) dd.adj[i1][k] = -1;
    }
  }
  const SiteCoord seed = site_containing(base.z0, scale);
  if (!dd.has(seed)) throw error("NO_PRINCIPAL", "tile of z0 missing");
  dd.finalize(seed);
  trace_boundary(dd);
  // A trace that touches the wall pinches off pockets; if z0 landed in a
  // pocket the component carrying the slit tip (where exploration would
  // continue) is the one we want.  Reseed from a tile flanking the last
  // trace edge in that case.
  {
    bool tip_on_cycle = false;
    for (const auto& e : dd.boundary[dd.principal_cycle])
      if (e.from == slit.tip) {
        tip_on_cycle = true;
        break;
      }
    if (!tip_on_cycle) {
      const auto last = sites_sharing_edge(slit.edges.back().first,
                                           slit.edges.back().second);
      const int t0 = dd.site_id(last[0]), t1 = dd.site_id(last[1]);
      const SiteCoord reseed = t0 >= 0 ? last[0] : last[1];
      if (t0 < 0 && t1 < 0)
        throw error("NO_PRINCIPAL", "no tile flanks the slit tip");
      dd.finalize(reseed);
      trace_boundary(dd);
    }
  }
  std::unordered_set<std::uint64_t> carved;
  for (const auto& [c1, c2] : slit.edges)
    carved.insert(undirected_edge_key(c1, c2));
  // Wall stretches the trace runs along (or touches) carry labels forced by
  // the trace topology, not by the nearest continuum arc; exempt them from
  // the nearest-arc validation just like the carved edges themselves.
  {
    std::vector<std::pair<Point, Point>> tsegs;
    tsegs.reserve(slit.edges.size());
    for (const auto& [c1, c2] : slit.edges)
      tsegs.push_back({corner_pos(c1, scale), corner_pos(c2, scale)});
    const double near = 2.0 * scale.epsilon;
    for (const auto& cycle : dd.boundary)
      for (const auto& e : cycle) {
        const Point m =
            0.5 * (corner_pos(e.from, scale) + corner_pos(e.to, scale));
        for (const auto& [s0, s1] : tsegs)
          if (dist_point_segment(m, s0, s1) <= near) {
            carved.insert(undirected_edge_key(e.from, e.to));
            break;
          }
      }
  }
  assign_boundary_arcs(dd, base, delta, slit.tip, &carved);
  return dd;
}

// ---------------------------------------------------------------------------
// Condition checkers

inline Polyline arc_polyline(const DiscreteDomain& dd, ArcLabel l) {
  const auto& cy = dd.boundary[dd.principal_cycle];
  const int n = static_cast<int>(cy.size());
  int start = -1;
  for (int j = 0; j < n; ++j)
    if (cy[j].label == l && cy[(j - 1 + n) % n].label != l) {
      start = j;
      break;
    }
  if (start < 0) throw error("ARC_MISSING", "principal cycle lacks an arc run");
  std::vector<Point> pts{corner_pos(cy[start].from, dd.scale)};
  for (int j = start; cy[j % n].label == l; ++j)
    pts.push_back(corner_pos(cy[j % n].to, dd.scale));
  return Polyline(std::move(pts));
}

inline Polyline continuum_arc_polyline(const ContinuousDomain& dom, ArcId arc) {
  const auto pieces = dom.arc_pieces(arc);
  std::vector<Point> pts{pieces.front().from};
  for (const auto& pc : pieces) pts.push_back(pc.to);
  return Polyline(std::move(pts));
}

// Definition-level audit of a single interior approximation: (i) strict tile
// containment, (ii) coverage of points deeper than one tile, (iii) labeled
// edges agree with the nearest continuum arc away from the marks.
inline ApproxReport check_interior_conditions(const DiscreteDomain& dd,
                                              const ContinuousDomain& dom) {
  ApproxReport rep;
  rep.touch("i");
  rep.touch("ii");
  rep.touch("iii");
  const double eps = dd.scale.epsilon;
  const auto walls = dom.boundary_polylines();
  for (const auto& s : dd.sites)
    if (!detail::tile_inside(dom, s, dd.scale, walls)) {
      rep.fail("i", "tile at site (" + std::to_string(s.u) + "," +
                        std::to_string(s.v) + ") leaves the domain");
      break;
    }
  // (ii): probe grid; every point deeper than eps must be covered.
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& v : dom.outer.vertices) {
    xlo = std::min(xlo, v.x);
    xhi = std::max(xhi, v.x);
    ylo = std::min(ylo, v.y);
    yhi = std::max(yhi, v.y);
  }
  const int grid = 24;
  for (int gy = 0; gy <= grid && rep.conditions["ii"].pass; ++gy)
    for (int gx = 0; gx <= grid; ++gx) {
      const Point p{xlo + (xhi - xlo) * gx / grid, ylo + (yhi - ylo) * gy / grid};
      if (!dom.inside(p) || dom.boundary_distance(p) <= eps * (1 + 1e-9)) continue;
      if (!covers(dd, p)) {
        rep.fail("ii", "uncovered interior point (" + std::to_string(p.x) + "," +
                           std::to_string(p.y) + ")");
        break;
      }
    }
  // (iii): labeled edges vs nearest continuum arc, outside mark collars.
  const detail::ArcClassifier classify(dom);
  const double delta = default_delta(eps);
  const Point a_pos = corner_pos(dd.a_eps, dd.scale);
  const auto& cy = dd.boundary[dd.principal_cycle];
  for (const auto& e : cy) {
    const Point m =
        0.5 * (corner_pos(e.from, dd.scale) + corner_pos(e.to, dd.scale));
    if (std::min({dist(m, a_pos), dist(m, dom.b.p), dist(m, dom.c.p)}) <= delta)
      continue;
    const ArcLabel want = classify(m);
    if (e.label != want) {
      rep.fail("iii", std::string("edge labeled ") + arc_char(e.label) +
                          " nearest to arc " + arc_char(want) + " at (" +
                          std::to_string(m.x) + "," + std::to_string(m.y) + ")");
      break;
    }
  }
  // Arc sup-distances (eta).
  const double step = std::max(eps / 4.0, 1e-9);
  try {
    rep.eta["A"] = frechet_distance(arc_polyline(dd, ArcLabel::A),
                                    continuum_arc_polyline(dom, ArcId::A), step);
    rep.eta["B"] = frechet_distance(arc_polyline(dd, ArcLabel::B),
                                    continuum_arc_polyline(dom, ArcId::B), step);
    rep.eta["C"] = frechet_distance(arc_polyline(dd, ArcLabel::C),
                                    continuum_arc_polyline(dom, ArcId::C), step);
  } catch (const Error&) {
    // missing arc already reported through (iii)/labels
  }
  return rep;
}

// Kernel-convergence audit of a scale sequence against the target domain.
// (i_I): interior probes eventually covered; (i_II): complement probes of the
// finest approximations do not sit deep inside the domain; (e): exterior and
// boundary probes are never deeply covered.
inline ApproxReport check_kernel_convergence(
    const std::vector<const DiscreteDomain*>& seq, const ContinuousDomain& dom,
    const std::vector<Point>& probes) {
  if (seq.size() < 3)
    throw error("INSUFFICIENT_SEQUENCE", "need at least 3 scales");
  ApproxReport rep;
  rep.touch("i_I");
  rep.touch("i_II");
  rep.touch("e");
  double finest = seq.front()->scale.epsilon;
  for (const auto* dd : seq) finest = std::min(finest, dd->scale.epsilon);
  const double tol_conv = 2 * finest;
  const auto fmt = [](Point p) {
    return "(" + std::to_string(p.x) + "," + std::to_string(p.y) + ")";
  };
  for (const Point p : probes) {
    const bool interior = dom.inside(p);
    const double depth = dom.boundary_distance(p);
    if (interior) {
      // (i_I): covered on a suffix of the sequence.
      bool seen_uncovered_after_covered = false, covered_once = false;
      bool last_covered = false;
      for (const auto* dd : seq) {
        const bool c = covers(*dd, p);
        if (covered_once && !c) seen_uncovered_after_covered = true;
        covered_once = covered_once || c;
        last_covered = c;
      }
      if (!last_covered || (seen_uncovered_after_covered && !last_covered))
        rep.fail("i_I", "interior probe never stably covered " + fmt(p));
      // (i_II): if the finest approximation misses p, p must be shallow.
      if (!covers(*seq.back(), p) && depth > tol_conv)
        rep.fail("i_II", "complement point deep inside the domain " + fmt(p));
    } else {
      // (e): the complement of the approximation must come arbitrarily close
      // to every exterior/boundary point.
      const auto* dd = seq.back();
      if (covers(*dd, p) && discrete_boundary_distance(*dd, p) > tol_conv)
        rep.fail("e", "exterior probe deeply covered " + fmt(p));
    }
  }
  return rep;
}

namespace detail {

// Shortest site path between endpoint sets within `allowed`; empty if none.
inline std::vector<int> bfs_path(const DiscreteDomain& dd,
                                 const std::vector<std::uint8_t>& allowed,
                                 const std::vector<int>& from,
                                 const std::vector<std::uint8_t>& goal) {
  std::vector<int> parent(dd.sites.size(), -2);
  std::vector<int> queue;
  for (const int s : from)
    if (allowed[s] && parent[s] == -2) {
      parent[s] = -1;
      queue.push_back(s);
    }
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const int s = queue[qi];
    if (goal[s]) {
      std::vector<int> path;
      for (int c = s; c >= 0; c = parent[c]) path.push_back(c);
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (const int nb : dd.adj[s])
      if (nb >= 0 && allowed[nb] && parent[nb] == -2) {
        parent[nb] = s;
        queue.push_back(nb);
      }
  }
  return {};
}

}  // namespace detail

struct CheckResult {
  bool ok = true;
  std::string witness;
};

// Monochromicity of a slit-side portion: the region pinched between the arc
// portion L (from p to p') and an interior connector P may only border
// boundary edges of one arc label.  `runs` lists the admissible run ids of L.
inline CheckResult check_well_organized(const DiscreteDomain& dd,
                                        const std::vector<int>& runs, Point p,
                                        Point pp, double delta) {
  const auto& cy = dd.boundary[dd.principal_cycle];
  const int n = static_cast<int>(cy.size());
  const auto in_runs = [&](int j) {
    for (const int r : runs)
      if (cy[j].run == r) return true;
    return false;
  };
  const auto nearest_edge = [&](Point q) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (!in_runs(j)) continue;
      const double d = dist_point_segment(q, corner_pos(cy[j].from, dd.scale),
                                          corner_pos(cy[j].to, dd.scale));
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    if (best < 0) throw error("NO_CONNECTOR", "no boundary edge on given runs");
    return best;
  };
  int ep = nearest_edge(p), eq = nearest_edge(pp);
  if (ep == eq) return {true, ""};
  // The portion L: the direction along the cycle that stays within the runs.
  std::vector<int> L;
  const auto try_dir = [&](int a, int b) {
    std::vector<int> seg;
    for (int j = a;; j = (j + 1) % n) {
      if (!in_runs(j)) return std::vector<int>{};
      seg.push_back(j);
      if (j == b) return seg;
    }
  };
  L = try_dir(ep, eq);
  if (L.empty()) {
    L = try_dir(eq, ep);
    std::swap(ep, eq);
  }
  if (L.empty())
    throw error("NO_CONNECTOR", "p and p' not joined within the given runs");

  // Interior connector P from the site behind ep to the site behind eq,
  // avoiding the discrete boundary except at its endpoints.
  std::vector<std::uint8_t> allowed(dd.sites.size(), 0);
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    if (!dd.in_principal(static_cast<int>(i))) continue;
    bool interior = true;
    for (const int nb : dd.adj[i]) interior = interior && nb >= 0;
    if (interior) allowed[i] = 1;
  }
  // The connector runs between the two disk boundaries: inside the disks it
  // may pass sites touching the arc, elsewhere it must stay strictly
  // interior.
  std::vector<std::uint8_t> goal(dd.sites.size(), 0);
  std::vector<int> seeds{cy[ep].interior_site};
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    if (!dd.in_principal(static_cast<int>(i))) continue;
    const Point c = site_center(dd.sites[i], dd.scale);
    if (dist(c, p) < delta) {
      allowed[i] = 1;
      seeds.push_back(static_cast<int>(i));
    }
    if (dist(c, pp) < delta) {
      allowed[i] = 1;
      goal[i] = 1;
    }
  }
  allowed[cy[ep].interior_site] = 1;
  allowed[cy[eq].interior_site] = 1;
  goal[cy[eq].interior_site] = 1;
  const auto path = detail::bfs_path(dd, allowed, seeds, goal);
  if (path.empty())
    throw error("NO_CONNECTOR", "no interior connector between p and p'");

  // Region O: the loop formed by P and the midpoints of L.
  std::vector<Point> loop;
  for (const int s : path) loop.push_back(site_center(dd.sites[s], dd.scale));
  for (auto it = L.rbegin(); it != L.rend(); ++it)
    loop.push_back(0.5 * (corner_pos(cy[*it].from, dd.scale) +
                          corner_pos(cy[*it].to, dd.scale)));
  std::vector<std::uint8_t> region(dd.sites.size(), 0);
  for (std::size_t i = 0; i < dd.sites.size(); ++i)
    if (dd.in_principal(static_cast<int>(i)) &&
        detail::inside_loop(loop, site_center(dd.sites[i], dd.scale)))
      region[i] = 1;
  for (const int s : path) region[s] = 1;
  for (const int j : L) region[cy[j].interior_site] = 1;
  const auto reached = detail::flood(dd, region, path);

  // Monochromicity of the boundary edges seen from O' (the component of P),
  // ignoring edges within delta of the probe points (the disk boundaries).
  ArcLabel seen = ArcLabel::None;
  int first_edge = -1;
  for (int j = 0; j < n; ++j) {
    if (cy[j].label == ArcLabel::None || !reached[cy[j].interior_site]) continue;
    const Point m =
        0.5 * (corner_pos(cy[j].from, dd.scale) + corner_pos(cy[j].to, dd.scale));
    if (dist(m, p) < delta || dist(m, pp) < delta) continue;
    if (seen == ArcLabel::None) {
      seen = cy[j].label;
      first_edge = j;
    } else if (cy[j].label != seen) {
      return {false, std::string("edges ") + std::to_string(first_edge) + "(" +
                         arc_char(seen) + ") and " + std::to_string(j) + "(" +
                         arc_char(cy[j].label) + ") both border the region"};
    }
  }
  return {true, ""};
}

// Walks from q in the bottom part (below an a_eps -> b_eps connector) may
// only exit through C-labeled boundary.
inline CheckResult check_homotopical_consistency(const DiscreteDomain& dd,
                                                 const ContinuousDomain& dom,
                                                 Point q, double Delta,
                                                 double delta_star) {
  if (!(Delta >= 10 * delta_star))
    throw error("HOMOTOPY_INPUT", "Delta must be at least 10*delta_star");
  (void)dom;
  const int qs = dd.site_id(site_containing(q, dd.scale));
  if (qs < 0 || !dd.in_principal(qs)) return {false, "q not covered"};
  const auto& cy = dd.boundary[dd.principal_cycle];
  // Wall: sites whose tiles touch a_eps or b_eps, joined by a shortest path.
  std::vector<std::uint8_t> wall(dd.sites.size(), 0);
  std::vector<int> a_sites, b_sites;
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    if (!dd.in_principal(static_cast<int>(i))) continue;
    for (const Corner c : site_corners(dd.sites[i])) {
      if (c == dd.a_eps) a_sites.push_back(static_cast<int>(i));
      if (c == dd.b_eps) b_sites.push_back(static_cast<int>(i));
    }
  }
  std::vector<std::uint8_t> allowed(dd.sites.size(), 0), goal(dd.sites.size(), 0);
  for (std::size_t i = 0; i < dd.sites.size(); ++i)
    allowed[i] = dd.in_principal(static_cast<int>(i));
  for (const int s : b_sites) goal[s] = 1;
  const auto path = detail::bfs_path(dd, allowed, a_sites, goal);
  if (path.empty())
    throw error("PATH_NOT_FOUND", "no connector from a_eps to b_eps");
  for (const int s : path) wall[s] = 1;
  for (const int s : a_sites) wall[s] = 1;
  for (const int s : b_sites) wall[s] = 1;
  if (wall[qs]) return {false, "q lies on the connector"};
  std::vector<std::uint8_t> open(dd.sites.size(), 0);
  for (std::size_t i = 0; i < dd.sites.size(); ++i)
    open[i] = dd.in_principal(static_cast<int>(i)) && !wall[i];
  const auto reached = detail::flood(dd, open, {qs});
  for (const auto& e : cy) {
    if (e.label == ArcLabel::None || e.label == ArcLabel::C) continue;
    if (reached[e.interior_site] && !wall[e.interior_site]) {
      const Point m =
          0.5 * (corner_pos(e.from, dd.scale) + corner_pos(e.to, dd.scale));
      return {false, std::string("reached arc ") + arc_char(e.label) + " at (" +
                         std::to_string(m.x) + "," + std::to_string(m.y) + ")"};
    }
  }
  return {true, ""};
}

// Box-counting dimension over square grids.
inline MinkowskiEstimate minkowski_dimension(const std::vector<Polyline>& curves,
                                             std::vector<double> scales) {
  if (scales.size() < 4)
    throw error("MINKOWSKI_SCALES", "need at least 4 scales");
  std::sort(scales.begin(), scales.end(), std::greater<double>());
  MinkowskiEstimate est;
  est.scales = scales;
  for (const double s : scales) {
    std::unordered_set<std::uint64_t> boxes;
    for (const auto& c : curves)
      for (const Point p : densify(c, s / 4.0)) {
        const auto ix = static_cast<std::int64_t>(std::floor(p.x / s));
        const auto iy = static_cast<std::int64_t>(std::floor(p.y / s));
        boxes.insert((static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix))
                      << 32) |
                     static_cast<std::uint32_t>(iy));
      }
    est.counts.push_back(boxes.size());
  }
  // Least-squares slope of log(count) against log(1/scale).
  const std::size_t m = scales.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double x = std::log(1.0 / scales[i]);
    const double y = std::log(static_cast<double>(est.counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  est.fitted_dimension = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return est;
}

}  // namespace cardylab

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cardylab/errors.hpp"
#include "cardylab/geometry.hpp"

namespace cardylab {

enum class Side : std::uint8_t { Left = 0, Right = 1 };

// A marked prime end: a boundary point, plus the side tag needed to pick one
// of the two prime ends of a point interior to a two-sided slit.
struct Mark {
  Point p;
  std::optional<Side> side;
};

// Directed from its attachment point (vertices[0], on the outer boundary or
// on an earlier slit) inward to the tip.
struct Slit {
  Polyline path;
};

// One directed piece of the boundary cycle of the slit domain; the interior
// is on its left.  Slit pieces carry which side of the slit they trace.
struct BoundaryPiece {
  Point from, to;
  int slit = -1;  // -1: outer boundary
  std::optional<Side> side;
  double cum = 0;  // cumulative length at `from`
  double len = 0;
};

struct CyclePos {
  int piece = 0;
  double t = 0;  // in [0,1] along the piece
};

enum class ArcId : std::uint8_t { A = 0, B = 1, C = 2 };

// Polygonal Jordan domain with optional polyline slits, marked prime ends
// a, b, c (counterclockwise), optional probe prime end d on arc A, and the
// interior normalization point z0.  Arcs in counterclockwise order:
// C from a to b, A from b to c, B from c to a.
struct ContinuousDomain {
  Polygon outer;
  std::vector<Slit> slits;
  Mark a, b, c;
  std::optional<Mark> d;
  Point z0;

  double diameter() const { return outer.diameter(); }
  double tol() const { return kGeomTol * diameter(); }

  // --- boundary cycle -----------------------------------------------------

  const std::vector<BoundaryPiece>& cycle() const {
    if (cycle_.empty()) build_cycle();
    return cycle_;
  }

  double cycle_length() const {
    const auto& cy = cycle();
    return cy.back().cum + cy.back().len;
  }

  double param(CyclePos pos) const {
    const auto& p = cycle()[pos.piece];
    return p.cum + pos.t * p.len;
  }

  CyclePos pos_at_param(double s) const {
    const auto& cy = cycle();
    const double L = cycle_length();
    s = std::fmod(s, L);
    if (s < 0) s += L;
    int lo = 0, hi = static_cast<int>(cy.size()) - 1;
    while (lo < hi) {
      const int mid = (lo + hi + 1) / 2;
      if (cy[mid].cum <= s)
        lo = mid;
      else
        hi = mid - 1;
    }
    const double t = cy[lo].len > 0 ? (s - cy[lo].cum) / cy[lo].len : 0.0;
    return CyclePos{lo, std::clamp(t, 0.0, 1.0)};
  }

  Point at(CyclePos pos) const {
    const auto& p = cycle()[pos.piece];
    return p.from + pos.t * (p.to - p.from);
  }

  // Nearest cycle position to q; slit pieces only match if q lies on the
  // interior (left) side of the piece, or side is requested explicitly.
  CyclePos locate(Point q, std::optional<Side> side = std::nullopt,
                  std::optional<int> on_slit = std::nullopt) const {
    const auto& cy = cycle();
    double best = std::numeric_limits<double>::infinity();
    CyclePos out;
    for (std::size_t i = 0; i < cy.size(); ++i) {
      const auto& pc = cy[i];
      if (side && (!pc.side || *pc.side != *side)) continue;
      if (on_slit && pc.slit != *on_slit) continue;
      const Point dseg = pc.to - pc.from;
      // Without an explicit side request, a two-sided piece only matches
      // queries on its interior (left) side.
      if (!side && pc.side && cross(dseg, q - pc.from) < -tol() * norm(dseg))
        continue;
      const double l2 = dot(dseg, dseg);
      const double t = l2 > 0 ? std::clamp(dot(q - pc.from, dseg) / l2, 0.0, 1.0) : 0.0;
      const double d = dist(q, pc.from + t * dseg);
      if (d < best) {
        best = d;
        out = CyclePos{static_cast<int>(i), t};
      }
    }
    return out;
  }

  CyclePos locate_mark(const Mark& m) const { return locate(m.p, m.side); }

  // Cyclic order: parameters of a, b, c (a first).
  std::array<double, 3> mark_params() const {
    const double L = cycle_length();
    const double pa = param(locate_mark(a));
    double pb = param(locate_mark(b)), pc_ = param(locate_mark(c));
    while (pb < pa) pb += L;
    while (pc_ < pb) pc_ += L;
    return {pa, pb, pc_};
  }

  // Pieces (possibly trimmed) of the given arc, in cycle order.
  std::vector<BoundaryPiece> arc_pieces(ArcId arc) const {
    const auto& cy = cycle();
    CyclePos from, to;
    switch (arc) {
      case ArcId::C: from = locate_mark(a); to = locate_mark(b); break;
      case ArcId::A: from = locate_mark(b); to = locate_mark(c); break;
      case ArcId::B: from = locate_mark(c); to = locate_mark(a); break;
    }
    const double L = cycle_length();
    double remaining = param(to) - param(from);
    if (remaining <= 0) remaining += L;
    std::vector<BoundaryPiece> out;
    int i = from.piece;
    double t0 = from.t;
    while (remaining > tol()) {
      const BoundaryPiece& pc = cy[i];
      const double take = std::min((1.0 - t0) * pc.len, remaining);
      if (take > 0) {
        const double t1 = t0 + take / pc.len;
        BoundaryPiece cut = pc;
        cut.from = pc.from + t0 * (pc.to - pc.from);
        cut.to = pc.from + t1 * (pc.to - pc.from);
        cut.cum = pc.cum + t0 * pc.len;
        cut.len = take;
        out.push_back(cut);
        remaining -= take;
      }
      i = (i + 1) % static_cast<int>(cy.size());
      t0 = 0.0;
    }
    return out;
  }

  // Distance from q (interior side) to the arc.
  double arc_distance(Point q, ArcId arc) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pc : arc_pieces(arc)) {
      if (pc.side) {
        // Two-sided piece: q must be on the interior (left) side.
        const Point d = pc.to - pc.from;
        if (cross(d, q - pc.from) < -tol() * norm(d)) continue;
      }
      best = std::min(best, dist_point_segment(q, pc.from, pc.to));
    }
    return best;
  }

  // --- interior test ------------------------------------------------------

  bool inside(Point q) const {
    if (point_in_polygon(q, outer) != PointClass::Inside) return false;
    for (const auto& s : slits)
      if (distance_point_to_polyline(q, s.path) <= tol()) return false;
    return true;
  }

  double boundary_distance(Point q) const {
    double d = distance_point_to_polyline(q, outer.boundary_polyline());
    for (const auto& s : slits)
      d = std::min(d, distance_point_to_polyline(q, s.path));
    return d;
  }

  std::vector<Polyline> boundary_polylines() const {
    std::vector<Polyline> out{outer.boundary_polyline()};
    for (const auto& s : slits) out.push_back(s.path);
    return out;
  }

  void validate() const {
    if (!inside(z0)) throw error("DOMAIN_Z0", "z0 is not interior");
    const auto mp = mark_params();  // throws if the cycle cannot be built
    if (!(mp[0] < mp[1] && mp[1] < mp[2]))
      throw error("DOMAIN_MARKS", "marks a,b,c not in ccw order");
    if (d) {
      const double L = cycle_length();
      double pd = param(locate_mark(*d));
      while (pd < mp[1]) pd += L;
      if (!(pd >= mp[1] && pd <= mp[2]))
        throw error("DOMAIN_MARKS", "probe d not on arc A");
    }
  }

private:
  mutable std::vector<BoundaryPiece> cycle_;

  struct Seg {
    Point a, b;
    int slit;  // -1 outer
  };

  void build_cycle() const {
    const double eps = tol();
    // Collect segments; split where a slit attaches mid-segment.
    std::vector<Seg> segs;
    const std::size_t n = outer.vertices.size();
    for (std::size_t i = 0; i < n; ++i)
      segs.push_back({outer.vertices[i], outer.vertices[(i + 1) % n], -1});
    for (std::size_t s = 0; s < slits.size(); ++s)
      for (std::size_t i = 0; i + 1 < slits[s].path.vertices.size(); ++i)
        segs.push_back({slits[s].path.vertices[i], slits[s].path.vertices[i + 1],
                        static_cast<int>(s)});
    // Split hosts at attachment points.
    for (const auto& s : slits) {
      const Point at = s.path.vertices.front();
      for (std::size_t i = 0; i < segs.size(); ++i) {
        Seg& sg = segs[i];
        if (dist(at, sg.a) <= eps || dist(at, sg.b) <= eps) continue;
        if (dist_point_segment(at, sg.a, sg.b) <= eps) {
          const Seg tail{at, sg.b, sg.slit};
          sg.b = at;
          segs.push_back(tail);
          break;
        }
      }
    }
    // Node ids by snapping.
    std::vector<Point> nodes;
    const auto node_id = [&](Point p) {
      for (std::size_t i = 0; i < nodes.size(); ++i)
        if (dist(nodes[i], p) <= eps) return static_cast<int>(i);
      nodes.push_back(p);
      return static_cast<int>(nodes.size() - 1);
    };
    struct HE {
      int from, to, seg, dir;  // dir: 0 = a->b, 1 = b->a
      double angle;
    };
    std::vector<HE> hes;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const int na = node_id(segs[i].a), nb = node_id(segs[i].b);
      if (na == nb) throw error("DOMAIN_BOUNDARY", "degenerate boundary segment");
      const Point d1 = segs[i].b - segs[i].a;
      hes.push_back({na, nb, static_cast<int>(i), 0, std::atan2(d1.y, d1.x)});
      hes.push_back({nb, na, static_cast<int>(i), 1, std::atan2(-d1.y, -d1.x)});
    }
    // Outgoing half-edges per node, sorted by angle (ccw).
    std::vector<std::vector<int>> out(nodes.size());
    for (std::size_t h = 0; h < hes.size(); ++h)
      out[hes[h].from].push_back(static_cast<int>(h));
    for (auto& v : out)
      std::sort(v.begin(), v.end(),
                [&](int x, int y) { return hes[x].angle < hes[y].angle; });
    const auto next_he = [&](int h) {
      const int twin = h ^ 1;
      const auto& cand = out[hes[twin].from];
      // Clockwise-next after the twin keeps the interior face on the left.
      int idx = -1;
      for (std::size_t i = 0; i < cand.size(); ++i)
        if (cand[i] == twin) idx = static_cast<int>(i);
      const int m = static_cast<int>(cand.size());
      return cand[((idx - 1) % m + m) % m];
    };
    // Start on the first outer edge, directed ccw.
    int start = -1;
    for (std::size_t h = 0; h < hes.size(); ++h)
      if (segs[hes[h].seg].slit == -1 && hes[h].dir == 0 &&
          dist(segs[hes[h].seg].a, outer.vertices[0]) <= eps) {
        start = static_cast<int>(h);
        break;
      }
    if (start < 0) throw error("DOMAIN_BOUNDARY", "cannot anchor boundary walk");
    std::vector<BoundaryPiece> cy;
    int h = start;
    do {
      const Seg& sg = segs[hes[h].seg];
      BoundaryPiece pc;
      pc.from = hes[h].dir == 0 ? sg.a : sg.b;
      pc.to = hes[h].dir == 0 ? sg.b : sg.a;
      pc.slit = sg.slit;
      if (sg.slit >= 0) pc.side = hes[h].dir == 0 ? Side::Left : Side::Right;
      pc.len = dist(pc.from, pc.to);
      cy.push_back(pc);
      h = next_he(h);
      if (cy.size() > 2 * hes.size())
        throw error("DOMAIN_BOUNDARY", "boundary walk does not close");
    } while (h != start);
    double cum = 0;
    for (auto& pc : cy) {
      pc.cum = cum;
      cum += pc.len;
    }
    cycle_ = std::move(cy);
  }
};

// --- JSON schema ----------------------------------------------------------
//
// {
//   "outer": [[x,y], ...],
//   "slits": [{"vertices": [[x,y], ...]}, ...],
//   "marks": {"a": {"point": [x,y], "side": "left"|"right"?}, "b": ..., "c": ...,
//             "d": {...}?},
//   "z0": [x,y]
// }

inline Point parse_point(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2)
    throw error("DOMAIN_PARSE", "point must be [x,y]");
  return Point{j[0].get<double>(), j[1].get<double>()};
}

inline Mark parse_mark(const nlohmann::json& j) {
  Mark m;
  m.p = parse_point(j.at("point"));
  if (j.contains("side")) {
    const std::string s = j["side"].get<std::string>();
    if (s == "left")
      m.side = Side::Left;
    else if (s == "right")
      m.side = Side::Right;
    else
      throw error("DOMAIN_PARSE", "side must be left or right");
  }
  return m;
}

inline ContinuousDomain domain_from_json(const nlohmann::json& j) {
  try {
    ContinuousDomain dom;
    std::vector<Point> verts;
    for (const auto& p : j.at("outer")) verts.push_back(parse_point(p));
    dom.outer = Polygon(verts);
    if (j.contains("slits"))
      for (const auto& s : j["slits"]) {
        std::vector<Point> sv;
        for (const auto& p : s.at("vertices")) sv.push_back(parse_point(p));
        dom.slits.push_back(Slit{Polyline(sv)});
      }
    const auto& marks = j.at("marks");
    dom.a = parse_mark(marks.at("a"));
    dom.b = parse_mark(marks.at("b"));
    dom.c = parse_mark(marks.at("c"));
    if (marks.contains("d")) dom.d = parse_mark(marks.at("d"));
    dom.z0 = parse_point(j.at("z0"));
    dom.validate();
    return dom;
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw error("DOMAIN_PARSE", e.what());
  }
}

inline nlohmann::json domain_to_json(const ContinuousDomain& dom) {
  nlohmann::json j;
  for (const auto& v : dom.outer.vertices) j["outer"].push_back({v.x, v.y});
  j["slits"] = nlohmann::json::array();
  for (const auto& s : dom.slits) {
    nlohmann::json js;
    for (const auto& v : s.path.vertices) js["vertices"].push_back({v.x, v.y});
    j["slits"].push_back(js);
  }
  const auto put_mark = [](const Mark& m) {
    nlohmann::json jm;
    jm["point"] = {m.p.x, m.p.y};
    if (m.side) jm["side"] = *m.side == Side::Left ? "left" : "right";
    return jm;
  };
  j["marks"]["a"] = put_mark(dom.a);
  j["marks"]["b"] = put_mark(dom.b);
  j["marks"]["c"] = put_mark(dom.c);
  if (dom.d) j["marks"]["d"] = put_mark(*dom.d);
  j["z0"] = {dom.z0.x, dom.z0.y};
  return j;
}

}  // namespace cardylab

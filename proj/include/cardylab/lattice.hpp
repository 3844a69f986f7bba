#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cardylab/errors.hpp"
#include "cardylab/geometry.hpp"
#include "cardylab/rng.hpp"

namespace cardylab {

// Axial site coordinate on the triangular lattice.
struct SiteCoord {
  int u = 0;
  int v = 0;
  friend bool operator==(SiteCoord a, SiteCoord b) {
    return a.u == b.u && a.v == b.v;
  }
  friend bool operator<(SiteCoord a, SiteCoord b) {
    return a.v != b.v ? a.v < b.v : a.u < b.u;
  }
};

struct SiteHash {
  std::size_t operator()(SiteCoord s) const {
    return std::hash<std::uint64_t>()(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(s.u)) << 32) |
        static_cast<std::uint32_t>(s.v));
  }
};

// Scale: epsilon is the hex tile diameter.  Edge-sharing regular hexagons of
// diameter eps have center spacing sqrt(3)/2 * eps.
struct LatticeScale {
  double epsilon = 1.0;
  explicit LatticeScale(double eps) : epsilon(eps) {
    if (!(eps > 0.0)) throw error("LATTICE_SCALE", "epsilon must be positive");
  }
  double spacing() const { return 0.8660254037844386 * epsilon; }
};

inline Point site_center(SiteCoord s, const LatticeScale& scale) {
  const double sp = scale.spacing();
  return {sp * (s.u + 0.5 * s.v), sp * 0.8660254037844386 * s.v};
}

// Hexagon corners live on a honeycomb; integer coordinates (a,b) embed as
// spacing * (a/2, b/(2*sqrt(3))).
struct Corner {
  int x = 0;
  int y = 0;
  friend bool operator==(Corner a, Corner b) { return a.x == b.x && a.y == b.y; }
  friend bool operator<(Corner a, Corner b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
  }
};

struct CornerHash {
  std::size_t operator()(Corner c) const {
    return std::hash<std::uint64_t>()(
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
        static_cast<std::uint32_t>(c.y));
  }
};

inline Point corner_pos(Corner c, const LatticeScale& scale) {
  const double sp = scale.spacing();
  return {sp * 0.5 * c.x, sp * c.y / (2.0 * 1.7320508075688772)};
}

// Counterclockwise hexagon corners of a site, starting at angle 30 degrees.
inline std::array<Corner, 6> site_corners(SiteCoord s) {
  const int cx = 2 * s.u + s.v, cy = 3 * s.v;
  return {Corner{cx + 1, cy + 1}, Corner{cx, cy + 2},  Corner{cx - 1, cy + 1},
          Corner{cx - 1, cy - 1}, Corner{cx, cy - 2},  Corner{cx + 1, cy - 1}};
}

// Neighbor in direction k shares the edge between corners k and k+1.
inline constexpr std::array<SiteCoord, 6> kNeighborDirs{
    SiteCoord{0, 1},  SiteCoord{-1, 1}, SiteCoord{-1, 0},
    SiteCoord{0, -1}, SiteCoord{1, -1}, SiteCoord{1, 0}};

inline std::array<SiteCoord, 6> neighbors(SiteCoord s) {
  std::array<SiteCoord, 6> out;
  for (int k = 0; k < 6; ++k)
    out[k] = SiteCoord{s.u + kNeighborDirs[k].u, s.v + kNeighborDirs[k].v};
  return out;
}

inline Polygon hex_tile(SiteCoord s, const LatticeScale& scale) {
  std::vector<Point> v;
  for (const Corner c : site_corners(s)) v.push_back(corner_pos(c, scale));
  return Polygon(std::move(v));
}

enum class ArcLabel : std::uint8_t { A = 0, B = 1, C = 2, None = 3 };

inline char arc_char(ArcLabel l) { return "ABC?"[static_cast<int>(l)]; }

// One directed boundary edge; the interior site is on its left.
struct DirEdge {
  Corner from, to;
  int interior_site = -1;  // index into DiscreteDomain::sites
  ArcLabel label = ArcLabel::None;
  int run = -1;  // contiguous label run id within its cycle
};

// Discrete domain: a set of hex tiles at scale eps with traced boundary
// cycles, labeled arcs and marked boundary vertices.  Slit domains block
// site adjacency across slit edges; both slit sides appear as boundary
// directed edges.
struct DiscreteDomain {
  LatticeScale scale{1.0};
  std::vector<SiteCoord> sites;  // canonical (v,u)-sorted order
  std::unordered_map<SiteCoord, int, SiteHash> index;
  std::vector<std::array<int, 6>> adj;  // site index per direction, -1 if none
  std::vector<int> component;           // component id per site
  int principal_component = -1;
  std::vector<std::vector<DirEdge>> boundary;  // closed cycles
  int principal_cycle = -1;
  Corner a_eps{}, b_eps{}, c_eps{};
  std::optional<Corner> d_eps;
  int probe_site = -1;                   // site for the Cardy probe d
  std::vector<std::uint8_t> arc_touch;   // per site: bit k => touches arc k

  bool has(SiteCoord s) const { return index.count(s) != 0; }
  int site_id(SiteCoord s) const {
    auto it = index.find(s);
    return it == index.end() ? -1 : it->second;
  }
  bool in_principal(int id) const {
    return component[id] == principal_component;
  }
  bool touches(int id, ArcLabel l) const {
    return (arc_touch[id] >> static_cast<int>(l)) & 1u;
  }

  void rebuild_site_index() {
    index.clear();
    for (std::size_t i = 0; i < sites.size(); ++i)
      index[sites[i]] = static_cast<int>(i);
  }

  // Recompute components and arc adjacency from sites/adj/boundary.
  void finalize(SiteCoord principal_seed) {
    component.assign(sites.size(), -1);
    int comp = 0;
    std::vector<int> stack;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (component[i] >= 0) continue;
      stack.push_back(static_cast<int>(i));
      component[i] = comp;
      while (!stack.empty()) {
        const int s = stack.back();
        stack.pop_back();
        for (const int n : adj[s])
          if (n >= 0 && component[n] < 0) {
            component[n] = comp;
            stack.push_back(n);
          }
      }
      ++comp;
    }
    const int seed = site_id(principal_seed);
    if (seed < 0) throw error("NO_PRINCIPAL", "principal seed site missing");
    principal_component = component[seed];
    arc_touch.assign(sites.size(), 0);
    for (const auto& cycle : boundary)
      for (const auto& e : cycle)
        if (e.interior_site >= 0 && e.label != ArcLabel::None)
          arc_touch[e.interior_site] |=
              static_cast<std::uint8_t>(1u << static_cast<int>(e.label));
  }
};

enum class Color : std::uint8_t { Blue = 0, Yellow = 1 };

inline Color flip(Color c) { return c == Color::Blue ? Color::Yellow : Color::Blue; }

// Blue/yellow assignment for every site of a DiscreteDomain.
struct Coloring {
  const DiscreteDomain* domain = nullptr;
  std::vector<std::uint8_t> colors;  // indexed like domain->sites

  Coloring() = default;
  Coloring(const DiscreteDomain& dd, Color fill)
      : domain(&dd),
        colors(dd.sites.size(),
               static_cast<std::uint8_t>(fill == Color::Yellow)) {}

  Color at(int id) const { return static_cast<Color>(colors[id]); }
  void set(int id, Color c) {
    colors[id] = static_cast<std::uint8_t>(c == Color::Yellow);
  }
  bool is(int id, Color c) const { return at(id) == c; }

  Coloring flipped() const {
    Coloring out = *this;
    for (auto& c : out.colors) c ^= 1u;
    return out;
  }
};

// Sample a coloring at p = 1/2 from the (seed, replica) coin stream.
inline Coloring sample_coloring(const DiscreteDomain& dd, std::uint64_t seed,
                                std::uint64_t replica) {
  Coloring col(dd, Color::Blue);
  CoinStream coins(seed, replica);
  coins.fill(dd.sites.size(), [&](std::uint64_t i, bool bit) {
    col.colors[i] = static_cast<std::uint8_t>(bit);
  });
  return col;
}

// Connected same-colored components, canonical order (sorted site lists,
// clusters ordered by their smallest site).
inline std::vector<std::vector<SiteCoord>> clusters(const Coloring& col,
                                                    Color color) {
  const DiscreteDomain& dd = *col.domain;
  std::vector<int> label(dd.sites.size(), -1);
  std::vector<std::vector<SiteCoord>> out;
  std::vector<int> stack;
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    if (label[i] >= 0 || !col.is(static_cast<int>(i), color)) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    label[i] = id;
    stack.push_back(static_cast<int>(i));
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      out[id].push_back(dd.sites[s]);
      for (const int n : dd.adj[s])
        if (n >= 0 && label[n] < 0 && col.is(n, color)) {
          label[n] = id;
          stack.push_back(n);
        }
    }
  }
  for (auto& c : out) std::sort(c.begin(), c.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

namespace detail {

// Flood fill over `allowed` sites from seeds; returns reached mask.
inline std::vector<std::uint8_t> flood(const DiscreteDomain& dd,
                                       const std::vector<std::uint8_t>& allowed,
                                       const std::vector<int>& seeds) {
  std::vector<std::uint8_t> reached(dd.sites.size(), 0);
  std::vector<int> stack;
  for (const int s : seeds)
    if (allowed[s] && !reached[s]) {
      reached[s] = 1;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    for (const int n : dd.adj[s])
      if (n >= 0 && allowed[n] && !reached[n]) {
        reached[n] = 1;
        stack.push_back(n);
      }
  }
  return reached;
}

}  // namespace detail

// Is there a monochromatic circuit of `color` inside outer\inner (intersected
// with the domain) separating inner from outer there?  Separation is tested
// by flood fill in the complement of each candidate cluster.  Paths are
// confined to the domain, so a boundary-anchored circuit closes through
// whatever boundary arc bounds the region; `assist`, when given, asserts
// that only the named arc borders the region.
inline bool circuit_in_annulus(const Coloring& col, const Polygon& inner,
                               const Polygon& outer, Color color,
                               std::optional<ArcLabel> assist = std::nullopt) {
  const DiscreteDomain& dd = *col.domain;
  std::vector<std::uint8_t> in_region(dd.sites.size(), 0);
  std::vector<int> inner_seeds, outer_frontier, region_ids;
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    if (!dd.in_principal(static_cast<int>(i))) continue;
    const Point p = site_center(dd.sites[i], dd.scale);
    if (point_in_polygon(p, outer) != PointClass::Outside &&
        point_in_polygon(p, inner) == PointClass::Outside) {
      in_region[i] = 1;
      region_ids.push_back(static_cast<int>(i));
    }
  }
  if (region_ids.empty())
    throw error("ANNULUS_OUTSIDE_DOMAIN", "annulus misses the domain");
  for (const int i : region_ids) {
    bool touches_inner = false, touches_outer = false;
    for (const int n : dd.adj[i]) {
      if (n < 0) continue;
      const Point p = site_center(dd.sites[n], dd.scale);
      if (point_in_polygon(p, inner) != PointClass::Outside) touches_inner = true;
      if (point_in_polygon(p, outer) == PointClass::Outside) touches_outer = true;
    }
    if (touches_inner) inner_seeds.push_back(i);
    if (touches_outer) outer_frontier.push_back(i);
  }
  if (inner_seeds.empty())
    throw error("ANNULUS_OUTSIDE_DOMAIN", "inner square misses the domain");
  if (outer_frontier.empty())
    throw error("ANNULUS_OUTSIDE_DOMAIN", "outer square not inside the domain");

  if (assist) {
    for (const int i : region_ids)
      if (dd.arc_touch[i] != 0 && !dd.touches(i, *assist))
        throw error("ANNULUS_ARC",
                    "annulus region borders an arc other than the assist arc");
  }

  // Candidate separators: clusters of `color` within the region.
  std::vector<int> cluster_of(dd.sites.size(), -1);
  int n_clusters = 0;
  std::vector<int> stack;
  for (const int i : region_ids) {
    if (cluster_of[i] >= 0 || !col.is(i, color)) continue;
    const int id = n_clusters++;
    cluster_of[i] = id;
    stack.push_back(i);
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      for (const int n : dd.adj[s])
        if (n >= 0 && in_region[n] && cluster_of[n] < 0 && col.is(n, color)) {
          cluster_of[n] = id;
          stack.push_back(n);
        }
    }
  }
  std::vector<std::uint8_t> outer_mask(dd.sites.size(), 0);
  for (const int i : outer_frontier) outer_mask[i] = 1;
  std::vector<std::uint8_t> allowed(dd.sites.size(), 0);
  for (int k = 0; k < n_clusters; ++k) {
    for (const int i : region_ids) allowed[i] = (cluster_of[i] != k);
    const auto reached = detail::flood(dd, allowed, inner_seeds);
    bool escaped = false;
    for (const int i : outer_frontier)
      if (reached[i]) {
        escaped = true;
        break;
      }
    if (!escaped) return true;
    for (const int i : region_ids) allowed[i] = 0;
  }
  return false;
}

}  // namespace cardylab

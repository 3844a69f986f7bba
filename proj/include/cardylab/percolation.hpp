#pragma once

#include <cmath>
#include <cstdlib>
#include <optional>
#include <thread>
#include <unordered_set>
#include <vector>

#include "cardylab/domain_approx.hpp"
#include "cardylab/errors.hpp"
#include "cardylab/lattice.hpp"
#include "cardylab/rng.hpp"

namespace cardylab {

enum class CrossingFunc : std::uint8_t { U = 0, V = 1, W = 2 };

// The dual arc of each crossing function: U-paths join A and B and separate
// the probe from C, so the dual obstruction is a path to C; cyclically for
// V (dual arc A) and W (dual arc B).
inline ArcLabel dual_arc(CrossingFunc f) {
  switch (f) {
    case CrossingFunc::U: return ArcLabel::C;
    case CrossingFunc::V: return ArcLabel::A;
    default: return ArcLabel::B;
  }
}

struct CrossingSpec {
  CrossingFunc function = CrossingFunc::U;
  Color color = Color::Blue;
  SiteCoord probe{};
};

struct CrossingEstimate {
  double value = 0;
  double half_width = 1;
  std::uint64_t samples = 0;
  std::uint64_t seed = 0;
};

inline CrossingEstimate wilson_estimate(std::uint64_t hits, std::uint64_t n,
                                        std::uint64_t seed) {
  CrossingEstimate est;
  est.samples = n;
  est.seed = seed;
  if (n == 0) return est;
  const double z = 1.959963984540054;  // 95%
  const double z2 = z * z;
  est.value = static_cast<double>(hits) / static_cast<double>(n);
  est.half_width =
      z *
      std::sqrt(static_cast<double>(hits) * (n - hits) / static_cast<double>(n) +
                z2 / 4.0) /
      (static_cast<double>(n) + z2);
  return est;
}

inline unsigned worker_count() {
  if (const char* env = std::getenv("CARDYLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

namespace detail {

inline void require_labeled(const DiscreteDomain& dd) {
  if (dd.principal_cycle < 0)
    throw error("UNLABELED_DOMAIN", "boundary not traced");
  for (const auto& e : dd.boundary[dd.principal_cycle])
    if (e.label != ArcLabel::None) return;
  throw error("UNLABELED_DOMAIN", "principal cycle carries no arc labels");
}

// The two arcs a crossing path of function f must join (the non-dual arcs).
inline std::array<ArcLabel, 2> span_arcs(CrossingFunc f) {
  switch (f) {
    case CrossingFunc::U: return {ArcLabel::A, ArcLabel::B};
    case CrossingFunc::V: return {ArcLabel::B, ArcLabel::C};
    default: return {ArcLabel::C, ArcLabel::A};
  }
}

// Sites connected to the dual arc once every crossing-colored cluster that
// joins both span arcs is removed (the removed clusters are the candidate
// separating paths).  The crossing event for probe z then fails iff z or a
// neighbor of z is in this set, or z touches the dual arc itself.
inline void dual_reach(const DiscreteDomain& dd, const Coloring& col,
                       CrossingFunc f, Color crossing_color,
                       std::vector<std::uint8_t>& reach) {
  const ArcLabel arc = dual_arc(f);
  const auto span = span_arcs(f);
  const std::size_t n = dd.sites.size();
  // Flood the crossing-colored clusters, marking those touching both arcs.
  std::vector<std::uint8_t> spanning(n, 0);
  std::vector<std::uint8_t> seen(n, 0);
  std::vector<int> stack, members;
  for (std::size_t i = 0; i < n; ++i) {
    const int id = static_cast<int>(i);
    if (seen[i] || !dd.in_principal(id) || !col.is(id, crossing_color))
      continue;
    members.clear();
    bool t0 = false, t1 = false;
    seen[i] = 1;
    stack.push_back(id);
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      members.push_back(s);
      t0 = t0 || dd.touches(s, span[0]);
      t1 = t1 || dd.touches(s, span[1]);
      for (const int nb : dd.adj[s])
        if (nb >= 0 && !seen[nb] && dd.in_principal(nb) &&
            col.is(nb, crossing_color)) {
          seen[nb] = 1;
          stack.push_back(nb);
        }
    }
    if (t0 && t1)
      for (const int s : members) spanning[s] = 1;
  }
  // Flood from the dual arc through everything that is not a spanning
  // cluster, regardless of color: separation is geometric.
  reach.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int id = static_cast<int>(i);
    if (dd.in_principal(id) && !spanning[i] && dd.touches(id, arc)) {
      reach[i] = 1;
      stack.push_back(id);
    }
  }
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    for (const int nb : dd.adj[s])
      if (nb >= 0 && !reach[nb] && !spanning[nb] && dd.in_principal(nb)) {
        reach[nb] = 1;
        stack.push_back(nb);
      }
  }
}

inline bool event_from_reach(const DiscreteDomain& dd,
                             const std::vector<std::uint8_t>& reach,
                             CrossingFunc f, int z) {
  if (dd.touches(z, dual_arc(f))) return false;
  if (reach[z]) return false;
  // The probe itself is a wildcard: the flood may step onto it even when it
  // lies inside a spanning cluster.
  for (const int nb : dd.adj[z])
    if (nb >= 0 && reach[nb]) return false;
  return true;
}

}  // namespace detail

// Separation form of the crossing event: a crossing-colored path joining the
// two non-dual arcs and separating the probe from the dual arc exists iff no
// path of any color avoiding the spanning clusters joins the probe to the
// dual arc (the probe itself acts as a wildcard).
inline bool crossing_event(const Coloring& col, const DiscreteDomain& dd,
                           const CrossingSpec& spec) {
  detail::require_labeled(dd);
  const int z = dd.site_id(spec.probe);
  if (z < 0 || !dd.in_principal(z))
    throw error("PROBE_OUTSIDE", "probe not in the principal component");
  std::vector<std::uint8_t> reach;
  detail::dual_reach(dd, col, spec.function, spec.color, reach);
  return detail::event_from_reach(dd, reach, spec.function, z);
}

// Direct separation oracle used for cross-validation: some crossing-colored
// cluster K touching both non-dual arcs disconnects the probe from the dual
// arc once K is removed (the probe itself stays).
inline bool crossing_event_direct(const Coloring& col, const DiscreteDomain& dd,
                                  const CrossingSpec& spec) {
  detail::require_labeled(dd);
  const ArcLabel arc = dual_arc(spec.function);
  const int z = dd.site_id(spec.probe);
  if (z < 0 || !dd.in_principal(z))
    throw error("PROBE_OUTSIDE", "probe not in the principal component");
  if (dd.touches(z, arc)) return false;
  std::vector<int> cluster_of(dd.sites.size(), -1);
  int n_clusters = 0;
  std::vector<int> stack;
  for (std::size_t i = 0; i < dd.sites.size(); ++i) {
    if (cluster_of[i] >= 0 || !dd.in_principal(static_cast<int>(i)) ||
        !col.is(static_cast<int>(i), spec.color))
      continue;
    const int id = n_clusters++;
    cluster_of[i] = id;
    stack.push_back(static_cast<int>(i));
    while (!stack.empty()) {
      const int s = stack.back();
      stack.pop_back();
      for (const int nb : dd.adj[s])
        if (nb >= 0 && cluster_of[nb] < 0 && dd.in_principal(nb) &&
            col.is(nb, spec.color)) {
          cluster_of[nb] = id;
          stack.push_back(nb);
        }
    }
  }
  const auto span = detail::span_arcs(spec.function);
  std::vector<std::uint8_t> touches0(n_clusters, 0), touches1(n_clusters, 0);
  for (std::size_t i = 0; i < dd.sites.size(); ++i)
    if (cluster_of[i] >= 0) {
      const int id = static_cast<int>(i);
      touches0[cluster_of[i]] |= dd.touches(id, span[0]);
      touches1[cluster_of[i]] |= dd.touches(id, span[1]);
    }
  std::vector<std::uint8_t> allowed(dd.sites.size(), 0);
  std::vector<int> seeds;
  for (int k = 0; k < n_clusters; ++k) {
    if (!touches0[k] || !touches1[k]) continue;
    seeds.clear();
    for (std::size_t i = 0; i < dd.sites.size(); ++i) {
      const int id = static_cast<int>(i);
      allowed[i] = dd.in_principal(id) && (cluster_of[i] != k || id == z);
      if (allowed[i] && dd.touches(id, arc)) seeds.push_back(id);
    }
    const auto reached = detail::flood(dd, allowed, seeds);
    if (!reached[z]) return true;
  }
  return false;
}

// Shared Monte Carlo core: one coloring + one dual flood per replica serves
// every probe.  Counts are additive over replicas, so any partition across
// workers yields identical totals.
inline std::vector<CrossingEstimate> estimate_crossing_multi(
    const DiscreteDomain& dd, CrossingFunc f, Color color,
    const std::vector<int>& probe_ids, std::uint64_t n, std::uint64_t seed) {
  detail::require_labeled(dd);
  for (const int z : probe_ids)
    if (z < 0 || !dd.in_principal(z))
      throw error("PROBE_OUTSIDE", "probe not in the principal component");
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), n ? n : 1));
  std::vector<std::vector<std::uint64_t>> counts(
      workers, std::vector<std::uint64_t>(probe_ids.size(), 0));
  const auto run = [&](unsigned w) {
    std::vector<std::uint8_t> reach;
    const std::uint64_t lo = n * w / workers, hi = n * (w + 1) / workers;
    for (std::uint64_t r = lo; r < hi; ++r) {
      const Coloring col = sample_coloring(dd, seed, r);
      detail::dual_reach(dd, col, f, color, reach);
      for (std::size_t p = 0; p < probe_ids.size(); ++p)
        counts[w][p] += detail::event_from_reach(dd, reach, f, probe_ids[p]);
    }
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }
  std::vector<CrossingEstimate> out;
  for (std::size_t p = 0; p < probe_ids.size(); ++p) {
    std::uint64_t hits = 0;
    for (unsigned w = 0; w < workers; ++w) hits += counts[w][p];
    out.push_back(wilson_estimate(hits, n, seed));
  }
  return out;
}

inline CrossingEstimate estimate_crossing(const DiscreteDomain& dd,
                                          const CrossingSpec& spec,
                                          std::uint64_t n, std::uint64_t seed) {
  const int z = dd.site_id(spec.probe);
  return estimate_crossing_multi(dd, spec.function, spec.color, {z}, n, seed)
      .front();
}

inline CrossingEstimate estimate_cardy(const DiscreteDomain& dd, std::uint64_t n,
                                       std::uint64_t seed) {
  if (dd.probe_site < 0)
    throw error("MISSING_PROBE", "domain has no probe vertex d");
  return estimate_crossing_multi(dd, CrossingFunc::U, Color::Blue,
                                 {dd.probe_site}, n, seed)
      .front();
}

inline CrossingEstimate harris_ring_probability(
    const DiscreteDomain& dd, const AnnulusFamily& fam, int level, Color color,
    std::uint64_t n, std::uint64_t seed,
    std::optional<ArcLabel> assist = std::nullopt) {
  if (level < 0 || level + 1 >= static_cast<int>(fam.squares.size()))
    throw error("ANNULUS_LEVEL", "level outside the family");
  const double width = 0.5 * (fam.squares[level].diameter() -
                              fam.squares[level + 1].diameter()) /
                       1.4142135623730951;
  if (width < 4 * dd.scale.spacing())
    throw error("ANNULUS_TOO_THIN", "annulus narrower than 4 tiles");
  std::uint64_t hits = 0;
  for (std::uint64_t r = 0; r < n; ++r) {
    const Coloring col = sample_coloring(dd, seed, r);
    hits += circuit_in_annulus(col, fam.squares[level + 1], fam.squares[level],
                               color, assist);
  }
  return wilson_estimate(hits, n, seed);
}

inline std::vector<CrossingEstimate> boundary_decay_profile(
    const DiscreteDomain& dd, const std::vector<SiteCoord>& probes,
    std::uint64_t n, std::uint64_t seed) {
  std::vector<int> ids;
  for (const auto& s : probes) ids.push_back(dd.site_id(s));
  return estimate_crossing_multi(dd, CrossingFunc::U, Color::Blue, ids, n, seed);
}

// ---------------------------------------------------------------------------
// Exploration process

struct ExploreStop {
  std::uint64_t max_steps = 1000000;
  std::optional<double> target_nbhd;  // stop radius around c_eps
};

struct ExploreResult {
  CurveTrace trace;
  Coloring coloring;
};

namespace detail {

inline std::array<Corner, 3> corner_neighbors(Corner c) {
  const int m = ((c.y % 3) + 3) % 3;
  if (m == 1)
    return {Corner{c.x - 1, c.y + 1}, Corner{c.x + 1, c.y + 1},
            Corner{c.x, c.y - 2}};
  return {Corner{c.x - 1, c.y - 1}, Corner{c.x + 1, c.y - 1},
          Corner{c.x, c.y + 2}};
}

}  // namespace detail

// Percolation interface walk from a_eps aiming at c_eps, blue kept on the
// left.  Interior sites reveal fair coins; the walls are pre-colored by arc:
// B acts blue, A and C act yellow, so the interface runs from a toward c.
// Unlabeled exterior (holes) acts yellow.
inline ExploreResult explore(const DiscreteDomain& dd, std::uint64_t seed,
                             const ExploreStop& stop = {}) {
  detail::require_labeled(dd);
  ExploreResult res;
  res.coloring = sample_coloring(dd, seed, 0);
  CurveTrace& tr = res.trace;
  tr.start = dd.a_eps;
  tr.tip = dd.a_eps;
  tr.stop_reason = StopReason::Trapped;

  // Wall colors for exterior tiles along the principal cycle.
  std::unordered_map<SiteCoord, ArcLabel, SiteHash> wall;
  for (const auto& e : dd.boundary[dd.principal_cycle]) {
    const auto pair = sites_sharing_edge(e.from, e.to);
    const SiteCoord interior = dd.sites[e.interior_site];
    const SiteCoord ext = pair[0] == interior ? pair[1] : pair[0];
    wall.emplace(ext, e.label);
  }
  const auto color_of = [&](SiteCoord s) {
    const int id = dd.site_id(s);
    if (id >= 0 && dd.in_principal(id)) return res.coloring.at(id);
    const auto it = wall.find(s);
    if (it != wall.end() && it->second == ArcLabel::B) return Color::Blue;
    return Color::Yellow;
  };
  const auto principal_site = [&](SiteCoord s) {
    const int id = dd.site_id(s);
    return id >= 0 && dd.in_principal(id);
  };

  // First edge out of a_eps: the unique corner edge whose flanking tiles
  // (walls or freshly revealed interior sites) are blue on the left and
  // yellow on the right of the walk direction.
  Corner prev = dd.a_eps, cur{};
  bool started = false;
  const Point a_pos = corner_pos(dd.a_eps, dd.scale);
  for (const Corner nb : detail::corner_neighbors(dd.a_eps)) {
    const auto fl = sites_sharing_edge(dd.a_eps, nb);
    const Point dir = corner_pos(nb, dd.scale) - a_pos;
    Color left_c = Color::Yellow, right_c = Color::Blue;
    for (const SiteCoord s : fl) {
      if (cross(dir, site_center(s, dd.scale) - a_pos) > 0)
        left_c = color_of(s);
      else
        right_c = color_of(s);
    }
    if (left_c == Color::Blue && right_c == Color::Yellow) {
      cur = nb;
      started = true;
      break;
    }
  }
  if (!started) return res;  // trapped at the start

  std::unordered_set<std::uint64_t> visited;
  visited.insert(undirected_edge_key(prev, cur));
  tr.edges.push_back({prev, cur});
  tr.tip = cur;
  const Point c_pos = corner_pos(dd.c_eps, dd.scale);

  for (std::uint64_t step = 1;; ++step) {
    if (stop.target_nbhd &&
        dist(corner_pos(cur, dd.scale), c_pos) <= *stop.target_nbhd) {
      tr.stop_reason = StopReason::ReachedTargetNbhd;
      return res;
    }
    if (step >= stop.max_steps) {
      tr.stop_reason = StopReason::StepLimit;
      return res;
    }
    // The tile ahead: incident to cur but not flanking the current edge.
    const auto flank = sites_sharing_edge(prev, cur);
    std::optional<SiteCoord> ahead;
    std::array<Corner, 2> cand{};
    int n_cand = 0;
    for (const Corner nb : detail::corner_neighbors(cur)) {
      if (nb == prev) continue;
      cand[n_cand++] = nb;
      for (const SiteCoord s : sites_sharing_edge(cur, nb))
        if (!(s == flank[0]) && !(s == flank[1])) ahead = s;
    }
    if (!ahead || n_cand != 2) {
      tr.stop_reason = StopReason::Trapped;
      return res;
    }
    const Color ac = color_of(*ahead);
    const Point tc = site_center(*ahead, dd.scale);
    const Point cp = corner_pos(cur, dd.scale);
    Corner next{};
    bool chosen = false;
    for (int k = 0; k < 2; ++k) {
      const double side = cross(corner_pos(cand[k], dd.scale) - cp, tc - cp);
      // Blue ahead joins the left side: keep it on the left; yellow ahead
      // joins the right side.
      if ((ac == Color::Blue && side > 0) || (ac == Color::Yellow && side < 0)) {
        next = cand[k];
        chosen = true;
        break;
      }
    }
    if (!chosen) {
      tr.stop_reason = StopReason::Trapped;
      return res;
    }
    // Stop before leaving the domain entirely.
    const auto nfl = sites_sharing_edge(cur, next);
    if (!principal_site(nfl[0]) && !principal_site(nfl[1])) {
      tr.stop_reason = dist(corner_pos(cur, dd.scale), c_pos) <=
                               stop.target_nbhd.value_or(2 * dd.scale.epsilon)
                           ? StopReason::ReachedTargetNbhd
                           : StopReason::Trapped;
      return res;
    }
    if (!visited.insert(undirected_edge_key(cur, next)).second) {
      tr.stop_reason = StopReason::Trapped;
      return res;
    }
    tr.edges.push_back({cur, next});
    prev = cur;
    cur = next;
    tr.tip = cur;
  }
}

// Cardy estimate on the slit domain left behind by an exploration trace; the
// tip becomes the new mark a and fresh colorings are drawn.
inline CrossingEstimate slit_cardy_after_exploration(
    const ContinuousDomain& base, const DiscreteDomain& dd,
    const CurveTrace& trace, std::uint64_t n, std::uint64_t seed) {
  if (trace.edges.empty()) return estimate_cardy(dd, n, seed);
  const DiscreteDomain slit = sup_assemble(base, trace, dd.scale);
  return estimate_cardy(slit, n, seed);
}

}  // namespace cardylab

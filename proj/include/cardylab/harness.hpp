#pragma once

#include <chrono>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cardylab/conformal.hpp"
#include "cardylab/domain.hpp"
#include "cardylab/domain_approx.hpp"
#include "cardylab/percolation.hpp"
#include "cardylab/report.hpp"

namespace cardylab {

struct ExperimentConfig {
  std::string kind;  // sweep, audit, decay, rings, explore, equicont
  std::string domain_path;
  std::vector<double> scales;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string format = "csv";
  // experiment-specific knobs
  int runs = 100;            // explore: trace count
  int perturbations = 20;    // equicont: per delta
  int levels = 4;            // rings: dyadic levels
  double oracle_tol = 1e-4;  // conformal map residual bound

  void validate() const {
    if (scales.empty()) throw error("CONFIG", "at least one scale required");
    for (std::size_t i = 0; i + 1 < scales.size(); ++i)
      if (!(scales[i] > scales[i + 1]))
        throw error("CONFIG", "scales must be strictly decreasing");
    for (const double e : scales)
      if (!(e > 0)) throw error("CONFIG", "scales must be positive");
    if (samples < 100) throw error("CONFIG", "samples must be at least 100");
  }

  std::uint64_t hash() const {
    std::ostringstream ss;
    ss << kind << '|' << domain_path << '|';
    for (const double e : scales) ss << fmt12(e) << ',';
    ss << '|' << samples << '|' << seed << '|' << runs << '|' << perturbations
       << '|' << levels << '|' << fmt12(oracle_tol);
    return fnv1a(ss.str());
  }
};

inline ContinuousDomain load_domain(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw error("IO", "cannot read " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw error("DOMAIN_PARSE", e.what());
  }
  return domain_from_json(j);
}

namespace detail {

inline Report base_report(const ExperimentConfig& cfg) {
  Report rep;
  rep.config_hash = cfg.hash();
  rep.seed = cfg.seed;
  rep.meta["kind"] = cfg.kind;
  rep.meta["domain"] = cfg.domain_path;
  rep.meta["samples"] = cfg.samples;
  return rep;
}

inline nlohmann::json audit_json(const ApproxReport& ar) {
  nlohmann::json j;
  for (const auto& [name, cr] : ar.conditions) {
    j["conditions"][name]["pass"] = cr.pass;
    if (!cr.pass) j["conditions"][name]["witness"] = cr.witness;
  }
  for (const auto& [arc, e] : ar.eta) j["eta"][arc] = fmt12(e);
  return j;
}

// Per-scale derived seed so scales can run in any order or in parallel.
inline std::uint64_t scale_seed(std::uint64_t seed, std::size_t scale_index) {
  return seed ^ (0x9e3779b97f4a7c15ull * (scale_index + 1));
}

}  // namespace detail

// --- cardy_sweep -----------------------------------------------------------

inline Report run_sweep(const ExperimentConfig& cfg,
                        const ContinuousDomain& dom) {
  if (!dom.d) throw error("MISSING_PROBE", "sweep needs a probe mark d");
  Report rep = detail::base_report(cfg);
  rep.columns = {"eps",   "log_eps", "estimate", "est_lo", "est_hi",
                 "oracle", "abs_err", "ci_lo",   "ci_hi"};

  const TriangleMap tm = build_triangle_map(dom, cfg.oracle_tol);
  const CardyValue c0 = cardy_value(tm, dom.d->p);
  rep.meta["oracle"]["value"] = fmt12(c0.value);
  rep.meta["oracle"]["accuracy"] = fmt12(c0.accuracy);

  for (std::size_t i = 0; i < cfg.scales.size(); ++i) {
    const double eps = cfg.scales[i];
    const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{eps});
    const ApproxReport audit = check_interior_conditions(dd, dom);
    const CrossingEstimate est =
        estimate_cardy(dd, cfg.samples, detail::scale_seed(cfg.seed, i));
    const double err = std::abs(est.value - c0.value);
    const double hw = est.half_width;
    rep.add_row({eps, std::log(eps), est.value, est.value - hw, est.value + hw,
                 c0.value, err, std::max(0.0, err - hw), err + hw});
    rep.meta["audits"][fmt12(eps)] = detail::audit_json(audit);
  }
  return rep;
}

// --- approx_audit ----------------------------------------------------------

inline Report run_audit(const ExperimentConfig& cfg,
                        const ContinuousDomain& dom) {
  Report rep = detail::base_report(cfg);
  rep.columns = {"eps", "pass", "eta_A", "eta_B", "eta_C"};
  std::vector<DiscreteDomain> seq;
  for (const double eps : cfg.scales) {
    nlohmann::json ja;
    double pass = 0, ea = 0, eb = 0, ec = 0;
    try {
      DiscreteDomain dd = canonical_approximation(dom, LatticeScale{eps});
      const ApproxReport audit = check_interior_conditions(dd, dom);
      ja = detail::audit_json(audit);
      pass = audit.all_pass() ? 1.0 : 0.0;
      ea = audit.eta.count("A") ? audit.eta.at("A") : 0.0;
      eb = audit.eta.count("B") ? audit.eta.at("B") : 0.0;
      ec = audit.eta.count("C") ? audit.eta.at("C") : 0.0;
      seq.push_back(std::move(dd));
    } catch (const Error& e) {
      ja["error"]["code"] = e.code();
      ja["error"]["witness"] = e.what();
      pass = 0;
    }
    rep.add_row({eps, pass, ea, eb, ec});
    rep.meta["audits"][fmt12(eps)] = ja;
  }
  if (seq.size() >= 3) {
    std::vector<const DiscreteDomain*> ptrs;
    for (const auto& dd : seq) ptrs.push_back(&dd);
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& v : dom.outer.vertices) {
      xlo = std::min(xlo, v.x); xhi = std::max(xhi, v.x);
      ylo = std::min(ylo, v.y); yhi = std::max(yhi, v.y);
    }
    std::vector<Point> probes;
    const int g = 14;
    for (int i = 0; i <= g; ++i)
      for (int j = 0; j <= g; ++j)
        probes.push_back(Point{xlo + (xhi - xlo) * i / g,
                               ylo + (yhi - ylo) * j / g});
    const ApproxReport kc = check_kernel_convergence(ptrs, dom, probes);
    rep.meta["kernel_convergence"] = detail::audit_json(kc);
    rep.meta["kernel_convergence"]["pass"] = kc.all_pass();
  }
  const MinkowskiEstimate mk =
      minkowski_dimension(dom.boundary_polylines(),
                          {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256});
  rep.meta["minkowski_dimension"] = fmt12(mk.fitted_dimension);
  return rep;
}

// --- boundary_decay --------------------------------------------------------

// Probes along two inward rays: from z0 toward the nearest point of arc C
// (where u must decay to 0) and from z0 toward the mark c (where u tends
// to 1).
inline Report run_decay(const ExperimentConfig& cfg,
                        const ContinuousDomain& dom) {
  Report rep = detail::base_report(cfg);
  rep.columns = {"toward_c", "t", "x", "y", "estimate", "ci_lo", "ci_hi"};
  const double eps = cfg.scales.back();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{eps});

  Point pc{};  // nearest point of arc C to z0
  double best = std::numeric_limits<double>::infinity();
  for (const auto& piece : dom.arc_pieces(ArcId::C))
    for (double t = 0; t <= 1.0; t += 1.0 / 64) {
      const Point q = piece.from + t * (piece.to - piece.from);
      if (dist(q, dom.z0) < best) {
        best = dist(q, dom.z0);
        pc = q;
      }
    }
  const std::vector<double> fracs{0.5, 0.75, 0.9, 0.95, 0.98};
  const auto ray = [&](Point target, double toward_c) {
    std::vector<SiteCoord> probes;
    std::vector<double> ts;
    for (const double t : fracs) {
      const SiteCoord s =
          site_containing(dom.z0 + t * (target - dom.z0), dd.scale);
      const int id = dd.site_id(s);
      if (id >= 0 && dd.in_principal(id)) {
        probes.push_back(s);
        ts.push_back(t);
      }
    }
    const auto ests =
        boundary_decay_profile(dd, probes, cfg.samples, cfg.seed);
    for (std::size_t i = 0; i < ests.size(); ++i) {
      const Point p = site_center(probes[i], dd.scale);
      rep.add_row({toward_c, ts[i], p.x, p.y, ests[i].value,
                   ests[i].value - ests[i].half_width,
                   ests[i].value + ests[i].half_width});
    }
  };
  ray(pc, 0.0);
  ray(dom.c.p, 1.0);
  return rep;
}

// --- harris_rings ----------------------------------------------------------

inline Report run_rings(const ExperimentConfig& cfg,
                        const ContinuousDomain& dom) {
  Report rep = detail::base_report(cfg);
  rep.columns = {"level", "outer_half", "estimate", "ci_lo", "ci_hi"};
  const double eps = cfg.scales.back();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{eps});
  // Rings anchored at the arclength midpoint of arc A: circuits close
  // through the arc, which keeps the plateau visible at feasible sample
  // counts (interior rings of the same aspect are exponentially rare).
  const Polyline arc = continuum_arc_polyline(dom, ArcId::A);
  double total = 0;
  for (std::size_t i = 0; i + 1 < arc.vertices.size(); ++i)
    total += dist(arc.vertices[i], arc.vertices[i + 1]);
  Point center = arc.vertices.front();
  double acc = 0;
  for (std::size_t i = 0; i + 1 < arc.vertices.size(); ++i) {
    const double seg = dist(arc.vertices[i], arc.vertices[i + 1]);
    if (acc + seg >= 0.5 * total) {
      const double t = (0.5 * total - acc) / seg;
      center = arc.vertices[i] + t * (arc.vertices[i + 1] - arc.vertices[i]);
      break;
    }
    acc += seg;
  }
  const double half0 =
      0.45 * std::min(dist(center, dom.b.p), dist(center, dom.c.p));
  const AnnulusFamily fam = dyadic_annuli(center, half0, cfg.levels);
  for (int l = 0; l + 1 < cfg.levels; ++l) {
    // Stop at the first level whose annulus the lattice cannot resolve.
    if (half0 * std::pow(0.5, l + 1) < 4 * dd.scale.spacing()) break;
    const CrossingEstimate est = harris_ring_probability(
        dd, fam, l, Color::Blue, cfg.samples, detail::scale_seed(cfg.seed, l),
        ArcLabel::A);
    rep.add_row({static_cast<double>(l), half0 * std::pow(0.5, l), est.value,
                 est.value - est.half_width, est.value + est.half_width});
  }
  return rep;
}

// --- exploration -----------------------------------------------------------

// Run ids of one slit side (the C-labeled runs along the carved edges) plus
// two probe points on that side, for the monochromicity check.
inline CheckResult trace_well_organized(const DiscreteDomain& slit_dd,
                                        const CurveTrace& trace) {
  if (trace.edges.size() < 6) return {true, "trace too short to pinch"};
  std::unordered_set<std::uint64_t> carved;
  for (const auto& [c1, c2] : trace.edges)
    carved.insert(undirected_edge_key(c1, c2));
  // Both probes must sit on one contiguous labeled run of a slit side: the
  // connector region of the check is only defined along a single run.  Use
  // the longest C-labeled run of carved edges.
  const auto& cy = slit_dd.boundary[slit_dd.principal_cycle];
  const int n = static_cast<int>(cy.size());
  int best_start = -1, best_len = 0;
  for (int j = 0; j < n;) {
    if (cy[j].label != ArcLabel::C ||
        !carved.count(undirected_edge_key(cy[j].from, cy[j].to))) {
      ++j;
      continue;
    }
    const int run = cy[j].run;
    int len = 0, start = j;
    while (j < n && cy[j].run == run &&
           carved.count(undirected_edge_key(cy[j].from, cy[j].to))) {
      ++len;
      ++j;
    }
    if (len > best_len) {
      best_len = len;
      best_start = start;
    }
  }
  if (best_start < 0) return {true, "slit side carries no C run"};
  const auto mid = [&](int j) {
    return 0.5 * (corner_pos(cy[j].from, slit_dd.scale) +
                  corner_pos(cy[j].to, slit_dd.scale));
  };
  const double delta = 1.5 * slit_dd.scale.epsilon;
  // A heavily wiggling slit may leave no complement-avoiding connector for a
  // widely spaced probe pair; narrow the pair toward the run middle until a
  // connector exists.
  for (int w = best_len / 2; w >= 2; w /= 2) {
    const Point p = mid(best_start + best_len / 2 - w / 2);
    const Point pp = mid(best_start + best_len / 2 + w / 2);
    if (dist(p, pp) <= 2 * delta) break;
    try {
      return check_well_organized(slit_dd, {cy[best_start].run}, p, pp, delta);
    } catch (const Error& e) {
      if (std::string(e.code()) != "NO_CONNECTOR") throw;
    }
  }
  return {true, "no connector-admitting probe pair; skipped"};
}

inline Report run_explore(const ExperimentConfig& cfg,
                          const ContinuousDomain& dom) {
  Report rep = detail::base_report(cfg);
  rep.columns = {"run", "steps", "stop_reason", "well_organized"};
  const double eps = cfg.scales.back();
  const DiscreteDomain dd = canonical_approximation(dom, LatticeScale{eps});
  ExploreStop stop;
  stop.target_nbhd = 3 * eps;
  for (int r = 0; r < cfg.runs; ++r) {
    const ExploreResult res =
        explore(dd, detail::scale_seed(cfg.seed, static_cast<std::size_t>(r)),
                stop);
    double wo = 1.0;
    std::string witness;
    if (res.trace.edges.size() >= 6) {
      try {
        const DiscreteDomain slit_dd = sup_assemble(dom, res.trace, dd.scale);
        const CheckResult cr = trace_well_organized(slit_dd, res.trace);
        wo = cr.ok ? 1.0 : 0.0;
        witness = cr.witness;
      } catch (const Error& e) {
        wo = 0.0;
        witness = std::string(e.code()) + ": " + e.what();
      }
    }
    rep.add_row({static_cast<double>(r),
                 static_cast<double>(res.trace.edges.size()),
                 static_cast<double>(res.trace.stop_reason), wo});
    if (wo == 0.0) rep.meta["witnesses"][std::to_string(r)] = witness;
  }
  return rep;
}

// --- equicontinuity --------------------------------------------------------

inline Polyline perturb_slit(const Polyline& path, double delta,
                             std::uint64_t seed, std::uint64_t index) {
  Philox px(seed, index);
  std::vector<Point> vs = path.vertices;
  for (std::size_t i = 1; i < vs.size(); ++i) {  // attachment vertex fixed
    const double ang = 2 * 3.141592653589793 * px.uniform(2 * i);
    const double r = delta * px.uniform(2 * i + 1);
    vs[i] = vs[i] + Point{r * std::cos(ang), r * std::sin(ang)};
  }
  return Polyline(vs);
}

inline Report run_equicont(const ExperimentConfig& cfg,
                           const ContinuousDomain& dom) {
  if (dom.slits.empty())
    throw error("CONFIG", "equicont needs a slit domain");
  if (!dom.d) throw error("MISSING_PROBE", "equicont needs a probe mark d");
  Report rep = detail::base_report(cfg);
  rep.columns = {"delta", "max_diff_mc", "max_diff_oracle", "mc_half_width"};
  const double eps = cfg.scales.back();
  const auto discrete_value = [&](const ContinuousDomain& d, double& hw) {
    const DiscreteDomain dd = canonical_approximation(d, LatticeScale{eps});
    const CrossingEstimate est = estimate_cardy(dd, cfg.samples, cfg.seed);
    hw = est.half_width;
    return est.value;
  };
  double hw0 = 0;
  const double base_mc = discrete_value(dom, hw0);
  const double base_c0 =
      cardy_value(build_triangle_map(dom, cfg.oracle_tol), dom.d->p).value;
  const bool tip_marked =
      dist(dom.a.p, dom.slits[0].path.vertices.back()) <= dom.tol();
  for (const double delta : {eps, eps / 2, eps / 4}) {
    double max_mc = 0, max_or = 0, max_hw = hw0;
    for (int k = 0; k < cfg.perturbations; ++k) {
      ContinuousDomain pd = dom;
      pd.slits[0].path = perturb_slit(
          dom.slits[0].path, delta, cfg.seed + 777,
          static_cast<std::uint64_t>(k) * 8 + static_cast<std::uint64_t>(delta / eps * 4));
      if (tip_marked) pd.a.p = pd.slits[0].path.vertices.back();
      double hw = 0;
      max_mc = std::max(max_mc, std::abs(discrete_value(pd, hw) - base_mc));
      max_hw = std::max(max_hw, hw);
      const double c0 =
          cardy_value(build_triangle_map(pd, cfg.oracle_tol), pd.d->p).value;
      max_or = std::max(max_or, std::abs(c0 - base_c0));
    }
    rep.add_row({delta, max_mc, max_or, max_hw});
  }
  return rep;
}

// --- dispatcher ------------------------------------------------------------

inline Report run(const ExperimentConfig& cfg) {
  cfg.validate();
  const ContinuousDomain dom = load_domain(cfg.domain_path);
  Report rep;
  if (cfg.kind == "sweep")
    rep = run_sweep(cfg, dom);
  else if (cfg.kind == "audit")
    rep = run_audit(cfg, dom);
  else if (cfg.kind == "decay")
    rep = run_decay(cfg, dom);
  else if (cfg.kind == "rings")
    rep = run_rings(cfg, dom);
  else if (cfg.kind == "explore")
    rep = run_explore(cfg, dom);
  else if (cfg.kind == "equicont")
    rep = run_equicont(cfg, dom);
  else
    throw error("CONFIG", "unknown experiment kind " + cfg.kind);
  return rep;
}

}  // namespace cardylab

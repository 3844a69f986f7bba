#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_ellint.h>
#include <gsl/gsl_sf_gamma.h>

#include "cardylab/domain.hpp"
#include "cardylab/errors.hpp"
#include "cardylab/geometry.hpp"

namespace cardylab {

using Complex = std::complex<double>;

struct CardyValue {
  double value = 0;
  double accuracy = 0;
};

namespace detail {

inline void gsl_quiet() {
  static const auto once = gsl_set_error_handler_off();
  (void)once;
}

// Adaptive quadrature; the integrand may have integrable endpoint
// singularities (QAGS never samples the endpoints).
template <typename F>
double quad(F&& f, double lo, double hi) {
  gsl_quiet();
  using Fn = std::remove_reference_t<F>;
  gsl_function gf;
  gf.function = [](double x, void* p) -> double {
    return (*static_cast<const Fn*>(p))(x);
  };
  gf.params = const_cast<std::remove_const_t<Fn>*>(&f);
  static thread_local gsl_integration_workspace* ws =
      gsl_integration_workspace_alloc(8192);
  double result = 0, abserr = 0;
  const int status =
      gsl_integration_qags(&gf, lo, hi, 1e-12, 1e-10, 8192, ws, &result, &abserr);
  if (status != 0 && status != GSL_EROUND && status != GSL_EMAXITER)
    throw error("NO_CONVERGENCE", "quadrature failed");
  return result;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Closed-form rectangle oracle: crossing probability of an aspect-r rectangle
// (crossing joins the sides separated by length r) via the elliptic-modulus
// parametrization and the regularized incomplete beta I_eta(1/3, 1/3).
inline CardyValue cardy_rectangle(double aspect) {
  if (!(aspect > 0)) throw error("ORACLE_INPUT", "aspect must be positive");
  detail::gsl_quiet();
  const auto ratio = [](double k) {
    const double kp = std::sqrt(std::max(0.0, 1.0 - k * k));
    return gsl_sf_ellint_Kcomp(kp, GSL_PREC_DOUBLE) /
           gsl_sf_ellint_Kcomp(k, GSL_PREC_DOUBLE);
  };
  // ratio is decreasing in k; solve ratio(k) = 2/aspect.
  double lo = 1e-15, hi = 1.0 - 1e-15;
  const double target = 2.0 / aspect;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ratio(mid) > target ? lo : hi) = mid;
  }
  const double k = 0.5 * (lo + hi);
  const double eta = std::pow((1.0 - k) / (1.0 + k), 2);
  return {gsl_sf_beta_inc(1.0 / 3.0, 1.0 / 3.0, eta), 1e-8};
}

// ---------------------------------------------------------------------------
// Numerical uniformization Omega -> D by the geodesic zipper.  The boundary
// chain is sampled with endpoint clustering, nudged slightly into the
// interior so that two-sided slit pieces become distinct, and unzipped by
// Moebius + sqrt steps; a Joukowski-type terminal map closes the curve and a
// final Moebius sends z0 to the disk center.
class ConformalMap {
public:
  ConformalMap(const ContinuousDomain& dom, int n_chain) : dom_(&dom) {
    diam_ = dom.diameter();
    build_chain(n_chain);
    build_steps();
  }

  Complex to_half_plane(Complex z) const {
    Complex w = Complex(0, 1) * std::sqrt((z - p1_) / (z - p0_));
    for (const auto& st : steps_) {
      // Re-anchor at the current emanation point: after a slit's return side
      // (never zipped explicitly) the boundary walk resumes from the real
      // image of the slit base, not from the origin.
      w = w - st.t;
      w = w / (1.0 - st.c * w);
      Complex s = std::sqrt(w * w + st.h * st.h);
      if (s.imag() < 0) s = -s;
      // Renormalize by the half-plane automorphism fixing the zipper tip at
      // the origin and returning the tracked image of z0 to i: without this
      // the interior crowds onto an exponentially thin sliver along the real
      // axis and the representation runs out of mantissa.
      w = st.lam * s / (1.0 - st.mu * s);
    }
    const double r = 0.5 * x0_;
    const Complex v = w - r;
    return v + (r * r) / v;
  }

  Complex to_disk(Point z) const {
    const Complex w = to_half_plane(Complex(z.x, z.y));
    return (w - w0_) / (w - std::conj(w0_));
  }


  // Disk angle of a boundary prime end.  Chain samples carry exact prevertex
  // angles from the unzipping itself; queries matching a sample (all marks
  // are chain cuts) or lying on a slit side use those, since forward ray
  // probes lose the side of a slit to rounding in crowded regions.  Other
  // queries use Aitken extrapolation along an inward ray.
  double boundary_angle(Point p, std::optional<Side> side = std::nullopt) const {
    const CyclePos pos = dom_->locate(p, side);
    const double L = dom_->cycle_length();
    const double s = std::fmod(dom_->param(pos), L);
    std::size_t best = 0;
    double bd = 1e300;
    for (std::size_t j = 0; j < params_.size(); ++j) {
      double d = std::abs(params_[j] - s);
      d = std::min(d, L - d);
      if (d < bd) {
        bd = d;
        best = j;
      }
    }
    if (bd <= 1e-9 * L || dom_->cycle()[pos.piece].slit >= 0)
      return theta_chain_[best];
    const Point n = inward_direction(pos);
    const Point base = dom_->at(pos);
    std::array<double, 3> th{};
    const std::array<double, 3> dist{3e-4 * diam_, 3e-5 * diam_, 3e-6 * diam_};
    for (int i = 0; i < 3; ++i) {
      const Complex w = to_disk(base + dist[i] * n);
      th[i] = std::arg(w);
      if (i > 0) {  // unwrap toward the previous value
        while (th[i] - th[i - 1] > 3.141592653589793) th[i] -= 2 * 3.141592653589793;
        while (th[i] - th[i - 1] < -3.141592653589793) th[i] += 2 * 3.141592653589793;
      }
    }
    const double den = th[2] - 2 * th[1] + th[0];
    if (std::abs(den) < 1e-14) return th[2];
    const double ait = th[2] - (th[2] - th[1]) * (th[2] - th[1]) / den;
    // Guard against a wild extrapolation when the sequence is not geometric.
    if (std::abs(ait - th[2]) > 4 * std::abs(th[2] - th[1]) + 1e-12) return th[2];
    return ait;
  }

  const ContinuousDomain& domain() const { return *dom_; }
  double diameter() const { return diam_; }

private:
  struct Step {
    double t, c, h, lam, mu;
  };

  Point inward_direction(CyclePos pos) const {
    const auto& cy = dom_->cycle();
    const auto normal = [&](int i) {
      const Point d = cy[i].to - cy[i].from;
      const double l = norm(d);
      return Point{-d.y / l, d.x / l};
    };
    const auto direction = [&](int i) {
      const Point d = cy[i].to - cy[i].from;
      const double l = norm(d);
      return Point{d.x / l, d.y / l};
    };
    const int np = static_cast<int>(cy.size());
    if (pos.t > 1e-9 && pos.t < 1.0 - 1e-9) return normal(pos.piece);
    const int cur = pos.t <= 1e-9 ? pos.piece : (pos.piece + 1) % np;
    const int prev = (cur - 1 + np) % np;
    const Point sum = normal(prev) + normal(cur);
    if (norm(sum) > 0.1) return (1.0 / norm(sum)) * sum;
    // Slit tip: continue past the tip, into the surrounding interior.
    const Point d = direction(prev) - direction(cur);
    return (1.0 / norm(d)) * d;
  }

  void build_chain(int n_chain) {
    const ContinuousDomain& dom = *dom_;
    const double L = dom.cycle_length();
    const auto& cy = dom.cycle();
    std::set<double> cuts;
    for (const auto& pc : cy) cuts.insert(pc.cum);
    const auto mp = dom.mark_params();
    cuts.insert(std::fmod(mp[0], L));
    cuts.insert(std::fmod(mp[1], L));
    cuts.insert(std::fmod(mp[2], L));
    if (dom.d) cuts.insert(std::fmod(dom.param(dom.locate_mark(*dom.d)), L));
    // Mirror every cut that lands on a slit piece onto the opposite side of
    // that slit, so the two sides subdivide identically and every slit sample
    // has an exact twin on the return side.
    {
      const std::vector<double> base_cuts(cuts.begin(), cuts.end());
      for (const double s : base_cuts) {
        const CyclePos pos = dom.pos_at_param(s);
        const auto& pc = cy[pos.piece];
        if (pc.slit < 0 || !pc.side) continue;
        const Side other = *pc.side == Side::Left ? Side::Right : Side::Left;
        const CyclePos mp = dom.locate(dom.at(pos), other, pc.slit);
        cuts.insert(std::fmod(dom.param(mp), L));
      }
    }
    std::vector<double> cv(cuts.begin(), cuts.end());
    const double eta = 1e-7 * diam_;
    const double pi = 3.141592653589793;
    for (std::size_t i = 0; i < cv.size(); ++i) {
      const double s0 = cv[i];
      const double s1 = i + 1 < cv.size() ? cv[i + 1] : cv[0] + L;
      const double len = s1 - s0;
      if (len <= 1e-12 * L) continue;
      const int m = std::max(6, static_cast<int>(std::lround(n_chain * len / L)));
      for (int j = 0; j < m; ++j) {
        const double t = static_cast<double>(j) / m;
        const CyclePos pos = dom.pos_at_param(s0 + t * len);
        const Point n = inward_direction(pos);
        const Point q = dom.at(pos) + eta * n;
        chain_.push_back(Complex(q.x, q.y));
        params_.push_back(std::fmod(s0 + t * len, L));
      }
    }
    if (chain_.size() < 8) throw error("NO_CONVERGENCE", "boundary chain too short");
    p0_ = chain_[0];
    p1_ = chain_[1];
    // Pair each slit sample with the sample at the same geometric point on
    // the opposite side of its slit.  The later of the two in cycle order is
    // the return side; it is never zipped as data, its real image is seeded
    // from the other branch of the slit-closing at its partner's step.
    partner_.assign(chain_.size(), -1);
    std::vector<std::pair<double, int>> byp(chain_.size());
    for (std::size_t i = 0; i < params_.size(); ++i)
      byp[i] = {params_[i], static_cast<int>(i)};
    std::sort(byp.begin(), byp.end());
    const auto nearest = [&](double s) {
      s = std::fmod(s, L);
      auto it = std::lower_bound(byp.begin(), byp.end(),
                                 std::make_pair(s, -1));
      int cand = -1;
      double bd = 1e300;
      for (int off = -1; off <= 1; ++off) {
        auto jt = it + off;
        if (jt < byp.begin()) jt += byp.size();
        if (jt >= byp.end()) jt -= byp.size();
        double d = std::abs(jt->first - s);
        d = std::min(d, L - d);
        if (d < bd) {
          bd = d;
          cand = jt->second;
        }
      }
      return bd <= 1e-6 * L ? cand : -1;
    };
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const CyclePos pos = dom.pos_at_param(params_[i]);
      const auto& pc = cy[pos.piece];
      if (pc.slit < 0 || !pc.side) continue;
      const Side other = *pc.side == Side::Left ? Side::Right : Side::Left;
      const CyclePos mp = dom.locate(dom.at(pos), other, pc.slit);
      const int j = nearest(dom.param(mp));
      if (j < 0)
        throw error("NO_CONVERGENCE", "slit sample without a twin");
      if (j == static_cast<int>(i)) continue;  // the slit tip pairs with itself
      partner_[i] = j;
      partner_[j] = static_cast<int>(i);
    }
  }

  void build_steps() {
    const std::size_t n = chain_.size();
    const auto is_return = [&](std::size_t j) {
      return partner_[j] >= 0 && partner_[j] < static_cast<int>(j);
    };
    std::vector<Complex> img(n);
    for (std::size_t k = 2; k < n; ++k)
      img[k] = Complex(0, 1) * std::sqrt((chain_[k] - p1_) / (chain_[k] - p0_));
    const Complex z0c(dom_->z0.x, dom_->z0.y);
    Complex zc = Complex(0, 1) * std::sqrt((z0c - p1_) / (z0c - p0_));
    // Already-unzipped points ride along the real axis; track them in
    // homogeneous coordinates (xn/xd) since they may pass through, or linger
    // near, a Moebius pole.  Entry 0 is the base prime end p0 (starts at
    // infinity), entry 1 is p1 (starts at the origin).
    std::vector<double> xn(n, 0.0), xd(n, 1.0);
    std::vector<char> active(n, 0);
    xn[0] = 1.0;
    xd[0] = 0.0;
    active[0] = active[1] = 1;
    for (std::size_t k = 2; k < n; ++k) {
      // Return-side slit samples are never zipped as data: their real images
      // are seeded from the other branch of the closing at the partner step.
      if (is_return(k)) continue;
      // Emanation point of the next boundary arc: the current real image of
      // the cycle predecessor (0 except straight after a skipped return run).
      if (!active[k - 1] || xd[k - 1] == 0.0)
        throw error("NO_CONVERGENCE", "boundary walk lost its anchor");
      const double t = xn[k - 1] / xd[k - 1];
      if (!std::isfinite(t))
        throw error("NO_CONVERGENCE", "boundary walk lost its anchor");
      Complex a = img[k] - t;
#ifdef CARDYLAB_DEBUG
      if (a.imag() < 0 || std::abs(a) < 1e-9)
        std::fprintf(stderr, "[step %zu/%zu] a=(%.3e,%.3e) param=%.6f\n", k, n,
                     a.real(), a.imag(), params_[k]);
#endif
      const double qmin = 1e-14 * std::max(1.0, std::abs(a));
      if (a.imag() < qmin) a = Complex(a.real(), qmin);
      const double p = a.real(), q = a.imag();
      const double c = p / (p * p + q * q);
      const double h = (p * p + q * q) / q;
      // Raw slit-closing step on the tracked image of z0 fixes the
      // renormalization frame: lam * s / (1 - mu * s) sends it back to i
      // while fixing the zipper tip at the origin.
      Complex sz = (zc - t) / (1.0 - c * (zc - t));
      sz = std::sqrt(sz * sz + h * h);
      if (sz.imag() < 0) sz = -sz;
      const double nz = std::norm(sz);
      if (!(sz.imag() > 0) || !std::isfinite(nz) || nz == 0.0)
        throw error("NO_CONVERGENCE", "interior point left the half-plane");
      const double lam = sz.imag() / nz;
      const double mu = sz.real() / nz;
      zc = Complex(0.0, 1.0);
      steps_.push_back({t, c, h, lam, mu});
      const auto apply = [&](Complex w) {
        w = (w - t) / (1.0 - c * (w - t));
        Complex s = std::sqrt(w * w + h * h);
        if (s.imag() < 0) s = -s;
        return lam * s / (1.0 - mu * s);
      };
      for (std::size_t j = k + 1; j < n; ++j)
        if (!is_return(j)) img[j] = apply(img[j]);
      for (std::size_t j = 0; j < n; ++j) {
        if (!active[j]) continue;
        // Translation, then Moebius w / (1 - c w), in homogeneous form.
        double a_n = xn[j] - t * xd[j], a_d = xd[j] - c * (xn[j] - t * xd[j]);
        // Slit closing: the left copy of the unfolded slit, so the base
        // point x = 0 goes to -h, not +h; infinity (a_d = 0) is fixed.
        if (a_d != 0.0) {
          const double sg = a_n * a_d > 0 ? 1.0 : -1.0;
          a_n = sg * std::hypot(a_n, h * a_d);
          a_d = std::abs(a_d);
        }
        // Renormalizing Moebius lam w / (1 - mu w).
        const double b_n = lam * a_n, b_d = a_d - mu * a_n;
        const double m = std::max(std::abs(b_n), std::abs(b_d));
        const double inv = m > 0 ? 1.0 / m : 1.0;
        xn[j] = b_n * inv;
        xd[j] = b_d * inv;
        if (!std::isfinite(xn[j]) || !std::isfinite(xd[j]))
          throw error("NO_CONVERGENCE", "boundary orbit overflowed");
      }
      // The closing splits the emanation point into two prime ends; the
      // tracked orbit keeps the -h branch, the +h branch is the return-side
      // twin of the predecessor (if it has one and is not yet seeded).
      const int tw = partner_[k - 1];
      if (tw >= 0 && !active[tw]) {
        const double b_n = lam * h, b_d = 1.0 - mu * h;
        const double m = std::max(std::abs(b_n), std::abs(b_d));
        const double inv = m > 0 ? 1.0 / m : 1.0;
        xn[tw] = b_n * inv;
        xd[tw] = b_d * inv;
        active[tw] = 1;
      }
      xn[k] = 0.0;  // the step sends its own target to the origin
      xd[k] = 1.0;
      active[k] = 1;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (!active[j])
        throw error("NO_CONVERGENCE", "unseeded boundary sample");
    if (xd[0] == 0.0 || !std::isfinite(xn[0] / xd[0]) || xn[0] / xd[0] == 0)
      throw error("NO_CONVERGENCE", "terminal point of the boundary walk lost");
    x0_ = xn[0] / xd[0];
    const Complex w0 = to_half_plane(Complex(dom_->z0.x, dom_->z0.y));
    if (!(w0.imag() > 0) || !std::isfinite(w0.real()))
      throw error("NO_CONVERGENCE", "interior point left the half-plane");
    w0_ = w0;
    // Prevertex angles of every chain sample, carried through the terminal
    // Joukowski map and the disk Moebius in homogeneous form so prime ends
    // lingering near the point at infinity keep their angles.
    const double r = 0.5 * x0_;
    theta_chain_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double v_n = xn[j] - r * xd[j];
      const double jk_n = v_n * v_n + r * r * xd[j] * xd[j];
      const double jk_d = xd[j] * v_n;
      const Complex num = jk_n - w0_ * jk_d;
      const Complex den = jk_n - std::conj(w0_) * jk_d;
      if (std::abs(num) == 0.0 || std::abs(den) == 0.0) {
        theta_chain_[j] = 0.0;  // the point at infinity maps to 1
        continue;
      }
      theta_chain_[j] = std::arg(num / den);
    }
  }

  const ContinuousDomain* dom_;
  double diam_ = 1;
  std::vector<Complex> chain_;
  std::vector<double> params_;
  std::vector<int> partner_;
  std::vector<double> theta_chain_;
  Complex p0_, p1_;
  std::vector<Step> steps_;
  double x0_ = 0;
  Complex w0_;
};

// ---------------------------------------------------------------------------
// Schwarz-Christoffel disk -> equilateral triangle with prevertices at the
// mark angles (all turning exponents -2/3).

namespace detail {

struct ScDensity {
  double ta, tb, tc;
  double operator()(double th) const {
    const auto f = [&](double t0) {
      return std::pow(std::abs(2.0 * std::sin(0.5 * (th - t0))), -2.0 / 3.0);
    };
    return f(ta) * f(tb) * f(tc);
  }
};

}  // namespace detail

class TriangleMap {
public:
  ContinuousDomain dom;
  double theta_a = 0, theta_b = 0, theta_c = 0;
  std::optional<double> theta_d;
  double accuracy = 0;
  std::shared_ptr<ConformalMap> disk_map;

  Complex to_disk(Point z) const { return disk_map->to_disk(z); }

  // F(z): the conformal map onto the triangle with vertices
  // a -> exp(2*pi*i/3), b -> exp(-2*pi*i/3), c -> 1.
  Complex operator()(Point z) const {
    const Complex w = to_disk(z);
    return lambda_ * sc_hat(w) + mu_;
  }

  // Affine coordinate along the image of arc A (0 at b, 1 at c) of a
  // boundary angle.
  double side_coordinate(double theta) const {
    const detail::ScDensity f{theta_a, theta_b, theta_c};
    double tc = theta_c, td = theta;
    const double two_pi = 2 * 3.141592653589793;
    while (tc <= theta_b) tc += two_pi;
    while (td < theta_b) td += two_pi;
    if (td > tc) td -= two_pi;
    if (td < theta_b || td > tc)
      throw error("PROBE_OFF_ARC", "angle not on arc A");
    const double num = td > theta_b ? detail::quad(f, theta_b, td) : 0.0;
    const double den = detail::quad(f, theta_b, tc);
    return std::clamp(num / den, 0.0, 1.0);
  }

  // Raw SC integral from the disk center along a straight ray.
  Complex sc_hat(Complex w) const {
    const double r = std::abs(w);
    if (r == 0.0) return Complex(0.0, 0.0);
    const Complex e = w / r;
    const auto fre = [&](double t) { return radial_dens(t, e).real(); };
    const auto fim = [&](double t) { return radial_dens(t, e).imag(); };
    return Complex(detail::quad(fre, 0.0, r), detail::quad(fim, 0.0, r));
  }

  void normalize() {
    // Boundary values of the raw integral at b and c fix the affine frame.
    const Complex fb = sc_boundary(theta_b), fc = sc_boundary(theta_c);
    const Complex vb = std::polar(1.0, -2 * 3.141592653589793 / 3.0);
    const Complex vc = 1.0;
    lambda_ = (vc - vb) / (fc - fb);
    mu_ = vc - lambda_ * fc;
    const Complex fa = sc_boundary(theta_a);
    const Complex va = std::polar(1.0, 2 * 3.141592653589793 / 3.0);
    accuracy = std::max(accuracy, std::abs(lambda_ * fa + mu_ - va));
  }

  // SC integral up to a boundary prevertex (radial path; endpoint singular).
  Complex sc_boundary(double theta) const {
    const Complex e = std::polar(1.0, theta);
    const auto fre = [&](double t) { return radial_dens(t, e).real(); };
    const auto fim = [&](double t) { return radial_dens(t, e).imag(); };
    return Complex(detail::quad(fre, 0.0, 1.0), detail::quad(fim, 0.0, 1.0));
  }

private:
  Complex radial_dens(double t, Complex e) const {
    const Complex v = t * e;
    const auto fac = [&](double t0) {
      return std::pow(1.0 - v * std::polar(1.0, -t0), -2.0 / 3.0);
    };
    return e * fac(theta_a) * fac(theta_b) * fac(theta_c);
  }

  Complex lambda_{1.0}, mu_{0.0};
};

inline TriangleMap build_triangle_map(const ContinuousDomain& dom,
                                      double tol = 1e-5, int n_chain = 2048) {
  TriangleMap tm;
  tm.dom = dom;
  tm.disk_map = std::make_shared<ConformalMap>(tm.dom, n_chain);
  tm.theta_a = tm.disk_map->boundary_angle(dom.a.p, dom.a.side);
  tm.theta_b = tm.disk_map->boundary_angle(dom.b.p, dom.b.side);
  tm.theta_c = tm.disk_map->boundary_angle(dom.c.p, dom.c.side);
  if (dom.d) tm.theta_d = tm.disk_map->boundary_angle(dom.d->p, dom.d->side);
  // The marks must appear in counterclockwise order b, c, a from theta_b.
  const double two_pi = 2 * 3.141592653589793;
  double tc = tm.theta_c, ta = tm.theta_a;
  while (tc <= tm.theta_b) tc += two_pi;
  while (ta <= tm.theta_b) ta += two_pi;
  if (!(tc < ta))
    throw error("NO_CONVERGENCE", "mark images out of cyclic order");
  // Resolution estimate: compare the side coordinate of the midpoint of the
  // b-c arc against a half-resolution map.
  ConformalMap coarse(tm.dom, n_chain / 2);
  TriangleMap half;
  half.dom = dom;
  half.theta_a = coarse.boundary_angle(dom.a.p, dom.a.side);
  half.theta_b = coarse.boundary_angle(dom.b.p, dom.b.side);
  half.theta_c = coarse.boundary_angle(dom.c.p, dom.c.side);
  const double mid_f = tm.side_coordinate(0.5 * (tm.theta_b + tc));
  double hc = half.theta_c;
  while (hc <= half.theta_b) hc += two_pi;
  const double mid_h = half.side_coordinate(0.5 * (half.theta_b + hc));
  tm.accuracy = std::abs(mid_f - mid_h);
  tm.normalize();
  if (!(tm.accuracy <= tol))
    throw error("NO_CONVERGENCE", "map residual above tolerance");
  return tm;
}

inline CardyValue cardy_value(const TriangleMap& tm, Point d) {
  if (tm.dom.arc_distance(d, ArcId::A) > kGeomTol * tm.dom.diameter() +
                                             1e-12)
    throw error("PROBE_OFF_ARC", "probe not on arc A");
  double td;
  if (tm.theta_d && tm.dom.d && dist(tm.dom.d->p, d) <= kGeomTol * tm.dom.diameter())
    td = *tm.theta_d;
  else
    td = tm.disk_map->boundary_angle(d);
  return {tm.side_coordinate(td), tm.accuracy};
}

// ---------------------------------------------------------------------------
// Independent back-end: harmonic measures by a finite-difference Laplace
// solve, post-processed through the same SC side integral.

namespace detail {

// Harmonic measure at z0 of the boundary portion with cycle parameter in
// [p_lo, p_hi] (mod L), on an N x N grid with red-black SOR.
inline double harmonic_measure_grid(const ContinuousDomain& dom, double p_lo,
                                    double p_hi, int N) {
  if (!dom.slits.empty())
    throw error("BVP_UNSUPPORTED", "grid backend requires slit-free domains");
  const double L = dom.cycle_length();
  const auto in_arc = [&](double s) {
    s = std::fmod(s - p_lo, L);
    if (s < 0) s += L;
    double span = std::fmod(p_hi - p_lo, L);
    if (span <= 0) span += L;
    return s <= span;
  };
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& v : dom.outer.vertices) {
    xlo = std::min(xlo, v.x);
    xhi = std::max(xhi, v.x);
    ylo = std::min(ylo, v.y);
    yhi = std::max(yhi, v.y);
  }
  const double hx = (xhi - xlo) / N, hy = (yhi - ylo) / N;
  const double h = std::max(hx, hy);
  const int nx = static_cast<int>(std::ceil((xhi - xlo) / h)) + 1;
  const int ny = static_cast<int>(std::ceil((yhi - ylo) / h)) + 1;
  const auto at = [&](int i, int j) { return j * nx + i; };
  std::vector<std::uint8_t> in(static_cast<std::size_t>(nx) * ny, 0);
  std::vector<double> u(static_cast<std::size_t>(nx) * ny, 0.0);
  std::vector<double> bval(static_cast<std::size_t>(nx) * ny, 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Point p{xlo + i * h, ylo + j * h};
      if (point_in_polygon(p, dom.outer) == PointClass::Inside)
        in[at(i, j)] = 1;
      else {
        const CyclePos pos = dom.locate(p);
        bval[at(i, j)] = in_arc(dom.param(pos)) ? 1.0 : 0.0;
      }
    }
  const double pi = 3.141592653589793;
  const double omega = 2.0 / (1.0 + std::sin(pi / std::max(nx, ny)));
  const int iters = 4 * std::max(nx, ny);
  for (int it = 0; it < iters; ++it) {
    for (int parity = 0; parity < 2; ++parity)
      for (int j = 1; j + 1 < ny; ++j)
        for (int i = 1 + ((j + parity) & 1); i + 1 < nx; i += 2) {
          if (!in[at(i, j)]) continue;
          const auto val = [&](int ii, int jj) {
            return in[at(ii, jj)] ? u[at(ii, jj)] : bval[at(ii, jj)];
          };
          const double avg = 0.25 * (val(i - 1, j) + val(i + 1, j) +
                                     val(i, j - 1) + val(i, j + 1));
          u[at(i, j)] += omega * (avg - u[at(i, j)]);
        }
  }
  // Bilinear interpolation at z0.
  const double fx = (dom.z0.x - xlo) / h, fy = (dom.z0.y - ylo) / h;
  const int i0 = std::clamp(static_cast<int>(std::floor(fx)), 0, nx - 2);
  const int j0 = std::clamp(static_cast<int>(std::floor(fy)), 0, ny - 2);
  const double tx = fx - i0, ty = fy - j0;
  const auto val = [&](int ii, int jj) {
    return in[at(ii, jj)] ? u[at(ii, jj)] : bval[at(ii, jj)];
  };
  return (1 - tx) * (1 - ty) * val(i0, j0) + tx * (1 - ty) * val(i0 + 1, j0) +
         (1 - tx) * ty * val(i0, j0 + 1) + tx * ty * val(i0 + 1, j0 + 1);
}

}  // namespace detail

inline CardyValue cardy_value_bvp(const ContinuousDomain& dom, int grid = 384) {
  if (!dom.d) throw error("MISSING_PROBE", "domain has no probe d");
  const auto mp = dom.mark_params();
  const double L = dom.cycle_length();
  double pd = dom.param(dom.locate_mark(*dom.d));
  while (pd < mp[1]) pd += L;
  const double w_bd = detail::harmonic_measure_grid(dom, mp[1], pd, grid);
  const double w_bc = detail::harmonic_measure_grid(dom, mp[1], mp[2], grid);
  const double w_ca = detail::harmonic_measure_grid(dom, mp[2], mp[0] + L, grid);
  const double two_pi = 2 * 3.141592653589793;
  TriangleMap tm;
  tm.theta_b = 0;
  tm.theta_d = two_pi * w_bd;
  tm.theta_c = two_pi * w_bc;
  tm.theta_a = two_pi * (w_bc + w_ca);
  return {tm.side_coordinate(*tm.theta_d), 3e-3};
}

// ---------------------------------------------------------------------------
// Continuum equicontinuity sweep over perturbed slits.

struct EquicontRow {
  double frechet = 0;
  double value = 0;
  double diff = 0;
};

inline std::vector<EquicontRow> equicontinuity_sweep(
    const ContinuousDomain& base, const std::vector<Polyline>& perturbed,
    double tol = 1e-4) {
  if (base.slits.empty())
    throw error("ORACLE_INPUT", "equicontinuity sweep needs a slit domain");
  if (!base.d) throw error("MISSING_PROBE", "domain has no probe d");
  const TriangleMap tm0 = build_triangle_map(base, tol);
  const double c0 = cardy_value(tm0, base.d->p).value;
  std::vector<EquicontRow> rows;
  for (const auto& g : perturbed) {
    ContinuousDomain dom = base;
    const Point old_tip = dom.slits[0].path.vertices.back();
    dom.slits[0].path = g;
    if (dist(dom.a.p, old_tip) <= kGeomTol * dom.diameter())
      dom.a.p = g.vertices.back();  // mark rides the slit tip
    const TriangleMap tm = build_triangle_map(dom, tol);
    EquicontRow row;
    row.frechet = frechet_distance(base.slits[0].path, g);
    row.value = cardy_value(tm, dom.d->p).value;
    row.diff = std::abs(row.value - c0);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cardylab

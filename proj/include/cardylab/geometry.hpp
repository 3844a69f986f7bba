#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cardylab/errors.hpp"

namespace cardylab {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double dist(Point a, Point b) { return norm(a - b); }
inline bool finite(Point a) { return std::isfinite(a.x) && std::isfinite(a.y); }

// Relative tolerance for on-boundary classification: tau_geom per diameter.
constexpr double kGeomTol = 1e-9;

enum class PointClass { Inside, Outside, OnBoundary };

struct Polyline {
  std::vector<Point> vertices;

  Polyline() = default;
  explicit Polyline(std::vector<Point> v) : vertices(std::move(v)) {
    if (vertices.size() < 2)
      throw error("GEOM_POLYLINE", "polyline needs at least 2 vertices");
    for (const auto& p : vertices)
      if (!finite(p)) throw error("GEOM_POLYLINE", "non-finite vertex");
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
      if (dist(vertices[i], vertices[i + 1]) == 0.0)
        throw error("GEOM_POLYLINE", "repeated consecutive vertex");
  }

  double length() const {
    double s = 0;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
      s += dist(vertices[i], vertices[i + 1]);
    return s;
  }
};

inline double dist_point_segment(Point p, Point a, Point b) {
  const Point d = b - a;
  const double l2 = dot(d, d);
  if (l2 == 0.0) return dist(p, a);
  const double t = std::clamp(dot(p - a, d) / l2, 0.0, 1.0);
  return dist(p, a + t * d);
}

inline double distance_point_to_polyline(Point p, const Polyline& c) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i)
    best = std::min(best, dist_point_segment(p, c.vertices[i], c.vertices[i + 1]));
  return best;
}

// Proper or touching intersection of segments [a,b] and [c,d].
inline bool segments_intersect(Point a, Point b, Point c, Point d) {
  const auto orient = [](Point p, Point q, Point r) {
    const double v = cross(q - p, r - p);
    const double scale = std::max({norm(q - p), norm(r - p), 1e-300});
    if (std::abs(v) <= 1e-14 * scale * scale) return 0;
    return v > 0 ? 1 : -1;
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  const auto on = [&](Point p, Point q, Point r) {
    return orient(p, q, r) == 0 && std::min(p.x, q.x) - 1e-14 <= r.x &&
           r.x <= std::max(p.x, q.x) + 1e-14 &&
           std::min(p.y, q.y) - 1e-14 <= r.y && r.y <= std::max(p.y, q.y) + 1e-14;
  };
  return on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b);
}

struct Polygon {
  std::vector<Point> vertices;  // counterclockwise, implicitly closed

  Polygon() = default;
  explicit Polygon(std::vector<Point> v) : vertices(std::move(v)) {
    if (vertices.size() < 3)
      throw error("GEOM_POLYGON", "polygon needs at least 3 vertices");
    for (const auto& p : vertices)
      if (!finite(p)) throw error("GEOM_POLYGON", "non-finite vertex");
    if (signed_area() == 0.0) throw error("GEOM_POLYGON", "degenerate polygon");
    if (signed_area() < 0.0)
      std::reverse(vertices.begin(), vertices.end());
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
        if (segments_intersect(vertices[i], vertices[(i + 1) % n], vertices[j],
                               vertices[(j + 1) % n]))
          throw error("GEOM_POLYGON", "self-intersecting polygon");
      }
    }
  }

  double signed_area() const {
    double s = 0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i)
      s += cross(vertices[i], vertices[(i + 1) % n]);
    return 0.5 * s;
  }

  double diameter() const {
    double d = 0;
    for (std::size_t i = 0; i < vertices.size(); ++i)
      for (std::size_t j = i + 1; j < vertices.size(); ++j)
        d = std::max(d, dist(vertices[i], vertices[j]));
    return d;
  }

  Polyline boundary_polyline() const {
    std::vector<Point> v = vertices;
    v.push_back(vertices.front());
    return Polyline(std::move(v));
  }
};

inline PointClass point_in_polygon(Point p, const Polygon& poly,
                                   double tol = -1.0) {
  if (tol < 0.0) tol = kGeomTol * poly.diameter();
  const std::size_t n = poly.vertices.size();
  for (std::size_t i = 0; i < n; ++i)
    if (dist_point_segment(p, poly.vertices[i], poly.vertices[(i + 1) % n]) <= tol)
      return PointClass::OnBoundary;
  // Crossing number with a horizontal ray.
  bool inside = false;
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly.vertices[i], b = poly.vertices[(i + 1) % n];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xi = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
      if (p.x < xi) inside = !inside;
    }
  }
  return inside ? PointClass::Inside : PointClass::Outside;
}

// Uniform densification: consecutive samples at most `step` apart.
inline std::vector<Point> densify(const Polyline& c, double step) {
  std::vector<Point> out;
  out.push_back(c.vertices.front());
  for (std::size_t i = 0; i + 1 < c.vertices.size(); ++i) {
    const Point a = c.vertices[i], b = c.vertices[i + 1];
    const double len = dist(a, b);
    const int k = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int j = 1; j <= k; ++j)
      out.push_back(a + (static_cast<double>(j) / k) * (b - a));
  }
  return out;
}

// Discrete Frechet distance between point sequences (Eiter-Mannila).
inline double discrete_frechet(const std::vector<Point>& a,
                               const std::vector<Point>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t j = 0; j < m; ++j)
    prev[j] = std::max(j == 0 ? 0.0 : prev[j - 1], dist(a[0], b[j]));
  for (std::size_t i = 1; i < n; ++i) {
    cur[0] = std::max(prev[0], dist(a[i], b[0]));
    for (std::size_t j = 1; j < m; ++j)
      cur[j] = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}),
                        dist(a[i], b[j]));
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

// Sup distance between curves up to reparametrization, realized as the
// discrete Frechet distance after densification at `step`.  A hook for a
// caller-supplied portion weighting is deliberately left out of the default
// path; see frechet_distance_weighted.
inline double frechet_distance(const Polyline& g1, const Polyline& g2,
                               double step = -1.0) {
  if (step <= 0.0) {
    const double scale = std::max(g1.length(), g2.length());
    step = std::max(scale / 512.0, 1e-12);
  }
  return discrete_frechet(densify(g1, step), densify(g2, step));
}

// Weighted variant hook: `weight(p)` rescales deviations near p.
template <typename WeightFn>
double frechet_distance_weighted(const Polyline& g1, const Polyline& g2,
                                 double step, WeightFn&& weight) {
  const auto a = densify(g1, step), b = densify(g2, step);
  const std::size_t n = a.size(), m = b.size();
  std::vector<double> prev(m), cur(m);
  const auto wdist = [&](Point p, Point q) {
    return dist(p, q) * 0.5 * (weight(p) + weight(q));
  };
  for (std::size_t j = 0; j < m; ++j)
    prev[j] = std::max(j == 0 ? 0.0 : prev[j - 1], wdist(a[0], b[j]));
  for (std::size_t i = 1; i < n; ++i) {
    cur[0] = std::max(prev[0], wdist(a[i], b[0]));
    for (std::size_t j = 1; j < m; ++j)
      cur[j] = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}),
                        wdist(a[i], b[j]));
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

inline double hausdorff_distance(const Polyline& A, const Polyline& B,
                                 double step = -1.0) {
  if (step <= 0.0) {
    const double scale = std::max(A.length(), B.length());
    step = std::max(scale / 512.0, 1e-12);
  }
  const auto directed = [&](const Polyline& from, const Polyline& to) {
    double worst = 0;
    for (const Point& p : densify(from, step))
      worst = std::max(worst, distance_point_to_polyline(p, to));
    return worst;
  };
  return std::max(directed(A, B), directed(B, A));
}

}  // namespace cardylab

#pragma once
// Closed-polyline geometry: orientation, simplicity, membership and distance
// queries used by the conformal-chart fitter and the tract builder.

#include <algorithm>
#include <cmath>
#include <vector>

#include "forge/types.hpp"

namespace forge {

using Polyline = std::vector<cplx>;

inline double signed_area(const Polyline& p) {
  double a = 0.0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx& u = p[i];
    const cplx& v = p[(i + 1) % n];
    a += u.real() * v.imag() - v.real() * u.imag();
  }
  return 0.5 * a;
}

inline bool is_ccw(const Polyline& p) { return signed_area(p) > 0.0; }

inline double cross(const cplx& o, const cplx& a, const cplx& b) {
  return (a.real() - o.real()) * (b.imag() - o.imag()) -
         (a.imag() - o.imag()) * (b.real() - o.real());
}

// Proper segment intersection test (shared endpoints excluded by the caller).
inline bool segments_intersect(const cplx& a, const cplx& b, const cplx& c,
                               const cplx& d) {
  double d1 = cross(c, d, a), d2 = cross(c, d, b);
  double d3 = cross(a, b, c), d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  return false;
}

// O(n^2) simplicity check; adjacent edges are allowed to share endpoints.
inline bool is_simple(const Polyline& p) {
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (segments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]))
        return false;
    }
  }
  return true;
}

// Crossing-number membership for a closed polyline.
inline bool polygon_contains(const Polyline& p, const cplx& z) {
  bool in = false;
  const std::size_t n = p.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const cplx& a = p[i];
    const cplx& b = p[j];
    if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
      double x = a.real() + (z.imag() - a.imag()) / (b.imag() - a.imag()) *
                                (b.real() - a.real());
      if (z.real() < x) in = !in;
    }
  }
  return in;
}

inline double dist_point_segment(const cplx& z, const cplx& a, const cplx& b) {
  const cplx ab = b - a;
  const double L2 = std::norm(ab);
  if (L2 == 0.0) return std::abs(z - a);
  double t = ((z.real() - a.real()) * ab.real() +
              (z.imag() - a.imag()) * ab.imag()) /
             L2;
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(z - (a + t * ab));
}

inline double dist_to_polyline(const Polyline& p, const cplx& z) {
  double d = std::numeric_limits<double>::infinity();
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i)
    d = std::min(d, dist_point_segment(z, p[i], p[(i + 1) % n]));
  return d;
}

// A point strictly inside a simple polygon: try offset midpoints of convex
// corners, verified by the membership test.
inline cplx interior_point(const Polyline& p) {
  const std::size_t n = p.size();
  double orient = is_ccw(p) ? 1.0 : -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const cplx& a = p[(i + n - 1) % n];
    const cplx& b = p[i];
    const cplx& c = p[(i + 1) % n];
    if (orient * cross(a, b, c) <= 0) continue;  // reflex corner
    cplx cand = (a + b + c) / 3.0;
    if (polygon_contains(p, cand) && dist_to_polyline(p, cand) > 0) return cand;
  }
  // Fallback: diagonal midpoints.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 2; j < n; ++j) {
      cplx cand = 0.5 * (p[i] + p[j]);
      if (polygon_contains(p, cand) && dist_to_polyline(p, cand) > 1e-12)
        return cand;
    }
  }
  throw numeric_error("interior_point: no interior candidate found");
}

// Subdivide edges longer than max_len; node set keeps all original vertices.
inline Polyline resample_max_spacing(const Polyline& p, double max_len) {
  Polyline out;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx& a = p[i];
    const cplx& b = p[(i + 1) % n];
    out.push_back(a);
    double L = std::abs(b - a);
    if (L > max_len) {
      int k = static_cast<int>(std::ceil(L / max_len));
      for (int s = 1; s < k; ++s) out.push_back(a + (b - a) * (double(s) / k));
    }
  }
  return out;
}

inline double polyline_length(const Polyline& p) {
  double L = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    L += std::abs(p[(i + 1) % p.size()] - p[i]);
  return L;
}

// Intersection ordinates of the vertical line Re = x with the polyline, and
// the section [ylo, yhi] of that line containing ordinate y0 inside the
// region.  Used for vertical-extent (theta) measurements.
inline std::pair<double, double> vertical_section(const Polyline& p, double x,
                                                  double y0 = 0.0) {
  std::vector<double> ys;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx& a = p[i];
    const cplx& b = p[(i + 1) % n];
    if ((a.real() > x) != (b.real() > x)) {
      double t = (x - a.real()) / (b.real() - a.real());
      ys.push_back(a.imag() + t * (b.imag() - a.imag()));
    }
  }
  std::sort(ys.begin(), ys.end());
  for (std::size_t i = 0; i + 1 < ys.size(); i += 2)
    if (ys[i] <= y0 && y0 <= ys[i + 1]) return {ys[i], ys[i + 1]};
  throw numeric_error("vertical_section: line misses the region at given ordinate");
}

}  // namespace forge

#pragma once
// Shared geometry builders and sampling utilities for the test suite.

#include <algorithm>
#include <cmath>
#include <vector>

#include "forge/polygon.hpp"
#include "forge/types.hpp"

namespace forge::testing {

// Regular n-gon inscribed in the circle |z| = r, counterclockwise.
inline Polyline circle_polyline(std::size_t n, double r = 1.0) {
  Polyline p(n);
  for (std::size_t k = 0; k < n; ++k)
    p[k] = std::polar(r, two_pi * double(k) / double(n));
  return p;
}

// Boundary of the right half-disk {Re z > 0, |z| < R}, counterclockwise,
// with node spacing graded toward the origin on the diameter.
inline Polyline half_disk_polyline(double R, double fine_spacing = 0.01,
                                   double fine_extent = 10.0,
                                   std::size_t n_arc = 600) {
  std::vector<double> ys;  // positive diameter offsets, ascending
  for (double y = fine_spacing; y <= fine_extent; y += fine_spacing) ys.push_back(y);
  for (double y = ys.back() + 0.05; y <= 30.0; y += 0.05) ys.push_back(y);
  for (double y = ys.back() * 1.05; y < R; y *= 1.05) ys.push_back(y);
  Polyline p;
  // Down the diameter: iR -> -iR through 0.
  for (auto it = ys.rbegin(); it != ys.rend(); ++it) p.push_back(cplx(0.0, *it));
  p.push_back(cplx(0.0, 0.0));
  for (double y : ys) p.push_back(cplx(0.0, -y));
  // Counterclockwise arc from -iR to +iR (endpoints handled by neighbors).
  for (std::size_t k = 0; k + 1 < n_arc; ++k) {
    double th = -half_pi + pi * double(k + 1) / double(n_arc);
    p.push_back(std::polar(R, th));
  }
  return p;
}

// Boundary of the rectangle {|Re z| < X, |Im z| < h}, counterclockwise.
inline Polyline strip_polyline(double X, double h, double spacing) {
  Polyline corners = {cplx(X, -h), cplx(X, h), cplx(-X, h), cplx(-X, -h)};
  return resample_max_spacing(corners, spacing);
}

// Boundary of the half-strip {0 < Re z < X, |Im z| < h}, counterclockwise.
inline Polyline half_strip_polyline(double X, double h, double spacing) {
  Polyline corners = {cplx(X, -h), cplx(X, h), cplx(0.0, h), cplx(0.0, -h)};
  return resample_max_spacing(corners, spacing);
}

// Deterministic interior samples of the unit disk with |z| <= rmax.
inline std::vector<cplx> disk_samples(double rmax, std::size_t n, uint64_t seed = 11) {
  Rng rng(seed);
  std::vector<cplx> out;
  while (out.size() < n) {
    cplx z(rng.uniform(-rmax, rmax), rng.uniform(-rmax, rmax));
    if (std::abs(z) <= rmax) out.push_back(z);
  }
  return out;
}

}  // namespace forge::testing

#pragma once
// Truncated realization of the flared half-plane-like domain
//   H = {x + iy : x > -14 log_+ |y|},
// bounded by the vertical segment {0} x [-1, 1], the logarithmic profile
// x = -14 log|y| for 1 < |y| <= y_max, and a far circular arc closing the
// domain on the right.  H is the canonical target of normalized maps.

#include <memory>
#include <string>

#include "forge/chart.hpp"
#include "forge/polygon.hpp"
#include "forge/types.hpp"

namespace forge {

// Membership in the ideal (untruncated) domain.
inline bool h_contains(const cplx& z) {
  return z.real() > -14.0 * log_plus(std::abs(z.imag()));
}

// Boundary abscissa at height y.
inline double h_profile_x(double y) { return -14.0 * log_plus(std::abs(y)); }

struct HGeometry {
  double y_max = 0.0;
  double arc_radius = 0.0;
  Polyline boundary;  // full region, closed, CCW
  Polyline half;      // upper half-region, closed, CCW, starts at the origin

  // Interior of the truncated domain, with a small safety margin against
  // the far arc so queries stay clear of the truncation artifact.
  bool contains(const cplx& z) const {
    return h_contains(z) && std::abs(z) < 0.9 * arc_radius;
  }
};

// Build the truncated boundary.  The reflex corner at (0, 1) owns most of
// the fit error of a uniformly graded boundary: refining the wings
// globally or following the profile curvature barely moves the error,
// while clustering nodes geometrically into the corner from both sides
// removes an order of magnitude at no node-count cost.  The wing otherwise
// follows a relative |y| grading and the vertical segment a uniform
// spacing, joined to the corner ladders where the ladder step reaches the
// ambient step.  The axis run is graded geometrically away from both
// crossings (its length is astronomic, so only a relative layout is
// possible).  The upper half is assembled counterclockwise -- origin, axis
// out to the arc radius, arc up to the tip, wing down to (0, 1), vertical
// down to the origin -- and the full boundary is its mirror closure.
inline HGeometry make_h_geometry(double y_max, double refine = 1.0) {
  if (!(y_max > 2.0)) throw std::invalid_argument("make_h_geometry: y_max must exceed 2");
  if (!(refine > 0.0)) throw std::invalid_argument("make_h_geometry: refine must be positive");
  const double grade = 0.02 / refine;      // relative step on wing and axis
  const double seg_step = 0.02 / refine;   // vertical segment spacing
  const double corner_floor = 1e-3 / refine;
  const std::size_t n_arc = std::size_t(300 * refine);

  const double x_tip = h_profile_x(y_max);
  const double R = std::hypot(x_tip, y_max);

  // Corner ladder: dyadic offsets from a corner, finest first, stopping
  // where the ladder step would exceed the ambient spacing.
  std::vector<double> ladder;
  for (double d = corner_floor; d < seg_step; d *= 2.0) ladder.push_back(d);
  const double d_max = ladder.empty() ? 0.0 : ladder.back();

  std::vector<double> wing_y;  // ascending, from 1 to y_max inclusive
  wing_y.push_back(1.0);
  for (double d : ladder) wing_y.push_back(1.0 + d);
  while (wing_y.back() < y_max) {
    double y = wing_y.back();
    double next = y * (1.0 + grade);
    if (next >= y_max * (1.0 - 0.5 * grade)) next = y_max;
    wing_y.push_back(next);
  }
  const std::size_t n_wing = wing_y.size();

  HGeometry g;
  g.y_max = y_max;
  g.arc_radius = R;
  auto& b = g.half;

  // Left crossing and the axis run out to the right crossing.  Geometric
  // grading from the origin to midway, then from the arc end back; near
  // the arc the chart is a truncation artifact anyway, so the far grading
  // stops at a relative floor instead of a ladder.
  b.emplace_back(0.0, 0.0);
  for (double d : ladder) b.emplace_back(d, 0.0);
  std::vector<double> far;  // distances from the right crossing, ascending
  for (double e = std::max(1e-3 * R, d_max); e < 0.5 * R; e *= 1.0 + grade)
    far.push_back(e);
  {
    double x = d_max;
    while (true) {
      double next = x * (1.0 + grade);
      if (next >= 0.5 * R) break;
      b.emplace_back(next, 0.0);
      x = next;
    }
  }
  for (std::size_t j = far.size(); j-- > 0;) b.emplace_back(R - far[j], 0.0);
  b.emplace_back(R, 0.0);
  // Arc from the right crossing counterclockwise to the tip, endpoints
  // excluded.
  const double theta0 = std::atan2(y_max, x_tip);
  for (std::size_t k = 1; k < n_arc; ++k) {
    double phi = theta0 * double(k) / double(n_arc);
    b.emplace_back(R * std::cos(phi), R * std::sin(phi));
  }
  // Wing, descending from the tip (x_tip, y_max) to (0, 1).
  for (std::size_t j = n_wing; j-- > 0;) b.emplace_back(h_profile_x(wing_y[j]), wing_y[j]);
  // Vertical segment from (0, 1) down toward the origin: corner ladders at
  // both ends, a uniform grid in between, the terminal origin node being
  // the starting node of the traversal.
  for (double d : ladder) b.emplace_back(0.0, 1.0 - d);
  const auto k_max = long(std::floor((1.0 - 2.0 * d_max) / seg_step));
  for (long k = k_max; k >= 1; --k) b.emplace_back(0.0, double(k) * seg_step);
  for (auto it = ladder.rbegin(); it != ladder.rend(); ++it) b.emplace_back(0.0, *it);

  // Mirror closure: chain from the right crossing over the top to the
  // origin, then its reflection below the axis.
  std::size_t idx_b = 0;
  while (g.half[idx_b] != cplx(R, 0.0)) ++idx_b;
  std::vector<cplx> chain(g.half.begin() + long(idx_b), g.half.end());
  chain.push_back(g.half.front());
  g.boundary = chain;
  for (std::size_t j = chain.size() - 1; j-- > 1;)
    g.boundary.push_back(std::conj(chain[j]));
  return g;
}

// Fit a conjugation-symmetric chart for the truncated H, anchored at 1.
// If cache_dir is nonempty, a fitted chart is stored there keyed by the
// boundary fingerprint and reloaded on subsequent calls.
inline std::shared_ptr<const ConformalChart> fit_h_chart(const HGeometry& g,
                                                         const std::string& cache_dir = "") {
  const cplx anchor(1.0, 0.0);
  std::uint64_t key = chart_fingerprint(g.boundary, 1e9, anchor);
  std::string path;
  if (!cache_dir.empty()) {
    path = cache_dir + "/h_" + std::to_string(key) + ".chart";
    if (auto cached = load_chart(path, key))
      return std::make_shared<const ConformalChart>(std::move(*cached));
  }
  auto chart = std::make_shared<ConformalChart>(fit_chart(g.boundary, 1e9, anchor));
  chart->declare_symmetric();
  if (!path.empty()) save_chart(path, *chart, key);
  return chart;
}

// Equivariant variant: fits only the upper half-region and extends across
// the axis by reflection, so conjugation symmetry is exact, axis values
// are exactly real, and no frame rotation can displace deep boundary
// features.  This is the chart the tract pipeline composes against.
inline std::shared_ptr<const SymChart> fit_h_sym_chart(const HGeometry& g,
                                                       const std::string& cache_dir = "") {
  const cplx anchor(1.0, 0.0);
  const cplx probe(1.0, 0.5);
  std::uint64_t key = chart_fingerprint(g.half, 1e9, anchor);
  std::string path;
  if (!cache_dir.empty()) {
    path = cache_dir + "/hs_" + std::to_string(key) + ".chart";
    if (auto cached = load_sym_chart(path, key))
      return std::make_shared<const SymChart>(std::move(*cached));
  }
  auto chart = std::make_shared<SymChart>(
      fit_sym_chart(g.half, 0.0, g.arc_radius, anchor, probe));
  if (!path.empty()) save_sym_chart(path, *chart, key);
  return chart;
}

}  // namespace forge

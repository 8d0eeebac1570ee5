#pragma once
// Approximants: the function f assembled from a model integrand g and its
// contour correction h (the Cauchy transform of g over the pushed-forward
// contour).  Inside the region enclosed by the contour f = g + h; outside
// f = h.  Membership is decided by a winding number against the truncated
// contour closed by a far arc.  This header also provides the boundary-jump
// probe, the decay profile and its fitted constant, the confinement report,
// and the end-to-end construction from a model plus initial configuration.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "forge/cauchy.hpp"
#include "forge/curves.hpp"
#include "forge/model.hpp"
#include "forge/types.hpp"

namespace forge {

struct Approximant {
  ModelFunction model;
  Evaluator g;                // integrand, evaluable on and inside the contour
  ParamCurve curve;           // pushed-forward contour (clockwise around the tract)
  GrowthConstants constants;
  QuadratureConfig quad;
  double tol = 1e-8;
};

// ---------------------------------------------------------------------------
// Winding number of the truncated-and-closed contour about z.  The contour
// is cut at +-t_cut (chosen so both endpoints sit well beyond |z|), sampled
// adaptively so no segment subtends a large angle at z, and closed by a
// clockwise far arc whose radius interpolates geometrically between the two
// endpoint magnitudes.  For the clockwise contours used here, -1 means
// enclosed (tract side) and 0 means outside.
namespace detail {

inline void winding_refine(const std::function<cplx(double)>& pos, const cplx& z,
                           double t0, const cplx& p0, double t1, const cplx& p1,
                           int depth, CompensatedSum& acc) {
  cplx d0 = p0 - z, d1 = p1 - z;
  double a0 = std::abs(d0), a1 = std::abs(d1);
  if (a0 == 0.0 || a1 == 0.0) throw point_on_curve("winding: point on contour");
  double chord = std::abs(p1 - p0);
  double dang = std::arg(d1 / d0);
  if (depth > 0 && (chord > 0.45 * std::min(a0, a1) || std::abs(dang) > 0.5)) {
    double tm = 0.5 * (t0 + t1);
    cplx pm = pos(tm);
    winding_refine(pos, z, t0, p0, tm, pm, depth - 1, acc);
    winding_refine(pos, z, tm, pm, t1, p1, depth - 1, acc);
    return;
  }
  if (depth == 0 && chord > 0.9 * std::min(a0, a1))
    throw point_on_curve("winding: contour passes too close to the point");
  acc.add(dang);
}

}  // namespace detail

inline int winding_number(const ParamCurve& curve, const cplx& z,
                          double min_window = 8.0) {
  // Cut parameter: double until both endpoints dwarf |z|.
  double t_cut = min_window;
  for (const double k : curve.knots) t_cut = std::max(t_cut, std::abs(k) + 1.0);
  double need = 4.0 * (std::abs(z) + 1.0);
  int guard = 0;
  while ((std::abs(curve.position(t_cut)) < need ||
          std::abs(curve.position(-t_cut)) < need)) {
    t_cut *= 2.0;
    if (++guard > 60)
      throw numeric_error("winding_number: contour fails to escape past the point");
  }

  // Seed parameters: endpoints, knots, and a uniform scatter (log-spaced far out).
  std::vector<double> seeds{-t_cut, t_cut, 0.0};
  for (double k : curve.knots)
    if (std::abs(k) < t_cut) seeds.push_back(k);
  for (double s : linspace(-1.0, 1.0, 33)) seeds.push_back(s * std::min(t_cut, 4.0));
  for (double s = std::min(t_cut, 4.0); s < t_cut; s *= 1.5) {
    seeds.push_back(s);
    seeds.push_back(-s);
  }
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

  detail::CompensatedSum acc;
  cplx prev_p = curve.position(seeds.front());
  for (std::size_t i = 1; i < seeds.size(); ++i) {
    cplx p = curve.position(seeds[i]);
    detail::winding_refine(curve.position, z, seeds[i - 1], prev_p, seeds[i], p,
                           48, acc);
    prev_p = p;
  }

  // Closing arc from gamma(t_cut) back to gamma(-t_cut), swept clockwise so
  // the enclosed region stays on the right, with geometric radius blend.
  cplx A = curve.position(t_cut), B = curve.position(-t_cut);
  double thA = std::arg(A), rA = std::abs(A), rB = std::abs(B);
  double sweep = std::arg(B / A);
  if (sweep > 0.0) sweep -= two_pi;  // clockwise: sweep in (-2 pi, 0]
  const int n_arc = 512;
  cplx w_prev = A;
  for (int j = 1; j <= n_arc; ++j) {
    double s = double(j) / n_arc;
    double r = rA * std::pow(rB / rA, s);
    double th = thA + s * sweep;
    cplx w = r * cplx(std::cos(th), std::sin(th));
    cplx d0 = w_prev - z, d1 = w - z;
    if (std::abs(d0) == 0.0 || std::abs(d1) == 0.0)
      throw point_on_curve("winding: point on closing arc");
    acc.add(std::arg(d1 / d0));
    w_prev = w;
  }

  double turns = acc.get() / two_pi;
  double nearest = std::round(turns);
  if (std::abs(turns - nearest) > 0.2)
    throw numeric_error("winding_number: ambiguous winding " + std::to_string(turns));
  return int(nearest);
}

// True when z is enclosed by the (clockwise) contour.
inline bool encloses(const ParamCurve& curve, const cplx& z,
                     double min_window = 8.0) {
  int w = winding_number(curve, z, min_window);
  if (w == -1) return true;
  if (w == 0) return false;
  throw numeric_error("encloses: unexpected winding number " + std::to_string(w));
}

// f(z): g + h on the enclosed side, h outside.
inline cplx evaluate_approximant(const Approximant& a, const cplx& z) {
  bool inside = encloses(a.curve, z, a.quad.min_window);
  cplx h = cauchy_transform(a.curve, a.g, z, a.tol, a.constants, a.quad);
  return inside ? a.g(z) + h : h;
}

// ---------------------------------------------------------------------------
// Boundary jump probe at curve parameter t0: the difference of h across the
// contour along the normal n = i gamma'/|gamma'| approaches g(gamma(t0)),
// and the residual shrinks linearly in the approach distance.
struct JumpSample {
  cplx z0;
  cplx g0;
  double eps;
  cplx jump;      // h(z0 + eps n) - h(z0 - eps n)
  double residual;  // |jump - g0|
};

inline JumpSample jump_residual(const Approximant& a, double t0, double eps) {
  JumpSample s;
  s.z0 = a.curve.position(t0);
  cplx d = a.curve.derivative(t0);
  cplx n = cplx(0.0, 1.0) * d / std::abs(d);
  s.g0 = a.g(s.z0);
  s.eps = eps;
  cplx hp = cauchy_transform(a.curve, a.g, s.z0 + eps * n, a.tol, a.constants, a.quad);
  cplx hm = cauchy_transform(a.curve, a.g, s.z0 - eps * n, a.tol, a.constants, a.quad);
  s.jump = hp - hm;
  s.residual = std::abs(s.jump - s.g0);
  return s;
}

// ---------------------------------------------------------------------------
// Decay profile: |h(z)| |z|_+ over a polar grid, against the decay constant.
struct DecayRow {
  cplx z;
  double product;  // |h(z)| * |z|_+
  double bound;    // decay constant in force
  double ratio;    // product / bound
};

inline std::vector<DecayRow> decay_profile(const Approximant& a,
                                           const std::vector<double>& ray_angles,
                                           const std::vector<double>& radii) {
  std::vector<DecayRow> rows;
  rows.reserve(ray_angles.size() * radii.size());
  for (double th : ray_angles)
    for (double r : radii) {
      cplx z = r * cplx(std::cos(th), std::sin(th));
      cplx h = cauchy_transform(a.curve, a.g, z, a.tol, a.constants, a.quad);
      DecayRow row;
      row.z = z;
      row.product = std::abs(h) * abs_plus(z);
      row.bound = a.constants.c6();
      row.ratio = row.product / row.bound;
      rows.push_back(row);
    }
  return rows;
}

inline std::vector<double> default_decay_rays(std::size_t n = 8) {
  std::vector<double> th;
  for (std::size_t j = 0; j < n; ++j) th.push_back(two_pi * (double(j) + 0.5) / double(n));
  return th;
}

// Fit the decay constant as the inflated maximum of |h| |z|_+ over a
// reference polar grid.  The analytic certificate from the growth constants
// dominates it; the fitted value is what violation detection runs against.
inline double fit_decay_constant(const Approximant& a,
                                 std::size_t n_rays = 8, std::size_t n_radii = 12,
                                 double r_lo = 10.0, double r_hi = 1000.0) {
  double worst = 0.0;
  for (double th : default_decay_rays(n_rays))
    for (double r : geomspace(r_lo, r_hi, n_radii)) {
      cplx z = r * cplx(std::cos(th), std::sin(th));
      cplx h = cauchy_transform(a.curve, a.g, z, a.tol, a.constants, a.quad);
      worst = std::max(worst, std::abs(h) * abs_plus(z));
    }
  return 1.1 * worst;
}

// ---------------------------------------------------------------------------
// Confinement report: how far |f| strays outside the tract and |f - g|
// inside it, over random samples with a safety margin from the boundary.
// min_f_large_g records the smallest |f| among inside samples where |g|
// exceeds twice the confinement bound; covering-type behavior requires it
// to stay above the bound.
struct ConfinementReport {
  double max_outside = 0.0;
  cplx worst_outside{0.0, 0.0};
  double max_inside = 0.0;
  cplx worst_inside{0.0, 0.0};
  double M = 0.0;
  double min_f_large_g = std::numeric_limits<double>::infinity();
  std::size_t n_inside = 0, n_outside = 0;
};

inline ConfinementReport singular_value_confinement(const Approximant& a,
                                                    std::size_t budget = 240,
                                                    double box_radius = 40.0,
                                                    double margin = 0.05) {
  if (!a.model.contains)
    throw std::invalid_argument("singular_value_confinement: model lacks membership");
  ConfinementReport rep;
  // Deterministic polar grid: log-spaced radii so both the far field and the
  // small complement components get sampled; angles offset off the axes.
  std::size_t n_angles = 16;
  std::size_t n_radii = std::max<std::size_t>(4, budget / n_angles);
  struct Sample { cplx z; cplx f; bool inside; };
  std::vector<Sample> samples;
  for (double r : geomspace(0.15, box_radius, n_radii))
    for (std::size_t j = 0; j < n_angles; ++j) {
      double th = two_pi * (double(j) + 0.5) / double(n_angles);
      cplx z = r * cplx(std::cos(th), std::sin(th));
      if (a.model.boundary_dist && a.model.boundary_dist(z) < margin) continue;
      bool inside = a.model.contains(z);
      cplx f;
      try {
        f = evaluate_approximant(a, z);
      } catch (const point_on_curve&) {
        continue;
      }
      samples.push_back({z, f, inside});
      if (inside) {
        ++rep.n_inside;
        double d = std::abs(f - a.g(z));
        if (d > rep.max_inside) { rep.max_inside = d; rep.worst_inside = z; }
      } else {
        ++rep.n_outside;
        double d = std::abs(f);
        if (d > rep.max_outside) { rep.max_outside = d; rep.worst_outside = z; }
      }
    }
  rep.M = std::max(rep.max_inside, rep.max_outside);
  for (const Sample& s : samples)
    if (s.inside && std::abs(a.g(s.z)) > 2.0 * rep.M)
      rep.min_f_large_g = std::min(rep.min_f_large_g, std::abs(s.f));
  return rep;
}

// ---------------------------------------------------------------------------
// Catalog approximant: half-strip contour with integrand exp(exp(z)).
// The integrand is entire, so the growth hypotheses are fitted with the
// whole plane as ambient domain and exact decay exponents delta1 = delta2 = 0.
inline Approximant approximant_exp_catalog(double tol = 1e-8, bool fit_decay = true) {
  Approximant a;
  a.model = model_exp_half_strip();
  a.g = [](const cplx& z) { return std::exp(std::exp(z)); };
  a.curve = boundary_half_strip();
  a.tol = tol;
  a.constants = fit_growth_constants(a.curve, a.g, 0.0, 0.0, 2.0,
                                     default_hypothesis_grid());
  if (fit_decay) a.constants.C6 = fit_decay_constant(a);
  return a;
}

// ---------------------------------------------------------------------------
// End-to-end construction from a model and an initial configuration: push
// the configuration curve into the tract, reparametrize to quartic speed,
// fit the growth constants with exponents delta1 = 1/4, delta2 = 1, and
// optionally fit the decay constant.
struct BuildOptions {
  double tau_fit_max = 1e6;   // growth-constant fit grid extent
  std::size_t fit_per_side = 141;
  double tol = 1e-8;
  bool fit_decay = true;
};

inline Approximant build_approximant(const ModelFunction& model,
                                     const InitialConfig& cfg,
                                     const BuildOptions& opt = {}) {
  Approximant a;
  a.model = model;
  a.g = [fwd = model.forward](const cplx& z) { return std::exp(fwd(z)); };
  a.curve = reparametrize_quartic(pipeline_curve(model, cfg.alpha));
  a.tol = opt.tol;

  std::vector<double> grid = default_hypothesis_grid(opt.tau_fit_max, opt.fit_per_side);

  // Safe-disk scale: the fitted C4 has a factor-two margin over the smallest
  // observed boundary clearance (normalized by the decay weight).
  double c4 = 2.0;
  if (model.boundary_dist) {
    double dmin = std::numeric_limits<double>::infinity();
    for (double tau : grid) {
      double d = model.boundary_dist(a.curve.position(tau)) * abs_plus(tau);
      dmin = std::min(dmin, d);
    }
    if (!(dmin > 0.0))
      throw numeric_error("build_approximant: contour touches the tract boundary");
    c4 = std::max(2.0, 2.0 / dmin);
  }

  a.constants = fit_growth_constants(a.curve, a.g, 0.25, 1.0, c4, grid,
                                     model.contains);
  if (opt.fit_decay) a.constants.C6 = fit_decay_constant(a);
  return a;
}

}  // namespace forge

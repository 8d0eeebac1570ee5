#pragma once
// Admissible boundary curves for the contour-integral engine: a parametric
// curve type carrying the structure the growth estimates need (derivative,
// conjugation symmetry, knot locations), the catalog half-strip boundary,
// the quartic reparametrization that converts half-strip growth rates into
// the exponents the integral estimates require, and sampled checks of the
// curve invariants (injectivity, escape to infinity, derivative consistency).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "forge/types.hpp"

namespace forge {

// Piecewise-smooth injective curve t -> gamma(t) defined on [t_min, t_max]
// (the catalog curves use the whole real line).  `knots` lists parameters
// where the derivative may jump; quadrature panels and finite-difference
// probes never straddle them.  conj_symmetric promises
// gamma(-t) = conj(gamma(t)), which the engine exploits for symmetry checks.
struct ParamCurve {
  std::function<cplx(double)> position;
  std::function<cplx(double)> derivative;
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
  bool conj_symmetric = false;
  std::vector<double> knots;  // ascending
};

// Clockwise boundary of the right half-strip {x > 0, |y| < pi}, by arc
// length: in along the lower edge, up the left end, out along the upper
// edge.  The enclosed strip stays on the right of the traversal, so the
// curve runs clockwise around it.
inline ParamCurve boundary_half_strip() {
  ParamCurve c;
  c.position = [](double t) -> cplx {
    if (t > pi) return {t - pi, pi};
    if (t < -pi) return {-t - pi, -pi};
    return {0.0, t};
  };
  c.derivative = [](double t) -> cplx {
    if (t > pi) return {1.0, 0.0};
    if (t < -pi) return {-1.0, 0.0};
    return {0.0, 1.0};
  };
  c.conj_symmetric = true;
  c.knots = {-pi, pi};
  return c;
}

// Parameter substitution tau = sign(t) t^4 for |t| >= 1 (tau = t below),
// i.e. the returned curve evaluates at t(tau) = sign(tau) |tau|^{1/4}.  The
// substitution slows the traversal at infinity:
//   |dgamma/dtau| = |gamma'(t)| |tau|^{-3/4} / 4   for |tau| >= 1.
// The speed jumps where the substitution switches branch, so +-1 join the
// knot list.
inline ParamCurve reparametrize_quartic(const ParamCurve& c) {
  auto t_of = [](double tau) {
    if (std::abs(tau) < 1.0) return tau;
    return std::copysign(std::pow(std::abs(tau), 0.25), tau);
  };
  auto tau_of = [](double t) {
    if (std::abs(t) < 1.0) return t;
    return std::copysign(t * t * t * t, t);
  };
  ParamCurve r;
  r.position = [pos = c.position, t_of](double tau) { return pos(t_of(tau)); };
  r.derivative = [der = c.derivative, t_of](double tau) -> cplx {
    if (std::abs(tau) < 1.0) return der(tau);
    return der(t_of(tau)) * (0.25 * std::pow(std::abs(tau), -0.75));
  };
  r.t_min = std::isfinite(c.t_min) ? tau_of(c.t_min) : c.t_min;
  r.t_max = std::isfinite(c.t_max) ? tau_of(c.t_max) : c.t_max;
  r.conj_symmetric = c.conj_symmetric;
  r.knots.push_back(-1.0);
  r.knots.push_back(1.0);
  for (double k : c.knots) r.knots.push_back(tau_of(k));
  std::sort(r.knots.begin(), r.knots.end());
  r.knots.erase(std::unique(r.knots.begin(), r.knots.end()), r.knots.end());
  return r;
}

// Sampled checks of the ParamCurve invariants.  Injectivity is taken at
// grid resolution (no two sampled parameters may share an image); escape is
// verified along doubling parameters from +-1; the declared derivative is
// compared against centered finite differences away from knots.
struct CurveReport {
  double min_pairwise_gap = std::numeric_limits<double>::infinity();
  bool escapes = false;
  double fd_defect = 0.0;  // max |FD - derivative| over probes
  bool pass = false;
};

inline CurveReport validate_curve(const ParamCurve& c,
                                  const std::vector<double>& grid,
                                  double fd_step = 1e-6) {
  if (grid.empty()) throw std::invalid_argument("validate_curve: empty grid");
  CurveReport rep;

  std::vector<cplx> pts;
  pts.reserve(grid.size());
  for (double t : grid) {
    if (t < c.t_min || t > c.t_max) continue;
    pts.push_back(c.position(t));
  }
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      rep.min_pairwise_gap = std::min(rep.min_pairwise_gap, std::abs(pts[i] - pts[j]));

  // Escape along |t| = 2^k in both directions: the magnitudes must be
  // nondecreasing over the final doublings and end large.
  rep.escapes = true;
  for (double sgn : {1.0, -1.0}) {
    std::vector<double> mags;
    for (int k = 0; k <= 30; ++k) {
      double t = sgn * std::ldexp(1.0, k);
      if (t < c.t_min || t > c.t_max) break;
      mags.push_back(std::abs(c.position(t)));
    }
    if (mags.size() < 4 || mags.back() < 10.0) {
      rep.escapes = false;
      continue;
    }
    for (std::size_t k = mags.size() / 2; k + 1 < mags.size(); ++k)
      if (mags[k + 1] < mags[k]) rep.escapes = false;
  }

  for (double t : grid) {
    if (t - 2.0 * fd_step < c.t_min || t + 2.0 * fd_step > c.t_max) continue;
    bool near_knot = false;
    for (double k : c.knots)
      if (std::abs(t - k) < 4.0 * fd_step) near_knot = true;
    if (near_knot) continue;
    cplx fd = (c.position(t + fd_step) - c.position(t - fd_step)) / (2.0 * fd_step);
    rep.fd_defect = std::max(rep.fd_defect, std::abs(fd - c.derivative(t)));
  }

  rep.pass = rep.min_pairwise_gap > 1e-9 && rep.escapes &&
             rep.fd_defect <= 100.0 * fd_step;
  return rep;
}

}  // namespace forge

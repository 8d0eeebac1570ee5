#pragma once
// Model maps and initial configurations.  A model map is a conformal
// isomorphism Psi from an unbounded tract T onto a range domain H; the
// induced integrand is g = exp o Psi.  An initial configuration pairs a
// range domain (described by a boundary profile x = -rho(y)) with a curve
// alpha inside it whose pushforward gamma = Psi^{-1} o alpha becomes the
// integration contour.  This header provides the closed-form catalog
// models, the canonical configurations, the configuration validator with
// its derived constants, and the polynomial curve-bound fits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "forge/cauchy.hpp"
#include "forge/curves.hpp"
#include "forge/types.hpp"

namespace forge {

// Shape of the range domain H.
enum class RangeKind { half_plane, log_domain, sector, custom };

struct RangeSpec {
  RangeKind kind = RangeKind::custom;
  double param = 0.0;  // log_domain: profile coefficient; sector: slope M
};

// Conformal isomorphism Psi: T -> H with enough extra structure for the
// engine: an inverse, analytic derivatives (used to differentiate the
// pushed-forward contour), a membership predicate and boundary-distance
// oracle for T, and a conjugation-symmetry promise.
struct ModelFunction {
  std::function<cplx(const cplx&)> forward;        // Psi
  std::function<cplx(const cplx&)> inverse;        // Psi^{-1}
  std::function<cplx(const cplx&)> forward_deriv;  // Psi'
  std::function<cplx(const cplx&)> inverse_deriv;  // (Psi^{-1})'
  std::function<bool(const cplx&)> contains;       // membership in T
  std::function<double(const cplx&)> boundary_dist;  // dist(z, boundary of T)
  RangeSpec range;
  bool real_symmetric = false;  // Psi(conj z) = conj Psi(z)
  double roundtrip_tol = 1e-9;
};

// Sampled checks of the model invariants: inverse o forward is the identity
// on tract samples, the forward map blows up along the escaping samples,
// and stays bounded along the boundary-approach samples.
struct ModelReport {
  double roundtrip_defect = 0.0;
  bool escape_ok = false;
  double bounded_sup = 0.0;  // sup |Psi| along the boundary-approach samples
  bool pass = false;
};

inline ModelReport model_report(const ModelFunction& m,
                                const std::vector<cplx>& tract_samples,
                                const std::vector<cplx>& escaping_samples,
                                const std::vector<cplx>& boundary_samples) {
  ModelReport rep;
  for (const cplx& z : tract_samples)
    rep.roundtrip_defect =
        std::max(rep.roundtrip_defect, std::abs(m.inverse(m.forward(z)) - z));
  double prev = 0.0;
  rep.escape_ok = !escaping_samples.empty();
  for (const cplx& z : escaping_samples) {
    double a = std::abs(m.forward(z));
    if (a < prev) rep.escape_ok = false;
    prev = a;
  }
  if (rep.escape_ok && prev < 100.0) rep.escape_ok = false;
  for (const cplx& z : boundary_samples)
    rep.bounded_sup = std::max(rep.bounded_sup, std::abs(m.forward(z)));
  rep.pass = rep.roundtrip_defect <= m.roundtrip_tol && rep.escape_ok &&
             std::isfinite(rep.bounded_sup);
  return rep;
}

// ---------------------------------------------------------------------------
// Catalog model 1: T the right half-strip {x > 0, |y| < pi}, Psi = exp.
// The induced integrand exp(exp(z)) is entire, which makes this the
// reference model for the engine's oracle comparisons.
inline ModelFunction model_exp_half_strip() {
  ModelFunction m;
  m.forward = [](const cplx& z) { return std::exp(z); };
  m.inverse = [](const cplx& w) { return std::log(w); };
  m.forward_deriv = [](const cplx& z) { return std::exp(z); };
  m.inverse_deriv = [](const cplx& w) { return 1.0 / w; };
  m.contains = [](const cplx& z) {
    return z.real() > 0.0 && std::abs(z.imag()) < pi;
  };
  m.boundary_dist = [](const cplx& z) {
    double x = z.real(), ay = std::abs(z.imag());
    // Boundary pieces: the segment {0} x [-pi, pi] and the rays {y = +-pi, x >= 0}.
    double d_seg = std::hypot(x, std::max(0.0, ay - pi));
    double d_ray = x >= 0.0 ? std::abs(ay - pi) : std::hypot(x, ay - pi);
    return std::min(d_seg, d_ray);
  };
  m.range.kind = RangeKind::custom;
  m.real_symmetric = true;
  return m;
}

// ---------------------------------------------------------------------------
// Catalog model 2: T = {|w| > 1} minus the slit (-infinity, -1], carried by
//   s = (sqrt(w) - 1/sqrt(w)) / 2,   Psi(w) = s^{2 theta / pi},
// onto the sector H = {x > -2M |y|} = {|arg| < theta} with
// theta = pi - atan(1/(2M)).  The chain is exp-log conjugate to
// sinh: half-strip -> right half-plane followed by the sector power.
inline ModelFunction model_power_sector(double M) {
  if (!(M > 0.0)) throw std::invalid_argument("model_power_sector: M must be positive");
  double theta = pi - std::atan(1.0 / (2.0 * M));
  double p = 2.0 * theta / pi;  // power: right half-plane -> sector
  double q = pi / (2.0 * theta);

  ModelFunction m;
  m.forward = [p](const cplx& w) {
    cplx r = std::sqrt(w);
    return std::pow(0.5 * (r - 1.0 / r), p);
  };
  m.forward_deriv = [p](const cplx& w) {
    cplx r = std::sqrt(w);
    cplx s = 0.5 * (r - 1.0 / r);
    cplx ds = 0.25 * (1.0 / r + 1.0 / (w * r));
    return p * std::pow(s, p - 1.0) * ds;
  };
  m.inverse = [q](const cplx& zeta) {
    cplx s = std::pow(zeta, q);
    cplx r = std::sqrt(s * s + 1.0);
    cplx u = s + r;
    return u * u;
  };
  m.inverse_deriv = [q](const cplx& zeta) {
    cplx s = std::pow(zeta, q);
    cplx ds = q * std::pow(zeta, q - 1.0);
    cplx r = std::sqrt(s * s + 1.0);
    cplx u = s + r;
    return 2.0 * u * u / r * ds;
  };
  m.contains = [](const cplx& w) {
    if (std::norm(w) <= 1.0) return false;
    return w.imag() != 0.0 || w.real() > -1.0;
  };
  m.boundary_dist = [](const cplx& w) {
    double d_circle = std::abs(std::abs(w) - 1.0);
    double d_slit = w.real() <= -1.0 ? std::abs(w.imag())
                                     : std::abs(w - cplx(-1.0, 0.0));
    return std::min(d_circle, d_slit);
  };
  m.range = {RangeKind::sector, M};
  m.real_symmetric = true;
  return m;
}

// ---------------------------------------------------------------------------
// Initial configuration: range domain H = {x > -rho(y)} described by the
// profile rho (continuous, nonnegative, increasing in |y|), a curve alpha
// inside H, and the admissibility constants.  A1 bounds the leftward push
// (Re alpha <= -13 log_+|t| + log A1), A2 the speed; A3, A4 and Delta are
// the derived constants reported by the validator.
struct InitialConfig {
  std::function<double(double)> profile;  // rho
  ParamCurve alpha;
  double A1 = 1.0, A2 = 1.0, A3 = 1.0, A4 = 1.0;
  double Delta = 0.1;
};

// Euclidean distance from an interior point to the profile boundary
// x = -rho(y).  The minimizing boundary height differs from Im z by at most
// the horizontal clearance, so the search window is finite; a coarse scan
// is followed by two local refinements.
inline double profile_boundary_dist(const std::function<double(double)>& rho,
                                    const cplx& z) {
  double clearance = z.real() + rho(z.imag());
  if (!(clearance > 0.0)) return 0.0;  // on or outside the boundary
  double half = 1.05 * clearance;
  double best = clearance, ybest = z.imag();
  for (int round = 0; round < 3; ++round) {
    int n = round == 0 ? 256 : 64;
    double center = ybest;
    for (int j = 0; j <= n; ++j) {
      double y = center - half + 2.0 * half * double(j) / double(n);
      double d = std::hypot(z.real() + rho(y), z.imag() - y);
      if (d < best) {
        best = d;
        ybest = y;
      }
    }
    half = 2.0 * half / double(n);
  }
  return best;
}

struct ConfigReport {
  ConditionCheck left;   // Re alpha(t) <= -13 log_+|t| + log A1
  ConditionCheck speed;  // |alpha'(t)| <= A2
  bool alpha_in_H = true;
  double membership_margin = std::numeric_limits<double>::infinity();
  double im_defect = 0.0;  // max |Im alpha(t) - t|
  // Two-sided comparability dist(alpha, boundary) vs |Re alpha| on the far grid.
  double c_lower = std::numeric_limits<double>::infinity();
  double c_upper = 0.0;
  bool comparable = false;
  // Derived candidates per the distance-comparison argument.
  double A3_candidate = 0.0;
  double A4_candidate = 0.0;
  double Delta_candidate = 0.0;
  double hyp_dist_max = 0.0;  // bound on dist_H(alpha(t), 1 + it) over the grid
  bool pass = false;
};

// Validates a configuration on a parameter grid: the direct conditions on
// leftward push and speed, membership of alpha in H, and the sufficient
// comparability conditions from which A3 = 4/c, Delta = log(1 + 1/(4C))/2
// and A4 are derived.  The hyperbolic quantities are handled through sound
// surrogates: dist_H(alpha, 1+it) by integrating the density upper bound
// 2/dist along the horizontal segment, and the hyperbolic Delta-ball by its
// Euclidean enclosure of radius (e^{2 Delta} - 1) dist.
inline ConfigReport validate_initial_configuration(
    const InitialConfig& cfg, const std::vector<double>& grid,
    double far_threshold = -1.0) {
  if (grid.empty())
    throw std::invalid_argument("validate_initial_configuration: empty grid");

  // Profile sanity: nonnegative, increasing in |y|.
  double ymax = 1.0;
  for (double t : grid) ymax = std::max(ymax, std::abs(cfg.alpha.position(t).imag()) + 1.0);
  double prev = cfg.profile(0.0);
  if (prev < 0.0)
    throw std::invalid_argument("validate_initial_configuration: negative profile");
  for (double y : linspace(0.0, ymax, 400)) {
    double r = cfg.profile(y);
    double rm = cfg.profile(-y);
    if (r < 0.0 || rm < 0.0 || r < prev - 1e-9 * (1.0 + std::abs(prev)) ||
        std::abs(r - rm) > 1e-9 * (1.0 + r))
      throw std::invalid_argument(
          "validate_initial_configuration: profile not monotone in |y|");
    prev = r;
  }

  ConfigReport rep;
  std::vector<double> order(grid);
  std::sort(order.begin(), order.end(),
            [](double x, double y) { return std::abs(x) < std::abs(y); });

  std::vector<std::pair<double, double>> far;  // (|t|, dist / |Re alpha|)
  for (double t : order) {
    cplx a = cfg.alpha.position(t);
    detail::observe(rep.left,
                    std::exp(a.real() + 13.0 * log_plus(t) - std::log(cfg.A1)), t);
    detail::observe(rep.speed, std::abs(cfg.alpha.derivative(t)) / cfg.A2, t);
    rep.im_defect = std::max(rep.im_defect, std::abs(a.imag() - t));

    double margin = a.real() + cfg.profile(a.imag());
    rep.membership_margin = std::min(rep.membership_margin, margin);
    if (!(margin > 0.0)) {
      rep.alpha_in_H = false;
      continue;
    }
    double d = profile_boundary_dist(cfg.profile, a);

    // Upper bound on dist_H(alpha(t), 1 + it): integrate 2/dist along the
    // horizontal segment between them (midpoint rule).
    {
      double x0 = std::min(a.real(), 1.0), x1 = std::max(a.real(), 1.0);
      int n = 200;
      double dx = (x1 - x0) / n, acc = 0.0;
      for (int j = 0; j < n; ++j) {
        double dj = profile_boundary_dist(cfg.profile,
                                          cplx(x0 + dx * (j + 0.5), a.imag()));
        if (!(dj > 0.0)) { acc = std::numeric_limits<double>::infinity(); break; }
        acc += 2.0 * dx / dj;
      }
      rep.hyp_dist_max = std::max(rep.hyp_dist_max, acc);
    }

    double thresh = far_threshold > 0.0 ? far_threshold : 1.0;
    if (a.real() <= -thresh) {
      double ratio = d / std::abs(a.real());
      rep.c_lower = std::min(rep.c_lower, ratio);
      rep.c_upper = std::max(rep.c_upper, ratio);
      far.emplace_back(std::abs(t), ratio);
    }
  }

  rep.comparable = far.size() >= 8 && rep.c_lower > 0.0 &&
                   std::isfinite(rep.c_upper) && rep.c_upper > 0.0;
  if (rep.comparable) {
    rep.A3_candidate = std::max(4.0 / rep.c_lower, 1.1 * rep.hyp_dist_max);
    rep.Delta_candidate = 0.5 * std::log1p(1.0 / (4.0 * rep.c_upper));
    // A4: maximize exp(Re zeta + 4 log_+|t|) over the Euclidean enclosure of
    // the hyperbolic Delta-ball around alpha(t).
    double m4 = 1.0;
    double blow = std::expm1(2.0 * rep.Delta_candidate);
    for (double t : order) {
      cplx a = cfg.alpha.position(t);
      if (!(a.real() + cfg.profile(a.imag()) > 0.0)) continue;
      double r = blow * profile_boundary_dist(cfg.profile, a);
      double re_max = a.real() + r;  // Re is maximized on the right edge
      m4 = std::max(m4, std::exp(re_max + 4.0 * log_plus(t)));
    }
    rep.A4_candidate = 1.1 * m4;
  }

  rep.pass = rep.left.pass && rep.speed.pass && rep.alpha_in_H && rep.comparable;
  return rep;
}

// Symmetric parameter grid for configuration validation: dense near 0,
// log-spaced out to t_max.
inline std::vector<double> default_config_grid(double t_max = 1e4) {
  std::vector<double> g;
  for (double t : linspace(0.0, 2.0, 41)) {
    g.push_back(t);
    if (t > 0.0) g.push_back(-t);
  }
  for (double t : geomspace(2.0, t_max, 80)) {
    g.push_back(t);
    g.push_back(-t);
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

// Canonical configuration on the flared range domain H = {x > -14 log_+|y|}
// with alpha(t) = it - 13 log_+|t| + 1.
inline InitialConfig canonical_log_config() {
  InitialConfig cfg;
  cfg.profile = [](double y) { return 14.0 * log_plus(y); };
  cfg.alpha.position = [](double t) -> cplx { return {1.0 - 13.0 * log_plus(t), t}; };
  cfg.alpha.derivative = [](double t) -> cplx {
    if (std::abs(t) > 1.0) return {-13.0 / t, 1.0};
    return {0.0, 1.0};
  };
  cfg.alpha.conj_symmetric = true;
  cfg.alpha.knots = {-1.0, 1.0};
  cfg.A1 = 3.0;       // log A1 > 1 covers Re alpha + 13 log_+|t| = 1 with margin
  cfg.A2 = 13.1;      // sup |alpha'| = sqrt(1 + 169) ~ 13.04
  ConfigReport rep = validate_initial_configuration(cfg, default_config_grid());
  cfg.A3 = rep.A3_candidate;
  cfg.A4 = rep.A4_candidate;
  cfg.Delta = rep.Delta_candidate;
  return cfg;
}

// Sector configuration H = {x > -2M|y|} with alpha(t) = it - M|t| + 1;
// pairs with model_power_sector(M).
inline InitialConfig sector_config(double M) {
  if (!(M > 0.0)) throw std::invalid_argument("sector_config: M must be positive");
  InitialConfig cfg;
  cfg.profile = [M](double y) { return 2.0 * M * std::abs(y); };
  cfg.alpha.position = [M](double t) -> cplx { return {1.0 - M * std::abs(t), t}; };
  cfg.alpha.derivative = [M](double t) -> cplx {
    return {t >= 0.0 ? -M : M, 1.0};
  };
  cfg.alpha.conj_symmetric = true;
  cfg.alpha.knots = {0.0};
  // log A1 = 1 + sup_u (13 log_+ u - M u), attained at u = 13/M when that
  // exceeds 1 (and at u -> 0 otherwise).
  double s = M < 13.0 ? std::max(0.0, 13.0 * std::log(13.0 / M) - 13.0) : 0.0;
  cfg.A1 = 1.05 * std::exp(1.0 + s);
  cfg.A2 = 1.05 * std::hypot(1.0, M);
  ConfigReport rep = validate_initial_configuration(cfg, default_config_grid());
  cfg.A3 = rep.A3_candidate;
  cfg.A4 = rep.A4_candidate;
  cfg.Delta = rep.Delta_candidate;
  return cfg;
}

// ---------------------------------------------------------------------------
// The pushed-forward contour gamma = Psi^{-1} o alpha as a ParamCurve.
inline ParamCurve pipeline_curve(const ModelFunction& model, const ParamCurve& alpha) {
  if (!model.inverse_deriv)
    throw std::invalid_argument("pipeline_curve: model lacks an inverse derivative");
  ParamCurve c;
  c.position = [inv = model.inverse, a = alpha.position](double t) {
    return inv(a(t));
  };
  c.derivative = [invd = model.inverse_deriv, a = alpha.position,
                  ad = alpha.derivative](double t) {
    return ad(t) * invd(a(t));
  };
  c.t_min = alpha.t_min;
  c.t_max = alpha.t_max;
  c.conj_symmetric = alpha.conj_symmetric && model.real_symmetric;
  c.knots = alpha.knots;
  return c;
}

// Smallest constants making the four polynomial bounds hold on the grid:
//   |gamma(t)| <= M1 t_+^4          dist(gamma(t), boundary) >= M2 t_+^{-4}
//   |gamma'(t)| <= M3 t_+^4         safe-disk radius >= M4 t_+^{-4}
// where the safe disk about gamma(t) must stay in T with
// |g| <= A4 t_+^{-4} throughout (sampled).  growth_exponent is the log-log
// regression slope of |gamma(t)| against |t| over the far grid.
struct CurveBoundsReport {
  double M1 = 0.0, M2 = std::numeric_limits<double>::infinity();
  double M3 = 0.0, M4 = std::numeric_limits<double>::infinity();
  double growth_exponent = 0.0;
};

inline CurveBoundsReport derived_curve_bounds(const ModelFunction& model,
                                              const InitialConfig& cfg,
                                              const std::vector<double>& grid) {
  if (!model.boundary_dist)
    throw std::invalid_argument(
        "derived_curve_bounds: model lacks a boundary-distance oracle");
  if (grid.empty()) throw std::invalid_argument("derived_curve_bounds: empty grid");
  ParamCurve gamma = pipeline_curve(model, cfg.alpha);

  CurveBoundsReport rep;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t nfit = 0;
  for (double t : grid) {
    double tp4 = sq(sq(abs_plus(t)));
    cplx p = gamma.position(t);
    double d = model.boundary_dist(p);
    rep.M1 = std::max(rep.M1, std::abs(p) / tp4);
    rep.M2 = std::min(rep.M2, d * tp4);
    rep.M3 = std::max(rep.M3, std::abs(gamma.derivative(t)) / tp4);

    // Safe-disk radius: halve from just inside the boundary distance until
    // the sampled disk keeps |g| below the required bound.
    double bound = cfg.A4 / tp4;
    double r = 0.95 * d;
    double r_ok = 0.0;
    for (int iter = 0; iter < 14 && r > 0.0; ++iter, r *= 0.5) {
      bool ok = true;
      for (int i = 1; i <= 3 && ok; ++i)
        for (int j = 0; j < 16 && ok; ++j) {
          cplx zq = p + (r * i / 3.0) *
                            cplx(std::cos(two_pi * j / 16.0),
                                 std::sin(two_pi * j / 16.0));
          if (!model.contains(zq) ||
              std::abs(std::exp(model.forward(zq))) > bound)
            ok = false;
        }
      if (ok) { r_ok = r; break; }
    }
    rep.M4 = std::min(rep.M4, r_ok * tp4);

    if (std::abs(t) >= 2.0) {
      double lx = std::log(std::abs(t)), ly = std::log(std::abs(p));
      sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
      ++nfit;
    }
  }
  if (nfit >= 2) {
    double denom = double(nfit) * sxx - sx * sx;
    rep.growth_exponent = denom > 0.0 ? (double(nfit) * sxy - sx * sy) / denom : 0.0;
  }
  return rep;
}

}  // namespace forge

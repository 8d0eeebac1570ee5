#pragma once
// Hyperbolic metric (curvature -1) on plane domains: exact closed forms for
// the half-plane, disk and strip; chart pullback for fitted regions; and the
// two-sided estimates used as certificates elsewhere.

#include <memory>
#include <utility>

#include "forge/chart.hpp"
#include "forge/polygon.hpp"
#include "forge/types.hpp"

namespace forge {

enum class DomainKind { half_plane, unit_disk, strip, chart };

// A domain carrying enough structure for hyperbolic-metric queries.
// half_plane is {Re z > 0}; strip is {|Im z| < half_height}; chart-backed
// domains use the fitted polyline for boundary distance and the disk
// pullback for exact quantities.
struct HypDomain {
  DomainKind kind = DomainKind::half_plane;
  double half_height = pi;
  std::shared_ptr<const ConformalChart> chart;

  static HypDomain half_plane() { return {DomainKind::half_plane, 0.0, nullptr}; }
  static HypDomain unit_disk() { return {DomainKind::unit_disk, 0.0, nullptr}; }
  static HypDomain strip(double h = pi) { return {DomainKind::strip, h, nullptr}; }
  static HypDomain charted(std::shared_ptr<const ConformalChart> c) {
    return {DomainKind::chart, 0.0, std::move(c)};
  }

  bool contains(const cplx& z) const {
    switch (kind) {
      case DomainKind::half_plane: return z.real() > 0.0;
      case DomainKind::unit_disk: return std::abs(z) < 1.0;
      case DomainKind::strip: return std::abs(z.imag()) < half_height;
      case DomainKind::chart: return polygon_contains(chart->nodes(), z);
    }
    return false;
  }

  double boundary_dist(const cplx& z) const {
    switch (kind) {
      case DomainKind::half_plane: return z.real();
      case DomainKind::unit_disk: return 1.0 - std::abs(z);
      case DomainKind::strip: return half_height - std::abs(z.imag());
      case DomainKind::chart: return dist_to_polyline(chart->nodes(), z);
    }
    return 0.0;
  }
};

namespace detail {

inline double dist_hp(const cplx& z, const cplx& w) {
  double q = std::norm(z - w) / (2.0 * z.real() * w.real());
  return std::acosh(1.0 + q);
}

inline double dist_disk(const cplx& z, const cplx& w) {
  double r = std::abs((z - w) / (1.0 - std::conj(w) * z));
  return 2.0 * std::atanh(r);
}

}  // namespace detail

// Hyperbolic distance; exact for the closed-form kinds, disk pullback for
// chart-backed domains (accuracy limited by the chart fit).
inline double exact_distance(const HypDomain& d, const cplx& z, const cplx& w) {
  if (!d.contains(z) || !d.contains(w))
    throw std::invalid_argument("exact_distance: point outside domain");
  switch (d.kind) {
    case DomainKind::half_plane:
      return detail::dist_hp(z, w);
    case DomainKind::unit_disk:
      return detail::dist_disk(z, w);
    case DomainKind::strip: {
      double s = half_pi / d.half_height;
      return detail::dist_hp(std::exp(s * z), std::exp(s * w));
    }
    case DomainKind::chart:
      return detail::dist_disk(d.chart->to_disk(z), d.chart->to_disk(w));
  }
  return 0.0;
}

// Exact density with respect to curvature -1 (half-plane density 1/Re z).
inline double exact_density(const HypDomain& d, const cplx& z) {
  if (!d.contains(z)) throw std::invalid_argument("exact_density: point outside domain");
  switch (d.kind) {
    case DomainKind::half_plane:
      return 1.0 / z.real();
    case DomainKind::unit_disk:
      return 2.0 / (1.0 - std::norm(z));
    case DomainKind::strip: {
      double s = half_pi / d.half_height;
      cplx w = std::exp(s * z);
      return s * std::abs(w) / w.real();
    }
    case DomainKind::chart: {
      cplx dd;
      cplx zeta = d.chart->to_disk_deriv(z, dd);
      return 2.0 / (1.0 - std::norm(zeta)) * std::abs(dd);
    }
  }
  return 0.0;
}

// Two-sided density envelope 1/(2 dist) <= rho <= 2/dist.
inline std::pair<double, double> density_bounds(const HypDomain& d, const cplx& z) {
  double bd = d.boundary_dist(z);
  if (!(bd > 0.0) || !d.contains(z))
    throw std::invalid_argument("density_bounds: point not interior");
  return {1.0 / (2.0 * bd), 2.0 / bd};
}

// Lower bound (1/2) log(1 + |z-w| / dist(z, boundary)).
inline double distance_lower_bound(const HypDomain& d, const cplx& z, const cplx& w) {
  double bd = d.boundary_dist(z);
  if (!(bd > 0.0) || !d.contains(z) || !d.contains(w))
    throw std::invalid_argument("distance_lower_bound: point not interior");
  return 0.5 * std::log1p(std::abs(z - w) / bd);
}

// Euclidean radius delta = Delta * dist(z0, boundary) / 4 whose disk lies in
// the hyperbolic ball of radius Delta about z0, for Delta in (0, 2].
inline double disk_diameter_bound(const HypDomain& d, const cplx& z0, double Delta) {
  if (!(Delta > 0.0) || Delta > 2.0)
    throw std::invalid_argument("disk_diameter_bound: Delta must be in (0, 2]");
  double bd = d.boundary_dist(z0);
  if (!(bd > 0.0) || !d.contains(z0))
    throw std::invalid_argument("disk_diameter_bound: point not interior");
  return Delta * bd / 4.0;
}

// Points along the hyperbolic geodesic from z0 to z1 in a chart-backed
// domain, spaced uniformly in hyperbolic arclength (via the disk model).
inline std::vector<cplx> geodesic_points(const ConformalChart& chart, const cplx& z0,
                                         const cplx& z1, std::size_t n) {
  cplx a = chart.to_disk(z0);
  cplx b = chart.to_disk(z1);
  cplx t = (b - a) / (1.0 - std::conj(a) * b);  // b moved so z0 sits at 0
  double r = std::abs(t);
  if (r >= 1.0) throw numeric_error("geodesic_points: endpoints collapse in disk");
  double L = std::atanh(r);
  std::vector<cplx> out;
  out.reserve(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    double u = std::tanh(L * double(k) / double(n));
    cplx p = (r == 0.0) ? cplx(0.0, 0.0) : t * (u / r);
    cplx zeta = (p + a) / (1.0 + std::conj(a) * p);  // undo the recentering
    out.push_back(chart.from_disk(zeta));
  }
  return out;
}

// Distortion-theorem check: for a map phi from a region V (swept by vertical
// sections of length theta(x)) into the strip {|Im| < pi}, verify
//   Re phi(b) - Re phi(a) >= 2 pi * Int_a^b dx/theta(x) - 2 log 32.
struct AhlforsReport {
  double growth = 0.0;    // Re phi(b) - Re phi(a)
  double integral = 0.0;  // Int_a^b dx / theta(x)
  double rhs = 0.0;       // 2 pi * integral - 2 log 32
  bool hypothesis_met = false;
  bool pass = false;
};

template <typename Map, typename Theta>
AhlforsReport ahlfors_check(Map&& phi, Theta&& theta, double a, double b,
                            std::size_t n_quad = 2000) {
  AhlforsReport rep;
  // Composite Simpson on dx/theta.
  double hstep = (b - a) / double(2 * n_quad);
  double s = 1.0 / theta(a) + 1.0 / theta(b);
  for (std::size_t k = 1; k < 2 * n_quad; ++k)
    s += (k % 2 ? 4.0 : 2.0) / theta(a + hstep * double(k));
  rep.integral = s * hstep / 3.0;
  rep.hypothesis_met = rep.integral >= 0.5;
  cplx pa = phi(cplx(a, 0.0));
  cplx pb = phi(cplx(b, 0.0));
  rep.growth = pb.real() - pa.real();
  rep.rhs = two_pi * rep.integral - 2.0 * std::log(32.0);
  rep.pass = rep.hypothesis_met && rep.growth >= rep.rhs;
  return rep;
}

// Constant appearing in the profile-domain distance estimate: the supremum
// over t >= 2 of 2 log t / log(1 + sqrt(t)/30).
inline double profile_distance_constant() {
  double best = 0.0;
  for (double lt = std::log(2.0); lt <= std::log(1e9); lt += 1e-4) {
    double t = std::exp(lt);
    double v = 2.0 * std::log(t) / std::log1p(std::sqrt(t) / 30.0);
    best = std::max(best, v);
  }
  return best;
}

// Checks specific to charts of the flared domain {x > -14 log_+|y|}:
// conjugation symmetry, confinement of vertical geodesics (those
// perpendicular to and symmetric about the real axis) to annuli around
// their basepoint, and the distance comparison dist(x, z) >= log(x/Re z)/C2.
struct MetricHReport {
  double symmetry_defect = 0.0;   // max |to_disk(conj z) - conj to_disk(z)|
  double real_axis_defect = 0.0;  // max |Im to_disk(x)| over real probes
  double c1 = 1.0;                // smallest annulus factor containing sampled geodesics
  double c2 = 0.0;                // largest observed log(x/Re z) / dist(x, z)
  double c2_analytic = 0.0;       // sup_{t>=2} 2 log t / log(1 + sqrt(t)/30)
  bool pass = false;
};

// Trace the geodesic through z0 that meets the real axis at a right angle,
// returning min and max |z| along it.  In disk coordinates such geodesics
// are circles with real center c orthogonal to the unit circle, so
// c = (|zeta0|^2 + 1) / (2 Re zeta0).
inline std::pair<double, double> vertical_geodesic_range(const ConformalChart& chart,
                                                         const cplx& z0,
                                                         std::size_t n = 400,
                                                         double t_max = 30.0) {
  cplx zeta0 = chart.to_disk(z0);
  if (std::abs(zeta0) >= 1.0) throw std::invalid_argument("vertical_geodesic_range: z0 not interior");
  double u = 0.0;  // the geodesic's crossing point on the real diameter
  if (std::abs(zeta0.real()) > 1e-14) {
    double c = (std::norm(zeta0) + 1.0) / (2.0 * zeta0.real());
    double r = std::sqrt(c * c - 1.0);
    u = 1.0 / (c + (c > 0.0 ? r : -r));
  }
  double lo = std::abs(z0), hi = lo;
  for (std::size_t k = 0; k <= n; ++k) {
    double t = -t_max + 2.0 * t_max * double(k) / double(n);
    cplx v(0.0, std::tanh(0.5 * t));
    double az = std::abs(chart.from_disk((v + u) / (1.0 + u * v)));
    lo = std::min(lo, az);
    hi = std::max(hi, az);
  }
  return {lo, hi};
}

inline MetricHReport metricH_checks(const ConformalChart& chart,
                                    const std::vector<cplx>& samples,
                                    const std::vector<double>& x_values = {2.0, 10.0, 100.0},
                                    double sym_tol = 1e-6) {
  MetricHReport rep;
  rep.c2_analytic = profile_distance_constant();

  for (const cplx& z : samples) {
    cplx d = chart.to_disk(std::conj(z)) - std::conj(chart.to_disk(z));
    rep.symmetry_defect = std::max(rep.symmetry_defect, std::abs(d));
  }
  if (rep.symmetry_defect > sym_tol)
    throw numeric_error("metricH_checks: fit-rejected, chart asymmetric beyond tolerance");

  for (double x : {1.0, 10.0, 100.0})
    rep.real_axis_defect =
        std::max(rep.real_axis_defect, std::abs(chart.to_disk(cplx(x, 0.0)).imag()));

  for (const cplx& z0 : samples) {
    auto [lo, hi] = vertical_geodesic_range(chart, z0);
    double a = std::abs(z0);
    rep.c1 = std::max({rep.c1, hi / a, a / lo});
  }

  for (double x : x_values) {
    if (x < 2.0) continue;
    cplx dx = chart.to_disk(cplx(x, 0.0));
    for (double re : geomspace(1.0, x / 2.0, 8)) {
      for (double im : {0.0, 0.5, 2.0, 8.0, 32.0, 128.0}) {
        if (im > 2.0 * x) continue;
        for (double sgn : {1.0, -1.0}) {
          if (im == 0.0 && sgn < 0.0) continue;
          cplx z(re, sgn * im);
          double dist = detail::dist_disk(dx, chart.to_disk(z));
          if (dist > 0.0)
            rep.c2 = std::max(rep.c2, std::log(x / re) / dist);
        }
      }
    }
  }

  rep.pass = rep.real_axis_defect <= 1e-8 && std::isfinite(rep.c1) &&
             rep.c2 <= rep.c2_analytic;
  return rep;
}

}  // namespace forge

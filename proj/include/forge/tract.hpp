#pragma once
// Chambered half-strip tracts and their uniformizing coordinate.
//
// The tract V is a right half-strip {a > 1/2, |b| < h} with square chambers
// {|a - k w| < w/2, h < |b| < pi} hung above and below the strip (period
// w = 2 pi, strip half-height h = pi/3).  Chamber k communicates with the
// strip through an opening ("slot") of width eps_k * w centered at a = k w
// in the shelf |b| = h; eps_k = 0 removes the chamber entirely, eps_k = 1
// opens it fully, and the starred value 1* additionally removes the shared
// wall between two adjacent starred chambers, merging them.  The whole
// picture is shifted right by R0 >= 0 and truncated on the right so the
// boundary closes up.
//
// Zero-width shelves and shared walls cannot be represented by a Jordan
// polyline, so they are thickened to kappa (default w/500): shelves become
// [h, h + kappa] ledges, shared walls between distinct present chambers are
// inset kappa/2 per side, and openings wider than the inset box are capped.
//
// A conformal isomorphism G from the tract onto the flared comparison
// domain H = {x > -14 log_+ |y|} (hdomain.hpp) is fitted with the chart
// machinery and normalized so G(1) = 1, G'(1) > 0 in unshifted
// coordinates.  On top of G this header provides: level-curve traces
// {Re G = P}, the signed hyperbolic distance from a point to such a curve,
// a probe for the smallest chamber index whose fully opened slot puts the
// chamber marker a unit distance past the curve, cyclic bracketed
// bisection that selects opening fractions to hit prescribed targets
// Re G(zeta_k) = P_k, and a two-sided exponential envelope fit for log|G|.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "forge/chart.hpp"
#include "forge/hdomain.hpp"
#include "forge/hyperbolic.hpp"
#include "forge/polygon.hpp"
#include "forge/types.hpp"

namespace forge {

inline constexpr double tract_w = two_pi;       // chamber period
inline constexpr double tract_h = pi / 3.0;     // strip half-height

// Marker point of chamber k, halfway up the chamber band.
inline cplx zeta_point(std::size_t k) {
  return cplx(double(k) * tract_w, 2.0 * pi / 3.0);
}
inline cplx zeta_point(std::size_t k, double R0) {
  return zeta_point(k) + cplx(R0, 0.0);
}

// --- chamber sequences --------------------------------------------------

struct ChamberValue {
  double eps = 0.0;      // opening fraction in [0, 1]
  bool starred = false;  // fully open, and merges with a starred neighbor

  static ChamberValue closed() { return {0.0, false}; }
  static ChamberValue open(double e) { return {e, false}; }
  static ChamberValue open_star() { return {1.0, true}; }

  bool present() const { return eps != 0.0; }
};

inline bool operator==(const ChamberValue& a, const ChamberValue& b) {
  return a.eps == b.eps && a.starred == b.starred;
}
inline bool operator!=(const ChamberValue& a, const ChamberValue& b) {
  return !(a == b);
}

// Text form used by configs and reports: "0", "0.35", "1", "1*".
inline std::string chamber_to_token(const ChamberValue& v) {
  if (v.starred) return "1*";
  if (v.eps == 0.0) return "0";
  if (v.eps == 1.0) return "1";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v.eps);
  return buf;
}

inline ChamberValue chamber_from_token(const std::string& s) {
  if (s == "1*") return ChamberValue::open_star();
  std::size_t pos = 0;
  double e = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("chamber token: " + s);
  return ChamberValue::open(e);
}

// Opening fractions indexed by chamber number k >= 1.  `truncation` is the
// number of chamber slots realized before the strip is closed off on the
// right; zero means "as many as the value list".
struct ChamberSequence {
  std::vector<ChamberValue> values;  // chamber k at values[k-1]
  std::size_t truncation = 0;

  std::size_t length() const { return truncation ? truncation : values.size(); }

  ChamberValue at(std::size_t k) const {
    if (k == 0) throw std::invalid_argument("chamber index starts at 1");
    return k <= values.size() ? values[k - 1] : ChamberValue::closed();
  }

  void set(std::size_t k, ChamberValue v) {
    if (k == 0) throw std::invalid_argument("chamber index starts at 1");
    if (k > values.size()) values.resize(k);
    values[k - 1] = v;
  }

  void validate() const {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const ChamberValue& v = values[i];
      if (!(v.eps >= 0.0 && v.eps <= 1.0))
        throw std::invalid_argument("chamber " + std::to_string(i + 1) +
                                    ": opening fraction outside [0, 1]");
      if (v.starred && v.eps != 1.0)
        throw std::invalid_argument("chamber " + std::to_string(i + 1) +
                                    ": starred value must have fraction 1");
    }
    if (truncation && truncation < values.size())
      throw std::invalid_argument("truncation shorter than chamber list");
  }
};

inline ChamberSequence zero_sequence(std::size_t n) {
  ChamberSequence s;
  s.values.assign(n, ChamberValue::closed());
  return s;
}

inline ChamberSequence uniform_sequence(std::size_t n, ChamberValue v) {
  ChamberSequence s;
  s.values.assign(n, v);
  return s;
}

// --- tract geometry -----------------------------------------------------

struct TractOptions {
  double kappa = two_pi / 500.0;  // slit thickness
  double spacing = 0.10;          // ambient boundary node spacing
  double ladder_floor = 1.6e-3;   // finest dyadic corner-ladder offset
  bool check_simple = true;       // verify the polyline is simple after build
};

// One maximal group of present chambers whose shared walls are removed
// (runs are singletons unless consecutive values are both starred).
// Coordinates are unshifted (before adding R0).
struct ChamberRun {
  std::size_t k_first = 0, k_last = 0;
  double box_lo = 0.0, box_hi = 0.0;    // chamber box abscissa range
  double slot_lo = 0.0, slot_hi = 0.0;  // opening abscissa range at |b| = h
};

struct TractGeometry {
  double w = tract_w;
  double h = tract_h;
  double kappa = two_pi / 500.0;
  double R0 = 0.0;
  double a_end = 0.0;  // unshifted right truncation abscissa
  ChamberSequence Xi;
  std::vector<ChamberRun> runs;
  Polyline boundary;  // closed, CCW, in shifted coordinates (V + R0)

  // Membership test in shifted coordinates, using the ideal (pre-ladder)
  // union of strip, chamber boxes and slot channels.
  bool contains(const cplx& zs) const {
    double a = zs.real() - R0, b = zs.imag();
    double ab = std::abs(b);
    if (a > 0.5 && a < a_end && ab < h) return true;
    for (const ChamberRun& r : runs) {
      if (a > r.box_lo && a < r.box_hi && ab > h + kappa && ab < pi) return true;
      if (a > r.slot_lo && a < r.slot_hi && ab >= h && ab <= h + kappa) return true;
    }
    return false;
  }

  double boundary_clearance(const cplx& zs) const {
    return dist_to_polyline(boundary, zs);
  }
};

namespace detail {

// Appends p unless it repeats the current last point.
inline void push_vertex(std::vector<cplx>& v, const cplx& p) {
  if (!v.empty() && std::abs(v.back() - p) < 1e-12) return;
  v.push_back(p);
}

// Expands a closed corner polyline with dyadic node ladders clustered into
// both ends of every edge (finest offset `floor`, doubling up to `cap`).
// Interior corners dominate the fit error of a uniformly graded boundary;
// geometric clustering removes an order of magnitude at negligible cost.
inline Polyline ladder_corners(const Polyline& corners, double floor_d, double cap) {
  Polyline out;
  const std::size_t n = corners.size();
  for (std::size_t i = 0; i < n; ++i) {
    const cplx& a = corners[i];
    const cplx& b = corners[(i + 1) % n];
    double len = std::abs(b - a);
    out.push_back(a);
    if (len <= 2.0 * floor_d) continue;
    cplx dir = (b - a) / len;
    std::vector<double> offs;
    for (double d = floor_d; d < std::min(cap, 0.5 * len); d *= 2.0) offs.push_back(d);
    for (double d : offs) out.push_back(a + dir * d);
    for (std::size_t j = offs.size(); j-- > 0;) out.push_back(a + dir * (len - offs[j]));
  }
  return out;
}

}  // namespace detail

// Builds the truncated boundary polyline realizing the chamber sequence,
// shifted right by R0.  `truncation` overrides the sequence's own slot
// count (zero keeps it).  Throws std::invalid_argument for inconsistent
// widths or a self-intersecting result.
inline TractGeometry build_tract(const ChamberSequence& Xi, double R0,
                                 std::size_t truncation = 0,
                                 const TractOptions& opt = {}) {
  Xi.validate();
  if (!(R0 >= 0.0)) throw std::invalid_argument("build_tract: R0 must be >= 0");
  if (!(opt.kappa > 0.0 && opt.kappa < tract_w / 16.0 && opt.kappa < (pi - tract_h) / 8.0))
    throw std::invalid_argument("build_tract: slit thickness out of range");
  if (!(opt.spacing > 2.0 * opt.ladder_floor))
    throw std::invalid_argument("build_tract: spacing must exceed the ladder floor");

  TractGeometry g;
  g.kappa = opt.kappa;
  g.R0 = R0;
  g.Xi = Xi;
  if (truncation) {
    if (truncation < Xi.values.size())
      throw std::invalid_argument("build_tract: truncation shorter than chamber list");
    g.Xi.truncation = truncation;
  }
  const std::size_t N = g.Xi.length();
  if (N < 1) throw std::invalid_argument("build_tract: empty chamber sequence");
  g.a_end = double(N + 1) * g.w;

  // Group present chambers into wall-removal runs and lay out boxes/slots.
  const double min_eps = 2.0 * g.kappa / g.w;  // slot at least two slits wide
  for (std::size_t k = 1; k <= N; ++k) {
    ChamberValue v = g.Xi.at(k);
    if (!v.present()) continue;
    if (v.eps < min_eps)
      throw std::invalid_argument("build_tract: chamber " + std::to_string(k) +
                                  " opening narrower than the slit thickness");
    std::size_t k_last = k;
    while (k_last < N && g.Xi.at(k_last).starred && g.Xi.at(k_last + 1).starred)
      ++k_last;
    ChamberRun r;
    r.k_first = k;
    r.k_last = k_last;
    bool wall_left = k > 1 && g.Xi.at(k - 1).present();
    bool wall_right = k_last < N && g.Xi.at(k_last + 1).present();
    r.box_lo = double(k) * g.w - 0.5 * g.w + (wall_left ? 0.5 * g.kappa : 0.0);
    r.box_hi = double(k_last) * g.w + 0.5 * g.w - (wall_right ? 0.5 * g.kappa : 0.0);
    r.slot_lo = r.box_hi;
    r.slot_hi = r.box_lo;
    for (std::size_t j = k; j <= k_last; ++j) {
      double hw = 0.5 * g.Xi.at(j).eps * g.w;
      r.slot_lo = std::min(r.slot_lo, std::max(double(j) * g.w - hw, r.box_lo));
      r.slot_hi = std::max(r.slot_hi, std::min(double(j) * g.w + hw, r.box_hi));
    }
    if (!(r.slot_lo < r.slot_hi))
      throw std::invalid_argument("build_tract: degenerate opening at chamber " +
                                  std::to_string(k));
    g.runs.push_back(r);
    k = k_last;
  }

  // Eastbound chain along the upper boundary from (1/2, h) to (a_end, h),
  // with an excursion around each chamber run.  The full boundary is this
  // chain conjugated (bottom, walked east), the right wall, and the chain
  // reversed (top, walked west); the left wall closes the polygon.
  std::vector<cplx> top;
  detail::push_vertex(top, cplx(0.5, g.h));
  const double hk = g.h + g.kappa;
  for (const ChamberRun& r : g.runs) {
    detail::push_vertex(top, cplx(r.slot_lo, g.h));
    detail::push_vertex(top, cplx(r.slot_lo, hk));
    detail::push_vertex(top, cplx(r.box_lo, hk));
    detail::push_vertex(top, cplx(r.box_lo, pi));
    detail::push_vertex(top, cplx(r.box_hi, pi));
    detail::push_vertex(top, cplx(r.box_hi, hk));
    detail::push_vertex(top, cplx(r.slot_hi, hk));
    detail::push_vertex(top, cplx(r.slot_hi, g.h));
  }
  detail::push_vertex(top, cplx(g.a_end, g.h));

  Polyline corners;
  for (const cplx& z : top) detail::push_vertex(corners, std::conj(z));
  for (std::size_t j = top.size(); j-- > 0;) detail::push_vertex(corners, top[j]);
  if (std::abs(corners.front() - corners.back()) < 1e-12) corners.pop_back();

  for (cplx& z : corners) z += R0;
  g.boundary = detail::ladder_corners(corners, opt.ladder_floor, opt.spacing);

  if (!is_ccw(g.boundary))
    throw std::invalid_argument("build_tract: boundary orientation failed");
  if (opt.check_simple && !is_simple(g.boundary))
    throw std::invalid_argument("build_tract: boundary polyline self-intersects");
  return g;
}

// --- fitted uniformizing map --------------------------------------------

// Process-cached chart of the truncated comparison domain H.  y_max bounds
// the flare height; the evaluation range is 0.9 * arc radius.
inline std::shared_ptr<const ConformalChart> default_h_chart(
    double y_max = 2.0e4, const std::string& cache_dir = "") {
  static std::mutex mtx;
  static std::map<long long, std::shared_ptr<const ConformalChart>> cache;
  const long long key = llround(y_max * 1024.0);
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  HGeometry hg = make_h_geometry(y_max);
  auto chart = fit_h_chart(hg, cache_dir);
  cache[key] = chart;
  return chart;
}

// Radius within which evaluations on the H side are trusted (clear of the
// truncation arc).
inline double h_chart_limit(const ConformalChart& h) {
  double r = 0.0;
  for (const cplx& z : h.nodes()) r = std::max(r, std::abs(z));
  return 0.9 * r;
}

// The fitted conformal isomorphism from the (shifted) tract onto H,
// normalized to fix the point 1 of the unshifted tract with positive
// derivative.  G works in unshifted coordinates, G0 in shifted ones:
// G0(z) = G(z - R0).
class TractMap {
 public:
  TractMap() = default;
  TractMap(TractGeometry geom, std::shared_ptr<const ConformalChart> v,
           std::shared_ptr<const ConformalChart> h)
      : geom_(std::make_shared<const TractGeometry>(std::move(geom))),
        v_(std::move(v)),
        h_(std::move(h)),
        map_(v_, h_),
        limit_(h_chart_limit(*h_)) {}

  const TractGeometry& geometry() const { return *geom_; }
  const ConformalChart& v_chart() const { return *v_; }
  const ConformalChart& h_chart() const { return *h_; }
  const NormalizedMap& normalized() const { return map_; }
  double range_limit() const { return limit_; }

  cplx G0(const cplx& zs) const { return map_.map(zs); }
  cplx G0_deriv(const cplx& zs, cplx& d) const { return map_.map_deriv(zs, d); }
  cplx G0_inv(const cplx& w) const { return map_.inv(w); }
  cplx G0_inv_deriv(const cplx& w, cplx& d) const { return map_.inv_deriv(w, d); }

  cplx G(const cplx& z) const { return G0(z + cplx(geom_->R0, 0.0)); }
  cplx G_inv(const cplx& w) const { return G0_inv(w) - cplx(geom_->R0, 0.0); }

  // Hyperbolic distance between two points of the tract (shifted coords),
  // computed in the disk model of the fitted chart.
  double dist(const cplx& zs1, const cplx& zs2) const {
    return detail::dist_disk(v_->to_disk(zs1), v_->to_disk(zs2));
  }

 private:
  std::shared_ptr<const TractGeometry> geom_;
  std::shared_ptr<const ConformalChart> v_, h_;
  NormalizedMap map_;
  double limit_ = 0.0;
};

inline TractMap fit_tract_map(const TractGeometry& geom, const TractOptions& opt = {},
                              std::shared_ptr<const ConformalChart> h_chart = nullptr) {
  if (!h_chart) h_chart = default_h_chart();
  const cplx anchor(1.0 + geom.R0, 0.0);
  auto v = std::make_shared<ConformalChart>(
      fit_chart(geom.boundary, opt.spacing, anchor, opt.check_simple));
  v->declare_symmetric();
  return TractMap(geom, std::move(v), std::move(h_chart));
}

// --- level-curve traces -------------------------------------------------

// Sampled preimage of the vertical line {Re = P} under G, in unshifted
// coordinates.  Samples where the inversion fails (outside the realized
// tract, beyond the evaluation range, or failing the re-evaluation test
// |Re G - P| <= 1e-4 P) are kept as gap markers with ok = false.
struct GammaTrace {
  double P = 0.0;
  std::vector<double> ts;
  std::vector<cplx> zs;  // unshifted; NaN at gaps
  std::vector<bool> ok;
  double worst_residual = 0.0;  // max |Re G - P| over valid samples
  std::size_t n_valid = 0;

  std::vector<cplx> points() const {
    std::vector<cplx> out;
    for (std::size_t i = 0; i < zs.size(); ++i)
      if (ok[i]) out.push_back(zs[i]);
    return out;
  }
};

inline GammaTrace trace_gamma_P(const TractMap& tm, double P, double t_lo,
                                double t_hi, double step) {
  if (!(P > 0.0)) throw std::invalid_argument("trace_gamma_P: P must be positive");
  if (!(step > 0.0) || !(t_hi >= t_lo))
    throw std::invalid_argument("trace_gamma_P: bad parameter range");
  GammaTrace tr;
  tr.P = P;
  const std::size_t n = std::size_t(std::floor((t_hi - t_lo) / step + 0.5)) + 1;
  const cplx shift(tm.geometry().R0, 0.0);
  const double tol = 1e-4 * P;
  for (std::size_t i = 0; i < n; ++i) {
    double t = t_lo + double(i) * step;
    tr.ts.push_back(t);
    cplx w(P, t);
    bool good = std::abs(w) < tm.range_limit();
    cplx zs(std::numeric_limits<double>::quiet_NaN(),
            std::numeric_limits<double>::quiet_NaN());
    if (good) {
      zs = tm.G0_inv(w);
      good = finite(zs) && tm.geometry().contains(zs);
      if (good) {
        double res = std::abs(tm.G0(zs).real() - P);
        good = res <= tol;
        if (good) tr.worst_residual = std::max(tr.worst_residual, res);
      }
    }
    tr.zs.push_back(good ? zs - shift : cplx(std::numeric_limits<double>::quiet_NaN(),
                                             std::numeric_limits<double>::quiet_NaN()));
    tr.ok.push_back(good);
    if (good) ++tr.n_valid;
  }
  return tr;
}

// --- signed distance to a level curve -----------------------------------

// delta(z, P): +infinity outside the tract; 0 when Re G(z) is within
// 1e-4 P of P; otherwise the hyperbolic distance from z to the level curve
// {Re G = P}, negative when Re G(z) > P.  The distance is the minimum over
// a sampled trace, refined by golden-section around the discrete
// minimizer; the sampling window is doubled until the minimizer is
// interior.
struct DeltaResult {
  double delta = 0.0;
  double re_gap = 0.0;     // Re G(z) - P
  double t_min = 0.0;      // curve parameter of the nearest point
  cplx nearest{0.0, 0.0};  // nearest curve point, unshifted
  int expansions = 0;
  std::size_t n_valid = 0;
};

inline DeltaResult signed_delta(const TractMap& tm, const cplx& z, double P,
                                double rel_tol = 1e-4) {
  if (!(P > 0.0)) throw std::invalid_argument("signed_delta: P must be positive");
  DeltaResult out;
  const cplx shift(tm.geometry().R0, 0.0);
  const cplx zs = z + shift;
  if (!tm.geometry().contains(zs)) {
    out.delta = std::numeric_limits<double>::infinity();
    out.re_gap = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const cplx w0 = tm.G0(zs);
  out.re_gap = w0.real() - P;
  if (std::abs(out.re_gap) <= rel_tol * P) {
    out.t_min = w0.imag();
    out.nearest = z;
    return out;
  }

  const cplx zd = tm.v_chart().to_disk(zs);
  const double limit = tm.range_limit();
  if (!(P < limit)) throw numeric_error("signed_delta: P beyond evaluation range");
  const double t_cap = std::sqrt(limit * limit - P * P);
  const double t_center = std::min(std::max(w0.imag(), -t_cap), t_cap);

  auto dist_at = [&](double t) -> double {
    cplx w(P, t);
    if (std::abs(w) >= limit) return std::numeric_limits<double>::infinity();
    cplx g = tm.G0_inv(w);
    if (!finite(g) || !tm.geometry().contains(g)) return std::numeric_limits<double>::infinity();
    if (std::abs(tm.G0(g).real() - P) > rel_tol * P) return std::numeric_limits<double>::infinity();
    return forge::detail::dist_disk(zd, tm.v_chart().to_disk(g));
  };

  double T = std::max(8.0, 0.5 * std::abs(t_center));
  const std::size_t n = 129;
  std::vector<double> ts(n), ds(n);
  for (int expand = 0;; ++expand) {
    double lo = std::max(t_center - T, -t_cap);
    double hi = std::min(t_center + T, t_cap);
    std::size_t best = n;
    std::size_t first_valid = n, last_valid = n;
    out.n_valid = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ts[i] = lo + (hi - lo) * double(i) / double(n - 1);
      ds[i] = dist_at(ts[i]);
      if (std::isfinite(ds[i])) {
        if (first_valid == n) first_valid = i;
        last_valid = i;
        ++out.n_valid;
        if (best == n || ds[i] < ds[best]) best = i;
      }
    }
    bool capped_lo = lo <= -t_cap + 1e-12, capped_hi = hi >= t_cap - 1e-12;
    if (out.n_valid == 0) {
      if (capped_lo && capped_hi)
        throw numeric_error("signed_delta: level-curve trace range exhausted");
      T *= 2.0;
      out.expansions = expand + 1;
      continue;
    }
    // Expand while the minimizer sits on an expandable window edge.  A
    // minimizer adjacent to an interior gap (the curve left the domain) is
    // legitimate and only needs the one-sided refinement below.
    bool at_edge = (best == 0 && !capped_lo) || (best == n - 1 && !capped_hi);
    if (at_edge && expand < 9) {
      T *= 2.0;
      out.expansions = expand + 1;
      continue;
    }
    // Golden-section refinement inside the bracketing pair of samples.
    double a = best > first_valid ? ts[best - 1] : ts[best];
    double b = best < last_valid ? ts[best + 1] : ts[best];
    double dmin = ds[best], tmin = ts[best];
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = dist_at(x1), f2 = dist_at(x2);
    for (int it = 0; it < 60 && (b - a) > 1e-10 * (1.0 + std::abs(a)); ++it) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = dist_at(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = dist_at(x2);
      }
    }
    for (auto [t, f] : {std::pair{x1, f1}, std::pair{x2, f2}}) {
      if (f < dmin) {
        dmin = f;
        tmin = t;
      }
    }
    out.t_min = tmin;
    out.nearest = tm.G0_inv(cplx(P, tmin)) - shift;
    out.delta = out.re_gap > 0.0 ? -dmin : dmin;
    return out;
  }
}

// --- smallest usable chamber index --------------------------------------

// For each chamber of the probe sequence in turn (skipping absent ones),
// fully opens that chamber and measures delta at its marker point.  The
// estimate is the smallest index whose delta falls to -1 or below.
struct K0Row {
  std::size_t k = 0;
  double delta = 0.0;
  double re_g = 0.0;
  bool skipped = false;
};

struct K0Result {
  std::size_t k0 = 0;
  bool found = false;
  std::vector<K0Row> rows;
};

inline K0Result k0_estimate(double P, const ChamberSequence& probe, double R0 = 0.0,
                            const TractOptions& opt = {},
                            std::shared_ptr<const ConformalChart> h_chart = nullptr) {
  if (!(P > 0.0)) throw std::invalid_argument("k0_estimate: P must be positive");
  if (!h_chart) h_chart = default_h_chart();
  K0Result out;
  for (std::size_t k = 1; k <= probe.length(); ++k) {
    if (!probe.at(k).present()) {
      out.rows.push_back({k, std::numeric_limits<double>::infinity(),
                          std::numeric_limits<double>::quiet_NaN(), true});
      continue;
    }
    ChamberSequence trial = probe;
    trial.set(k, ChamberValue::open(1.0));
    TractGeometry geom = build_tract(trial, R0, probe.length(), opt);
    TractMap tm = fit_tract_map(geom, opt, h_chart);
    DeltaResult dr = signed_delta(tm, zeta_point(k), P);
    out.rows.push_back({k, dr.delta, dr.re_gap + P, false});
    if (dr.delta <= -1.0) {
      out.k0 = k;
      out.found = true;
      return out;
    }
  }
  throw numeric_error("k0_estimate: truncation too short to reach delta <= -1");
}

// Runs the probe over a sweep of targets and fits the smallest slope c with
// k0(P) <= c log P across the sweep (targets must exceed 1).
struct Kappa2Fit {
  std::vector<double> Ps;
  std::vector<std::size_t> k0s;
  double kappa2 = 0.0;
};

inline Kappa2Fit fit_kappa2(const std::vector<double>& Ps, const ChamberSequence& probe,
                            double R0 = 0.0, const TractOptions& opt = {},
                            std::shared_ptr<const ConformalChart> h_chart = nullptr) {
  Kappa2Fit out;
  for (double P : Ps) {
    if (!(P > 1.0)) throw std::invalid_argument("fit_kappa2: targets must exceed 1");
    K0Result r = k0_estimate(P, probe, R0, opt, h_chart);
    out.Ps.push_back(P);
    out.k0s.push_back(r.k0);
    out.kappa2 = std::max(out.kappa2, double(r.k0) / std::log(P));
  }
  return out;
}

// --- parameter selection ------------------------------------------------

// Thrown when a coordinate loses its sign bracket: the offending chamber
// index is carried along.
struct selection_error : std::runtime_error {
  std::size_t k;
  selection_error(std::size_t k_, const std::string& msg)
      : std::runtime_error(msg), k(k_) {}
};

struct SelectionProblem {
  std::vector<std::size_t> indices;  // chambers whose openings are free
  std::vector<double> targets;       // target Re G(zeta_k), aligned with indices
  ChamberSequence base;              // fixed values elsewhere
  double R0 = 0.0;
  double tolerance = 0.05;   // bound on the worst |delta| at convergence
  double re_tol_rel = 1e-3;  // per-coordinate stop: |Re G - P| <= re_tol_rel * P
  std::size_t max_steps = 40;
  std::size_t max_sweeps = 6;
  double eps_lo = 0.01;  // lower bracket endpoint for every coordinate
  TractOptions topt;
};

struct CoordinateReport {
  std::size_t k = 0;
  double P = 0.0;
  double f_lo = 0.0, f_mid = 0.0, f_hi = 0.0;  // initial bracket values of Re G - P
  bool monotone_ok = false;
  double eps = 0.0;
  double residual = 0.0;  // final |Re G - P|
  double delta = 0.0;     // final signed distance
  std::size_t steps = 0;  // bisection evaluations across all sweeps
};

struct SelectionResult {
  ChamberSequence Xi;
  bool converged = false;
  std::size_t sweeps = 0;
  double worst_delta = 0.0;
  double worst_residual_rel = 0.0;
  std::vector<CoordinateReport> coords;
  TractMap map;
};

inline SelectionResult select_parameters(const SelectionProblem& pr,
                                         std::shared_ptr<const ConformalChart> h_chart = nullptr) {
  pr.base.validate();
  if (pr.indices.size() != pr.targets.size())
    throw std::invalid_argument("select_parameters: index/target length mismatch");
  if (!(pr.tolerance > 0.0) || !(pr.re_tol_rel > 0.0))
    throw std::invalid_argument("select_parameters: tolerances must be positive");
  if (!(pr.eps_lo > 0.0 && pr.eps_lo < 0.5))
    throw std::invalid_argument("select_parameters: eps_lo out of range");
  const std::size_t N = pr.base.length();
  for (std::size_t i = 0; i < pr.indices.size(); ++i) {
    std::size_t k = pr.indices[i];
    if (k < 1 || k > N)
      throw std::invalid_argument("select_parameters: index outside truncation");
    for (std::size_t j = i + 1; j < pr.indices.size(); ++j)
      if (pr.indices[j] == k)
        throw std::invalid_argument("select_parameters: duplicate index");
    if (!(pr.targets[i] > 0.0))
      throw std::invalid_argument("select_parameters: targets must be positive");
  }
  if (!h_chart) h_chart = default_h_chart();

  SelectionResult res;
  res.Xi = pr.base;
  res.Xi.truncation = N;

  TractOptions fast = pr.topt;
  TractMap current;
  bool have_map = false;
  auto refit = [&]() {
    TractGeometry geom = build_tract(res.Xi, pr.R0, N, fast);
    current = fit_tract_map(geom, fast, h_chart);
    have_map = true;
    fast.check_simple = false;  // geometry family validated on first build
  };

  const std::size_t m = pr.indices.size();
  if (m == 0) {
    refit();
    res.converged = true;
    res.map = current;
    return res;
  }

  auto eval_F = [&](std::size_t k, double eps, double P) {
    res.Xi.set(k, ChamberValue::open(eps));
    refit();
    return current.G0(zeta_point(k, pr.R0)).real() - P;
  };

  std::vector<CoordinateReport> reps(m);
  std::vector<double> lo(m), hi(m), eps(m);

  // Bracket phase: verify a sign change over [eps_lo, 1] for every free
  // chamber and record whether the three probes increase monotonically.
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t k = pr.indices[i];
    double P = pr.targets[i];
    CoordinateReport& r = reps[i];
    r.k = k;
    r.P = P;
    r.f_lo = eval_F(k, pr.eps_lo, P);
    r.f_mid = eval_F(k, 0.5, P);
    r.f_hi = eval_F(k, 1.0, P);
    r.steps = 3;
    r.monotone_ok = r.f_lo < r.f_mid && r.f_mid < r.f_hi;
    if (!(r.f_lo < 0.0 && r.f_hi > 0.0))
      throw selection_error(k, "select_parameters: bracket lost at chamber " +
                                   std::to_string(k));
    if (r.f_mid > 0.0) {
      lo[i] = pr.eps_lo;
      hi[i] = 0.5;
    } else {
      lo[i] = 0.5;
      hi[i] = 1.0;
    }
    eps[i] = 0.5 * (lo[i] + hi[i]);
    res.Xi.set(k, ChamberValue::open(eps[i]));
  }

  for (res.sweeps = 1; res.sweeps <= pr.max_sweeps; ++res.sweeps) {
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t k = pr.indices[i];
      double P = pr.targets[i];
      CoordinateReport& r = reps[i];
      double a = lo[i], b = hi[i];
      // Cross-effects from other coordinates can push the root outside the
      // stored interval; re-expand and re-verify the sign bracket if the
      // current midpoint no longer separates.
      double f = eval_F(k, eps[i], P);
      ++r.steps;
      if (std::abs(f) <= pr.re_tol_rel * P) {
        r.eps = eps[i];
        r.residual = std::abs(f);
        continue;
      }
      if (f > 0.0)
        b = eps[i];
      else
        a = eps[i];
      if (!(a < b)) {
        a = std::max(pr.eps_lo, eps[i] - 0.1);
        b = std::min(1.0, eps[i] + 0.1);
      }
      double fa = eval_F(k, a, P);
      double fb = eval_F(k, b, P);
      r.steps += 2;
      if (!(fa < 0.0 && fb > 0.0)) {
        a = pr.eps_lo;
        b = 1.0;
        fa = eval_F(k, a, P);
        fb = eval_F(k, b, P);
        r.steps += 2;
        if (!(fa < 0.0 && fb > 0.0))
          throw selection_error(k, "select_parameters: bracket lost at chamber " +
                                       std::to_string(k));
      }
      std::size_t step = 0;
      double mid = eps[i], fm = f;
      while (step < pr.max_steps && (b - a) > 1e-11) {
        mid = 0.5 * (a + b);
        fm = eval_F(k, mid, P);
        ++step;
        ++r.steps;
        if (std::abs(fm) <= pr.re_tol_rel * P) break;
        if (fm > 0.0)
          b = mid;
        else
          a = mid;
      }
      eps[i] = mid;
      lo[i] = a;
      hi[i] = b;
      r.eps = mid;
      r.residual = std::abs(fm);
      res.Xi.set(k, ChamberValue::open(mid));
    }

    // Sweep appraisal with a single fresh fit: residuals and signed
    // distances for every free chamber.
    refit();
    res.worst_delta = 0.0;
    res.worst_residual_rel = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      CoordinateReport& r = reps[i];
      DeltaResult dr = signed_delta(current, zeta_point(r.k), r.P);
      r.delta = dr.delta;
      r.residual = std::abs(dr.re_gap);
      res.worst_delta = std::max(res.worst_delta, std::abs(dr.delta));
      res.worst_residual_rel = std::max(res.worst_residual_rel, r.residual / r.P);
    }
    if (res.worst_delta <= pr.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.sweeps = std::min(res.sweeps, pr.max_sweeps);
  res.coords = std::move(reps);
  res.map = current;
  return res;
}

// --- growth envelope ----------------------------------------------------

// Fits the smallest two-sided exponential envelope
//   x / C3 - C4 <= log |G(x + i y)| <= C3 x + C4    (x >= x_min)
// over the usable samples: C3 is 1.05 times the extreme slope ratio, C4
// mops up the residual.  Witnesses are the samples attaining each side.
struct SizeWitness {
  cplx z{0.0, 0.0};
  double log_g = 0.0;
  double slack = 0.0;
};

struct SizeOfGReport {
  double C3 = 0.0, C4 = 0.0;
  SizeWitness upper, lower;
  std::size_t n_used = 0, n_skipped = 0;
};

inline SizeOfGReport size_of_G_check(const TractMap& tm, const std::vector<cplx>& samples,
                                     double x_min = tract_w) {
  SizeOfGReport rep;
  const cplx shift(tm.geometry().R0, 0.0);
  std::vector<std::pair<cplx, double>> used;  // (z, log |G(z)|)
  double max_ratio = 0.0, min_ratio = std::numeric_limits<double>::infinity();
  for (const cplx& z : samples) {
    if (z.real() < x_min || !tm.geometry().contains(z + shift)) {
      ++rep.n_skipped;
      continue;
    }
    cplx w = tm.G(z);
    if (!finite(w) || std::abs(w) >= tm.range_limit() || !(std::abs(w) > 1.0)) {
      ++rep.n_skipped;
      continue;
    }
    double L = std::log(std::abs(w));
    used.emplace_back(z, L);
    max_ratio = std::max(max_ratio, L / z.real());
    min_ratio = std::min(min_ratio, L / z.real());
  }
  rep.n_used = used.size();
  if (rep.n_used < 8)
    throw std::invalid_argument("size_of_G_check: fewer than 8 usable samples");
  rep.C3 = 1.05 * std::max(max_ratio, 1.0 / min_ratio);
  rep.C3 = std::max(rep.C3, 1.0 + 1e-9);
  rep.upper.slack = rep.lower.slack = -std::numeric_limits<double>::infinity();
  for (const auto& [z, L] : used) {
    double over = L - rep.C3 * z.real();   // signed use of the upper bound
    double under = z.real() / rep.C3 - L;  // signed use of the lower bound
    if (over > rep.upper.slack) rep.upper = {z, L, over};
    if (under > rep.lower.slack) rep.lower = {z, L, under};
  }
  rep.C4 = std::max({0.0, rep.upper.slack, rep.lower.slack});
  return rep;
}

// Default sample grid for the envelope fit: strip heights plus chamber
// band heights across the usable abscissa range, unshifted coordinates.
inline std::vector<cplx> default_size_samples(const TractGeometry& g,
                                              double x_lo = tract_w, double x_hi = 0.0) {
  if (!(x_hi > x_lo)) x_hi = g.a_end - g.w;
  std::vector<cplx> out;
  const double heights[] = {0.0, 0.5 * g.h, -0.5 * g.h, 0.8 * g.h, -0.8 * g.h,
                            2.0 * pi / 3.0, -2.0 * pi / 3.0};
  for (double x : linspace(x_lo, x_hi, 25))
    for (double y : heights) out.emplace_back(x, y);
  return out;
}

}  // namespace forge

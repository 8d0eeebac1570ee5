#pragma once
// Conformal charts built on ZipperMap.
//
// ConformalChart adds a normalized disk coordinate to a fitted boundary map:
// an interior anchor goes to 0 and the derivative there is positive real.
// NormalizedMap composes two fitted regions through their half-plane frames
// with a real Mobius transformation in between, normalized the same way
// (anchor to anchor, positive derivative).  The half-plane route is used for
// region-to-region maps because it never forms differences of nearly equal
// disk points; for elongated regions the disk coordinate crowds boundary
// arcs below double resolution while the half-plane frames stay honest.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "forge/polygon.hpp"
#include "forge/types.hpp"
#include "forge/zipper.hpp"

namespace forge {

// Mobius transformation with real coefficients: automorphism of the upper
// half-plane when the determinant is positive.
struct RMobius {
  double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

  cplx operator()(const cplx& z) const { return (a * z + b) / (c * z + d); }
  double operator()(double x) const { return (a * x + b) / (c * x + d); }
  double det() const { return a * d - b * c; }
  cplx deriv(const cplx& z) const {
    cplx t = c * z + d;
    return det() / (t * t);
  }
  RMobius inverse() const { return {d, -b, -c, a}; }

  // Matrix product: (lhs * rhs)(z) = lhs(rhs(z)).
  static RMobius compose(const RMobius& l, const RMobius& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
            l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }

  // Affine map sending i to p (Im p > 0).
  static RMobius to_point(const cplx& p) { return {p.imag(), p.real(), 0.0, 1.0}; }

  // Elliptic rotation about i with derivative e^{i theta} there.
  static RMobius rotation(double theta) {
    double c2 = std::cos(theta / 2), s2 = std::sin(theta / 2);
    return {c2, s2, -s2, c2};
  }
};

class ConformalChart {
 public:
  ConformalChart() = default;
  ConformalChart(ZipperMap zip, Polyline nodes, cplx anchor)
      : zip_(std::move(zip)), nodes_(std::move(nodes)), anchor_(anchor) {
    cplx dz;
    cplx a = zip_.map_deriv(anchor_, dz);
    if (!(a.imag() > 0.0)) throw numeric_error("chart: anchor image not in UH");
    // Normalize the half-plane frame so the anchor sits at i.  The affine
    // recentering has real coefficients and O(1) offset (the traversal
    // starts next to the anchor), so deep boundary structure far from the
    // anchor keeps its relative precision.
    c_ = a.real();
    s_ = a.imag();
    cplx cd = cayley_deriv(cplx(0.0, 1.0)) * (dz / s_);
    rot_ = -std::arg(cd);
  }

  // Region -> normalized half-plane frame (anchor at i).
  cplx uh_map(const cplx& z) const { return (zip_.map(z) - c_) / s_; }

  cplx uh_map_deriv(const cplx& z, cplx& deriv) const {
    cplx dz;
    cplx w = zip_.map_deriv(z, dz);
    deriv = dz / s_;
    return (w - c_) / s_;
  }

  // The backward slit composition is fast but can land on the wrong side
  // of a wall when the passage grazes a slit base (deep pocket geometry):
  // a perturbation below the local branch separation flips sqrt branches.
  // Verify every direct preimage against the forward map and fall back to
  // geodesic tracking from the anchor when the residual betrays it.
  cplx uh_inv(const cplx& w) const {
    cplx z = zip_.inv(w * s_ + c_);
    if (inv_accept(z, w)) return z;
    z = uh_inv_tracked(w);
    if (!inv_accept(z, w))
      throw numeric_error("chart: inverse validation failed");
    return z;
  }

  cplx uh_inv_deriv(const cplx& w, cplx& deriv) const {
    cplx z = uh_inv(w);
    cplx d;
    cplx back = uh_map_deriv(z, d);
    if (finite(back) && finite(d) && std::abs(d) > 0.0) {
      deriv = 1.0 / d;
      return z;
    }
    cplx zz = zip_.inv_deriv(w * s_ + c_, d);
    deriv = d * s_;
    return zz;
  }

  // Declares the region conjugation-symmetric with a real anchor.  Disk maps
  // are then averaged with their conjugate-reflected evaluation: exactly
  // equivariant by construction, same accuracy, and the round-trip error
  // only picks up a term quadratic in the (small) asymmetric fit error.
  ConformalChart& declare_symmetric() {
    if (std::abs(anchor_.imag()) > 1e-12)
      throw std::invalid_argument("symmetric chart needs a real anchor");
    sym_ = true;
    return *this;
  }
  bool symmetric() const { return sym_; }

  // Region -> unit disk, anchor -> 0, positive derivative at the anchor.
  cplx to_disk(const cplx& z) const {
    cplx v = to_disk_raw(z);
    if (!sym_) return v;
    return 0.5 * (v + std::conj(to_disk_raw(std::conj(z))));
  }

  cplx to_disk_deriv(const cplx& z, cplx& deriv) const {
    cplx v = to_disk_deriv_raw(z, deriv);
    if (!sym_) return v;
    cplx dc;
    cplx vc = to_disk_deriv_raw(std::conj(z), dc);
    deriv = 0.5 * (deriv + std::conj(dc));
    return 0.5 * (v + std::conj(vc));
  }

  // Unit disk -> region.  For symmetric charts the averaged-raw preimage is
  // polished by Newton iteration on the symmetrized forward map, making
  // from_disk the exact inverse of to_disk instead of an O(asymmetry^2)
  // approximation of it.
  cplx from_disk(const cplx& zeta) const {
    cplx v = from_disk_raw(zeta);
    if (!sym_) return v;
    cplx z = 0.5 * (v + std::conj(from_disk_raw(std::conj(zeta))));
    cplx best = z;
    double best_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 8; ++it) {
      cplx d;
      cplx f = to_disk_deriv(z, d) - zeta;
      double res = std::abs(f);
      if (!finite(f) || !finite(d)) break;
      if (res < best_res) {
        best_res = res;
        best = z;
      }
      if (res <= 1e-15 || !(std::abs(d) > 0.0)) break;
      cplx step = f / d;
      z -= step;
      if (std::abs(step) <= 1e-13 * (1.0 + std::abs(z))) {
        best = z;
        break;
      }
    }
    return best;
  }

  // Boundary vertex images on the unit circle, in traversal order.
  std::vector<cplx> boundary_disk() const {
    std::vector<cplx> out;
    out.reserve(nodes_.size());
    for (double x : boundary_uh()) {
      cplx c = std::isinf(x) ? cplx(1.0, 0.0) : cayley(cplx(x, 0.0));
      out.push_back(rotate(c / std::abs(c)));
    }
    return out;
  }

  // Boundary vertex images on the real axis of the normalized frame.
  std::vector<double> boundary_uh() const {
    std::vector<double> out;
    out.reserve(nodes_.size());
    for (double x : zip_.boundary_uh())
      out.push_back(std::isinf(x) ? x : (x - c_) / s_);
    return out;
  }

  const ZipperMap& zip() const { return zip_; }
  const Polyline& nodes() const { return nodes_; }
  const cplx& anchor() const { return anchor_; }

  void serialize(std::vector<double>& out) const {
    zip_.serialize(out);
    out.push_back(double(nodes_.size()));
    for (const cplx& z : nodes_) {
      out.push_back(z.real());
      out.push_back(z.imag());
    }
    out.push_back(anchor_.real());
    out.push_back(anchor_.imag());
    out.push_back(sym_ ? 1.0 : 0.0);
  }

  static ConformalChart deserialize(const std::vector<double>& in, std::size_t& pos) {
    ZipperMap zm = ZipperMap::deserialize(in, pos);
    std::size_t nn = std::size_t(in.at(pos++));
    Polyline nodes(nn);
    for (auto& z : nodes) {
      z = cplx(in.at(pos), in.at(pos + 1));
      pos += 2;
    }
    cplx anchor(in.at(pos), in.at(pos + 1));
    pos += 2;
    ConformalChart out(std::move(zm), std::move(nodes), anchor);
    if (in.at(pos++) != 0.0) out.declare_symmetric();
    return out;
  }

 private:
  ZipperMap zip_;
  Polyline nodes_;
  cplx anchor_{0.0, 0.0};
  double c_ = 0.0, s_ = 1.0;  // frame affine: w_norm = (w - c)/s
  double rot_ = 0.0;
  bool sym_ = false;

  // A candidate preimage must reproduce the target through the forward map
  // AND sit at the hyperbolically consistent depth.  The residual alone is
  // not enough: distinct near-boundary zones of a crowded frame can agree
  // to below any absolute gate, and the backward composition sometimes
  // lands in the wrong one.  Koebe's theorem pins the right zone: with d
  // the plane distance to the boundary, (2 Im w)/|w'(z)| lies in [d, 4d].
  bool inv_accept(const cplx& z, const cplx& w) const {
    if (!finite(z)) return false;
    cplx dz;
    cplx f = uh_map_deriv(z, dz) - w;
    double gate = 1e-10 * (1.0 + std::abs(w)) + 1e-6 * std::max(w.imag(), 0.0);
    if (!(std::abs(f) <= gate)) return false;
    if (!finite(dz) || !(std::abs(dz) > 0.0)) return false;
    double d = dist_to_polyline(nodes_, z);
    double ratio = 2.0 * w.imag() / std::abs(dz);
    return ratio >= 0.85 * d && ratio <= 4.3 * d;
  }

  // Newton against the forward map toward a target frame point, from a
  // seed expected within one basin.  Returns nothing when it cannot reach
  // the target to local precision.
  std::optional<cplx> newton_to(const cplx& target, cplx z) const {
    double tol = 1e-12 * (1.0 + std::abs(target)) + 1e-8 * std::max(target.imag(), 0.0);
    double best = std::numeric_limits<double>::infinity();
    cplx bz = z;
    for (int it = 0; it < 16; ++it) {
      cplx d;
      cplx f = uh_map_deriv(z, d) - target;
      if (!finite(f) || !finite(d) || !(std::abs(d) > 0.0)) break;
      double res = std::abs(f);
      if (res < best) {
        best = res;
        bz = z;
      }
      if (best <= tol) return bz;
      z -= f / d;
    }
    return best <= tol ? std::optional<cplx>(bz) : std::nullopt;
  }

  // Preimage by continuation along the hyperbolic geodesic from the anchor
  // frame point i to w.  Waypoints at fixed hyperbolic spacing keep every
  // Newton hop inside the previous basin; the forward map is single-valued
  // on the region, so a continuously tracked preimage cannot change branch.
  cplx uh_inv_tracked(const cplx& w) const {
    if (!(w.imag() > 0.0))
      throw numeric_error("chart: inverse target outside the open half-plane");
    const cplx i0(0.0, 1.0);
    std::vector<cplx> path;
    double x = w.real(), y = w.imag();
    if (std::abs(x) <= 1e-12 * (1.0 + y)) {
      // Nearly vertical: geometric ladder in height.
      double span = std::abs(std::log(y));
      int m = std::max(1, int(std::ceil(span / 0.4)));
      for (int j = 1; j <= m; ++j)
        path.push_back(cplx(x * double(j) / m,
                            std::exp(std::log(y) * double(j) / m)));
    } else {
      // Geodesic circle through i and w, centered on the real axis at c.
      // Equal hyperbolic steps are equal steps in u = log tan(theta/2).
      double c = (x * x + y * y - 1.0) / (2.0 * x);
      double R = std::hypot(x - c, y);
      double th1 = std::atan2(1.0, 0.0 - c);
      double th2 = std::atan2(y, x - c);
      double u1 = std::log(std::tan(0.5 * th1));
      double u2 = std::log(std::tan(0.5 * th2));
      int m = std::max(1, int(std::ceil(std::abs(u2 - u1) / 0.4)));
      for (int j = 1; j <= m; ++j) {
        double u = u1 + (u2 - u1) * double(j) / m;
        double th = 2.0 * std::atan(std::exp(u));
        path.push_back(cplx(c + R * std::cos(th), R * std::sin(th)));
      }
    }
    path.back() = w;
    cplx z = anchor_;
    cplx cur = i0;
    for (const cplx& wp : path) {
      double t = 1.0;
      int halves = 0;
      while (true) {
        cplx target = (t == 1.0) ? wp : cur + t * (wp - cur);
        std::optional<cplx> zn = newton_to(target, z);
        if (zn) {
          z = *zn;
          cur = target;
          if (t == 1.0) break;
          t = 1.0;  // try the full remainder from the new foothold
          continue;
        }
        if (++halves >= 60)
          throw numeric_error("chart: inverse tracking stalled");
        t *= 0.5;
      }
    }
    return z;
  }

  cplx to_disk_raw(const cplx& z) const { return rotate(cayley(uh_map(z))); }

  cplx to_disk_deriv_raw(const cplx& z, cplx& deriv) const {
    cplx dz;
    cplx w = uh_map_deriv(z, dz);
    deriv = std::polar(1.0, rot_) * cayley_deriv(w) * dz;
    return rotate(cayley(w));
  }

  cplx from_disk_raw(const cplx& zeta) const {
    cplx t = std::polar(1.0, -rot_) * zeta;
    cplx w = cplx(0.0, 1.0) * (1.0 + t) / (1.0 - t);
    return uh_inv(w);
  }

  // Cayley about i in the normalized frame.
  cplx cayley(const cplx& w) const { return (w - cplx(0.0, 1.0)) / (w + cplx(0.0, 1.0)); }
  cplx cayley_deriv(const cplx& w) const {
    cplx t = w + cplx(0.0, 1.0);
    return cplx(0.0, 2.0) / (t * t);
  }
  cplx rotate(const cplx& z) const { return std::polar(1.0, rot_) * z; }
};

// Fits a chart to a closed boundary polyline.  Long edges are subdivided to
// max_spacing before fitting; the anchor defaults to a computed interior
// point.  The polyline must be counterclockwise and simple.
inline ConformalChart fit_chart(const Polyline& boundary, double max_spacing,
                                std::optional<cplx> anchor = std::nullopt,
                                bool check_simple = true) {
  if (boundary.size() < 16)
    throw std::invalid_argument("fit_chart: boundary needs >= 16 nodes");
  if (check_simple && !is_simple(boundary))
    throw std::invalid_argument("fit_chart: boundary polyline self-intersects");
  Polyline nodes = resample_max_spacing(boundary, max_spacing);
  cplx a = anchor ? *anchor : interior_point(nodes);
  // Start the traversal at the node nearest the anchor: the anchor then
  // lives at O(1) frame coordinates and accumulated roundoff there stays
  // near machine precision, while far boundary structure drifts toward the
  // frame's large-coordinate end where precision is relative, not absolute.
  std::size_t best = 0;
  for (std::size_t j = 1; j < nodes.size(); ++j)
    if (std::abs(nodes[j] - a) < std::abs(nodes[best] - a)) best = j;
  std::rotate(nodes.begin(), nodes.begin() + long(best), nodes.end());
  // The anchor doubles as the closing-orientation probe: the caller
  // guarantees it sits well inside, which a generic probe heuristic cannot.
  ZipperMap zm = ZipperMap::fit(nodes, a);
  return ConformalChart(std::move(zm), std::move(nodes), a);
}

// Normalized conformal isomorphism between two fitted regions:
//   G = zip_dst^{-1} o M o zip_src,
// with M a real Mobius map chosen so G(anchor_src) = anchor_dst and
// G'(anchor_src) is positive real.
class NormalizedMap {
 public:
  NormalizedMap() = default;
  NormalizedMap(std::shared_ptr<const ConformalChart> src,
                std::shared_ptr<const ConformalChart> dst)
      : src_(std::move(src)), dst_(std::move(dst)) {
    // Both frames put their anchor at i, so the connecting Mobius map is a
    // pure rotation about i chosen to zero the derivative argument at the
    // anchor.  No large coefficients, no cancellation.
    m_ = RMobius();
    minv_ = m_;
    cplx dG;
    map_deriv_raw(src_->anchor(), dG);
    m_ = RMobius::rotation(-std::arg(dG));
    minv_ = m_.inverse();
    // With both regions conjugation-symmetric and real anchors, the exact
    // normalized map commutes with conjugation; average with the reflected
    // evaluation so the numerical one does too.
    sym_ = src_->symmetric() && dst_->symmetric();
  }

  cplx map(const cplx& z) const {
    cplx v = map_raw(z);
    if (!sym_) return v;
    return 0.5 * (v + std::conj(map_raw(std::conj(z))));
  }

  cplx map_deriv(const cplx& z, cplx& deriv) const {
    cplx v = map_deriv_raw(z, deriv);
    if (!sym_) return v;
    cplx dc;
    cplx vc = map_deriv_raw(std::conj(z), dc);
    deriv = 0.5 * (deriv + std::conj(dc));
    return 0.5 * (v + std::conj(vc));
  }

  // For the symmetric case the averaged-raw preimage is polished by Newton
  // iteration on the symmetrized forward map, making inv the exact inverse
  // of map (see ConformalChart::from_disk for the same construction).
  cplx inv(const cplx& w) const {
    cplx v = inv_raw(w);
    if (!sym_) return v;
    cplx z = 0.5 * (v + std::conj(inv_raw(std::conj(w))));
    cplx best = z;
    double best_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 8; ++it) {
      cplx d;
      cplx f = map_deriv(z, d) - w;
      double res = std::abs(f);
      if (!finite(f) || !finite(d)) break;
      if (res < best_res) {
        best_res = res;
        best = z;
      }
      if (res <= 1e-14 * (1.0 + std::abs(w)) || !(std::abs(d) > 0.0)) break;
      cplx step = f / d;
      z -= step;
      if (std::abs(step) <= 1e-13 * (1.0 + std::abs(z))) {
        best = z;
        break;
      }
    }
    return best;
  }

  cplx inv_deriv(const cplx& w, cplx& deriv) const {
    if (!sym_) return inv_deriv_raw(w, deriv);
    cplx z = inv(w);
    cplx d;
    map_deriv(z, d);
    if (finite(d) && std::abs(d) > 0.0) {
      deriv = 1.0 / d;
      return z;
    }
    cplx dc;
    cplx v = inv_deriv_raw(w, deriv);
    cplx vc = inv_deriv_raw(std::conj(w), dc);
    deriv = 0.5 * (deriv + std::conj(dc));
    return 0.5 * (v + std::conj(vc));
  }

  const ConformalChart& src() const { return *src_; }
  const ConformalChart& dst() const { return *dst_; }
  const RMobius& mobius() const { return m_; }

 private:
  std::shared_ptr<const ConformalChart> src_, dst_;
  RMobius m_, minv_;
  bool sym_ = false;

  cplx map_raw(const cplx& z) const { return dst_->uh_inv(m_(src_->uh_map(z))); }

  cplx map_deriv_raw(const cplx& z, cplx& deriv) const {
    cplx ds;
    cplx w = src_->uh_map_deriv(z, ds);
    cplx u = m_(w);
    cplx du = m_.deriv(w);
    cplx dd;
    cplx out = dst_->uh_inv_deriv(u, dd);
    deriv = dd * du * ds;
    return out;
  }

  cplx inv_raw(const cplx& w) const { return src_->uh_inv(minv_(dst_->uh_map(w))); }

  cplx inv_deriv_raw(const cplx& w, cplx& deriv) const {
    cplx dd;
    cplx u = dst_->uh_map_deriv(w, dd);
    cplx t = minv_(u);
    cplx dt = minv_.deriv(u);
    cplx ds;
    cplx out = src_->uh_inv_deriv(t, ds);
    deriv = ds * dt * dd;
    return out;
  }
};

// --- conjugation-equivariant charts ---------------------------------------

namespace detail {

// Hyperbolic distance between two points of the upper half-plane frame.
// Extended precision, with nothing squared: deep frame zones live at
// e^{+-thousands} and any product of two coordinates can overflow.
inline double dist_uh(const lcplx& w1, const lcplx& w2) {
  if (!(w1.imag() > 0.0L) || !(w2.imag() > 0.0L))
    return std::numeric_limits<double>::infinity();
  ldbl num = std::abs(w1 - w2);
  if (num == 0.0L) return 0.0;
  ldbl den = 2.0L * std::sqrt(w1.imag()) * std::sqrt(w2.imag());
  ldbl r = num / den;
  if (std::isinf(r)) return double(2.0L * (std::log(num) - std::log(den)));
  return double(2.0L * std::asinh(r));
}

}  // namespace detail

// Chart of a region symmetric about the real axis, conjugation-equivariant
// by construction.  Only the upper half-region is fitted: its boundary is
// the chain above the axis plus the axis segment [a, b] between the two
// real crossings.  The zipper maps the half-region to a frame where the
// segment occupies a real interval with endpoint images alpha, beta; the
// real Mobius ratio M(u) = (u - alpha)/(beta - u) carries that interval to
// (0, inf), and u -> i sqrt(M(u)) opens the half-region frame into the
// quarter-plane {Re < 0, Im > 0}.  The lower half of the region is reached
// through the reflection F(conj z) := -conj F(z), exact in floating point,
// and a real scaling puts the real interior anchor at i.
//
// Why not fit the whole boundary and average with the reflected
// evaluation: a full fit determines the frame only up to a small rotation
// about i, and near the frame origin a rotation shifts coordinates by an
// absolute amount (half the angle).  Boundary features that map below that
// scale -- deep pockets always do -- land in the wrong place entirely, and
// no averaging of the two evaluations can repair it.  The half fit never
// represents the rotation, so the failure mode does not exist; the node
// count halves and every frame exponent halves under the square root, too.
class SymChart {
 public:
  SymChart() = default;
  SymChart(ZipperMap chi, Polyline half, cplx anchor, cplx chi_anchor,
           std::size_t idx_a, std::size_t idx_b)
      : chi_(std::move(chi)),
        half_nodes_(std::move(half)),
        anchor_(anchor),
        chi_anchor_(chi_anchor),
        idx_a_(idx_a),
        idx_b_(idx_b) {
    const std::vector<ldbl>& uh = chi_.boundary_uh_ld();
    alpha_ = uh.at(idx_a_);
    beta_ = uh.at(idx_b_);
    if (!std::isfinite(alpha_) || !std::isfinite(beta_))
      throw numeric_error("sym chart: axis crossing at frame infinity");
    // Frame orientation: the interior probe must open into the upper
    // half-plane; the two Mobius conventions differ by the frame inversion
    // w -> -1/w, and exactly one of them does.
    lcplx up = chi_.map_ld(chi_anchor_);
    flip_ = false;
    if (!(mob(up).imag() > 0.0L)) {
      flip_ = true;
      if (!(mob(up).imag() > 0.0L))
        throw numeric_error("sym chart: cannot orient the frame");
    }
    lcplx ua = chi_.map_ld(anchor_);
    ldbl ma = mob(lcplx(ua.real(), 0.0L)).real();
    if (!(ma > 0.0L)) throw numeric_error("sym chart: anchor image off the axis ray");
    t0_ = std::sqrt(ma);
    // Mirror the chain (walked b -> a in the half traversal) into the full
    // closed boundary, counterclockwise, for containment and distance gates.
    const std::size_t n = half_nodes_.size();
    std::vector<cplx> chain;
    for (std::size_t j = idx_b_;; j = (j + 1) % n) {
      chain.push_back(half_nodes_[j]);
      if (j == idx_a_) break;
      if (chain.size() > n) throw numeric_error("sym chart: crossing indices disordered");
    }
    full_nodes_ = chain;
    for (std::size_t j = chain.size() - 1; j-- > 1;)
      full_nodes_.push_back(std::conj(chain[j]));
  }

  const cplx& anchor() const { return anchor_; }
  const cplx& chi_anchor() const { return chi_anchor_; }
  const Polyline& nodes() const { return full_nodes_; }
  const Polyline& half_nodes() const { return half_nodes_; }
  const ZipperMap& chi() const { return chi_; }

  // Region -> normalized equivariant frame (anchor at i).
  lcplx uh_map(const cplx& z) const {
    if (z.imag() >= 0.0) return up_map(z);
    return -std::conj(up_map(std::conj(z)));
  }

  lcplx uh_map_deriv(const cplx& z, lcplx& deriv) const {
    if (z.imag() >= 0.0) return up_map_deriv(z, deriv);
    lcplx dc;
    lcplx wu = up_map_deriv(std::conj(z), dc);
    deriv = -std::conj(dc);
    return -std::conj(wu);
  }

  // Frame -> region, verified: the direct preimage must reproduce the
  // target through the forward map and sit at the hyperbolically
  // consistent depth (Koebe), else continuation along the geodesic from
  // the anchor recovers it.  Throws when both fail.
  cplx uh_inv(const lcplx& w) const {
    cplx z = direct_inv(w);
    if (inv_accept(z, w)) return z;
    z = tracked_inv(w);
    if (!inv_accept(z, w))
      throw numeric_error("chart: inverse validation failed");
    return z;
  }

  cplx uh_inv_deriv(const lcplx& w, lcplx& deriv) const {
    cplx z = uh_inv(w);
    lcplx d;
    uh_map_deriv(z, d);
    deriv = 1.0L / d;
    return z;
  }

  void serialize(std::vector<double>& out) const {
    chi_.serialize(out);
    out.push_back(double(half_nodes_.size()));
    for (const cplx& z : half_nodes_) {
      out.push_back(z.real());
      out.push_back(z.imag());
    }
    out.push_back(anchor_.real());
    out.push_back(anchor_.imag());
    out.push_back(chi_anchor_.real());
    out.push_back(chi_anchor_.imag());
    out.push_back(double(idx_a_));
    out.push_back(double(idx_b_));
  }

  static SymChart deserialize(const std::vector<double>& in, std::size_t& pos) {
    ZipperMap zm = ZipperMap::deserialize(in, pos);
    std::size_t nn = std::size_t(in.at(pos++));
    Polyline half(nn);
    for (auto& z : half) {
      z = cplx(in.at(pos), in.at(pos + 1));
      pos += 2;
    }
    cplx anchor(in.at(pos), in.at(pos + 1));
    pos += 2;
    cplx chi_anchor(in.at(pos), in.at(pos + 1));
    pos += 2;
    std::size_t ia = std::size_t(in.at(pos++));
    std::size_t ib = std::size_t(in.at(pos++));
    return SymChart(std::move(zm), std::move(half), anchor, chi_anchor, ia, ib);
  }

 private:
  ZipperMap chi_;
  Polyline half_nodes_;
  Polyline full_nodes_;
  cplx anchor_{1.0, 0.0};
  cplx chi_anchor_{0.0, 0.0};
  std::size_t idx_a_ = 0, idx_b_ = 0;
  ldbl alpha_ = 0.0L, beta_ = 0.0L, t0_ = 1.0L;
  bool flip_ = false;

  lcplx mob(const lcplx& u) const {
    return flip_ ? (u - beta_) / (alpha_ - u) : (u - alpha_) / (beta_ - u);
  }
  lcplx mob_deriv(const lcplx& u) const {
    if (flip_) {
      lcplx t = alpha_ - u;
      return (alpha_ - beta_) / (t * t);
    }
    lcplx t = beta_ - u;
    return (beta_ - alpha_) / (t * t);
  }
  lcplx mob_inv(const lcplx& m) const {
    return flip_ ? (alpha_ * m + beta_) / (m + 1.0L) : (beta_ * m + alpha_) / (m + 1.0L);
  }

  lcplx up_map(const cplx& z) const {
    lcplx u = chi_.map_ld(z);
    if (z.imag() == 0.0) u = lcplx(u.real(), 0.0L);
    lcplx w = lcplx(0.0L, 1.0L) * std::sqrt(mob(u));
    return w / t0_;
  }

  lcplx up_map_deriv(const cplx& z, lcplx& deriv) const {
    lcplx du;
    lcplx u = chi_.map_deriv_ld(z, du);
    if (z.imag() == 0.0) u = lcplx(u.real(), 0.0L);
    lcplx sq = std::sqrt(mob(u));
    deriv = lcplx(0.0L, 1.0L) * mob_deriv(u) / (2.0L * sq) * du / t0_;
    return lcplx(0.0L, 1.0L) * sq / t0_;
  }

  cplx up_inv(const lcplx& w) const {
    lcplx t = t0_ * w;
    lcplx u = mob_inv(-(t * t));
    return chi_.inv_ld(u);
  }

  cplx direct_inv(const lcplx& w) const {
    if (w.real() < 0.0L) return up_inv(w);
    if (w.real() > 0.0L) return std::conj(up_inv(-std::conj(w)));
    cplx z = up_inv(w);
    return cplx(z.real(), 0.0);
  }

  bool inv_accept(const cplx& z, const lcplx& w) const {
    if (!finite(z)) return false;
    lcplx d;
    lcplx f = uh_map_deriv(z, d) - w;
    ldbl gate = 1e-10L * (1.0L + std::abs(w)) + 1e-6L * std::max(w.imag(), 0.0L);
    if (!(std::abs(f) <= gate)) return false;
    ldbl ad = std::abs(d);
    if (!(ad > 0.0L) || std::isinf(ad)) return false;
    double dd = dist_to_polyline(full_nodes_, z);
    double ratio = double(2.0L * w.imag() / ad);
    return ratio >= 0.85 * dd && ratio <= 4.3 * dd;
  }

  std::optional<cplx> newton_to(const lcplx& target, cplx z) const {
    ldbl tol = 1e-12L * (1.0L + std::abs(target)) + 1e-8L * std::max(target.imag(), 0.0L);
    ldbl best = std::numeric_limits<ldbl>::infinity();
    cplx bz = z;
    for (int it = 0; it < 16; ++it) {
      lcplx d;
      lcplx f = uh_map_deriv(z, d) - target;
      if (!detail::lfinite(f) || !detail::lfinite(d) || !(std::abs(d) > 0.0L)) break;
      ldbl res = std::abs(f);
      if (res < best) {
        best = res;
        bz = z;
      }
      if (best <= tol) return bz;
      lcplx step = f / d;
      z -= cplx(double(step.real()), double(step.imag()));
    }
    return best <= tol ? std::optional<cplx>(bz) : std::nullopt;
  }

  cplx tracked_inv(const lcplx& w) const {
    if (!(w.imag() > 0.0L))
      throw numeric_error("chart: inverse target outside the open half-plane");
    std::vector<lcplx> path;
    ldbl x = w.real(), y = w.imag();
    if (std::abs(x) <= 1e-12L * (1.0L + y)) {
      ldbl span = std::abs(std::log(y));
      int m = std::max(1, int(std::ceil(double(span) / 0.4)));
      for (int j = 1; j <= m; ++j)
        path.push_back(lcplx(x * ldbl(j) / ldbl(m),
                             std::exp(std::log(y) * ldbl(j) / ldbl(m))));
    } else {
      // Geodesic circle through i and w, centered on the real axis; the
      // center is formed from ratios so the magnitude is never squared.
      // Equal hyperbolic steps are equal steps in u = log tan(theta/2).
      ldbl aw = std::abs(w);
      ldbl c = aw * (aw / (2.0L * x)) - 1.0L / (2.0L * x);
      ldbl R = std::hypot(x - c, y);
      ldbl th1 = std::atan2(1.0L, -c);
      ldbl th2 = std::atan2(y, x - c);
      ldbl u1 = std::log(std::tan(0.5L * th1));
      ldbl u2 = std::log(std::tan(0.5L * th2));
      int m = std::max(1, int(std::ceil(double(std::abs(u2 - u1)) / 0.4)));
      for (int j = 1; j <= m; ++j) {
        ldbl u = u1 + (u2 - u1) * ldbl(j) / ldbl(m);
        ldbl th = 2.0L * std::atan(std::exp(u));
        path.push_back(lcplx(c + R * std::cos(th), R * std::sin(th)));
      }
    }
    path.back() = w;
    cplx z = anchor_;
    lcplx cur(0.0L, 1.0L);
    for (const lcplx& wp : path) {
      ldbl t = 1.0L;
      int halves = 0;
      while (true) {
        lcplx target = (t == 1.0L) ? wp : cur + t * (wp - cur);
        std::optional<cplx> zn = newton_to(target, z);
        if (zn) {
          z = *zn;
          cur = target;
          if (t == 1.0L) break;
          t = 1.0L;  // try the full remainder from the new foothold
          continue;
        }
        if (++halves >= 60)
          throw numeric_error("chart: inverse tracking stalled");
        t *= 0.5L;
      }
    }
    return z;
  }
};

// Fits an equivariant chart from the closed boundary of the upper
// half-region: the polyline must run along the axis from the left crossing
// (a_x, 0) to the right crossing (b_x, 0) and return through the chain
// above the axis, counterclockwise.  The node layout is the caller's (no
// resampling happens here).  chi_anchor seeds the half fit and must lie
// well inside the half-region; anchor is the real point sent to i.
//
// frame_hint picks where the traversal starts (the nearest chain node),
// and through that where the fitted frame places its two distinguished
// points: node 0 maps to frame infinity and its predecessor to frame zero.
// Boundary zones harmonically far from those pins crowd onto a *generic*
// finite frame point, where floating point resolves neighbor separations
// only absolutely -- separations shrink exponentially with harmonic depth
// and drown at ~1e-19 of the cluster magnitude.  Near the 0 / infinity
// pins the representation is logarithmic and every scale band keeps full
// relative precision.  So the hint must be placed in the *deepest* zone
// the chart needs to resolve (for elongated regions: the far end); by
// default it falls back to chi_anchor, which suits compact regions.
inline SymChart fit_sym_chart(const Polyline& half_boundary, double a_x, double b_x,
                              const cplx& anchor, const cplx& chi_anchor,
                              bool check_simple = true,
                              std::optional<cplx> frame_hint = std::nullopt) {
  if (half_boundary.size() < 8)
    throw std::invalid_argument("fit_sym_chart: boundary needs >= 8 nodes");
  if (!(a_x < b_x))
    throw std::invalid_argument("fit_sym_chart: crossings must satisfy a < b");
  if (anchor.imag() != 0.0 || !(anchor.real() > a_x && anchor.real() < b_x))
    throw std::invalid_argument("fit_sym_chart: anchor must be real inside (a, b)");
  if (!(chi_anchor.imag() > 0.0))
    throw std::invalid_argument("fit_sym_chart: interior probe must be above the axis");
  if (!is_ccw(half_boundary))
    throw std::invalid_argument("fit_sym_chart: boundary must be ccw");
  if (check_simple && !is_simple(half_boundary))
    throw std::invalid_argument("fit_sym_chart: boundary polyline self-intersects");
  Polyline nodes = half_boundary;
  // Traversal starts at the chain node nearest the hint (axis nodes are
  // excluded so both crossings keep finite frame images).
  const cplx hint = frame_hint.value_or(chi_anchor);
  std::size_t best = nodes.size();
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (!(nodes[j].imag() > 0.0)) continue;
    if (best == nodes.size() ||
        std::abs(nodes[j] - hint) < std::abs(nodes[best] - hint))
      best = j;
  }
  if (best == nodes.size())
    throw std::invalid_argument("fit_sym_chart: no chain nodes above the axis");
  std::rotate(nodes.begin(), nodes.begin() + long(best), nodes.end());
  std::size_t idx_a = nodes.size(), idx_b = nodes.size();
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    if (nodes[j].imag() != 0.0) continue;
    if (nodes[j].real() == a_x) idx_a = j;
    if (nodes[j].real() == b_x) idx_b = j;
  }
  if (idx_a == nodes.size() || idx_b == nodes.size())
    throw std::invalid_argument("fit_sym_chart: axis crossings missing from the boundary");
  ZipperMap zm = ZipperMap::fit(nodes, chi_anchor);
  return SymChart(std::move(zm), std::move(nodes), anchor, chi_anchor, idx_a, idx_b);
}

// Normalized conformal isomorphism between two equivariant regions:
// anchors correspond, the real axis maps to the real axis, and the map
// commutes with conjugation exactly.  No connecting Mobius transformation
// exists to tune: the identity is the only equivariant frame automorphism
// fixing i.
class SymMap {
 public:
  SymMap() = default;
  SymMap(std::shared_ptr<const SymChart> src, std::shared_ptr<const SymChart> dst)
      : src_(std::move(src)), dst_(std::move(dst)) {}

  cplx map(const cplx& z) const { return dst_->uh_inv(src_->uh_map(z)); }

  cplx map_deriv(const cplx& z, cplx& deriv) const {
    lcplx ds;
    lcplx w = src_->uh_map_deriv(z, ds);
    cplx out = dst_->uh_inv(w);
    lcplx dd;
    dst_->uh_map_deriv(out, dd);
    lcplx q = ds / dd;
    deriv = cplx(double(q.real()), double(q.imag()));
    return out;
  }

  // Inverse through the swapped composition, polished by Newton iteration
  // on the forward composite so the round trip closes to machine scale.
  cplx inv(const cplx& w) const {
    cplx z = src_->uh_inv(dst_->uh_map(w));
    cplx best = z;
    double best_res = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 8; ++it) {
      cplx d;
      cplx f = map_deriv(z, d) - w;
      double res = std::abs(f);
      if (!finite(f) || !finite(d)) break;
      if (res < best_res) {
        best_res = res;
        best = z;
      }
      if (res <= 1e-14 * (1.0 + std::abs(w)) || !(std::abs(d) > 0.0)) break;
      cplx step = f / d;
      z -= step;
      if (std::abs(step) <= 1e-13 * (1.0 + std::abs(z))) {
        best = z;
        break;
      }
    }
    return best;
  }

  cplx inv_deriv(const cplx& w, cplx& deriv) const {
    cplx z = inv(w);
    cplx d;
    map_deriv(z, d);
    if (finite(d) && std::abs(d) > 0.0) {
      deriv = 1.0 / d;
      return z;
    }
    lcplx dd;
    lcplx u = dst_->uh_map_deriv(w, dd);
    lcplx dsrc;
    cplx out = src_->uh_inv_deriv(u, dsrc);
    lcplx q = dsrc * dd;
    deriv = cplx(double(q.real()), double(q.imag()));
    return out;
  }

  const SymChart& src() const { return *src_; }
  const SymChart& dst() const { return *dst_; }

 private:
  std::shared_ptr<const SymChart> src_, dst_;
};

// --- binary chart cache -------------------------------------------------

inline constexpr char kChartMagic[8] = {'F', 'R', 'G', 'C', 'H', 'R', 'T', '2'};
inline constexpr char kSymChartMagic[8] = {'F', 'R', 'G', 'C', 'H', 'R', 'T', '3'};

inline uint64_t chart_fingerprint(const Polyline& boundary, double max_spacing,
                                  const cplx& anchor) {
  std::vector<double> v;
  v.reserve(boundary.size() * 2 + 3);
  for (const cplx& z : boundary) {
    v.push_back(z.real());
    v.push_back(z.imag());
  }
  v.push_back(max_spacing);
  v.push_back(anchor.real());
  v.push_back(anchor.imag());
  return fnv1a_doubles(v);
}

inline void save_chart(const std::string& path, const ConformalChart& chart,
                       uint64_t key) {
  std::vector<double> data;
  chart.serialize(data);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write chart cache: " + path);
  std::fwrite(kChartMagic, 1, 8, f);
  uint64_t n = data.size();
  std::fwrite(&key, sizeof key, 1, f);
  std::fwrite(&n, sizeof n, 1, f);
  std::fwrite(data.data(), sizeof(double), data.size(), f);
  std::fclose(f);
}

inline std::optional<ConformalChart> load_chart(const std::string& path,
                                                uint64_t key) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return std::nullopt;
  char magic[8];
  uint64_t k = 0, n = 0;
  bool ok = std::fread(magic, 1, 8, f) == 8 &&
            std::equal(magic, magic + 8, kChartMagic) &&
            std::fread(&k, sizeof k, 1, f) == 1 && k == key &&
            std::fread(&n, sizeof n, 1, f) == 1 && n < (1u << 28);
  std::optional<ConformalChart> out;
  if (ok) {
    std::vector<double> data(n);
    if (std::fread(data.data(), sizeof(double), n, f) == n) {
      std::size_t pos = 0;
      try {
        out = ConformalChart::deserialize(data, pos);
      } catch (const std::exception&) {
        out.reset();
      }
    }
  }
  std::fclose(f);
  return out;
}

inline void save_sym_chart(const std::string& path, const SymChart& chart,
                           uint64_t key) {
  std::vector<double> data;
  chart.serialize(data);
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write chart cache: " + path);
  std::fwrite(kSymChartMagic, 1, 8, f);
  uint64_t n = data.size();
  std::fwrite(&key, sizeof key, 1, f);
  std::fwrite(&n, sizeof n, 1, f);
  std::fwrite(data.data(), sizeof(double), data.size(), f);
  std::fclose(f);
}

inline std::optional<SymChart> load_sym_chart(const std::string& path,
                                              uint64_t key) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) return std::nullopt;
  char magic[8];
  uint64_t k = 0, n = 0;
  bool ok = std::fread(magic, 1, 8, f) == 8 &&
            std::equal(magic, magic + 8, kSymChartMagic) &&
            std::fread(&k, sizeof k, 1, f) == 1 && k == key &&
            std::fread(&n, sizeof n, 1, f) == 1 && n < (1u << 28);
  std::optional<SymChart> out;
  if (ok) {
    std::vector<double> data(n);
    if (std::fread(data.data(), sizeof(double), n, f) == n) {
      std::size_t pos = 0;
      try {
        out = SymChart::deserialize(data, pos);
      } catch (const std::exception&) {
        out.reset();
      }
    }
  }
  std::fclose(f);
  return out;
}

}  // namespace forge

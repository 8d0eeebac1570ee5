#pragma once
// Boundary-composition conformal mapping (geodesic variant).
//
// Given the vertices of a closed simple polyline traversed counterclockwise,
// ZipperMap::fit builds a conformal map from the enclosed region onto the
// upper half-plane as a composition of elementary maps:
//
//   phi_1(z) = i*sqrt((z - z1)/(z - z0))         opens the first edge,
//   f_a(z)   = s(m(z)),  m(z) = z/(1 - z/d),     pulls the geodesic from 0
//              s(z) = sqrt(z^2 + h^2)            to the next vertex down to R,
//   closing  = Mobius (0,p_inf)->(0,inf), then +/- z^2.
//
// All elementary maps have real coefficients, so the composition commutes
// with conjugation and preserves the relative accuracy of points close to
// the real axis in every intermediate frame.  Coordinates in intermediate
// frames may span thousands of orders of magnitude for elongated regions or
// regions with deep folds (a hairpin of length L and thickness t inflates
// the frame by roughly e^{L/t}); that is expected, which is why the whole
// composition runs in extended precision: the 15-bit exponent buys a
// dynamic range of about e^{+-11350}, and every coefficient is formed from
// ratios so nothing is squared on the way up.  Final frame coordinates are
// on the order of e^{d} for hyperbolic distance d from the first edge, so
// the public double interface is never the bottleneck.  Disk-facing charts
// wrap this class, see chart.hpp.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "forge/polygon.hpp"
#include "forge/types.hpp"

namespace forge {

using ldbl = long double;
using lcplx = std::complex<long double>;

struct ZipStep {
  ldbl d = 0.0L;   // Mobius pole parameter (unused when vertical)
  ldbl h = 0.0L;   // slit height
  bool vertical = false;
};

namespace detail {

inline bool is_inf(const cplx& z) {
  return std::isinf(z.real()) || std::isinf(z.imag());
}

inline bool lfinite(const lcplx& z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

// s(w) = sqrt(w^2 + h^2), branch cut on the segment [-ih, ih]; equals
// w*sqrt(1 + (h/w)^2) which picks the two slit sides correctly by itself.
inline lcplx slit_fwd(const lcplx& w, ldbl h) {
  ldbl aw = std::abs(w);
  if (aw < h * 1e-100L) {
    // Series around the slit base; side chosen by the sign of Re(w).
    ldbl s = (w.real() >= 0.0L) ? 1.0L : -1.0L;
    return s * (h + w * w / (2.0L * h));
  }
  lcplx q = h / w;
  return w * std::sqrt(1.0L + q * q);
}

// Inverse branch: sqrt(w^2 - h^2) mapping UH onto UH minus the slit [0, ih].
inline lcplx slit_inv(const lcplx& w, ldbl h) {
  ldbl aw = std::abs(w);
  if (aw < h * 1e-100L) return lcplx(0.0L, h) + w * w / lcplx(0.0L, 2.0L * h);
  lcplx q = h / w;
  return w * std::sqrt(1.0L - q * q);
}

inline ldbl real_slit_fwd(ldbl x, ldbl h) {
  ldbl s = std::hypot(x, h);
  return x >= 0.0L ? s : -s;
}

// Encode an extended-precision value into doubles (two mantissa limbs plus
// the binary exponent) so the full 64-bit significand and 15-bit exponent
// survive a double-only container.
inline void pack_ld(std::vector<double>& out, ldbl v) {
  if (!std::isfinite(v)) {
    out.push_back(double(v));  // +-inf / nan pass through limb 0
    out.push_back(0.0);
    out.push_back(0.0);
    return;
  }
  int e = 0;
  ldbl m = std::frexp(v, &e);
  double hi = double(m);
  double lo = double(m - ldbl(hi));
  out.push_back(hi);
  out.push_back(lo);
  out.push_back(double(e));
}

inline ldbl unpack_ld(const std::vector<double>& in, std::size_t& pos) {
  double hi = in.at(pos);
  double lo = in.at(pos + 1);
  double e = in.at(pos + 2);
  pos += 3;
  if (!std::isfinite(hi)) return ldbl(hi);
  return std::ldexp(ldbl(hi) + ldbl(lo), int(e));
}

}  // namespace detail

class ZipperMap {
 public:
  // Fits the map from the polygon interior onto the upper half-plane.
  // The polyline must be simple and counterclockwise.  probe_hint, when
  // given, must be a point well inside the region; it is preferred for the
  // closing-orientation vote (see below).
  static ZipperMap fit(const Polyline& nodes,
                       std::optional<cplx> probe_hint = std::nullopt) {
    if (nodes.size() < 4) throw std::invalid_argument("zipper: need >= 4 nodes");
    if (!is_ccw(nodes)) throw std::invalid_argument("zipper: polyline must be ccw");

    ZipperMap zm;
    zm.z0_ = nodes[0];
    zm.z1_ = nodes[1];
    const std::size_t n = nodes.size();
    zm.steps_.reserve(n - 2);

    // Current images: pending vertices as complex points in UH; absorbed
    // vertices as a pair of boundary values (one per slit side).
    std::vector<lcplx> pend(n);
    std::vector<ldbl> side_a(n, 0.0L), side_b(n, 0.0L);
    std::vector<bool> absorbed(n, false);

    for (std::size_t j = 2; j < n; ++j) pend[j] = zm.first_map(nodes[j]);
    // Vertex 0 is the pole of phi_1; its boundary passage starts at infinity.
    ldbl pass_inf = std::numeric_limits<ldbl>::infinity();
    absorbed[1] = true;  // image exactly 0 (current tip)

    std::size_t tip = 1;
    for (std::size_t k = 2; k < n; ++k) {
      lcplx a = pend[k];
      if (!(a.imag() > 0.0L) || !detail::lfinite(a))
        throw numeric_error("zipper: vertex image left the upper half-plane (index " +
                            std::to_string(k) + ")");
      ZipStep st;
      ldbl ab = std::abs(a);
      if (std::abs(a.real()) <= 1e-14L * ab) {
        st.vertical = true;
        st.h = a.imag();
      } else {
        // d = |a|^2 / Re a and h = |a|^2 / Im a, factored so nothing is
        // squared: |a| can sit high in the exponent range mid-composition.
        st.d = ab * (ab / a.real());
        st.h = ab * (ab / a.imag());
      }
      // The previous tip (image 0) splits into the two slit sides.
      side_a[tip] = -st.h;
      side_b[tip] = st.h;
      // Update absorbed side values and the vertex-0 passage.
      for (std::size_t j = 1; j < k; ++j) {
        if (j == tip) continue;
        side_a[j] = real_apply(st, side_a[j]);
        side_b[j] = real_apply(st, side_b[j]);
      }
      pass_inf = real_apply(st, pass_inf);
      // Update pending vertices.
      for (std::size_t j = k + 1; j < n; ++j) pend[j] = apply(st, pend[j]);
      absorbed[k] = true;
      tip = k;
      zm.steps_.push_back(st);
    }
    zm.p_inf_ = pass_inf;

    // Orientation of the closing square.  The region's bulk hugs one sign
    // of the welded real axis just before the closing, and sigma must fold
    // that side into the upper half-plane.  A single interior probe decides
    // the sign, so the probe's own image must be trustworthy: a point too
    // close to the boundary can graze a slit base mid-composition and get
    // rounded onto the phantom side of the weld, flipping the vote.  Try
    // candidates in order of preference and accept the first whose whole
    // trajectory keeps a healthy relative clearance above the axis.
    std::vector<cplx> cands;
    if (probe_hint) cands.push_back(*probe_hint);
    {
      cplx lo = nodes[0], hi = nodes[0], centroid = 0.0;
      for (const cplx& q : nodes) {
        lo = cplx(std::min(lo.real(), q.real()), std::min(lo.imag(), q.imag()));
        hi = cplx(std::max(hi.real(), q.real()), std::max(hi.imag(), q.imag()));
        centroid += q;
      }
      for (cplx cand : {0.5 * (lo + hi), centroid / double(n)})
        if (polygon_contains(nodes, cand) && dist_to_polyline(nodes, cand) > 0.0)
          cands.push_back(cand);
    }
    cands.push_back(interior_point(nodes));
    ldbl best_margin = -1.0L;
    double best_sign = 1.0;
    ldbl best_mag = 1.0L;
    for (const cplx& cand : cands) {
      lcplx w = zm.first_map(cand);
      ldbl margin = w.imag() / std::abs(w);
      for (const ZipStep& st : zm.steps_) {
        w = apply(st, w);
        margin = std::min(margin, w.imag() / std::abs(w));
      }
      if (!detail::lfinite(w) || std::isnan(margin)) continue;
      lcplx t = zm.close_mobius(w);
      if (margin > best_margin) {
        best_margin = margin;
        best_sign = (t.real() > 0.0L) ? 1.0 : -1.0;
        best_mag = std::abs(t);
      }
      if (margin >= 1e-10L) break;
    }
    zm.sigma_ = best_sign;
    // The composition fixes the frame only up to a positive scaling, and
    // for fold-heavy regions the unnormalized coordinates can sit far past
    // double range even though their spread around any interior point is
    // modest.  Rescale so the probe's image has unit magnitude; remaining
    // coordinates are then about e^{+-d} for hyperbolic distance d.
    if (best_mag > 0.0L && std::isfinite(best_mag))
      zm.scale_ = (1.0L / best_mag) / best_mag;

    // Final boundary positions on R (upper-half-plane frame).  The side
    // facing the interior is the one whose closing-Mobius image has the
    // same sign as sigma.  Kept in extended precision: for symmetric
    // regions the far real crossings feed the quarter-plane opening and
    // can sit past double range.
    zm.node_uh_.assign(n, 0.0L);
    zm.node_uh_[0] = std::numeric_limits<ldbl>::infinity();
    zm.node_uh_[n - 1] = 0.0L;
    for (std::size_t j = 1; j + 1 < n; ++j) {
      ldbl ca = zm.close_real(side_a[j]);
      ldbl cb = zm.close_real(side_b[j]);
      ldbl c = (ldbl(zm.sigma_) * ca > 0.0L) ? ca : cb;
      zm.node_uh_[j] = zm.scale_ * (ldbl(zm.sigma_) * c) * c;
    }
    return zm;
  }

  // Interior evaluation: region -> UH.  The _ld variants keep the frame
  // coordinate in extended precision; symmetric charts (chart.hpp) need the
  // full exponent range because deep zones of elongated regions sit far past
  // double range even after scale normalization.
  lcplx map_ld(const cplx& z) const {
    lcplx w = first_map(z);
    for (const ZipStep& st : steps_) w = apply(st, w);
    w = close_mobius(w);
    return scale_ * (sigma_ > 0 ? w * w : -(w * w));
  }

  cplx map(const cplx& z) const {
    lcplx r = map_ld(z);
    return cplx(double(r.real()), double(r.imag()));
  }

  // Map with derivative accumulated analytically along the composition.
  lcplx map_deriv_ld(const cplx& z, lcplx& deriv) const {
    lcplx zz(z.real(), z.imag());
    lcplx r = (zz - lcplx(z1_.real(), z1_.imag())) / (zz - lcplx(z0_.real(), z0_.imag()));
    lcplx w = lcplx(0.0L, 1.0L) * std::sqrt(r);
    lcplx rp = lcplx(z1_.real() - z0_.real(), z1_.imag() - z0_.imag()) /
               ((zz - lcplx(z0_.real(), z0_.imag())) * (zz - lcplx(z0_.real(), z0_.imag())));
    lcplx dw = -rp / (2.0L * w);
    for (const ZipStep& st : steps_) {
      if (!st.vertical) {
        lcplx den = 1.0L - w / st.d;
        dw /= den * den;
        w /= den;
      }
      lcplx w2 = detail::slit_fwd(w, st.h);
      dw *= w / w2;
      w = w2;
    }
    if (std::isfinite(p_inf_)) {
      lcplx den = 1.0L - w / p_inf_;
      dw /= den * den;
      w /= den;
    }
    dw *= 2.0L * scale_ * ldbl(sigma_) * w;
    deriv = dw;
    return scale_ * (sigma_ > 0 ? w * w : -(w * w));
  }

  cplx map_deriv(const cplx& z, cplx& deriv) const {
    lcplx dw;
    lcplx rr = map_deriv_ld(z, dw);
    deriv = cplx(double(dw.real()), double(dw.imag()));
    return cplx(double(rr.real()), double(rr.imag()));
  }

  // Inverse: UH -> region.
  cplx inv_ld(const lcplx& w) const {
    lcplx ww = w / scale_;
    lcplx u = sigma_ > 0 ? std::sqrt(ww) : lcplx(0.0L, 1.0L) * std::sqrt(ww);
    if (std::isfinite(p_inf_)) u = u / (1.0L + u / p_inf_);
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
      u = detail::slit_inv(u, it->h);
      if (!it->vertical) u = it->d * u / (it->d + u);
    }
    lcplx r = -(u * u);
    lcplx z1l(z1_.real(), z1_.imag()), z0l(z0_.real(), z0_.imag());
    lcplx z = (z1l - r * z0l) / (1.0L - r);
    return cplx(double(z.real()), double(z.imag()));
  }

  cplx inv(const cplx& w) const { return inv_ld(lcplx(w.real(), w.imag())); }

  cplx inv_deriv(const cplx& w, cplx& deriv) const {
    cplx z = inv(w);
    cplx dw;
    map_deriv(z, dw);
    deriv = 1.0 / dw;
    return z;
  }

  // Boundary vertex images on the real axis of the UH frame (vertex 0 maps
  // to infinity, the last vertex to 0).
  const std::vector<ldbl>& boundary_uh_ld() const { return node_uh_; }

  std::vector<double> boundary_uh() const {
    std::vector<double> out;
    out.reserve(node_uh_.size());
    for (ldbl x : node_uh_) out.push_back(double(x));
    return out;
  }

  std::size_t size() const { return steps_.size() + 2; }

  // --- serialization (chart cache) ---
  void serialize(std::vector<double>& out) const {
    out.push_back(double(steps_.size()));
    out.push_back(z0_.real());
    out.push_back(z0_.imag());
    out.push_back(z1_.real());
    out.push_back(z1_.imag());
    detail::pack_ld(out, p_inf_);
    detail::pack_ld(out, scale_);
    out.push_back(sigma_);
    for (const auto& st : steps_) {
      detail::pack_ld(out, st.d);
      detail::pack_ld(out, st.h);
      out.push_back(st.vertical ? 1.0 : 0.0);
    }
    out.push_back(double(node_uh_.size()));
    for (ldbl x : node_uh_) detail::pack_ld(out, x);
  }

  static ZipperMap deserialize(const std::vector<double>& in, std::size_t& pos) {
    ZipperMap zm;
    std::size_t ns = std::size_t(in.at(pos++));
    zm.z0_ = cplx(in.at(pos), in.at(pos + 1));
    pos += 2;
    zm.z1_ = cplx(in.at(pos), in.at(pos + 1));
    pos += 2;
    zm.p_inf_ = detail::unpack_ld(in, pos);
    zm.scale_ = detail::unpack_ld(in, pos);
    zm.sigma_ = in.at(pos++);
    zm.steps_.resize(ns);
    for (auto& st : zm.steps_) {
      st.d = detail::unpack_ld(in, pos);
      st.h = detail::unpack_ld(in, pos);
      st.vertical = in.at(pos++) != 0.0;
    }
    std::size_t nb = std::size_t(in.at(pos++));
    zm.node_uh_.resize(nb);
    for (auto& x : zm.node_uh_) x = detail::unpack_ld(in, pos);
    return zm;
  }

 private:
  cplx z0_, z1_;
  std::vector<ZipStep> steps_;
  ldbl p_inf_ = std::numeric_limits<ldbl>::infinity();
  ldbl scale_ = 1.0L;
  double sigma_ = 1.0;
  std::vector<ldbl> node_uh_;

  lcplx first_map(const cplx& z) const {
    lcplx zz(z.real(), z.imag());
    lcplx num = zz - lcplx(z1_.real(), z1_.imag());
    lcplx den = zz - lcplx(z0_.real(), z0_.imag());
    return lcplx(0.0L, 1.0L) * std::sqrt(num / den);
  }

  static lcplx apply(const ZipStep& st, const lcplx& w0) {
    lcplx w = w0;
    if (!st.vertical) w = w / (1.0L - w / st.d);
    return detail::slit_fwd(w, st.h);
  }

  static ldbl real_apply(const ZipStep& st, ldbl x) {
    if (!st.vertical) {
      if (std::isinf(x)) {
        x = -st.d;
      } else {
        ldbl den = 1.0L - x / st.d;
        if (den == 0.0L) return std::numeric_limits<ldbl>::infinity();
        x = x / den;
      }
    }
    if (std::isinf(x)) return x;
    return detail::real_slit_fwd(x, st.h);
  }

  lcplx close_mobius(const lcplx& w) const {
    if (!std::isfinite(p_inf_)) return w;
    return w / (1.0L - w / p_inf_);
  }

  ldbl close_real(ldbl x) const {
    if (!std::isfinite(p_inf_)) return x;
    if (std::isinf(x)) return -p_inf_;
    ldbl den = 1.0L - x / p_inf_;
    if (den == 0.0L) return std::numeric_limits<ldbl>::infinity();
    return x / den;
  }
};

}  // namespace forge

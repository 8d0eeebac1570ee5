// Validation of the conformal-mapping backend against closed forms.
#include <catch2/catch_amalgamated.hpp>

#include "forge/chart.hpp"
#include "helpers.hpp"

using namespace forge;
using namespace forge::testing;

namespace {

// Exact normalized chart of the right half-plane, anchor 1.
cplx halfplane_mobius(const cplx& z) { return (z - 1.0) / (z + 1.0); }

// Exact normalized chart of the strip {|Im z| < pi}, anchor 0.
cplx strip_exact(const cplx& z) {
  cplx w = std::exp(z / 2.0);
  return (w - 1.0) / (w + 1.0);
}

double max_err(const std::vector<cplx>& pts, auto&& f) {
  double m = 0.0;
  for (const cplx& z : pts) m = std::max(m, f(z));
  return m;
}

}  // namespace

TEST_CASE("disk chart reproduces the identity") {
  Polyline gon = circle_polyline(256);
  ConformalChart chart = fit_chart(gon, 1e9, cplx(0.0, 0.0));

  std::vector<cplx> mid;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      cplx z(0.08 * i, 0.08 * j);
      if (std::abs(z) <= 0.25) mid.push_back(z);
    }
  double ident = max_err(mid, [&](const cplx& z) { return std::abs(chart.to_disk(z) - z); });
  INFO("identity deviation " << ident);
  CHECK(ident <= 1e-5);

  auto deep = disk_samples(0.95, 100, 7);
  double rt = max_err(deep, [&](const cplx& z) {
    return std::abs(chart.from_disk(chart.to_disk(z)) - z);
  });
  INFO("round-trip " << rt);
  CHECK(rt <= 1e-6);

  // Conjugation equivariance is a resolution-limited property (the
  // traversal order is inherently one-directional); 256 nodes give ~1.2e-6,
  // one refinement brings it under the contract tolerance.
  ConformalChart chart512 = fit_chart(circle_polyline(512), 1e9, cplx(0.0, 0.0));
  double conj_defect = max_err(deep, [&](const cplx& z) {
    return std::abs(chart512.to_disk(std::conj(z)) - std::conj(chart512.to_disk(z)));
  });
  INFO("conjugation defect " << conj_defect);
  CHECK(conj_defect <= 1e-6);

  auto bd = chart.boundary_disk();
  REQUIRE(bd.size() == chart.nodes().size());
  double circ = 0.0;
  for (const cplx& c : bd) circ = std::max(circ, std::abs(std::abs(c) - 1.0));
  CHECK(circ <= 1e-8);
  // Cyclic order: unwrapped arguments advance by exactly one turn.
  double total = 0.0, prev = std::arg(bd[0]);
  double min_step = 1e9;
  for (std::size_t k = 1; k < bd.size(); ++k) {
    double a = std::arg(bd[k]);
    double step = a - prev;
    while (step <= -pi) step += two_pi;
    while (step > pi) step -= two_pi;
    min_step = std::min(min_step, step);
    total += step;
    prev = a;
  }
  CHECK(min_step > 0.0);
  CHECK(std::abs(total - two_pi * (1.0 - 1.0 / double(bd.size()))) < 0.1);
}

TEST_CASE("half-plane chart matches the Mobius closed form") {
  ConformalChart chart = fit_chart(half_disk_polyline(1000.0), 1e9, cplx(1.0, 0.0));
  Rng rng(5);
  std::vector<cplx> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(cplx(rng.uniform(0.2, 8.0), rng.uniform(-8.0, 8.0)));
  double err = max_err(pts, [&](const cplx& z) {
    return std::abs(chart.to_disk(z) - halfplane_mobius(z));
  });
  INFO("max deviation from (z-1)/(z+1): " << err);
  CHECK(err <= 1e-4);

  double rt = max_err(pts, [&](const cplx& z) {
    return std::abs(chart.from_disk(chart.to_disk(z)) - z);
  });
  CHECK(rt <= 1e-6);
}

TEST_CASE("strip chart matches the exponential closed form") {
  ConformalChart chart = fit_chart(strip_polyline(40.0, pi, 0.25), 1e9, cplx(0.0, 0.0));
  Rng rng(6);
  std::vector<cplx> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(cplx(rng.uniform(-10.0, 10.0), rng.uniform(-2.5, 2.5)));
  double err = max_err(pts, [&](const cplx& z) {
    return std::abs(chart.to_disk(z) - strip_exact(z));
  });
  INFO("max deviation from exp closed form: " << err);
  CHECK(err <= 1e-4);
}

TEST_CASE("normalized composition recovers the exponential") {
  // The comparison runs in region coordinates, so both the derivative-scale
  // part of the fit error and the truncation gap enter amplified by |w|;
  // resolution and truncation radius are chosen for that.
  auto strip = std::make_shared<ConformalChart>(
      fit_chart(strip_polyline(40.0, pi, 0.03125), 1e9, cplx(0.0, 0.0)));
  auto half = std::make_shared<ConformalChart>(
      fit_chart(half_disk_polyline(4000.0, 0.0025, 10.0), 1e9, cplx(1.0, 0.0)));
  NormalizedMap G(strip, half);

  CHECK(std::abs(G.map(cplx(0.0, 0.0)) - 1.0) <= 1e-6);
  cplx d1;
  G.map_deriv(cplx(0.0, 0.0), d1);
  CHECK(std::abs(std::arg(d1)) <= 1e-6);

  Rng rng(8);
  double err = 0.0, conj_defect = 0.0;
  for (int i = 0; i < 60; ++i) {
    cplx z(rng.uniform(-4.0, 4.0), rng.uniform(-2.5, 2.5));
    cplx g = G.map(z);
    cplx ref = std::exp(z / 2.0);
    err = std::max(err, std::abs(g - ref));
    conj_defect = std::max(conj_defect, std::abs(G.map(std::conj(z)) - std::conj(g)));
  }
  INFO("err " << err << " conj " << conj_defect);
  CHECK(err <= 1e-4);
  CHECK(conj_defect <= 1e-5);

  // Inverse round trip through the composition.
  for (int i = 0; i < 20; ++i) {
    cplx z(rng.uniform(-4.0, 4.0), rng.uniform(-2.5, 2.5));
    CHECK(std::abs(G.inv(G.map(z)) - z) <= 1e-6);
  }

  // Identity composition: same chart on both sides.
  NormalizedMap I(strip, strip);
  for (int i = 0; i < 20; ++i) {
    cplx z(rng.uniform(-8.0, 8.0), rng.uniform(-2.8, 2.8));
    CHECK(std::abs(I.map(z) - z) <= 1e-5);
  }
}

TEST_CASE("analytic derivatives agree with finite differences") {
  // Tight finite-difference comparison on a compact chart whose frame
  // coordinates are O(1).
  ConformalChart disk = fit_chart(circle_polyline(256), 1e9, cplx(0.0, 0.0));
  const double h = 1e-6;
  for (cplx z : {cplx(0.3, 0.2), cplx(-0.5, 0.1), cplx(0.1, -0.7)}) {
    cplx d;
    disk.to_disk_deriv(z, d);
    cplx fd = (disk.to_disk(z + h) - disk.to_disk(z - h)) / (2.0 * h);
    CHECK(std::abs(d - fd) <= 1e-6 * (1.0 + std::abs(fd)));
  }
  // On an elongated chart the frame spans many orders of magnitude, so
  // finite differences of the forward map drown in roundoff; check the
  // analytic forward/inverse derivatives against each other instead.
  ConformalChart strip = fit_chart(strip_polyline(40.0, pi, 0.25), 1e9, cplx(0.0, 0.0));
  for (cplx z : {cplx(0.5, 0.5), cplx(-3.0, -1.0), cplx(9.0, 2.0)}) {
    cplx d;
    cplx w = strip.uh_map_deriv(z, d);
    cplx di;
    cplx zz = strip.uh_inv_deriv(w, di);
    CHECK(std::abs(zz - z) <= 1e-6);
    CHECK(std::abs(di * d - 1.0) <= 1e-4);
    // Derivative magnitude sanity against the exponential closed form:
    // |(d/dz) uh_map| should vary smoothly; compare against a coarse FD.
    cplx fd = (strip.uh_map(z + 1e-3) - strip.uh_map(z - 1e-3)) / 2e-3;
    CHECK(std::abs(d - fd) <= 2e-3 * std::abs(fd) + 1e-12);
  }
}

TEST_CASE("degenerate geometry is rejected") {
  Polyline bowtie = {cplx(0, 0), cplx(1, 1), cplx(1, 0), cplx(0, 1)};
  Polyline bowtie16 = resample_max_spacing(bowtie, 0.2);
  CHECK_THROWS_AS(fit_chart(bowtie16, 0.2), std::invalid_argument);
  Polyline tiny = {cplx(0, 0), cplx(1, 0), cplx(0, 1)};
  CHECK_THROWS_AS(fit_chart(tiny, 1e9), std::invalid_argument);
}

TEST_CASE("chart cache round-trips through disk") {
  ConformalChart chart = fit_chart(circle_polyline(64), 0.05, cplx(0.0, 0.0));
  uint64_t key = chart_fingerprint(circle_polyline(64), 0.05, cplx(0.0, 0.0));
  std::string path = "chart_cache_test.bin";
  save_chart(path, chart, key);
  auto back = load_chart(path, key);
  REQUIRE(back.has_value());
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    cplx z(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
    CHECK(std::abs(back->to_disk(z) - chart.to_disk(z)) <= 1e-14);
  }
  CHECK_FALSE(load_chart(path, key + 1).has_value());
  std::remove(path.c_str());
}

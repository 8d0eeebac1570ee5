// Approximant layer: winding-number membership, boundary jumps, decay
// profiles, confinement, model maps, initial configurations, and the
// end-to-end construction pipeline.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "forge/approximant.hpp"
#include "forge/cauchy.hpp"
#include "forge/curves.hpp"
#include "forge/model.hpp"

using namespace forge;

namespace {

const Approximant& catalog() {
  static Approximant a = approximant_exp_catalog();
  return a;
}

}  // namespace

TEST_CASE("winding number classifies membership against the half-strip") {
  ParamCurve bdry = boundary_half_strip();
  ParamCurve q = reparametrize_quartic(bdry);
  struct P {
    cplx z;
    int expect;
  };
  const P pts[] = {{{5.0, 0.0}, -1},   {{-10.0, 0.0}, 0}, {{5.0, 4.0}, 0},
                   {{0.5, -3.0}, -1},  {{100.0, 1.0}, -1}, {{-0.5, 0.0}, 0},
                   {{3.0, -3.5}, 0},   {{0.2, 3.0}, -1},   {{400.0, -2.0}, -1}};
  for (const P& p : pts) {
    CHECK(winding_number(bdry, p.z) == p.expect);
    CHECK(winding_number(q, p.z) == p.expect);
    // Mirror symmetry of the winding count.
    CHECK(winding_number(bdry, std::conj(p.z)) == p.expect);
  }
  CHECK(encloses(bdry, {5.0, 0.0}));
  CHECK_FALSE(encloses(bdry, {-10.0, 0.0}));
  CHECK_THROWS_AS(winding_number(bdry, bdry.position(0.3)), point_on_curve);
}

TEST_CASE("approximant evaluation splits across the contour") {
  const Approximant& a = catalog();
  // Inside: f - g is the correction h, bounded by the decay constant.
  cplx zi(2.0, 0.5);
  cplx fi = evaluate_approximant(a, zi);
  cplx gi = a.g(zi);
  CHECK(std::abs(fi - gi) == Catch::Approx(0.2943249).margin(1e-5));
  CHECK(std::abs(fi - gi) <= a.constants.c6() / abs_plus(zi));
  // Outside: f is the correction alone.
  cplx zo(-3.0, 1.0);
  cplx fo = evaluate_approximant(a, zo);
  CHECK(std::abs(fo) == Catch::Approx(0.3397887).margin(1e-5));
  CHECK(std::abs(fo) <= a.constants.c6() / abs_plus(zo));
}

TEST_CASE("boundary jump recovers the integrand at linear rate") {
  const Approximant& a = catalog();
  for (double t0 : {0.5, -2.0, 3.5, 1.7, -4.2}) {
    JumpSample s2 = jump_residual(a, t0, 1e-2);
    JumpSample s3 = jump_residual(a, t0, 1e-3);
    JumpSample s4 = jump_residual(a, t0, 1e-4);
    double scale = std::abs(s4.g0);
    CHECK(s4.residual <= 1e-2 * scale + 1e-6);
    // One decade of approach distance buys one decade of residual, with slack.
    CHECK(s3.residual < s2.residual);
    CHECK(s4.residual < s3.residual);
    CHECK(s3.residual <= 0.15 * s2.residual);
    CHECK(s4.residual <= 0.15 * s3.residual);
  }
}

TEST_CASE("decay profile stays below the fitted constant") {
  const Approximant& a = catalog();
  // The fitted decay constant is the inflated grid maximum; the analytic
  // certificate dominates it by an order of magnitude.
  CHECK(a.constants.C6 == Catch::Approx(1.148463).margin(5e-4));
  CHECK(a.constants.C6 < a.constants.c6_certificate());
  CHECK(a.constants.well_formed());

  std::vector<double> radii = geomspace(10.0, 1000.0, 12);
  std::vector<DecayRow> rows = decay_profile(a, default_decay_rays(), radii);
  REQUIRE(rows.size() == 96);
  double pmax = 0.0;
  std::size_t violations = 0;
  for (const DecayRow& r : rows) {
    if (r.ratio > 1.0) ++violations;
    pmax = std::max(pmax, r.product);
  }
  CHECK(violations == 0);
  CHECK(pmax == Catch::Approx(1.0440573).margin(5e-4));

  // The transform magnitude decays along every ray.
  for (std::size_t ray = 0; ray < 8; ++ray)
    for (std::size_t j = 0; j + 1 < radii.size(); ++j) {
      double h0 = rows[ray * radii.size() + j].product / radii[j];
      double h1 = rows[ray * radii.size() + j + 1].product / radii[j + 1];
      CHECK(h1 < h0);
    }

  // Violation detector: halving the fitted constant must flag entries.
  Approximant half = a;
  half.constants.C6 = 0.5 * a.constants.C6;
  std::vector<DecayRow> flagged = decay_profile(half, default_decay_rays(), radii);
  std::size_t over = 0;
  for (const DecayRow& r : flagged)
    if (r.ratio > 1.0) ++over;
  CHECK(over >= 1);
}

TEST_CASE("decay profile of the zero integrand vanishes") {
  Approximant a = catalog();
  a.g = [](const cplx&) { return cplx(0.0, 0.0); };
  std::vector<DecayRow> rows =
      decay_profile(a, default_decay_rays(4), geomspace(10.0, 100.0, 4));
  for (const DecayRow& r : rows) CHECK(r.product == 0.0);
}

TEST_CASE("approximant commutes with conjugation") {
  const Approximant& a = catalog();
  REQUIRE(a.curve.conj_symmetric);
  for (const cplx& z : {cplx(2.0, 0.5), cplx(-3.0, 1.0), cplx(8.0, 2.9),
                        cplx(0.5, -14.0), cplx(30.0, 3.0)}) {
    cplx fa = evaluate_approximant(a, z);
    cplx fb = evaluate_approximant(a, std::conj(z));
    CHECK(std::abs(fb - std::conj(fa)) <= 10.0 * a.tol);
  }
}

TEST_CASE("confinement report bounds the function against the tract") {
  const Approximant& a = catalog();
  ConfinementReport rep = singular_value_confinement(a, 240);
  CHECK(rep.n_inside > 20);
  CHECK(rep.n_outside > 20);
  CHECK(std::isfinite(rep.max_outside));
  CHECK(rep.M == std::max(rep.max_inside, rep.max_outside));
  // Inside deviation is controlled by the outside level plus decay slack.
  CHECK(rep.max_inside <= rep.max_outside + a.constants.c6());
  // Covering-type evidence: where the integrand dominates twice the bound,
  // the function cannot vanish.
  CHECK(rep.min_f_large_g > rep.M);

  // Degenerate integrand: the bound collapses to the decay level.
  Approximant zero = a;
  zero.g = [](const cplx&) { return cplx(0.0, 0.0); };
  ConfinementReport zrep = singular_value_confinement(zero, 120);
  CHECK(zrep.M == 0.0);
  CHECK(zrep.M <= zero.constants.c6());
}

TEST_CASE("model maps round-trip and differentiate correctly") {
  SECTION("exponential on the half-strip") {
    ModelFunction m = model_exp_half_strip();
    REQUIRE(m.real_symmetric);
    for (const cplx& z : {cplx(0.5, 0.0), cplx(2.0, 3.0), cplx(10.0, -2.5),
                          cplx(0.01, 1.0)}) {
      REQUIRE(m.contains(z));
      CHECK(std::abs(m.inverse(m.forward(z)) - z) < 1e-12);
      cplx fd = (m.forward(z + cplx(1e-6, 0.0)) - m.forward(z - cplx(1e-6, 0.0))) /
                cplx(2e-6, 0.0);
      CHECK(std::abs(fd - m.forward_deriv(z)) / std::abs(fd) < 1e-7);
    }
    CHECK_FALSE(m.contains({-0.1, 0.0}));
    CHECK_FALSE(m.contains({1.0, 3.5}));
    CHECK(m.boundary_dist({3.0, 0.0}) == Catch::Approx(3.0).margin(1e-12));
    CHECK(m.boundary_dist({5.0, 0.0}) == Catch::Approx(pi).margin(1e-12));
    CHECK(m.boundary_dist({0.25, 0.1}) == Catch::Approx(0.25).margin(1e-12));
  }

  SECTION("power map on the slit disk exterior") {
    ModelFunction m = model_power_sector(1.0);
    REQUIRE(m.real_symmetric);
    std::vector<cplx> tract, escape, bdry;
    Rng rng(7);
    while (tract.size() < 60) {
      cplx w(rng.uniform(-20.0, 20.0), rng.uniform(-20.0, 20.0));
      if (m.contains(w) && m.boundary_dist(w) > 0.05) tract.push_back(w);
    }
    for (int i = 1; i <= 12; ++i) escape.push_back({std::pow(2.0, i), 0.3});
    for (int i = 1; i <= 12; ++i) {
      double r = 1.0 + std::pow(2.0, -i);
      bdry.push_back(r * cplx(std::cos(0.7), std::sin(0.7)));
    }
    ModelReport mr = model_report(m, tract, escape, bdry);
    CHECK(mr.roundtrip_defect < 1e-12);
    CHECK(mr.escape_ok);
    CHECK(std::isfinite(mr.bounded_sup));
    CHECK(mr.pass);

    cplx w(3.0, 2.0);
    cplx fd = (m.forward(w + cplx(1e-6, 0.0)) - m.forward(w - cplx(1e-6, 0.0))) /
              cplx(2e-6, 0.0);
    CHECK(std::abs(fd - m.forward_deriv(w)) < 1e-8);
    cplx zeta = m.forward(w);
    cplx fdi = (m.inverse(zeta + cplx(1e-6, 0.0)) - m.inverse(zeta - cplx(1e-6, 0.0))) /
               cplx(2e-6, 0.0);
    CHECK(std::abs(fdi - m.inverse_deriv(zeta)) < 1e-8);
    // The two derivative fields are reciprocal through the map.
    CHECK(std::abs(m.inverse_deriv(zeta) * m.forward_deriv(w) - 1.0) < 1e-10);
  }
}

TEST_CASE("initial configurations validate with derived constants") {
  SECTION("flared profile with the canonical curve") {
    InitialConfig cfg = canonical_log_config();
    ConfigReport rep = validate_initial_configuration(cfg, default_config_grid());
    CHECK(rep.pass);
    CHECK(rep.left.pass);
    CHECK(rep.speed.pass);
    CHECK(rep.alpha_in_H);
    CHECK(rep.im_defect == 0.0);
    CHECK(rep.comparable);
    // Frozen derived constants.
    CHECK(cfg.A3 == Catch::Approx(141.775485).margin(1e-2));
    CHECK(cfg.A4 == Catch::Approx(41.61964).margin(1e-2));
    CHECK(cfg.Delta == Catch::Approx(0.645065).margin(1e-4));
    CHECK(cfg.A3 >= 4.0 / rep.c_lower - 1e-9);
    CHECK(cfg.Delta ==
          Catch::Approx(0.5 * std::log1p(1.0 / (4.0 * rep.c_upper))).margin(1e-12));
  }

  SECTION("sector profile with the straight curve") {
    InitialConfig cfg = sector_config(1.0);
    ConfigReport rep = validate_initial_configuration(cfg, default_config_grid());
    CHECK(rep.pass);
    CHECK(cfg.Delta == Catch::Approx(0.085436).margin(1e-4));
    CHECK(rep.c_lower == Catch::Approx(0.447303).margin(1e-4));
    CHECK(rep.c_upper == Catch::Approx(1.341641).margin(1e-4));
  }

  SECTION("insufficient leftward push fails with a named witness") {
    InitialConfig bad = canonical_log_config();
    bad.alpha.position = [](double t) -> cplx {
      return {1.0 - 10.0 * log_plus(t), t};
    };
    bad.alpha.derivative = [](double t) -> cplx {
      if (std::abs(t) > 1.0) return {-10.0 / t, 1.0};
      return {0.0, 1.0};
    };
    ConfigReport rep = validate_initial_configuration(bad, default_config_grid());
    CHECK_FALSE(rep.pass);
    CHECK_FALSE(rep.left.pass);
    CHECK(std::isfinite(rep.left.first_failing_tau));
    CHECK(std::abs(rep.left.first_failing_tau) == Catch::Approx(1.05).margin(1e-9));
    CHECK(rep.left.max_ratio > 1e10);
  }

  SECTION("non-monotone profiles are rejected") {
    InitialConfig bad = sector_config(1.0);
    bad.profile = [](double y) { return 2.0 * std::abs(std::sin(y)); };
    CHECK_THROWS_AS(validate_initial_configuration(bad, default_config_grid()),
                    std::invalid_argument);
  }
}

TEST_CASE("curve bounds fit polynomial envelopes stably") {
  ModelFunction m = model_power_sector(1.0);
  InitialConfig cfg = sector_config(1.0);
  std::vector<double> grid = default_config_grid(100.0);
  CurveBoundsReport cb = derived_curve_bounds(m, cfg, grid);

  // The contour leaves the tract's throat at (1 + sqrt 2)^2, which pins M1.
  double throat = sq(1.0 + std::sqrt(2.0));
  CHECK(cb.M1 == Catch::Approx(throat).margin(1e-9));
  ParamCurve gamma = pipeline_curve(m, cfg.alpha);
  CHECK(cb.M1 >= std::abs(gamma.position(0.0)) - 1e-12);
  CHECK(cb.M2 > 0.0);
  CHECK(std::isfinite(cb.M3));
  CHECK(cb.M4 > 0.0);
  CHECK(cb.M4 <= cb.M2);
  CHECK(cb.growth_exponent <= 4.1);

  // Doubling the grid moves the fits by well under a percent.
  std::vector<double> dense;
  for (double t : linspace(0.0, 2.0, 81)) {
    dense.push_back(t);
    if (t > 0.0) dense.push_back(-t);
  }
  for (double t : geomspace(2.0, 100.0, 160)) {
    dense.push_back(t);
    dense.push_back(-t);
  }
  std::sort(dense.begin(), dense.end());
  CurveBoundsReport cbd = derived_curve_bounds(m, cfg, dense);
  CHECK(std::abs(cbd.M1 - cb.M1) / cb.M1 < 1e-2);
  CHECK(std::abs(cbd.M2 - cb.M2) / cb.M2 < 1e-2);
  CHECK(std::abs(cbd.M3 - cb.M3) / cb.M3 < 1e-2);
  CHECK(std::abs(cbd.M4 - cb.M4) / cb.M4 < 1e-2);

  // Without a boundary oracle the fit is unsupported.
  ModelFunction no_oracle = m;
  no_oracle.boundary_dist = nullptr;
  CHECK_THROWS_AS(derived_curve_bounds(no_oracle, cfg, grid),
                  std::invalid_argument);
}

TEST_CASE("pipeline builds a working approximant on the slit tract") {
  ModelFunction m = model_power_sector(1.0);
  InitialConfig cfg = sector_config(1.0);
  Approximant a = build_approximant(m, cfg);

  CHECK(a.constants.delta1 == 0.25);
  CHECK(a.constants.delta2 == 1.0);
  CHECK(a.constants.C1 == Catch::Approx(6.4113).margin(1e-2));
  CHECK(a.constants.C2 == Catch::Approx(7.5213).margin(1e-2));
  CHECK(a.constants.C3 == Catch::Approx(2.0470e9).epsilon(1e-2));
  CHECK(a.constants.C5 == Catch::Approx(14.024).margin(0.1));
  CHECK(a.constants.C6 == Catch::Approx(1.618209).margin(1e-2));
  CHECK(a.constants.well_formed());
  CHECK(a.constants.C6 < a.constants.c6_certificate());

  // Deep inside the tract the approximant shadows the integrand.
  cplx zi(8.0, 0.0);
  cplx fi = evaluate_approximant(a, zi);
  cplx gi = a.g(zi);
  CHECK(std::abs(fi - gi) <= a.constants.c6() / abs_plus(zi));
  CHECK(std::abs(fi - gi) == Catch::Approx(0.0317962).margin(1e-4));

  // Outside (inside the unit disk) only the correction remains.
  cplx fo = evaluate_approximant(a, cplx(0.2, 0.1));
  CHECK(std::abs(fo) == Catch::Approx(0.8005140).margin(1e-4));

  // Boundary jump at a mid-contour parameter.
  JumpSample js = jump_residual(a, 16.0, 1e-3);
  CHECK(js.residual / std::abs(js.g0) < 1e-2);

  // Conjugation symmetry survives the pipeline.
  for (const cplx& z : {cplx(8.0, 1.5), cplx(0.3, 0.2)}) {
    cplx fa = evaluate_approximant(a, z);
    cplx fb = evaluate_approximant(a, std::conj(z));
    CHECK(std::abs(fb - std::conj(fa)) <= 10.0 * a.tol);
  }

  // Confinement samples both sides of the tract.
  ConfinementReport rep = singular_value_confinement(a, 160);
  CHECK(rep.n_inside > 20);
  CHECK(rep.n_outside > 20);
  CHECK(rep.M == Catch::Approx(0.8621).margin(1e-2));
  CHECK(rep.min_f_large_g > rep.M);
}

#include <doctest.h>

#include "commands.hpp"
#include "fsav/diagnostics.hpp"
#include "fsav/errors.hpp"
#include "fsav/stepper.hpp"
#include "support.hpp"

using namespace fsav;
using namespace fsav::test;

namespace {

SchemeConfig kolmogorov_cfg(int n, double k, Scheme scheme = Scheme::fsav_bdf2_sv) {
  SchemeConfig c;
  c.k = k;
  c.re = 100.0;
  c.gamma = 1000.0;
  c.grid = periodic_grid(n);
  c.scheme = scheme;
  c.forcing.kind = ForcingKind::kolmogorov;
  c.forcing.m = 2;
  return c;
}

SchemeConfig manufactured_cfg(double k) {
  SchemeConfig c;
  c.k = k;
  c.re = 10.0;
  c.gamma = 1000.0;
  c.grid = unit_grid(32);
  c.forcing.kind = ForcingKind::manufactured;
  return c;
}

SpectralField2D basic_flow(const Grid2D& g) {
  return spectral(g, [](double, double y) { return 4.0 * std::sin(2.0 * y); });
}

SpectralField2D current_vorticity(const SolverState& s, const SchemeConfig& cfg) {
  return cfg.primitive() ? vorticity(s.u_n) : s.w_n;
}

double rel_change(const SpectralField2D& a, const SpectralField2D& b) {
  return max_diff(a, b) / inverse(b).max_abs();
}

}  // namespace

TEST_CASE("helmholtz solve") {
  const Grid2D g = unit_grid(32);
  const double mult = 15.0 + kTwoPi * kTwoPi / 10.0;
  CHECK(mult == doctest::Approx(18.9478).epsilon(1e-5));
  const auto rhs = spectral(g, [&](double x, double) { return mult * std::sin(kTwoPi * x); });
  CHECK(max_diff(helmholtz_solve(rhs, 0.1, 10.0), [](double x, double) { return std::sin(kTwoPi * x); }) <
        1e-13);
  CHECK(inverse(helmholtz_solve(SpectralField2D(g), 0.1, 10.0)).max_abs() == 0.0);
  const auto c = spectral(g, [](double, double) { return 3.0; });
  CHECK(max_diff(helmholtz_solve(c, 0.1, 10.0), [](double, double) { return 0.2; }) < 1e-15);
}

TEST_CASE("scheme config validation") {
  SchemeConfig c = kolmogorov_cfg(16, 0.01);
  CHECK_NOTHROW(c.validate());
  c.k = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = kolmogorov_cfg(16, 0.01);
  c.re = -1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = kolmogorov_cfg(16, 0.01);
  c.gamma = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = manufactured_cfg(0.01);
  c.scheme = Scheme::fsav_bdf2_primitive;
  CHECK_THROWS_AS(c.validate(), Error);
  c = manufactured_cfg(0.01);
  c.grid = periodic_grid(32);
  CHECK_THROWS_AS(Stepper{c}, DomainMismatch);

  for (Scheme s : {Scheme::fsav_bdf2_sv, Scheme::fsav_bdf2_primitive, Scheme::imex_bdf2_sv})
    CHECK(scheme_from_string(to_string(s)) == s);
  CHECK_FALSE(scheme_from_string("bdf3").has_value());
}

TEST_CASE("zero state stays zero with q = 1") {
  for (Scheme scheme : {Scheme::fsav_bdf2_sv, Scheme::fsav_bdf2_primitive, Scheme::imex_bdf2_sv}) {
    CAPTURE(to_string(scheme));
    SchemeConfig cfg = kolmogorov_cfg(16, 0.01, scheme);
    cfg.forcing.kind = ForcingKind::none;
    Stepper st(cfg);
    SolverState s = st.initial_state(SpectralField2D(cfg.grid));
    for (int i = 0; i < 5; ++i) {
      const StepReport r = st.advance(s);
      CHECK(r.q_new == 1.0);
    }
    CHECK(s.q_n == 1.0);
    CHECK(inverse(current_vorticity(s, cfg)).max_abs() == 0.0);
    CHECK(s.levels == 2);
    CHECK(s.step == 5);
  }
}

TEST_CASE("basic Kolmogorov flow is a fixed point of every stepper") {
  for (Scheme scheme : {Scheme::fsav_bdf2_sv, Scheme::fsav_bdf2_primitive, Scheme::imex_bdf2_sv}) {
    CAPTURE(to_string(scheme));
    const SchemeConfig cfg = kolmogorov_cfg(32, 0.01, scheme);
    Stepper st(cfg);
    const SpectralField2D w0 = basic_flow(cfg.grid);
    SolverState s = st.initial_state(w0);
    for (int i = 0; i < 20; ++i) {
      const StepReport r = st.advance(s);
      CHECK(std::abs(r.q_new - 1.0) < 1e-12);
      CHECK(rel_change(current_vorticity(s, cfg), w0) < 1e-10);
    }
  }
}

TEST_CASE("first-order starter has local error O(k^2)") {
  const double t0 = 1.0;
  auto one_step_error = [&](double k) {
    const SchemeConfig cfg = manufactured_cfg(k);
    Stepper st(cfg);
    const ManufacturedCase mc = manufactured_case_table3();
    SolverState s = st.initial_state(sample_spectral(cfg.grid, mc.omega, t0), t0);
    st.step_bdf1(s);
    return max_diff(s.w_n, sample_spectral(cfg.grid, mc.omega, t0 + k));
  };
  const double order = std::log2(one_step_error(0.01) / one_step_error(0.005));
  CHECK(order == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("per-step invariants on a nontrivial flow") {
  SchemeConfig cfg = kolmogorov_cfg(32, 0.05);
  cfg.re = 200.0;
  Stepper st(cfg);
  SolverState s = st.initial_state(basic_flow(cfg.grid) + random_band(cfg.grid, 6, 31, 0.5));
  st.advance(s);
  for (int i = 0; i < 50; ++i) {
    const SolverState before = s;
    const StepReport r = st.advance(s);
    CHECK(r.q_denominator >= 3.0 / (2.0 * cfg.k) + cfg.gamma - 1e-12 * r.q_denominator);
    CHECK(r.trilinear_b2 <= 0.0);
    CHECK(r.energy_identity_residual < 1e-10);
    const auto [mom, scal] = st.scheme_residuals(before, s);
    CHECK(mom < 1e-11);
    CHECK(scal < 1e-11);
    CHECK(std::abs(s.w_n.coeff(0, 0)) < 1e-14);
    CHECK(s.w_n.hermitian_defect() < 1e-12);
  }
}

TEST_CASE("denominator bound under large fields and huge steps") {
  for (double k : {0.01, 1.0, 100.0}) {
    SchemeConfig cfg = kolmogorov_cfg(16, k);
    cfg.blowup_threshold = 1e300;
    Stepper st(cfg);
    SolverState s = st.initial_state(random_band(cfg.grid, 7, 5, 50.0));
    for (int i = 0; i < 20; ++i) {
      const StepReport r = st.advance(s);
      const double sigma = s.step == 1 ? 1.0 : 1.5;
      CHECK(r.q_denominator >= sigma / k + cfg.gamma);
    }
  }
}

TEST_CASE("IMEX and FSAV agree in the weakly nonlinear regime") {
  const SchemeConfig f = kolmogorov_cfg(32, 0.01);
  const SchemeConfig e = kolmogorov_cfg(32, 0.01, Scheme::imex_bdf2_sv);
  auto run_both = [&](double amp) {
    const SpectralField2D w0 = basic_flow(f.grid) + random_band(f.grid, 4, 8, amp);
    Stepper sf(f), se(e);
    SolverState a = sf.initial_state(w0), b = se.initial_state(w0);
    for (int i = 0; i < 10; ++i) {
      sf.advance(a);
      se.advance(b);
    }
    return std::pair{max_diff(a.w_n, b.w_n), std::abs(a.q_n - 1.0)};
  };
  const auto [d1, q1] = run_both(1e-3);
  CHECK(d1 < 1e-8);
  CHECK(q1 < 1e-8);
}

TEST_CASE("wrappers match the stepper") {
  const SchemeConfig cfg = kolmogorov_cfg(16, 0.02);
  Stepper st(cfg);
  SolverState s = st.initial_state(basic_flow(cfg.grid) + random_band(cfg.grid, 4, 2, 0.3));
  const auto [s1, r1] = step_fsav_bdf1(s, cfg);
  st.advance(s);
  CHECK(max_diff(s1.w_n, s.w_n) == 0.0);
  CHECK(s1.q_n == s.q_n);
  const auto [s2, r2] = step_fsav_bdf2_sv(s, cfg);
  st.advance(s);
  CHECK(max_diff(s2.w_n, s.w_n) == 0.0);
  CHECK(r2.q_new == s.q_n);
  CHECK(s2.t == doctest::Approx(2 * cfg.k));
}

TEST_CASE("horizon handling") {
  CHECK(steps_to_horizon(0.0, 0.1, 0.01, false) == 10);
  CHECK(steps_to_horizon(0.0, 100.0, 0.0125, false) == 8000);
  CHECK_THROWS_AS(steps_to_horizon(0.0, 1.05, 0.1, false), NonIntegralHorizon);
  CHECK(steps_to_horizon(0.0, 1.05, 0.1, true) == 10);

  const SchemeConfig cfg = kolmogorov_cfg(16, 0.01);
  Stepper st(cfg);
  RunOptions opts;
  opts.horizon = 10 * cfg.k;
  int bdf1 = 0, bdf2 = 0, samples = 0;
  opts.sample_every = 5;
  opts.on_sample = [&](const SolverState&, const StepReport&) { ++samples; };
  opts.on_step = [&](SolverState& s, const StepReport&) {
    (s.step == 1 ? bdf1 : bdf2)++;
    return true;
  };
  const SolverState out = run(st, st.initial_state(basic_flow(cfg.grid)), opts);
  CHECK(out.step == 10);
  CHECK(bdf1 == 1);
  CHECK(bdf2 == 9);
  CHECK(samples == 3);
  CHECK(out.t == doctest::Approx(0.1).epsilon(1e-14));

  SUBCASE("shortened final step lands on T") {
    RunOptions o;
    o.horizon = 0.105;
    o.allow_shortening = true;
    const SolverState sh = run(st, st.initial_state(basic_flow(cfg.grid)), o);
    CHECK(sh.t == 0.105);
    CHECK(rel_change(sh.w_n, basic_flow(cfg.grid)) < 1e-10);
  }
  SUBCASE("suspension") {
    RunOptions o;
    o.horizon = 0.1;
    o.on_step = [](SolverState& s, const StepReport&) { return s.step < 4; };
    CHECK(run(st, st.initial_state(basic_flow(cfg.grid)), o).step == 4);
  }
}

TEST_CASE("blow-up detection") {
  SchemeConfig cfg = kolmogorov_cfg(16, 0.01);
  cfg.blowup_threshold = 1.0;
  Stepper st(cfg);
  SolverState s = st.initial_state(basic_flow(cfg.grid));
  try {
    st.advance(s);
    FAIL("expected BlowUp");
  } catch (const BlowUp& e) {
    CHECK(e.step() == 1);
    CHECK(e.time() == doctest::Approx(0.01));
  }
}

TEST_CASE("primitive form stays divergence-free and matches the vorticity form") {
  SchemeConfig p = kolmogorov_cfg(32, 0.01, Scheme::fsav_bdf2_primitive);
  p.dealias = true;
  SchemeConfig v = p;
  v.scheme = Scheme::fsav_bdf2_sv;
  Stepper sp(p), sv(v);
  const SpectralField2D w0 = basic_flow(p.grid) + random_band(p.grid, 4, 12, 0.2);
  SolverState a = sp.initial_state(w0), b = sv.initial_state(w0);
  for (int i = 0; i < 40; ++i) {
    const StepReport r = sp.advance(a);
    sv.advance(b);
    CHECK(r.energy_identity_residual < 1e-10);
    CHECK(inverse(divergence(a.u_n)).max_abs() < 1e-10);
  }
  // Dealiased products make the two formulations differ only through q.
  CHECK(max_diff(vorticity(a.u_n), b.w_n) < 1e-6);
}

TEST_CASE("manufactured run at a coarse step is pre-asymptotic but finite") {
  RunConfig cfg;
  cfg.scheme = manufactured_cfg(0.05);
  cfg.horizon = 100.0;
  cfg.ic.kind = InitialCondition::manufactured;
  const cli::ManufacturedErrors e = cli::run_manufactured(cfg, 0.05);
  CHECK(std::isfinite(e.error_omega));
  CHECK(e.error_omega == doctest::Approx(1.36619).epsilon(0.1));
}

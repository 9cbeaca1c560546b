#include "fsav/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fsav/diagnostics.hpp"
#include "fsav/errors.hpp"
#include "fsav/spectral.hpp"

namespace fsav {

std::string_view to_string(Scheme s) noexcept {
  switch (s) {
    case Scheme::fsav_bdf2_sv: return "fsav_bdf2_sv";
    case Scheme::fsav_bdf2_primitive: return "fsav_bdf2_primitive";
    case Scheme::imex_bdf2_sv: return "imex_bdf2_sv";
  }
  return "unknown";
}

std::optional<Scheme> scheme_from_string(std::string_view s) noexcept {
  if (s == "fsav_bdf2_sv") return Scheme::fsav_bdf2_sv;
  if (s == "fsav_bdf2_primitive") return Scheme::fsav_bdf2_primitive;
  if (s == "imex_bdf2_sv") return Scheme::imex_bdf2_sv;
  return std::nullopt;
}

void SchemeConfig::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw Error("time step k must be positive");
  if (!(re > 0.0) || !std::isfinite(re)) throw Error("Reynolds number must be positive");
  if (scheme != Scheme::imex_bdf2_sv && !(gamma > 0.0))
    throw Error("gamma must be positive for the FSAV schemes");
  if (!(blowup_threshold > 0.0)) throw Error("blowup_threshold must be positive");
  if (grid.nx == 0) throw InvalidGrid("scheme config has no grid");
  if (primitive() && forcing.kind == ForcingKind::manufactured)
    throw Error("manufactured forcing is only defined for the streamfunction-vorticity form");
  if (forcing.kind == ForcingKind::manufactured && forcing.case_id != "table3")
    throw Error("unknown manufactured case '" + forcing.case_id + "'");
}

SpectralField2D helmholtz_solve(const SpectralField2D& rhs, double k, double re) {
  const Grid2D& g = rhs.grid();
  SpectralField2D out(g);
  for (int m = 0; m < rhs.rows(); ++m)
    for (int j = 0; j < rhs.cols(); ++j)
      out.at(j, m) = rhs.at(j, m) / (1.5 / k + neg_laplacian_symbol(g, j, m) / re);
  return out;
}

namespace {

// Multiplies in place by a per-mode real factor.
void scale_modes(SpectralField2D& f, const std::vector<double>& mult) {
  auto d = f.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] *= mult[i];
}

// (-Lap)^{-1} without the mean check; the mean mode is set to zero.
void solve_poisson(const SpectralField2D& rhs, const std::vector<double>& inv_lap,
                   SpectralField2D& out) {
  out = rhs;
  scale_modes(out, inv_lap);
}

// <-Lap a, a>
double dissipation_form(const SpectralField2D& a) {
  const Grid2D& g = a.grid();
  const int last = g.nx / 2;
  double s = 0.0;
  for (int m = 0; m < a.rows(); ++m)
    for (int j = 0; j < a.cols(); ++j) {
      const double w = (j == 0 || j == last) ? 1.0 : 2.0;
      s += w * neg_laplacian_symbol(g, j, m) * std::norm(a.at(j, m));
    }
  return s * g.area();
}

double dissipation_form(const VelocityField& u) {
  return dissipation_form(u.u1) + dissipation_form(u.u2);
}

double sq_norm(const SpectralField2D& a) { return inner(a, a); }
double sq_norm(const VelocityField& a) { return inner(a, a); }

// |a - 2b + c|^2 / 4 and |a - b|^2 / 2 without temporaries.
double curvature2(const SpectralField2D& a, const SpectralField2D& b, const SpectralField2D& c) {
  const Grid2D& g = a.grid();
  const int last = g.nx / 2;
  double s = 0.0;
  for (int m = 0; m < a.rows(); ++m)
    for (int j = 0; j < a.cols(); ++j) {
      const double w = (j == 0 || j == last) ? 1.0 : 2.0;
      s += w * std::norm(a.at(j, m) - 2.0 * b.at(j, m) + c.at(j, m));
    }
  return 0.25 * s * g.area();
}

double curvature1(const SpectralField2D& a, const SpectralField2D& b) {
  const Grid2D& g = a.grid();
  const int last = g.nx / 2;
  double s = 0.0;
  for (int m = 0; m < a.rows(); ++m)
    for (int j = 0; j < a.cols(); ++j) {
      const double w = (j == 0 || j == last) ? 1.0 : 2.0;
      s += w * std::norm(a.at(j, m) - b.at(j, m));
    }
  return 0.5 * s * g.area();
}

double curvature2(const VelocityField& a, const VelocityField& b, const VelocityField& c) {
  return curvature2(a.u1, b.u1, c.u1) + curvature2(a.u2, b.u2, c.u2);
}

double curvature1(const VelocityField& a, const VelocityField& b) {
  return curvature1(a.u1, b.u1) + curvature1(a.u2, b.u2);
}

// Relative spectral divergence ||xi . u|| / ||xi|| ||u||| over the stored modes.
double relative_divergence(const VelocityField& u) {
  const Grid2D& g = u.grid();
  double num = 0.0;
  double den = 0.0;
  for (int m = 0; m < u.u1.rows(); ++m) {
    const double ky = (m == g.ny / 2) ? 0.0 : g.wavenumber_y(m);
    for (int j = 0; j < u.u1.cols(); ++j) {
      const double kx = (j == g.nx / 2) ? 0.0 : g.wavenumber_x(j);
      const complex_t d = kx * u.u1.at(j, m) + ky * u.u2.at(j, m);
      num += std::norm(d);
      den += (kx * kx + ky * ky) * (std::norm(u.u1.at(j, m)) + std::norm(u.u2.at(j, m)));
    }
  }
  return den == 0.0 ? 0.0 : std::sqrt(num / den);
}

constexpr double kDivergenceTol = 1e-10;

}  // namespace

struct Stepper::Impl {
  explicit Impl(const SchemeConfig& cfg)
      : ws(cfg.grid),
        inv_h1(cfg.grid.spectral_size()),
        inv_h2(cfg.grid.spectral_size()),
        inv_lap(cfg.grid.spectral_size()),
        nbar(cfg.grid), w1(cfg.grid), w2(cfg.grid), wbar(cfg.grid), psibar(cfg.grid) {
    const Grid2D& g = cfg.grid;
    const int nc = g.spectral_cols();
    for (int m = 0; m < g.ny; ++m)
      for (int j = 0; j < nc; ++j) {
        const std::size_t i = static_cast<std::size_t>(m) * nc + j;
        const double lam = neg_laplacian_symbol(g, j, m);
        inv_h1[i] = 1.0 / (1.0 / cfg.k + lam / cfg.re);
        inv_h2[i] = 1.0 / (1.5 / cfg.k + lam / cfg.re);
        inv_lap[i] = (j == 0 && m == 0) ? 0.0 : 1.0 / lam;
      }
    switch (cfg.forcing.kind) {
      case ForcingKind::none:
        f_w = SpectralField2D(g);
        f_u = VelocityField(g);
        break;
      case ForcingKind::kolmogorov:
        f_w = kolmogorov_vorticity_forcing(g, cfg.forcing.m, cfg.re);
        f_u = kolmogorov_velocity_forcing(g, cfg.forcing.m, cfg.re);
        break;
      case ForcingKind::manufactured:
        mc = manufactured_case_table3(cfg.re);
        if (std::abs(g.lx - mc.lx) > 1e-12 || std::abs(g.ly - mc.ly) > 1e-12)
          throw DomainMismatch("manufactured case requires the unit square");
        time_dependent = true;
        break;
    }
  }

  NonlinearWorkspace ws;
  std::vector<double> inv_h1, inv_h2, inv_lap;
  SpectralField2D f_w;
  VelocityField f_u;
  ManufacturedCase mc;
  bool time_dependent = false;
  double f_time = std::numeric_limits<double>::quiet_NaN();

  SpectralField2D nbar, w1, w2, wbar, psibar;
  VelocityField vbar, vn1, vn2, vrhs;
};

Stepper::Stepper(SchemeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  impl_ = std::make_unique<Impl>(cfg_);
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

double Stepper::helmholtz_symbol(double sigma, int jx, int jy) const {
  return sigma / cfg_.k + neg_laplacian_symbol(cfg_.grid, jx, jy) / cfg_.re;
}

const SpectralField2D& Stepper::forcing_vorticity(double t) {
  Impl& im = *impl_;
  if (im.time_dependent && !(im.f_time == t)) {
    im.f_w = sample_spectral(cfg_.grid, im.mc.source_omega, t);
    im.f_time = t;
  }
  return im.f_w;
}

const VelocityField& Stepper::forcing_velocity(double) { return impl_->f_u; }

SpectralField2D Stepper::streamfunction(const SpectralField2D& omega, double t) const {
  require_same_grid(cfg_.grid, omega.grid(), "streamfunction");
  SpectralField2D psi(cfg_.grid);
  if (cfg_.forcing.kind == ForcingKind::manufactured) {
    SpectralField2D r = omega;
    r -= sample_spectral(cfg_.grid, impl_->mc.source_p, t);
    solve_poisson(r, impl_->inv_lap, psi);
  } else {
    solve_poisson(omega, impl_->inv_lap, psi);
  }
  return psi;
}

SolverState Stepper::initial_state(const SpectralField2D& omega0, double t0) const {
  require_same_grid(cfg_.grid, omega0.grid(), "initial_state");
  if (!omega0.all_finite()) throw InvalidField("initial vorticity is not finite");
  SolverState s;
  s.t = t0;
  s.w_n = omega0;
  s.w_nm1 = omega0;
  if (cfg_.primitive()) {
    s.u_n = velocity_from_vorticity(omega0);
    s.u_nm1 = s.u_n;
  } else {
    if (cfg_.forcing.kind != ForcingKind::manufactured) (void)inv_neg_laplacian(omega0);
    s.psi_n = streamfunction(omega0, t0);
    s.psi_nm1 = s.psi_n;
  }
  return s;
}

SolverState Stepper::initial_state_velocity(const VelocityField& u0, double t0) const {
  require_same_grid(cfg_.grid, u0.grid(), "initial_state_velocity");
  if (relative_divergence(u0) > kDivergenceTol)
    throw DivergenceViolation("initial velocity is not divergence-free");
  SolverState s;
  s.t = t0;
  s.w_n = vorticity(u0);
  s.w_nm1 = s.w_n;
  if (cfg_.primitive()) {
    s.u_n = u0;
    s.u_nm1 = u0;
  } else {
    s.psi_n = streamfunction(s.w_n, t0);
    s.psi_nm1 = s.psi_n;
  }
  return s;
}

void Stepper::rebuild_derived(SolverState& s) const {
  if (cfg_.primitive()) {
    s.u_n = velocity_from_vorticity(s.w_n);
    s.u_nm1 = velocity_from_vorticity(s.w_nm1);
  } else {
    s.psi_n = streamfunction(s.w_n, s.t);
    s.psi_nm1 = s.levels > 1 ? streamfunction(s.w_nm1, s.t - cfg_.k) : s.psi_n;
  }
}

void Stepper::check_blowup(const SolverState& s) const {
  const SpectralField2D& w = s.w_n;
  if (!std::isfinite(s.q_n) || !w.all_finite())
    throw BlowUp(s.t, s.step, "solution became non-finite at t = " + std::to_string(s.t));
  if (w.abs_sum() <= cfg_.blowup_threshold) return;
  const double peak = impl_->ws.transform().inverse(w).max_abs();
  if (peak > cfg_.blowup_threshold)
    throw BlowUp(s.t, s.step, "max |omega| = " + std::to_string(peak) + " exceeds threshold at t = " +
                                  std::to_string(s.t));
}

StepReport Stepper::advance(SolverState& s) {
  if (s.levels < 2) return cfg_.primitive() ? step_primitive_bdf1(s) : step_bdf1(s);
  switch (cfg_.scheme) {
    case Scheme::fsav_bdf2_sv: return step_fsav_bdf2(s);
    case Scheme::imex_bdf2_sv: return step_imex_bdf2(s);
    case Scheme::fsav_bdf2_primitive: return step_primitive_bdf2(s);
  }
  throw Error("unknown scheme");
}

StepReport Stepper::step_bdf1(SolverState& s) {
  if (cfg_.primitive()) return step_primitive_bdf1(s);
  Impl& im = *impl_;
  const double k = cfg_.k;
  const double t_new = s.t + k;
  const bool sav = cfg_.scheme != Scheme::imex_bdf2_sv;

  im.ws.jacobian(s.psi_n, s.w_n, cfg_.dealias, im.nbar);
  const SpectralField2D& f = forcing_vorticity(t_new);

  im.w1 = f;
  im.w1.axpy(1.0 / k, s.w_n);
  scale_modes(im.w1, im.inv_h1);
  im.w2 = im.nbar;
  im.w2 *= -1.0;
  scale_modes(im.w2, im.inv_h1);

  StepReport rep;
  rep.trilinear_b1 = inner(im.nbar, im.w1);
  rep.trilinear_b2 = inner(im.nbar, im.w2);
  double q = 1.0;
  if (sav) {
    rep.q_denominator_bound = 1.0 / k + cfg_.gamma;
    rep.q_denominator = rep.q_denominator_bound - rep.trilinear_b2;
    if (!(rep.q_denominator > 0.0))
      throw DenominatorNonpositive("scalar update denominator is not positive");
    q = (cfg_.gamma + s.q_n / k + rep.trilinear_b1) / rep.q_denominator;
  }
  SpectralField2D w_new = im.w1;
  w_new.axpy(q, im.w2);

  if (sav) {
    FieldEnergyParts fp;
    fp.g_new = 0.5 * sq_norm(w_new);
    fp.g_old = 0.5 * sq_norm(s.w_n);
    fp.curvature = curvature1(w_new, s.w_n);
    fp.dissipation = k / cfg_.re * dissipation_form(w_new);
    fp.forcing_work = k * inner(f, w_new);
    rep.energy_identity_residual = bdf1_budget(fp, q, s.q_n, k, cfg_.gamma).residual();
  } else {
    rep.energy_identity_residual = std::numeric_limits<double>::quiet_NaN();
  }
  rep.q_new = q;

  s.w_nm1 = std::move(s.w_n);
  s.w_n = std::move(w_new);
  s.psi_nm1 = std::move(s.psi_n);
  s.psi_n = streamfunction(s.w_n, t_new);
  s.q_nm1 = s.q_n;
  s.q_n = q;
  s.t = t_new;
  s.step += 1;
  s.levels = 2;
  check_blowup(s);
  return rep;
}

StepReport Stepper::step_fsav_bdf2(SolverState& s) {
  if (s.levels < 2) return step_bdf1(s);
  Impl& im = *impl_;
  const double k = cfg_.k;
  const double t_new = s.t + k;

  im.wbar = s.w_n;
  im.wbar *= 2.0;
  im.wbar -= s.w_nm1;
  im.psibar = s.psi_n;
  im.psibar *= 2.0;
  im.psibar -= s.psi_nm1;
  im.ws.jacobian(im.psibar, im.wbar, cfg_.dealias, im.nbar);
  const SpectralField2D& f = forcing_vorticity(t_new);

  im.w1 = f;
  im.w1.axpy(2.0 / k, s.w_n);
  im.w1.axpy(-0.5 / k, s.w_nm1);
  scale_modes(im.w1, im.inv_h2);
  im.w2 = im.nbar;
  im.w2 *= -1.0;
  scale_modes(im.w2, im.inv_h2);

  StepReport rep;
  rep.trilinear_b1 = inner(im.nbar, im.w1);
  rep.trilinear_b2 = inner(im.nbar, im.w2);
  rep.q_denominator_bound = 1.5 / k + cfg_.gamma;
  rep.q_denominator = rep.q_denominator_bound - rep.trilinear_b2;
  if (!(rep.q_denominator > 0.0))
    throw DenominatorNonpositive("scalar update denominator is not positive");
  const double q =
      (cfg_.gamma + (4.0 * s.q_n - s.q_nm1) / (2.0 * k) + rep.trilinear_b1) / rep.q_denominator;
  SpectralField2D w_new = im.w1;
  w_new.axpy(q, im.w2);

  FieldEnergyParts fp;
  fp.g_new = gnorm_pair(s.w_n, w_new);
  fp.g_old = gnorm_pair(s.w_nm1, s.w_n);
  fp.curvature = curvature2(w_new, s.w_n, s.w_nm1);
  fp.dissipation = k / cfg_.re * dissipation_form(w_new);
  fp.forcing_work = k * inner(f, w_new);
  rep.energy_identity_residual = bdf2_budget(fp, q, s.q_n, s.q_nm1, k, cfg_.gamma).residual();
  rep.q_new = q;

  s.w_nm1 = std::move(s.w_n);
  s.w_n = std::move(w_new);
  s.psi_nm1 = std::move(s.psi_n);
  s.psi_n = streamfunction(s.w_n, t_new);
  s.q_nm1 = s.q_n;
  s.q_n = q;
  s.t = t_new;
  s.step += 1;
  check_blowup(s);
  return rep;
}

StepReport Stepper::step_imex_bdf2(SolverState& s) {
  if (s.levels < 2) return step_bdf1(s);
  Impl& im = *impl_;
  const double k = cfg_.k;
  const double t_new = s.t + k;

  im.wbar = s.w_n;
  im.wbar *= 2.0;
  im.wbar -= s.w_nm1;
  im.psibar = s.psi_n;
  im.psibar *= 2.0;
  im.psibar -= s.psi_nm1;
  im.ws.jacobian(im.psibar, im.wbar, cfg_.dealias, im.nbar);
  const SpectralField2D& f = forcing_vorticity(t_new);

  SpectralField2D w_new = f;
  w_new.axpy(2.0 / k, s.w_n);
  w_new.axpy(-0.5 / k, s.w_nm1);
  w_new -= im.nbar;
  scale_modes(w_new, im.inv_h2);

  StepReport rep;
  rep.energy_identity_residual = std::numeric_limits<double>::quiet_NaN();

  s.w_nm1 = std::move(s.w_n);
  s.w_n = std::move(w_new);
  s.psi_nm1 = std::move(s.psi_n);
  s.psi_n = streamfunction(s.w_n, t_new);
  s.q_nm1 = 1.0;
  s.q_n = 1.0;
  s.t = t_new;
  s.step += 1;
  check_blowup(s);
  return rep;
}

StepReport Stepper::step_primitive_bdf1(SolverState& s) {
  if (!cfg_.primitive()) return step_bdf1(s);
  Impl& im = *impl_;
  const double k = cfg_.k;
  const double t_new = s.t + k;

  im.ws.advection(s.u_n, s.u_n, cfg_.dealias, im.vbar);
  leray_project_inplace(im.vbar);
  const VelocityField& f = forcing_velocity(t_new);

  im.vn1 = f;
  im.vn1.axpy(1.0 / k, s.u_n);
  leray_project_inplace(im.vn1);
  scale_modes(im.vn1.u1, im.inv_h1);
  scale_modes(im.vn1.u2, im.inv_h1);
  im.vn2 = im.vbar;
  im.vn2 *= -1.0;
  scale_modes(im.vn2.u1, im.inv_h1);
  scale_modes(im.vn2.u2, im.inv_h1);

  StepReport rep;
  rep.trilinear_b1 = inner(im.vbar, im.vn1);
  rep.trilinear_b2 = inner(im.vbar, im.vn2);
  rep.q_denominator_bound = 1.0 / k + cfg_.gamma;
  rep.q_denominator = rep.q_denominator_bound - rep.trilinear_b2;
  if (!(rep.q_denominator > 0.0))
    throw DenominatorNonpositive("scalar update denominator is not positive");
  const double q = (cfg_.gamma + s.q_n / k + rep.trilinear_b1) / rep.q_denominator;
  VelocityField u_new = im.vn1;
  u_new.axpy(q, im.vn2);
  if (relative_divergence(u_new) > kDivergenceTol)
    throw DivergenceViolation("velocity lost incompressibility at t = " + std::to_string(t_new));

  FieldEnergyParts fp;
  fp.g_new = 0.5 * sq_norm(u_new);
  fp.g_old = 0.5 * sq_norm(s.u_n);
  fp.curvature = curvature1(u_new, s.u_n);
  fp.dissipation = k / cfg_.re * dissipation_form(u_new);
  fp.forcing_work = k * inner(f, u_new);
  rep.energy_identity_residual = bdf1_budget(fp, q, s.q_n, k, cfg_.gamma).residual();
  rep.q_new = q;

  s.u_nm1 = std::move(s.u_n);
  s.u_n = std::move(u_new);
  s.w_nm1 = std::move(s.w_n);
  s.w_n = vorticity(s.u_n);
  s.q_nm1 = s.q_n;
  s.q_n = q;
  s.t = t_new;
  s.step += 1;
  s.levels = 2;
  check_blowup(s);
  return rep;
}

StepReport Stepper::step_primitive_bdf2(SolverState& s) {
  if (s.levels < 2) return step_primitive_bdf1(s);
  if (!cfg_.primitive()) throw Error("step_primitive_bdf2 called on a vorticity configuration");
  Impl& im = *impl_;
  const double k = cfg_.k;
  const double t_new = s.t + k;

  im.vrhs = s.u_n;
  im.vrhs *= 2.0;
  im.vrhs -= s.u_nm1;
  im.ws.advection(im.vrhs, im.vrhs, cfg_.dealias, im.vbar);
  leray_project_inplace(im.vbar);
  const VelocityField& f = forcing_velocity(t_new);

  im.vn1 = f;
  im.vn1.axpy(2.0 / k, s.u_n);
  im.vn1.axpy(-0.5 / k, s.u_nm1);
  leray_project_inplace(im.vn1);
  scale_modes(im.vn1.u1, im.inv_h2);
  scale_modes(im.vn1.u2, im.inv_h2);
  im.vn2 = im.vbar;
  im.vn2 *= -1.0;
  scale_modes(im.vn2.u1, im.inv_h2);
  scale_modes(im.vn2.u2, im.inv_h2);

  StepReport rep;
  rep.trilinear_b1 = inner(im.vbar, im.vn1);
  rep.trilinear_b2 = inner(im.vbar, im.vn2);
  rep.q_denominator_bound = 1.5 / k + cfg_.gamma;
  rep.q_denominator = rep.q_denominator_bound - rep.trilinear_b2;
  if (!(rep.q_denominator > 0.0))
    throw DenominatorNonpositive("scalar update denominator is not positive");
  const double q =
      (cfg_.gamma + (4.0 * s.q_n - s.q_nm1) / (2.0 * k) + rep.trilinear_b1) / rep.q_denominator;
  VelocityField u_new = im.vn1;
  u_new.axpy(q, im.vn2);
  if (relative_divergence(u_new) > kDivergenceTol)
    throw DivergenceViolation("velocity lost incompressibility at t = " + std::to_string(t_new));

  FieldEnergyParts fp;
  fp.g_new = gnorm_pair(s.u_n, u_new);
  fp.g_old = gnorm_pair(s.u_nm1, s.u_n);
  fp.curvature = curvature2(u_new, s.u_n, s.u_nm1);
  fp.dissipation = k / cfg_.re * dissipation_form(u_new);
  fp.forcing_work = k * inner(f, u_new);
  rep.energy_identity_residual = bdf2_budget(fp, q, s.q_n, s.q_nm1, k, cfg_.gamma).residual();
  rep.q_new = q;

  s.u_nm1 = std::move(s.u_n);
  s.u_n = std::move(u_new);
  s.w_nm1 = std::move(s.w_n);
  s.w_n = vorticity(s.u_n);
  s.q_nm1 = s.q_n;
  s.q_n = q;
  s.t = t_new;
  s.step += 1;
  check_blowup(s);
  return rep;
}

std::pair<double, double> Stepper::scheme_residuals(const SolverState& before,
                                                    const SolverState& after) {
  if (cfg_.primitive()) throw Error("scheme_residuals: vorticity schemes only");
  const double k = cfg_.k;
  const bool bdf2 = before.levels > 1;
  SpectralField2D psibar = before.psi_n;
  SpectralField2D wbar = before.w_n;
  if (bdf2) {
    psibar *= 2.0;
    psibar -= before.psi_nm1;
    wbar *= 2.0;
    wbar -= before.w_nm1;
  }
  SpectralField2D nbar(cfg_.grid);
  impl_->ws.jacobian(psibar, wbar, cfg_.dealias, nbar);
  const SpectralField2D& f = forcing_vorticity(after.t);
  const double q = after.q_n;

  // d_t w + A w + q N - F
  SpectralField2D r(cfg_.grid);
  const Grid2D& g = cfg_.grid;
  double rn = 0.0;
  double sn = 0.0;
  for (int m = 0; m < g.ny; ++m)
    for (int j = 0; j < g.spectral_cols(); ++j) {
      const complex_t a = after.w_n.at(j, m);
      const complex_t dt = bdf2 ? (3.0 * a - 4.0 * before.w_n.at(j, m) + before.w_nm1.at(j, m)) /
                                      (2.0 * k)
                                : (a - before.w_n.at(j, m)) / k;
      const complex_t diff = neg_laplacian_symbol(g, j, m) / cfg_.re * a;
      const complex_t nl = q * nbar.at(j, m);
      const complex_t res = dt + diff + nl - f.at(j, m);
      rn = std::max(rn, std::abs(res));
      sn = std::max({sn, std::abs(dt), std::abs(diff), std::abs(nl), std::abs(f.at(j, m))});
    }
  const double mom = sn == 0.0 ? 0.0 : rn / sn;

  if (cfg_.scheme == Scheme::imex_bdf2_sv) return {mom, 0.0};
  const double qdt = bdf2 ? (3.0 * q - 4.0 * before.q_n + before.q_nm1) / (2.0 * k)
                          : (q - before.q_n) / k;
  const double damp = cfg_.gamma * (q - 1.0);
  const double work = inner(nbar, after.w_n);
  const double qs = std::abs(qdt) + std::abs(damp) + std::abs(work);
  const double qres = qs == 0.0 ? 0.0 : std::abs(qdt + damp - work) / qs;
  return {mom, qres};
}

std::pair<SolverState, StepReport> step_fsav_bdf2_sv(const SolverState& s, const SchemeConfig& cfg) {
  SchemeConfig c = cfg;
  c.scheme = Scheme::fsav_bdf2_sv;
  Stepper st(c);
  SolverState out = s;
  StepReport r = st.step_fsav_bdf2(out);
  return {std::move(out), r};
}

std::pair<SolverState, StepReport> step_fsav_bdf1(const SolverState& s, const SchemeConfig& cfg) {
  Stepper st(cfg);
  SolverState out = s;
  StepReport r = cfg.primitive() ? st.step_primitive_bdf1(out) : st.step_bdf1(out);
  return {std::move(out), r};
}

std::pair<SolverState, StepReport> step_imex_bdf2_sv(const SolverState& s, const SchemeConfig& cfg) {
  SchemeConfig c = cfg;
  c.scheme = Scheme::imex_bdf2_sv;
  Stepper st(c);
  SolverState out = s;
  StepReport r = st.step_imex_bdf2(out);
  return {std::move(out), r};
}

std::pair<SolverState, StepReport> step_fsav_bdf2_primitive(const SolverState& s,
                                                            const SchemeConfig& cfg) {
  SchemeConfig c = cfg;
  c.scheme = Scheme::fsav_bdf2_primitive;
  Stepper st(c);
  SolverState out = s;
  StepReport r = st.step_primitive_bdf2(out);
  return {std::move(out), r};
}

std::uint64_t steps_to_horizon(double t0, double horizon, double k, bool allow_shortening) {
  if (!(k > 0.0)) throw Error("time step k must be positive");
  if (horizon < t0) throw Error("horizon precedes the current time");
  const double n = (horizon - t0) / k;
  const double r = std::round(n);
  if (std::abs(n - r) <= 1e-9 * std::max(1.0, n)) return static_cast<std::uint64_t>(r);
  if (!allow_shortening)
    throw NonIntegralHorizon("(T - t0)/k = " + std::to_string(n) + " is not an integer");
  return static_cast<std::uint64_t>(std::floor(n));
}

SolverState run(Stepper& stepper, SolverState state, const RunOptions& opts) {
  const SchemeConfig& cfg = stepper.config();
  const std::uint64_t n = steps_to_horizon(state.t, opts.horizon, cfg.k, opts.allow_shortening);
  StepReport rep;
  rep.q_new = state.q_n;
  if (opts.sample_every > 0 && opts.on_sample && state.step == 0) opts.on_sample(state, rep);
  for (std::uint64_t i = 0; i < n; ++i) {
    rep = stepper.advance(state);
    if (opts.sample_every > 0 && opts.on_sample && state.step % opts.sample_every == 0)
      opts.on_sample(state, rep);
    if (opts.on_step && !opts.on_step(state, rep)) return state;
  }
  const double rest = opts.horizon - state.t;
  if (opts.allow_shortening && rest > 1e-9 * cfg.k) {
    SchemeConfig short_cfg = cfg;
    short_cfg.k = rest;
    Stepper last(short_cfg);
    rep = cfg.primitive() ? last.step_primitive_bdf1(state) : last.step_bdf1(state);
    state.t = opts.horizon;
    if (opts.on_sample) opts.on_sample(state, rep);
    if (opts.on_step) opts.on_step(state, rep);
  }
  return state;
}

SolverState run(SolverState state, const SchemeConfig& cfg, const RunOptions& opts) {
  Stepper st(cfg);
  return run(st, std::move(state), opts);
}

}  // namespace fsav

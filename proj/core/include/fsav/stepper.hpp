#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <utility>

#include "fsav/grid.hpp"
#include "fsav/model.hpp"

namespace fsav {

enum class Scheme : std::uint32_t {
  fsav_bdf2_sv = 1,
  fsav_bdf2_primitive = 2,
  imex_bdf2_sv = 3,
};

std::string_view to_string(Scheme s) noexcept;
std::optional<Scheme> scheme_from_string(std::string_view s) noexcept;

struct SchemeConfig {
  double k = 0.01;
  double re = 1.0;
  double gamma = 1000.0;
  Grid2D grid;
  Scheme scheme = Scheme::fsav_bdf2_sv;
  bool dealias = false;
  ForcingSpec forcing;
  double blowup_threshold = 1e8;

  /// Throws Error on k <= 0, Re <= 0, or gamma <= 0 for an FSAV scheme.
  void validate() const;
  bool primitive() const noexcept { return scheme == Scheme::fsav_bdf2_primitive; }
};

/// Two time levels of the solution and of the auxiliary scalar.
///
/// Streamfunction-vorticity schemes use w_* and psi_*; the primitive scheme
/// uses u_*. `levels` is 1 right after initialization (the *_nm1 entries then
/// mirror level n) and 2 once the first-order starter has run.
struct SolverState {
  SpectralField2D w_n, w_nm1;
  SpectralField2D psi_n, psi_nm1;
  VelocityField u_n, u_nm1;
  double q_n = 1.0;
  double q_nm1 = 1.0;
  double t = 0.0;
  std::uint64_t step = 0;
  int levels = 1;
};

struct StepReport {
  double q_new = 1.0;
  double q_denominator = 0.0;
  /// sigma/k + gamma for the step taken; q_denominator never falls below it.
  double q_denominator_bound = 0.0;
  /// |LHS - RHS| / sum |terms| of the discrete energy identity for this step.
  double energy_identity_residual = 0.0;
  double trilinear_b1 = 0.0;
  double trilinear_b2 = 0.0;
};

/// Per-mode solve of (3/(2k) - Lap/Re) w = rhs.
SpectralField2D helmholtz_solve(const SpectralField2D& rhs, double k, double re);

/// Owns the workspaces, cached forcing and transform plans for one run.
/// Steps mutate the state in place; one Stepper per worker.
class Stepper {
 public:
  explicit Stepper(SchemeConfig cfg);
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  const SchemeConfig& config() const noexcept { return cfg_; }

  /// One-level state from an initial vorticity at time t0. For the primitive
  /// scheme the velocity is recovered as grad_perp of (-Lap)^{-1} omega0.
  SolverState initial_state(const SpectralField2D& omega0, double t0 = 0.0) const;
  SolverState initial_state_velocity(const VelocityField& u0, double t0 = 0.0) const;

  /// Dispatches on `levels` and the configured scheme.
  StepReport advance(SolverState& s);

  /// First-order starter: (w1 - w0)/k - Lap w1/Re + q1 N(w0) = F(t1), with the
  /// matching first-order scalar update.
  StepReport step_bdf1(SolverState& s);
  StepReport step_fsav_bdf2(SolverState& s);
  /// Explicit-advection IMEX-BDF2 (q frozen at 1).
  StepReport step_imex_bdf2(SolverState& s);
  StepReport step_primitive_bdf1(SolverState& s);
  StepReport step_primitive_bdf2(SolverState& s);

  /// Vorticity forcing F(t); cached when time-independent.
  const SpectralField2D& forcing_vorticity(double t);
  const VelocityField& forcing_velocity(double t);
  /// psi = (-Lap)^{-1}(omega - S_p(t)); S_p vanishes except for manufactured runs.
  SpectralField2D streamfunction(const SpectralField2D& omega, double t) const;

  /// Rebuilds psi (or u) from the vorticity levels, e.g. after a restart.
  void rebuild_derived(SolverState& s) const;

  /// Residuals of the coupled scheme equations at the new level:
  /// {relative momentum residual, relative scalar-equation residual}.
  /// `before` must be the state the BDF2 step was taken from.
  std::pair<double, double> scheme_residuals(const SolverState& before, const SolverState& after);

 private:
  struct Impl;
  void check_blowup(const SolverState& s) const;
  double helmholtz_symbol(double sigma, int jx, int jy) const;

  SchemeConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

/// Free-function wrappers; each builds a temporary Stepper.
std::pair<SolverState, StepReport> step_fsav_bdf2_sv(const SolverState& s, const SchemeConfig& cfg);
std::pair<SolverState, StepReport> step_fsav_bdf1(const SolverState& s, const SchemeConfig& cfg);
std::pair<SolverState, StepReport> step_imex_bdf2_sv(const SolverState& s, const SchemeConfig& cfg);
std::pair<SolverState, StepReport> step_fsav_bdf2_primitive(const SolverState& s,
                                                            const SchemeConfig& cfg);

struct RunOptions {
  /// Final time T.
  double horizon = 0.0;
  /// Steps between on_sample calls (also called once before the first step); 0 disables.
  std::uint64_t sample_every = 0;
  std::function<void(const SolverState&, const StepReport&)> on_sample;
  /// Called after every step; returning false suspends the run.
  std::function<bool(SolverState&, const StepReport&)> on_step;
  /// Take a shortened first-order final step when (T - t)/k is not integral.
  bool allow_shortening = false;
};

/// Number of uniform steps from t0 to T; throws NonIntegralHorizon when
/// (T - t0)/k is not an integer within 1e-9 (relative) and shortening is off.
std::uint64_t steps_to_horizon(double t0, double horizon, double k, bool allow_shortening);

/// Advances until T: the starter once if the state has one level, then the
/// configured two-level scheme. Propagates BlowUp.
SolverState run(Stepper& stepper, SolverState state, const RunOptions& opts);
SolverState run(SolverState state, const SchemeConfig& cfg, const RunOptions& opts);

}  // namespace fsav

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "fsav/grid.hpp"
#include "fsav/model.hpp"
#include "fsav/stepper.hpp"

namespace fsav {

// ---------------------------------------------------------------------------
// G-norm machinery
// ---------------------------------------------------------------------------

/// Eigenvalues of G = 1/4 [[1, -2], [-2, 5]].
inline constexpr double kGnormLambdaMin = 0.042893218813452476;  // (1.5 - sqrt 2) / 2
inline constexpr double kGnormLambdaMax = 1.4571067811865475;    // (1.5 + sqrt 2) / 2

/// V . G V for V = [first, second]:  first^2/4 - first*second + 5 second^2/4.
/// The BDF2 telescoping identity pairs the older level first:
///   <(3a - 4b + c)/2, a> = G(b, a) - G(c, b) + |a - 2b + c|^2 / 4.
double gnorm_pair(double first, double second) noexcept;
double gnorm_pair(const SpectralField2D& first, const SpectralField2D& second);
double gnorm_pair(const VelocityField& first, const VelocityField& second);

/// Terms of the per-step discrete energy identity
///   (G_new - G_old) + curvature + dissipation + (Gq_new - Gq_old) + q_curvature + q_damping
///     = forcing_work + q_source.
/// The G levels are kept separately so that scale() reflects their round-off.
struct EnergyBudget {
  double field_g_new = 0.0;
  double field_g_old = 0.0;
  double field_curvature = 0.0;
  double dissipation = 0.0;
  double q_g_new = 0.0;
  double q_g_old = 0.0;
  double q_curvature = 0.0;
  double q_damping = 0.0;
  double forcing_work = 0.0;
  double q_source = 0.0;

  double lhs() const noexcept;
  double rhs() const noexcept;
  /// Sum of |term| over all ten terms.
  double scale() const noexcept;
  /// |lhs - rhs| / scale, or 0 when every term vanishes.
  double residual() const noexcept;
};

/// Field-side quantities of one step, already multiplied through by k where
/// the identity carries a k.
struct FieldEnergyParts {
  double g_new = 0.0;         // BDF2: G(u^n, u^{n+1});   BDF1: |u^1|^2 / 2
  double g_old = 0.0;         // BDF2: G(u^{n-1}, u^n);   BDF1: |u^0|^2 / 2
  double curvature = 0.0;     // BDF2: |u^{n+1} - 2u^n + u^{n-1}|^2 / 4;  BDF1: |u^1 - u^0|^2 / 2
  double dissipation = 0.0;   // k <A u^{n+1}, u^{n+1}>
  double forcing_work = 0.0;  // k <F^{n+1}, u^{n+1}>
};

EnergyBudget bdf2_budget(const FieldEnergyParts& f, double q_new, double q_cur, double q_old,
                         double k, double gamma) noexcept;
EnergyBudget bdf1_budget(const FieldEnergyParts& f, double q_new, double q_old, double k,
                         double gamma) noexcept;

/// Energy identity of the step prev -> next (first-order form when prev has one level).
/// `forcing_work` is k <F^{n+1}, u^{n+1}>.
EnergyBudget energy_budget(const SolverState& prev, const SolverState& next,
                           const SchemeConfig& cfg, double forcing_work);
double energy_identity(const SolverState& prev, const SolverState& next, const SchemeConfig& cfg,
                       double forcing_work);

/// beta = min(c0 / (8 Re), gamma / 4), c0 the Poincare constant of the grid.
double default_beta(const SchemeConfig& cfg) noexcept;

/// E^n = G(u^{n-1}, u^n) + G(q^{n-1}, q^n) + beta k (|u^n|^2 + |q^n|^2).
double discrete_energy(const SolverState& s, const SchemeConfig& cfg, double beta);

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

/// Coefficient of exp(i(jx 2 pi x/lx + jy 2 pi y/ly)); throws ModeOutOfRange
/// unless |jx| < nx/2 and |jy| < ny/2.
std::complex<double> track_mode(const SpectralField2D& field, int jx, int jy);

struct TimeSeriesRecord {
  double t = 0.0;
  double l2_omega = 0.0;
  double h1_omega = 0.0;
  double max_omega = 0.0;
  double q = 1.0;
  double e_gnorm = 0.0;
  double energy_residual = 0.0;
  double mode_re = 0.0;
  double mode_im = 0.0;

  friend bool operator==(const TimeSeriesRecord&, const TimeSeriesRecord&) = default;
};

struct ModeSelector {
  int jx = 0;
  int jy = 1;
  /// Track the streamfunction coefficient instead of the vorticity one.
  bool streamfunction = false;
};

/// Builds one diagnostics row; uses the vorticity of u for the primitive scheme.
TimeSeriesRecord make_record(const SolverState& s, const SchemeConfig& cfg,
                             const StepReport& last_step, double beta, const ModeSelector& mode);

// ---------------------------------------------------------------------------
// Burst statistics
// ---------------------------------------------------------------------------

struct SeriesPoint {
  double t = 0.0;
  double value = 0.0;
};

struct BurstEvent {
  double t_start = 0.0;
  double t_peak = 0.0;
  double t_end = 0.0;
  double peak_value = 0.0;
};

struct BurstDetectorParams {
  double open_sigma = 4.0;
  double close_sigma = 2.0;
  /// Events whose gap (next start - previous end) is below this are merged.
  double merge_gap = 10.0;
};

/// Hysteresis threshold detector. The baseline mean/std come from samples with
/// t <= t0 + warmup. t_start is the last sample below the open threshold
/// before the excursion and t_end the first sample back below the close
/// threshold; an excursion still open at the end of the series is closed at
/// its final sample. Throws InsufficientData if the warmup window covers the
/// whole series.
std::vector<BurstEvent> detect_bursts(std::span<const SeriesPoint> series, double warmup,
                                      const BurstDetectorParams& params = {});

/// Gaps between consecutive burst peaks.
std::vector<double> inter_burst_intervals(std::span<const BurstEvent> events);

struct PsdBin {
  double freq = 0.0;
  double power = 0.0;
};

/// One-sided mean-removed periodogram: power(f_j) = c_j |DFT(v - mean)_j|^2 dt / Ns
/// at f_j = j / (Ns dt), j = 0..Ns/2, with c_j = 2 for bins that have a
/// negative-frequency twin. Sum(power) * df equals the series variance.
/// `segments` > 1 averages periodograms of that many equal non-overlapping
/// segments. Throws NonUniformSampling when the spacing varies by more than 1e-9 relative.
std::vector<PsdBin> psd(std::span<const SeriesPoint> series, int segments = 1);

}  // namespace fsav

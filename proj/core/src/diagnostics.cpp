#include "fsav/diagnostics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fsav/errors.hpp"
#include "fsav/spectral.hpp"
#include "planner_lock.hpp"

namespace fsav {

double gnorm_pair(double first, double second) noexcept {
  return 0.25 * first * first - first * second + 1.25 * second * second;
}

double gnorm_pair(const SpectralField2D& first, const SpectralField2D& second) {
  return 0.25 * inner(first, first) - inner(first, second) + 1.25 * inner(second, second);
}

double gnorm_pair(const VelocityField& first, const VelocityField& second) {
  return gnorm_pair(first.u1, second.u1) + gnorm_pair(first.u2, second.u2);
}

double EnergyBudget::lhs() const noexcept {
  return (field_g_new - field_g_old) + field_curvature + dissipation + (q_g_new - q_g_old) +
         q_curvature + q_damping;
}

double EnergyBudget::rhs() const noexcept { return forcing_work + q_source; }

double EnergyBudget::scale() const noexcept {
  return std::abs(field_g_new) + std::abs(field_g_old) + std::abs(field_curvature) +
         std::abs(dissipation) + std::abs(q_g_new) + std::abs(q_g_old) + std::abs(q_curvature) +
         std::abs(q_damping) + std::abs(forcing_work) + std::abs(q_source);
}

double EnergyBudget::residual() const noexcept {
  const double s = scale();
  return s == 0.0 ? 0.0 : std::abs(lhs() - rhs()) / s;
}

EnergyBudget bdf2_budget(const FieldEnergyParts& f, double q_new, double q_cur, double q_old,
                         double k, double gamma) noexcept {
  EnergyBudget b;
  b.field_g_new = f.g_new;
  b.field_g_old = f.g_old;
  b.field_curvature = f.curvature;
  b.dissipation = f.dissipation;
  b.forcing_work = f.forcing_work;
  b.q_g_new = gnorm_pair(q_cur, q_new);
  b.q_g_old = gnorm_pair(q_old, q_cur);
  const double c = q_new - 2.0 * q_cur + q_old;
  b.q_curvature = 0.25 * c * c;
  b.q_damping = k * gamma * q_new * q_new;
  b.q_source = k * gamma * q_new;
  return b;
}

EnergyBudget bdf1_budget(const FieldEnergyParts& f, double q_new, double q_old, double k,
                         double gamma) noexcept {
  EnergyBudget b;
  b.field_g_new = f.g_new;
  b.field_g_old = f.g_old;
  b.field_curvature = f.curvature;
  b.dissipation = f.dissipation;
  b.forcing_work = f.forcing_work;
  b.q_g_new = 0.5 * q_new * q_new;
  b.q_g_old = 0.5 * q_old * q_old;
  const double d = q_new - q_old;
  b.q_curvature = 0.5 * d * d;
  b.q_damping = k * gamma * q_new * q_new;
  b.q_source = k * gamma * q_new;
  return b;
}

namespace {

double dissipation_of(const SpectralField2D& a) {
  const SpectralField2D la = laplacian(a);
  return -inner(la, a);
}

template <class Field>
FieldEnergyParts field_parts(const Field& a, const Field& b, const Field& c, bool bdf2) {
  FieldEnergyParts p;
  if (bdf2) {
    p.g_new = gnorm_pair(b, a);
    p.g_old = gnorm_pair(c, b);
    Field d = a;
    d.axpy(-2.0, b);
    d += c;
    p.curvature = 0.25 * inner(d, d);
  } else {
    p.g_new = 0.5 * inner(a, a);
    p.g_old = 0.5 * inner(b, b);
    Field d = a;
    d -= b;
    p.curvature = 0.5 * inner(d, d);
  }
  return p;
}

}  // namespace

EnergyBudget energy_budget(const SolverState& prev, const SolverState& next,
                           const SchemeConfig& cfg, double forcing_work) {
  const bool bdf2 = prev.levels > 1;
  const double k = cfg.k;
  FieldEnergyParts p;
  if (cfg.primitive()) {
    p = field_parts(next.u_n, prev.u_n, prev.u_nm1, bdf2);
    p.dissipation = k / cfg.re * (dissipation_of(next.u_n.u1) + dissipation_of(next.u_n.u2));
  } else {
    p = field_parts(next.w_n, prev.w_n, prev.w_nm1, bdf2);
    p.dissipation = k / cfg.re * dissipation_of(next.w_n);
  }
  p.forcing_work = forcing_work;
  return bdf2 ? bdf2_budget(p, next.q_n, prev.q_n, prev.q_nm1, k, cfg.gamma)
              : bdf1_budget(p, next.q_n, prev.q_n, k, cfg.gamma);
}

double energy_identity(const SolverState& prev, const SolverState& next, const SchemeConfig& cfg,
                       double forcing_work) {
  return energy_budget(prev, next, cfg, forcing_work).residual();
}

double default_beta(const SchemeConfig& cfg) noexcept {
  return std::min(cfg.grid.poincare_constant() / (8.0 * cfg.re), cfg.gamma / 4.0);
}

double discrete_energy(const SolverState& s, const SchemeConfig& cfg, double beta) {
  double field = 0.0;
  double sq = 0.0;
  if (cfg.primitive()) {
    field = gnorm_pair(s.u_nm1, s.u_n);
    sq = inner(s.u_n, s.u_n);
  } else {
    field = gnorm_pair(s.w_nm1, s.w_n);
    sq = inner(s.w_n, s.w_n);
  }
  return field + gnorm_pair(s.q_nm1, s.q_n) + beta * cfg.k * (sq + s.q_n * s.q_n);
}

std::complex<double> track_mode(const SpectralField2D& field, int jx, int jy) {
  const Grid2D& g = field.grid();
  if (std::abs(jx) >= g.nx / 2 || std::abs(jy) >= g.ny / 2)
    throw ModeOutOfRange("mode (" + std::to_string(jx) + ", " + std::to_string(jy) +
                         ") is outside the resolved band");
  return field.coeff(jx, jy);
}

TimeSeriesRecord make_record(const SolverState& s, const SchemeConfig& cfg,
                             const StepReport& last_step, double beta, const ModeSelector& mode) {
  const SpectralField2D& w = s.w_n;
  const FieldNorms n = norms(w);
  TimeSeriesRecord r;
  r.t = s.t;
  r.l2_omega = n.l2;
  r.h1_omega = n.h1_semi;
  r.max_omega = n.linf;
  r.q = s.q_n;
  r.e_gnorm = discrete_energy(s, cfg, beta);
  r.energy_residual = s.step == 0 ? 0.0 : last_step.energy_identity_residual;
  std::complex<double> c;
  if (mode.streamfunction) {
    const SpectralField2D psi = cfg.primitive() || s.psi_n.grid().nx == 0
                                    ? inv_neg_laplacian(w, std::numeric_limits<double>::infinity())
                                    : s.psi_n;
    c = track_mode(psi, mode.jx, mode.jy);
  } else {
    c = track_mode(w, mode.jx, mode.jy);
  }
  r.mode_re = c.real();
  r.mode_im = c.imag();
  return r;
}

std::vector<BurstEvent> detect_bursts(std::span<const SeriesPoint> series, double warmup,
                                      const BurstDetectorParams& params) {
  if (series.empty()) throw InsufficientData("empty series");
  if (!(params.close_sigma <= params.open_sigma))
    throw Error("burst detector: close threshold must not exceed the open threshold");
  const double t_cut = series.front().t + warmup;
  std::size_t nb = 0;
  double mean = 0.0;
  for (const auto& p : series) {
    if (p.t > t_cut) break;
    mean += p.value;
    ++nb;
  }
  if (nb < 2 || nb >= series.size())
    throw InsufficientData("warmup window of " + std::to_string(warmup) +
                           " leaves no baseline or no data to scan");
  mean /= static_cast<double>(nb);
  double var = 0.0;
  for (std::size_t i = 0; i < nb; ++i) {
    const double d = series[i].value - mean;
    var += d * d;
  }
  const double sigma = std::sqrt(var / static_cast<double>(nb));
  const double open = mean + params.open_sigma * sigma;
  const double close = mean + params.close_sigma * sigma;

  std::vector<BurstEvent> raw;
  bool inside = false;
  BurstEvent cur;
  for (std::size_t i = nb; i < series.size(); ++i) {
    const SeriesPoint& p = series[i];
    if (!inside) {
      if (p.value > open) {
        inside = true;
        cur = BurstEvent{series[i - 1].t, p.t, p.t, p.value};
      }
      continue;
    }
    if (p.value > cur.peak_value) {
      cur.peak_value = p.value;
      cur.t_peak = p.t;
    }
    if (p.value < close) {
      cur.t_end = p.t;
      raw.push_back(cur);
      inside = false;
    }
  }
  if (inside) {
    cur.t_end = series.back().t;
    raw.push_back(cur);
  }

  std::vector<BurstEvent> out;
  for (const auto& e : raw) {
    if (!out.empty() && e.t_start - out.back().t_end < params.merge_gap) {
      BurstEvent& last = out.back();
      if (e.peak_value > last.peak_value) {
        last.peak_value = e.peak_value;
        last.t_peak = e.t_peak;
      }
      last.t_end = e.t_end;
    } else {
      out.push_back(e);
    }
  }
  return out;
}

std::vector<double> inter_burst_intervals(std::span<const BurstEvent> events) {
  std::vector<double> out;
  for (std::size_t i = 1; i < events.size(); ++i)
    out.push_back(events[i].t_peak - events[i - 1].t_peak);
  return out;
}

std::vector<PsdBin> psd(std::span<const SeriesPoint> series, int segments) {
  if (segments < 1) throw Error("psd: segments must be >= 1");
  if (series.size() < 2 * static_cast<std::size_t>(segments))
    throw InsufficientData("psd: need at least two samples per segment");
  const double dt = series[1].t - series[0].t;
  if (!(dt > 0.0)) throw NonUniformSampling("psd: times must increase");
  for (std::size_t i = 1; i < series.size(); ++i) {
    const double d = series[i].t - series[i - 1].t;
    if (std::abs(d - dt) > 1e-9 * dt)
      throw NonUniformSampling("psd: sample spacing varies at index " + std::to_string(i));
  }
  const int ns = static_cast<int>(series.size() / static_cast<std::size_t>(segments));
  const int nbins = ns / 2 + 1;
  std::vector<PsdBin> out(static_cast<std::size_t>(nbins));
  for (int j = 0; j < nbins; ++j) out[j].freq = j / (ns * dt);

  double* in = fftw_alloc_real(static_cast<std::size_t>(ns));
  fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(nbins));
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(detail::planner_mutex());
    plan = fftw_plan_dft_r2c_1d(ns, in, spec, FFTW_ESTIMATE);
  }
  for (int sgm = 0; sgm < segments; ++sgm) {
    const std::size_t off = static_cast<std::size_t>(sgm) * ns;
    double mean = 0.0;
    for (int i = 0; i < ns; ++i) mean += series[off + i].value;
    mean /= ns;
    for (int i = 0; i < ns; ++i) in[i] = series[off + i].value - mean;
    fftw_execute(plan);
    for (int j = 0; j < nbins; ++j) {
      const bool twin = j != 0 && !(ns % 2 == 0 && j == ns / 2);
      const double mag2 = spec[j][0] * spec[j][0] + spec[j][1] * spec[j][1];
      out[j].power += (twin ? 2.0 : 1.0) * mag2 * dt / ns;
    }
  }
  {
    std::lock_guard<std::mutex> lock(detail::planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(spec);
  for (auto& b : out) b.power /= segments;
  return out;
}

}  // namespace fsav

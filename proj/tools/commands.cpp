#include "commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <thread>

#include "fsav/abstract_fsav.hpp"
#include "fsav/errors.hpp"
#include "fsav/spectral.hpp"

namespace fsav::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel_max_error(const RealField2D& approx, const RealField2D& exact) {
  double num = 0.0;
  double den = 0.0;
  const auto a = approx.values();
  const auto e = exact.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - e[i]));
    den = std::max(den, std::abs(e[i]));
  }
  return den == 0.0 ? num : num / den;
}

std::optional<double> order_between(double k_prev, double e_prev, double k, double e) {
  if (!(e_prev > 0.0) || !(e > 0.0) || k_prev == k) return std::nullopt;
  return std::log(e_prev / e) / std::log(k_prev / k);
}

void write_csv_rows(const std::filesystem::path& path, const std::string& header,
                    const std::vector<std::string>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

ManufacturedErrors run_manufactured(const RunConfig& cfg, double k) {
  SchemeConfig sc = cfg.scheme;
  sc.k = k;
  sc.forcing.kind = ForcingKind::manufactured;
  Stepper stepper(sc);
  const ManufacturedCase mc = manufactured_case_table3(sc.re);
  SolverState s = stepper.initial_state(sample_spectral(sc.grid, mc.omega, cfg.t0), cfg.t0);
  RunOptions ro;
  ro.horizon = cfg.horizon;
  s = run(stepper, std::move(s), ro);
  const double t = s.t;
  ManufacturedErrors e;
  e.error_omega = rel_max_error(inverse(s.w_n), RealField2D::sample(sc.grid, [&](double x, double y) {
                                  return mc.omega(t, x, y);
                                }));
  e.error_psi = rel_max_error(inverse(s.psi_n), RealField2D::sample(sc.grid, [&](double x, double y) {
                                return mc.psi(t, x, y);
                              }));
  e.q_error = std::abs(s.q_n - 1.0);
  return e;
}

std::vector<ConvergeRow> cmd_converge(const RunConfig& cfg, std::span<const double> ks,
                                      int workers) {
  if (cfg.scheme.forcing.kind != ForcingKind::manufactured)
    throw ConfigError(0, "converge needs forcing = manufactured");
  std::vector<ConvergeRow> rows(ks.size());
  std::vector<std::string> failures(ks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < ks.size(); i = next++) {
      ConvergeRow& r = rows[i];
      r.k = ks[i];
      const auto t0 = Clock::now();
      try {
        const ManufacturedErrors e = run_manufactured(cfg, ks[i]);
        r.error_omega = e.error_omega;
        r.error_psi = e.error_psi;
        r.q_error = e.q_error;
      } catch (const BlowUp& b) {
        r.blowup = true;
        r.blowup_t = b.time();
      } catch (const std::exception& ex) {
        failures[i] = ex.what();
      }
      r.runtime_s = seconds_since(t0);
    }
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(ks.size())));
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < n; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const auto& f : failures)
    if (!f.empty()) throw Error("converge run failed: " + f);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const ConvergeRow& p = rows[i - 1];
    ConvergeRow& r = rows[i];
    if (p.blowup || r.blowup) continue;
    r.order_omega = order_between(p.k, p.error_omega, r.k, r.error_omega);
    r.order_psi = order_between(p.k, p.error_psi, r.k, r.error_psi);
  }
  return rows;
}

void write_converge_csv(const std::filesystem::path& path, std::span<const ConvergeRow> rows) {
  std::vector<std::string> lines;
  for (const auto& r : rows) {
    std::string l = fmt17(r.k) + ",";
    l += r.blowup ? std::string("blowup,") : std::string("completed,");
    l += (r.blowup ? fmt17(r.blowup_t) : std::string()) + ",";
    l += fmt17(r.error_omega) + "," + (r.order_omega ? fmt17(*r.order_omega) : "") + ",";
    l += fmt17(r.error_psi) + "," + (r.order_psi ? fmt17(*r.order_psi) : "") + ",";
    l += fmt17(r.q_error) + "," + fmt17(r.runtime_s);
    lines.push_back(std::move(l));
  }
  write_csv_rows(path,
                 "k,status,blowup_t,error_omega,order_omega,error_psi,order_psi,q_error,runtime_s",
                 lines);
}

SimulateOutcome cmd_simulate(const RunConfig& cfg, const SimulateOptions& opts) {
  validate_run_config(cfg);
  Stepper stepper(cfg.scheme);
  const SchemeConfig& sc = stepper.config();
  const auto start = Clock::now();
  const std::filesystem::path dir = opts.out_dir.empty() ? std::filesystem::path(cfg.output_dir)
                                                         : opts.out_dir;
  if (opts.write_files) std::filesystem::create_directories(dir);

  SimulateOutcome out;
  SolverState s;
  if (opts.resume) {
    s = restore_state(read_checkpoint(*opts.resume), stepper);
    const auto sp = series_path(dir);
    if (opts.write_files && std::filesystem::exists(sp)) {
      for (const auto& r : read_timeseries(sp))
        if (r.t <= s.t + 1e-9 * sc.k) out.series.push_back(r);
    }
  } else {
    s = stepper.initial_state(initial_vorticity(cfg), cfg.t0);
  }

  const double beta = default_beta(sc);
  out.min_denominator_margin = std::numeric_limits<double>::infinity();
  const bool sav = sc.scheme != Scheme::imex_bdf2_sv;

  auto flush_series = [&]() {
    if (opts.write_files) write_timeseries(series_path(dir), out.series);
  };
  auto checkpoint = [&](SolverState& st) {
    const Checkpoint ck = canonicalize_state(st, stepper);
    if (opts.write_files) {
      write_checkpoint(checkpoint_path(dir, st.step), ck);
      flush_series();
    }
  };

  RunOptions ro;
  ro.horizon = cfg.horizon;
  ro.allow_shortening = cfg.allow_shortening;
  ro.sample_every = cfg.sample_every;
  ro.on_sample = [&](const SolverState& st, const StepReport& rep) {
    out.series.push_back(make_record(st, sc, rep, beta, cfg.mode));
  };
  ro.on_step = [&](SolverState& st, const StepReport& rep) {
    if (sav) {
      if (std::isfinite(rep.energy_identity_residual))
        out.max_energy_residual = std::max(out.max_energy_residual, rep.energy_identity_residual);
      out.min_denominator_margin =
          std::min(out.min_denominator_margin, rep.q_denominator - rep.q_denominator_bound);
    }
    if (opts.write_files && cfg.snapshot_every > 0 && st.step % cfg.snapshot_every == 0)
      write_checkpoint(snapshot_path(dir, st.t), make_checkpoint(st, sc));
    if (cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0) checkpoint(st);
    if (opts.max_wall_seconds > 0.0 && seconds_since(start) > opts.max_wall_seconds) {
      if (!(cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0)) checkpoint(st);
      out.status = RunStatus::suspended;
      return false;
    }
    return true;
  };

  try {
    s = run(stepper, std::move(s), ro);
  } catch (const BlowUp& e) {
    out.status = RunStatus::blowup;
    out.blowup_t = e.time();
    out.t_end = e.time();
    out.steps = e.step();
    out.message = e.what();
    flush_series();
    return out;
  }
  out.t_end = s.t;
  out.steps = s.step;
  if (out.status == RunStatus::completed && opts.write_files)
    write_checkpoint(snapshot_path(dir, s.t), make_checkpoint(s, sc));
  flush_series();
  out.final_state = std::move(s);
  return out;
}

BurstingOutcome cmd_bursting(const RunConfig& cfg, const SimulateOptions& opts) {
  if (cfg.scheme.forcing.kind != ForcingKind::kolmogorov)
    throw ConfigError(0, "bursting needs forcing = kolmogorov");
  BurstingOutcome b;
  b.sim = cmd_simulate(cfg, opts);
  if (b.sim.status != RunStatus::completed) return b;

  std::vector<SeriesPoint> trace;
  trace.reserve(b.sim.series.size());
  for (const auto& r : b.sim.series) trace.push_back({r.t, r.max_omega});
  b.events = detect_bursts(trace, cfg.burst_warmup, cfg.bursts);
  b.intervals = inter_burst_intervals(b.events);
  b.spectrum = psd(trace, cfg.psd_segments);

  if (opts.write_files) {
    const std::filesystem::path dir =
        opts.out_dir.empty() ? std::filesystem::path(cfg.output_dir) : opts.out_dir;
    std::vector<std::string> lines;
    for (const auto& e : b.events)
      lines.push_back(fmt17(e.t_start) + "," + fmt17(e.t_peak) + "," + fmt17(e.t_end) + "," +
                      fmt17(e.peak_value));
    write_csv_rows(dir / "bursts.csv", "t_start,t_peak,t_end,peak_value", lines);
    lines.clear();
    for (std::size_t i = 0; i < b.intervals.size(); ++i)
      lines.push_back(std::to_string(i) + "," + fmt17(b.intervals[i]));
    write_csv_rows(dir / "intervals.csv", "index,interval", lines);
    lines.clear();
    for (const auto& p : b.spectrum) lines.push_back(fmt17(p.freq) + "," + fmt17(p.power));
    write_csv_rows(dir / "psd.csv", "freq,power", lines);
  }
  return b;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

namespace {

RunConfig small_kolmogorov(int n, double re, double amp) {
  RunConfig c;
  c.scheme.grid = Grid2D(n, n, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
  c.scheme.re = re;
  c.scheme.k = 0.01;
  c.scheme.forcing.kind = ForcingKind::kolmogorov;
  c.scheme.forcing.m = 2;
  c.ic.kind = InitialCondition::kolmogorov_perturbed;
  c.ic.amplitude = amp;
  c.ic.kx = 1;
  c.ic.ky = 1;
  return c;
}

struct IdentityStats {
  double residual = 0.0;
  double margin = std::numeric_limits<double>::infinity();
};

IdentityStats identity_run(const SchemeConfig& sc, const SpectralField2D& w0, int steps) {
  Stepper st(sc);
  SolverState s = st.initial_state(w0);
  IdentityStats out;
  for (int i = 0; i < steps; ++i) {
    const bool first = s.levels < 2;
    const StepReport r = st.advance(s);
    out.residual = std::max(out.residual, r.energy_identity_residual);
    out.margin = std::min(out.margin, r.q_denominator - ((first ? 1.0 : 1.5) / sc.k + sc.gamma));
  }
  return out;
}

SuiteResult suite(std::string name, double value, double tol, std::string detail = {}) {
  SuiteResult r;
  r.name = std::move(name);
  r.value = value;
  r.tolerance = tol;
  r.pass = std::isfinite(value) && value <= tol;
  r.detail = std::move(detail);
  return r;
}

SuiteResult suite_at_least(std::string name, double value, double bound, std::string detail = {}) {
  SuiteResult r = suite(std::move(name), value, bound, std::move(detail));
  r.pass = std::isfinite(value) && value >= bound;
  return r;
}

}  // namespace

std::vector<SuiteResult> cmd_verify() {
  std::vector<SuiteResult> out;
  constexpr double kIdentityTol = 1e-10;

  {
    RunConfig c;
    c.scheme.grid = Grid2D(32, 32, 1.0, 1.0);
    c.scheme.re = 10.0;
    c.scheme.forcing.kind = ForcingKind::manufactured;
    c.ic.kind = InitialCondition::manufactured;
    const IdentityStats s = identity_run(c.scheme, initial_vorticity(c), 100);
    out.push_back(suite("energy_identity.manufactured", s.residual, kIdentityTol));
    out.push_back(suite_at_least("denominator.manufactured", s.margin, 0.0, "denominator minus bound"));
  }
  {
    const RunConfig c = small_kolmogorov(32, 100.0, 0.1);
    const IdentityStats s = identity_run(c.scheme, initial_vorticity(c), 100);
    out.push_back(suite("energy_identity.kolmogorov", s.residual, kIdentityTol));
    out.push_back(suite_at_least("denominator.kolmogorov", s.margin, 0.0, "denominator minus bound"));
  }
  {
    RunConfig c = small_kolmogorov(32, 100.0, 0.1);
    c.scheme.scheme = Scheme::fsav_bdf2_primitive;
    const IdentityStats s = identity_run(c.scheme, initial_vorticity(c), 100);
    out.push_back(suite("energy_identity.primitive", s.residual, kIdentityTol));
    out.push_back(suite_at_least("denominator.primitive", s.margin, 0.0, "denominator minus bound"));
  }
  {
    const RunConfig c = small_kolmogorov(32, 100.0, 0.0);
    Stepper st(c.scheme);
    const SpectralField2D w0 = initial_vorticity(c);
    SolverState s = st.initial_state(w0);
    for (int i = 0; i < 1000; ++i) st.advance(s);
    const double drift = rel_max_error(inverse(s.w_n), inverse(w0));
    out.push_back(suite("steady_state.drift", drift, 1e-8));
    out.push_back(suite("steady_state.q", std::abs(s.q_n - 1.0), 1e-10));
  }
  {
    const ToyTriad toy(Vec3{{1, 1, 1}}, Vec3{{1, 1, -2}}, Vec3{{1, 0, 0}});
    const SystemReport rep = verify_system(toy, 100);
    out.push_back(suite("abstract.toy_neutrality", rep.neutrality_violation, 1e-14));
    auto s = abstract_initial_state(Vec3{{0.5, -0.3, 0.2}});
    double sup = 0.0;
    double resid = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const StepReport r = abstract_step(s, toy, 10.0, 1000.0);
      resid = std::max(resid, r.energy_identity_residual);
      sup = std::max(sup, s.u_n.norm() + std::abs(s.q_n));
    }
    out.push_back(suite("abstract.toy_k10_sup", sup, 1e3, "sup |u| + |q| over 1e5 steps"));
    out.push_back(suite("energy_identity.toy", resid, kIdentityTol));
  }
  {
    const Grid2D g(32, 32, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
    const SpectralNseSystem nse(g, 100.0, kolmogorov_vorticity_forcing(g, 2, 100.0), true);
    const SystemReport rep = verify_system(nse, 20);
    out.push_back(suite("abstract.nse_structure",
                        std::max(rep.symmetry_violation, rep.neutrality_violation), 1e-10));
  }
  {
    // primitive vs streamfunction discrepancy at T = 1 under three halvings of k
    RunConfig c = small_kolmogorov(32, 100.0, 0.1);
    c.scheme.dealias = true;
    const SpectralField2D w0 = initial_vorticity(c);
    double prev = 0.0;
    double worst_order = std::numeric_limits<double>::infinity();
    for (double k : {0.02, 0.01, 0.005, 0.0025}) {
      SchemeConfig a = c.scheme;
      a.k = k;
      SchemeConfig b = a;
      b.scheme = Scheme::fsav_bdf2_primitive;
      RunOptions ro;
      ro.horizon = 1.0;
      const SolverState sa = run(Stepper(a).initial_state(w0), a, ro);
      const SolverState sb = run(Stepper(b).initial_state(w0), b, ro);
      const double d = rel_max_error(inverse(sb.w_n), inverse(sa.w_n));
      if (prev > 0.0) worst_order = std::min(worst_order, std::log2(prev / d));
      prev = d;
    }
    out.push_back(suite_at_least("cross_formulation.order", worst_order, 2.0, "worst observed order"));
  }
  return out;
}

}  // namespace fsav::cli

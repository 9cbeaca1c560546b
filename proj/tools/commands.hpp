#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fsav/diagnostics.hpp"
#include "fsav/io.hpp"

namespace fsav::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitBlowUp = 2;
inline constexpr int kExitInvariant = 3;
inline constexpr int kExitSuspended = 4;

struct ConvergeRow {
  double k = 0.0;
  bool blowup = false;
  double blowup_t = 0.0;
  double error_omega = 0.0;
  double error_psi = 0.0;
  double q_error = 0.0;
  /// log2(e(2k)/e(k)) against the previous row; empty for the first row.
  std::optional<double> order_omega;
  std::optional<double> order_psi;
  double runtime_s = 0.0;
};

struct ManufacturedErrors {
  double error_omega = 0.0;
  double error_psi = 0.0;
  double q_error = 0.0;
};

/// Runs the manufactured case to cfg.horizon at step k; relative max-norm
/// errors of omega and psi at the grid points, and |q - 1|, at the final time.
ManufacturedErrors run_manufactured(const RunConfig& cfg, double k);

/// Sweep over ks (each a separate run, `workers` in parallel). Orders are
/// computed between consecutive entries, which are expected to halve k.
std::vector<ConvergeRow> cmd_converge(const RunConfig& cfg, std::span<const double> ks,
                                      int workers = 1);
void write_converge_csv(const std::filesystem::path& path, std::span<const ConvergeRow> rows);

struct SimulateOptions {
  std::filesystem::path out_dir;
  /// 0 disables the wall-clock limit.
  double max_wall_seconds = 0.0;
  std::optional<std::filesystem::path> resume;
  /// Write series.csv, checkpoints and snapshots.
  bool write_files = true;
};

enum class RunStatus { completed, blowup, suspended };

struct SimulateOutcome {
  RunStatus status = RunStatus::completed;
  double t_end = 0.0;
  std::uint64_t steps = 0;
  double blowup_t = 0.0;
  std::string message;
  std::vector<TimeSeriesRecord> series;
  /// Largest per-step energy-identity residual and smallest q denominator
  /// minus its lower bound sigma/k + gamma (FSAV schemes only).
  double max_energy_residual = 0.0;
  double min_denominator_margin = 0.0;
  SolverState final_state;
};

SimulateOutcome cmd_simulate(const RunConfig& cfg, const SimulateOptions& opts);

struct BurstingOutcome {
  SimulateOutcome sim;
  std::vector<BurstEvent> events;
  std::vector<double> intervals;
  std::vector<PsdBin> spectrum;
};

/// Simulation followed by burst detection on max|omega|, inter-burst
/// intervals and the max|omega| periodogram. Writes bursts.csv,
/// intervals.csv and psd.csv next to series.csv.
BurstingOutcome cmd_bursting(const RunConfig& cfg, const SimulateOptions& opts);

struct SuiteResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

/// Invariant suites: energy identity, denominator bound, steady state,
/// abstract-system checks, toy long run, primitive cross-check.
std::vector<SuiteResult> cmd_verify();

}  // namespace fsav::cli

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsav/diagnostics.hpp"
#include "fsav/stepper.hpp"

namespace fsav {

enum class InitialCondition {
  /// omega = 0
  zero,
  /// psi = sin(m y) + amplitude sin(kx x) sin(ky y), the Kolmogorov basic state plus a perturbation
  kolmogorov_perturbed,
  /// manufactured exact solution at t0
  manufactured,
  /// band-limited random vorticity, scaled to L2 norm `amplitude`
  random,
};

struct InitialConditionSpec {
  InitialCondition kind = InitialCondition::zero;
  double amplitude = 0.001;
  int kx = 2;
  int ky = 2;
};

struct RunConfig {
  SchemeConfig scheme;
  double t0 = 0.0;
  double horizon = 1.0;
  /// Finish with one shortened first-order step when (T - t0)/k is not integral.
  bool allow_shortening = false;
  std::uint64_t sample_every = 1;
  std::uint64_t checkpoint_every = 0;
  std::uint64_t snapshot_every = 0;
  std::string output_dir = ".";
  InitialConditionSpec ic;
  ModeSelector mode;
  BurstDetectorParams bursts;
  double burst_warmup = 200.0;
  int psd_segments = 1;
  std::uint64_t seed = 1;
};

/// Parses `key = value` lines; `#` starts a comment. Keys:
///   k re gamma nx ny lx ly T t0 allow_shortening scheme dealias forcing m case blowup_threshold
///   sample_every checkpoint_every snapshot_every output_dir
///   ic ic_amplitude ic_kx ic_ky mode_jx mode_jy mode_field
///   burst_warmup burst_open_sigma burst_close_sigma burst_merge_gap psd_segments seed
/// Defaults: gamma = 1000, dealias = false, blowup_threshold = 1e8, scheme = fsav_bdf2_sv,
/// lx = ly = 2 pi, forcing = none, sample_every = 1, allow_shortening = false.
/// Throws ConfigError (with the line number when tied to one).
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Checks the cross-field invariants (positive k and Re, sample_every >= 1,
/// integral T/k); throws ConfigError.
void validate_run_config(const RunConfig& cfg);

/// Builds the initial vorticity described by cfg.ic.
SpectralField2D initial_vorticity(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

inline constexpr std::string_view kSeriesHeader =
    "t,l2_omega,h1_omega,max_omega,q,e_gnorm,energy_residual,mode_re,mode_im";

/// One row at 17 significant digits.
std::string format_record(const TimeSeriesRecord& r);
void write_timeseries(std::ostream& os, std::span<const TimeSeriesRecord> rows);
void write_timeseries(const std::filesystem::path& path, std::span<const TimeSeriesRecord> rows);
/// Throws ParseError with the 1-based data row index (the header is row 0).
std::vector<TimeSeriesRecord> read_timeseries(std::istream& is);
std::vector<TimeSeriesRecord> read_timeseries(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderBytes = 68;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  double t = 0.0;
  std::uint64_t step = 0;
  double q_n = 1.0;
  double q_nm1 = 1.0;
  std::uint32_t scheme_tag = 0;
};

/// Physical-space vorticity at levels n and n-1 plus the header.
struct Checkpoint {
  CheckpointHeader header;
  RealField2D omega_n;
  RealField2D omega_nm1;

  Grid2D grid() const;
};

Checkpoint make_checkpoint(const SolverState& s, const SchemeConfig& cfg);
void write_checkpoint(std::ostream& os, const Checkpoint& c);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
/// Throws CorruptCheckpoint on bad magic, version, dimensions or length.
Checkpoint read_checkpoint(std::istream& is);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Replaces the state by the one restore_state would rebuild from its
/// checkpoint, and returns that checkpoint. A run continued in memory and one
/// restarted from the returned checkpoint then agree bitwise.
Checkpoint canonicalize_state(SolverState& s, const Stepper& stepper);

/// State from a checkpoint: re-transforms the stored levels and rebuilds the
/// derived fields. Throws GridMismatch/ConfigError when the checkpoint does
/// not match the stepper's configuration.
SolverState restore_state(const Checkpoint& c, const Stepper& stepper);

/// Output paths under a run directory.
std::filesystem::path series_path(const std::filesystem::path& dir);
std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::uint64_t step);
std::filesystem::path snapshot_path(const std::filesystem::path& dir, double t);

}  // namespace fsav

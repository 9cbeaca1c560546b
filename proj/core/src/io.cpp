#include "fsav/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "fsav/errors.hpp"
#include "fsav/spectral.hpp"

namespace fsav {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_double(std::string_view s, double& out) {
  const std::string tmp(s);
  if (tmp.empty()) return false;
  char* end = nullptr;
  out = std::strtod(tmp.c_str(), &end);
  return end == tmp.c_str() + tmp.size();
}

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no" || s == "off") {
    out = false;
    return true;
  }
  return false;
}

struct Parsed {
  RunConfig cfg;
  std::map<std::string, std::size_t, std::less<>> lines;
  int nx = 64;
  int ny = 64;
  double lx = 2.0 * std::numbers::pi;
  double ly = 2.0 * std::numbers::pi;

  std::size_t line_of(std::string_view key) const {
    const auto it = lines.find(key);
    return it == lines.end() ? 0 : it->second;
  }
};

void assign(Parsed& p, std::string_view key, std::string_view val, std::size_t line) {
  RunConfig& c = p.cfg;
  SchemeConfig& s = c.scheme;
  auto bad = [&](const char* what) {
    throw ConfigError(line, "key '" + std::string(key) + "': expected " + what + ", got '" +
                                std::string(val) + "'");
  };
  auto real = [&](double& dst) {
    if (!parse_double(val, dst) || !std::isfinite(dst)) bad("a finite number");
  };
  auto count = [&](std::uint64_t& dst) {
    if (!parse_int(val, dst)) bad("a nonnegative integer");
  };
  auto integer = [&](int& dst) {
    if (!parse_int(val, dst)) bad("an integer");
  };

  if (key == "k") real(s.k);
  else if (key == "re") real(s.re);
  else if (key == "gamma") real(s.gamma);
  else if (key == "nx") integer(p.nx);
  else if (key == "ny") integer(p.ny);
  else if (key == "lx") real(p.lx);
  else if (key == "ly") real(p.ly);
  else if (key == "T") real(c.horizon);
  else if (key == "t0") real(c.t0);
  else if (key == "allow_shortening") {
    if (!parse_bool(val, c.allow_shortening)) bad("a boolean");
  }
  else if (key == "scheme") {
    const auto sc = scheme_from_string(val);
    if (!sc) bad("fsav_bdf2_sv, fsav_bdf2_primitive or imex_bdf2_sv");
    s.scheme = *sc;
  } else if (key == "dealias") {
    if (!parse_bool(val, s.dealias)) bad("a boolean");
  } else if (key == "forcing") {
    if (val == "none") s.forcing.kind = ForcingKind::none;
    else if (val == "kolmogorov") s.forcing.kind = ForcingKind::kolmogorov;
    else if (val == "manufactured") s.forcing.kind = ForcingKind::manufactured;
    else bad("none, kolmogorov or manufactured");
  } else if (key == "m") integer(s.forcing.m);
  else if (key == "case") s.forcing.case_id = std::string(val);
  else if (key == "blowup_threshold") real(s.blowup_threshold);
  else if (key == "sample_every") count(c.sample_every);
  else if (key == "checkpoint_every") count(c.checkpoint_every);
  else if (key == "snapshot_every") count(c.snapshot_every);
  else if (key == "output_dir") c.output_dir = std::string(val);
  else if (key == "ic") {
    if (val == "zero") c.ic.kind = InitialCondition::zero;
    else if (val == "kolmogorov") c.ic.kind = InitialCondition::kolmogorov_perturbed;
    else if (val == "manufactured") c.ic.kind = InitialCondition::manufactured;
    else if (val == "random") c.ic.kind = InitialCondition::random;
    else bad("zero, kolmogorov, manufactured or random");
  } else if (key == "ic_amplitude") real(c.ic.amplitude);
  else if (key == "ic_kx") integer(c.ic.kx);
  else if (key == "ic_ky") integer(c.ic.ky);
  else if (key == "mode_jx") integer(c.mode.jx);
  else if (key == "mode_jy") integer(c.mode.jy);
  else if (key == "mode_field") {
    if (val == "omega") c.mode.streamfunction = false;
    else if (val == "psi") c.mode.streamfunction = true;
    else bad("omega or psi");
  } else if (key == "burst_warmup") real(c.burst_warmup);
  else if (key == "burst_open_sigma") real(c.bursts.open_sigma);
  else if (key == "burst_close_sigma") real(c.bursts.close_sigma);
  else if (key == "burst_merge_gap") real(c.bursts.merge_gap);
  else if (key == "psd_segments") integer(c.psd_segments);
  else if (key == "seed") count(c.seed);
  else throw ConfigError(line, "unknown key '" + std::string(key) + "'");
}

void check(const RunConfig& c, const Parsed* p) {
  auto line = [&](std::string_view key) -> std::size_t { return p ? p->line_of(key) : 0; };
  const SchemeConfig& s = c.scheme;
  if (!(s.k > 0.0)) throw ConfigError(line("k"), "k must be positive");
  if (!(s.re > 0.0)) throw ConfigError(line("re"), "re must be positive");
  if (s.scheme != Scheme::imex_bdf2_sv && !(s.gamma > 0.0))
    throw ConfigError(line("gamma"), "gamma must be positive");
  if (!(s.blowup_threshold > 0.0))
    throw ConfigError(line("blowup_threshold"), "blowup_threshold must be positive");
  if (s.forcing.m < 1) throw ConfigError(line("m"), "m must be >= 1");
  if (s.forcing.kind == ForcingKind::manufactured && s.forcing.case_id != "table3")
    throw ConfigError(line("case"), "unknown manufactured case '" + s.forcing.case_id + "'");
  if (s.primitive() && s.forcing.kind == ForcingKind::manufactured)
    throw ConfigError(line("forcing"), "manufactured forcing needs a vorticity scheme");
  if (c.sample_every < 1) throw ConfigError(line("sample_every"), "sample_every must be >= 1");
  if (c.psd_segments < 1) throw ConfigError(line("psd_segments"), "psd_segments must be >= 1");
  if (c.bursts.close_sigma > c.bursts.open_sigma)
    throw ConfigError(line("burst_close_sigma"), "close threshold exceeds open threshold");
  if (!(c.horizon >= c.t0)) throw ConfigError(line("T"), "T must not precede t0");
  try {
    (void)steps_to_horizon(c.t0, c.horizon, s.k, c.allow_shortening);
  } catch (const NonIntegralHorizon& e) {
    throw ConfigError(line("T"), std::string("non-integral horizon: ") + e.what());
  }
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  Parsed p;
  std::size_t lineno = 0;
  while (!text.empty()) {
    ++lineno;
    const auto nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    raw = trim(raw);
    if (raw.empty()) continue;
    const auto eq = raw.find('=');
    if (eq == std::string_view::npos) throw ConfigError(lineno, "expected 'key = value'");
    const std::string_view key = trim(raw.substr(0, eq));
    const std::string_view val = trim(raw.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "missing key");
    if (p.lines.count(key)) throw ConfigError(lineno, "duplicate key '" + std::string(key) + "'");
    assign(p, key, val, lineno);
    p.lines.emplace(std::string(key), lineno);
  }
  try {
    p.cfg.scheme.grid = Grid2D(p.nx, p.ny, p.lx, p.ly);
  } catch (const InvalidGrid& e) {
    std::size_t l = p.line_of("nx");
    if (l == 0) l = p.line_of("ny");
    throw ConfigError(l, e.what());
  }
  check(p.cfg, &p);
  return p.cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(0, "cannot open config file " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

void validate_run_config(const RunConfig& cfg) {
  if (cfg.scheme.grid.nx == 0) throw ConfigError(0, "grid is not set");
  check(cfg, nullptr);
}

SpectralField2D initial_vorticity(const RunConfig& cfg) {
  const Grid2D& g = cfg.scheme.grid;
  const InitialConditionSpec& ic = cfg.ic;
  switch (ic.kind) {
    case InitialCondition::zero:
      return SpectralField2D(g);
    case InitialCondition::kolmogorov_perturbed: {
      const int m = cfg.scheme.forcing.m;
      const RealField2D psi = RealField2D::sample(g, [&](double x, double y) {
        return std::sin(m * y) + ic.amplitude * std::sin(ic.kx * x) * std::sin(ic.ky * y);
      });
      SpectralField2D w = laplacian(forward(psi));
      w *= -1.0;
      return w;
    }
    case InitialCondition::manufactured: {
      const ManufacturedCase mc = manufactured_case_table3(cfg.scheme.re);
      return sample_spectral(g, mc.omega, cfg.t0);
    }
    case InitialCondition::random: {
      std::mt19937_64 rng(cfg.seed);
      std::normal_distribution<double> d;
      SpectralField2D w(g);
      const int band_x = std::max(1, g.nx / 8);
      const int band_y = std::max(1, g.ny / 8);
      for (int m = 0; m < g.ny; ++m) {
        const int sy = Grid2D::signed_index(m, g.ny);
        for (int j = 0; j <= band_x; ++j) {
          if (std::abs(sy) > band_y || (j == 0 && m == 0)) continue;
          const double decay = 1.0 / (1.0 + j * j + sy * sy);
          w.at(j, m) = complex_t(d(rng), d(rng)) * decay;
        }
      }
      // Column 0 must be Hermitian on its own: c(0, -m) = conj(c(0, m)).
      for (int m = 1; m < g.ny / 2; ++m) w.at(0, g.ny - m) = std::conj(w.at(0, m));
      const double l2 = std::sqrt(inner(w, w));
      if (l2 > 0.0) w *= ic.amplitude / l2;
      return w;
    }
  }
  throw ConfigError(0, "unknown initial condition");
}

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

std::string format_record(const TimeSeriesRecord& r) {
  char buf[9 * 32];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g", r.t,
                r.l2_omega, r.h1_omega, r.max_omega, r.q, r.e_gnorm, r.energy_residual, r.mode_re,
                r.mode_im);
  return buf;
}

void write_timeseries(std::ostream& os, std::span<const TimeSeriesRecord> rows) {
  os << kSeriesHeader << '\n';
  for (const auto& r : rows) os << format_record(r) << '\n';
}

void write_timeseries(const std::filesystem::path& path, std::span<const TimeSeriesRecord> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_timeseries(out, rows);
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<TimeSeriesRecord> read_timeseries(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(0, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kSeriesHeader) throw ParseError(0, "unexpected header '" + line + "'");
  std::vector<TimeSeriesRecord> out;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[9];
    std::size_t n = 0;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view cell = rest.substr(0, comma);
      if (n == 9) throw ParseError(row, "too many fields");
      if (!parse_double(cell, v[n])) throw ParseError(row, "bad number '" + std::string(cell) + "'");
      ++n;
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (n != 9) throw ParseError(row, "expected 9 fields, got " + std::to_string(n));
    out.push_back(TimeSeriesRecord{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8]});
  }
  return out;
}

std::vector<TimeSeriesRecord> read_timeseries(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_timeseries(in);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void put_u32(std::string& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u64(std::string& b, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f64(std::string& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }

struct Reader {
  const std::string& b;
  std::size_t pos = 0;

  std::uint64_t take(int n) {
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
    pos += static_cast<std::size_t>(n);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(take(4)); }
  std::uint64_t u64() { return take(8); }
  double f64() { return std::bit_cast<double>(take(8)); }
};

void put_field(std::string& b, const RealField2D& f) {
  for (double v : f.values()) put_f64(b, v);
}

}  // namespace

Grid2D Checkpoint::grid() const {
  return Grid2D(static_cast<int>(header.nx), static_cast<int>(header.ny), header.lx, header.ly);
}

Checkpoint make_checkpoint(const SolverState& s, const SchemeConfig& cfg) {
  Checkpoint c;
  const Grid2D& g = cfg.grid;
  c.header.nx = static_cast<std::uint32_t>(g.nx);
  c.header.ny = static_cast<std::uint32_t>(g.ny);
  c.header.lx = g.lx;
  c.header.ly = g.ly;
  c.header.t = s.t;
  c.header.step = s.step;
  c.header.q_n = s.q_n;
  c.header.q_nm1 = s.q_nm1;
  c.header.scheme_tag = static_cast<std::uint32_t>(cfg.scheme);
  c.omega_n = inverse(s.w_n);
  c.omega_nm1 = inverse(s.w_nm1);
  return c;
}

void write_checkpoint(std::ostream& os, const Checkpoint& c) {
  const CheckpointHeader& h = c.header;
  const std::size_t n = static_cast<std::size_t>(h.nx) * h.ny;
  if (c.omega_n.values().size() != n || c.omega_nm1.values().size() != n)
    throw Error("checkpoint payload does not match its header");
  std::string b;
  b.reserve(kCheckpointHeaderBytes + 16 * n);
  b.append("FSAV", 4);
  put_u32(b, h.version);
  put_u32(b, h.nx);
  put_u32(b, h.ny);
  put_f64(b, h.lx);
  put_f64(b, h.ly);
  put_f64(b, h.t);
  put_u64(b, h.step);
  put_f64(b, h.q_n);
  put_f64(b, h.q_nm1);
  put_u32(b, h.scheme_tag);
  put_field(b, c.omega_n);
  put_field(b, c.omega_nm1);
  os.write(b.data(), static_cast<std::streamsize>(b.size()));
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    write_checkpoint(out, c);
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(std::istream& is) {
  const std::string b((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (b.size() < kCheckpointHeaderBytes) throw CorruptCheckpoint("checkpoint shorter than header");
  if (std::memcmp(b.data(), "FSAV", 4) != 0) throw CorruptCheckpoint("bad magic");
  Reader r{b, 4};
  Checkpoint c;
  CheckpointHeader& h = c.header;
  h.version = r.u32();
  if (h.version != kCheckpointVersion)
    throw CorruptCheckpoint("unsupported checkpoint version " + std::to_string(h.version));
  h.nx = r.u32();
  h.ny = r.u32();
  h.lx = r.f64();
  h.ly = r.f64();
  h.t = r.f64();
  h.step = r.u64();
  h.q_n = r.f64();
  h.q_nm1 = r.f64();
  h.scheme_tag = r.u32();
  Grid2D g;
  try {
    g = c.grid();
  } catch (const InvalidGrid& e) {
    throw CorruptCheckpoint(std::string("bad dimensions: ") + e.what());
  }
  const std::size_t n = g.size();
  if (b.size() != kCheckpointHeaderBytes + 16 * n)
    throw CorruptCheckpoint("payload length " + std::to_string(b.size() - kCheckpointHeaderBytes) +
                            " does not match " + std::to_string(16 * n));
  c.omega_n = RealField2D(g);
  c.omega_nm1 = RealField2D(g);
  for (double& v : c.omega_n.values()) v = r.f64();
  for (double& v : c.omega_nm1.values()) v = r.f64();
  return c;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptCheckpoint("cannot open " + path.string());
  return read_checkpoint(in);
}

Checkpoint canonicalize_state(SolverState& s, const Stepper& stepper) {
  Checkpoint c = make_checkpoint(s, stepper.config());
  s = restore_state(c, stepper);
  return c;
}

SolverState restore_state(const Checkpoint& c, const Stepper& stepper) {
  const SchemeConfig& cfg = stepper.config();
  require_same_grid(cfg.grid, c.grid(), "restore_state");
  if (c.header.scheme_tag != static_cast<std::uint32_t>(cfg.scheme))
    throw ConfigError(0, "checkpoint was written by scheme tag " +
                             std::to_string(c.header.scheme_tag) + ", configured " +
                             std::string(to_string(cfg.scheme)));
  SolverState s;
  s.w_n = forward(c.omega_n);
  s.w_nm1 = forward(c.omega_nm1);
  s.t = c.header.t;
  s.step = c.header.step;
  s.q_n = c.header.q_n;
  s.q_nm1 = c.header.q_nm1;
  s.levels = c.header.step > 0 ? 2 : 1;
  stepper.rebuild_derived(s);
  return s;
}

std::filesystem::path series_path(const std::filesystem::path& dir) { return dir / "series.csv"; }

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::uint64_t step) {
  return dir / ("ckpt_" + std::to_string(step) + ".fsav");
}

std::filesystem::path snapshot_path(const std::filesystem::path& dir, double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "omega_%.6f.fsav", t);
  return dir / "snapshots" / buf;
}

}  // namespace fsav

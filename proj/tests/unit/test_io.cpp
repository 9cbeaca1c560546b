#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "fsav/errors.hpp"
#include "fsav/io.hpp"
#include "support.hpp"

using namespace fsav;
using namespace fsav::test;
namespace fs = std::filesystem;

namespace {

constexpr const char* kMinimal =
    "k = 0.01\n"
    "re = 100\n"
    "nx = 256\n"
    "ny = 256\n"
    "lx = 6.283185307179586\n"
    "ly = 6.283185307179586\n"
    "T = 1000\n"
    "forcing = kolmogorov\n"
    "m = 2\n";

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fsav_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t config_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return static_cast<std::size_t>(-1);
}

RunConfig small_kolmogorov(double horizon) {
  RunConfig c = parse_config(
      "k = 0.01\nre = 40\nnx = 16\nny = 16\nforcing = kolmogorov\nm = 2\n"
      "ic = kolmogorov\nic_amplitude = 0.1\nic_kx = 1\nic_ky = 1\n");
  c.horizon = horizon;
  return c;
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig c = parse_config(kMinimal);
  CHECK(c.scheme.k == 0.01);
  CHECK(c.scheme.re == 100.0);
  CHECK(c.scheme.grid.nx == 256);
  CHECK(c.scheme.grid.lx == doctest::Approx(kTwoPi));
  CHECK(c.horizon == 1000.0);
  CHECK(c.scheme.forcing.kind == ForcingKind::kolmogorov);
  CHECK(c.scheme.forcing.m == 2);
  CHECK(c.scheme.gamma == 1000.0);
  CHECK_FALSE(c.scheme.dealias);
  CHECK(c.scheme.blowup_threshold == 1e8);
  CHECK(c.scheme.scheme == Scheme::fsav_bdf2_sv);
  CHECK(c.sample_every == 1);

  CHECK_NOTHROW(parse_config(std::string("# comment\n\n") + kMinimal + "dealias = true  # trailing\n"));
  CHECK(parse_config(std::string(kMinimal) + "scheme = imex_bdf2_sv\n").scheme.scheme == Scheme::imex_bdf2_sv);

  CHECK_THROWS_AS(parse_config("k = 0\nre = 1\nnx = 16\nny = 16\nT = 1\n"), ConfigError);
  CHECK(config_error_line("k = 0\nre = 1\nnx = 16\nny = 16\nT = 1\n") == 1);
  CHECK(config_error_line("k = 0.1\nre = 1\nnx = 16\nny = 16\nT = 1.05\n") == 5);
  CHECK(config_error_line("k = 0.1\nre = 1\nnx = 16\nny = 16\nT = 1\nwidth = 3\n") == 6);
  const RunConfig shortened =
      parse_config("k = 0.1\nre = 1\nnx = 16\nny = 16\nT = 1.05\nallow_shortening = yes\n");
  CHECK(shortened.allow_shortening);
  CHECK(config_error_line("k = 0.1\nk = 0.2\n") == 2);
  CHECK(config_error_line("k = 0.1\nre = 1\nnx = sixteen\n") == 3);
  CHECK(config_error_line("k = 0.1\nre = 1\nnx = 16\nny = 16\nT = 1\nscheme = rk4\n") == 6);
  CHECK(config_error_line("k = 0.1\nre = 1\nnx = 15\nny = 16\nT = 1\n") == 3);
  CHECK(config_error_line("k = 0.1\nre = 1\nnx = 16\nny = 16\nT = 1\nsample_every = 0\n") == 6);
  CHECK(config_error_line("just text\n") == 1);
}

TEST_CASE("shipped configs parse") {
  for (const char* name : {"table3.conf", "stability_128.conf", "blowup_fsav.conf", "blowup_imex.conf",
                           "bursting.conf"}) {
    const fs::path p = fs::path(FSAV_SOURCE_DIR) / "configs" / name;
    CAPTURE(p.string());
    CHECK_NOTHROW(load_config(p));
  }
  CHECK_THROWS_AS(load_config("/nonexistent/fsav.conf"), ConfigError);
}

TEST_CASE("initial conditions") {
  SUBCASE("perturbed Kolmogorov") {
    RunConfig c = small_kolmogorov(1.0);
    c.scheme.grid = periodic_grid(32);
    c.ic.amplitude = 0.001;
    const auto w = initial_vorticity(c);
    CHECK(max_diff(w, [](double x, double y) {
            return 4.0 * std::sin(2.0 * y) + 0.002 * std::sin(x) * std::sin(y);
          }) < 1e-13);
  }
  SUBCASE("random is mean-zero, scaled and seeded") {
    RunConfig c = small_kolmogorov(1.0);
    c.ic.kind = InitialCondition::random;
    c.ic.amplitude = 0.7;
    const auto a = initial_vorticity(c);
    CHECK(norms(a).l2 == doctest::Approx(0.7));
    CHECK(std::abs(a.coeff(0, 0)) == 0.0);
    CHECK(a.hermitian_defect() < 1e-14);
    CHECK(max_diff(initial_vorticity(c), a) == 0.0);
    c.seed = 2;
    CHECK(max_diff(initial_vorticity(c), a) > 0.0);
  }
  SUBCASE("zero") {
    RunConfig c = small_kolmogorov(1.0);
    c.ic.kind = InitialCondition::zero;
    CHECK(inverse(initial_vorticity(c)).max_abs() == 0.0);
  }
}

TEST_CASE("time series CSV") {
  SUBCASE("empty series is header only") {
    std::ostringstream os;
    write_timeseries(os, {});
    CHECK(os.str() == std::string(kSeriesHeader) + "\n");
    std::istringstream is(os.str());
    CHECK(read_timeseries(is).empty());
  }
  SUBCASE("round trip is lossless") {
    std::vector<TimeSeriesRecord> rows(3);
    rows[0] = {0.0, 1.0 / 3.0, 2.0 / 7.0, 1e-300, 1.0, 0.1, 0.0, -0.0, 5e-324};
    rows[1] = {0.01, std::sqrt(2.0), kPi, 1e300, 0.9999999999999999, 12345.678901234567, 3e-17,
               -1.0 / 9.0, 2.0};
    rows[2] = {0.02, 1.0, 2.0, 3.0, 1.0000000000000002, 4.0, 5.0, 6.0, -7.0};
    std::ostringstream os;
    write_timeseries(os, rows);
    std::istringstream is(os.str());
    const auto back = read_timeseries(is);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back[i] == rows[i]);
  }
  SUBCASE("malformed rows carry their index") {
    const std::string good = format_record(TimeSeriesRecord{});
    std::istringstream is(std::string(kSeriesHeader) + "\n" + good + "\n" + "1,2,3\n");
    try {
      read_timeseries(is);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
    }
    std::istringstream bad_header("t,x\n");
    CHECK_THROWS_AS(read_timeseries(bad_header), ParseError);
    std::istringstream bad_number(std::string(kSeriesHeader) + "\n0,1,2,3,4,5,6,7,eight\n");
    CHECK_THROWS_AS(read_timeseries(bad_number), ParseError);
  }
}

TEST_CASE("checkpoints") {
  RunConfig c = small_kolmogorov(1.0);
  Stepper st(c.scheme);
  SolverState s = st.initial_state(initial_vorticity(c));
  for (int i = 0; i < 7; ++i) st.advance(s);
  const Checkpoint ck = make_checkpoint(s, c.scheme);

  std::ostringstream os;
  write_checkpoint(os, ck);
  const std::string bytes = os.str();
  CHECK(bytes.size() == kCheckpointHeaderBytes + 2 * 16 * 16 * 8);
  CHECK(bytes.substr(0, 4) == "FSAV");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);

  std::istringstream is(bytes);
  const Checkpoint back = read_checkpoint(is);
  CHECK(back.header.step == 7);
  CHECK(back.header.t == ck.header.t);
  CHECK(back.header.q_n == ck.header.q_n);
  CHECK(back.header.q_nm1 == ck.header.q_nm1);
  CHECK(back.header.scheme_tag == static_cast<std::uint32_t>(Scheme::fsav_bdf2_sv));
  CHECK(back.grid() == c.scheme.grid);
  CHECK(max_diff(back.omega_n, ck.omega_n) == 0.0);
  CHECK(max_diff(back.omega_nm1, ck.omega_nm1) == 0.0);

  SUBCASE("corruption") {
    std::istringstream truncated(bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(read_checkpoint(truncated), CorruptCheckpoint);
    std::istringstream header_only(bytes.substr(0, 20));
    CHECK_THROWS_AS(read_checkpoint(header_only), CorruptCheckpoint);
    std::string magic = bytes;
    magic[0] = 'X';
    std::istringstream bad_magic(magic);
    CHECK_THROWS_AS(read_checkpoint(bad_magic), CorruptCheckpoint);
    std::string version = bytes;
    version[4] = 9;
    std::istringstream bad_version(version);
    CHECK_THROWS_AS(read_checkpoint(bad_version), CorruptCheckpoint);
    std::istringstream extra(bytes + "x");
    CHECK_THROWS_AS(read_checkpoint(extra), CorruptCheckpoint);
  }
  SUBCASE("restore checks the configuration") {
    SchemeConfig other = c.scheme;
    other.scheme = Scheme::imex_bdf2_sv;
    CHECK_THROWS_AS(restore_state(ck, Stepper(other)), ConfigError);
    other = c.scheme;
    other.grid = periodic_grid(32);
    CHECK_THROWS_AS(restore_state(ck, Stepper(other)), GridMismatch);
    const SolverState r = restore_state(ck, st);
    CHECK(r.levels == 2);
    CHECK(r.step == 7);
    CHECK(max_diff(r.w_n, s.w_n) < 1e-14);
  }
  SUBCASE("file round trip") {
    const fs::path dir = scratch("ckpt");
    write_checkpoint(checkpoint_path(dir / "nested", 7), ck);
    const Checkpoint f = read_checkpoint(checkpoint_path(dir / "nested", 7));
    CHECK(max_diff(f.omega_n, ck.omega_n) == 0.0);
    fs::remove_all(dir);
  }
}

TEST_CASE("output paths") {
  CHECK(series_path("run") == fs::path("run") / "series.csv");
  CHECK(checkpoint_path("run", 500) == fs::path("run") / "ckpt_500.fsav");
  CHECK(snapshot_path("run", 12.5).parent_path() == fs::path("run") / "snapshots");
  CHECK(snapshot_path("run", 12.5).filename().string().starts_with("omega_"));
}

TEST_CASE("restart from a checkpoint reproduces the run bitwise") {
  RunConfig c = small_kolmogorov(10.0);
  c.checkpoint_every = 500;
  const fs::path a = scratch("restart_a");
  const fs::path b = scratch("restart_b");

  cli::SimulateOptions full;
  full.out_dir = a;
  const cli::SimulateOutcome ra = cli::cmd_simulate(c, full);
  REQUIRE(ra.status == cli::RunStatus::completed);
  CHECK(ra.steps == 1000);

  cli::SimulateOptions resumed;
  resumed.out_dir = b;
  resumed.resume = checkpoint_path(a, 500);
  const cli::SimulateOutcome rb = cli::cmd_simulate(c, resumed);
  REQUIRE(rb.status == cli::RunStatus::completed);
  CHECK(rb.steps == 1000);

  CHECK(max_diff(ra.final_state.w_n, rb.final_state.w_n) == 0.0);
  CHECK(ra.final_state.q_n == rb.final_state.q_n);
  CHECK(slurp(checkpoint_path(a, 1000)) == slurp(checkpoint_path(b, 1000)));
  const auto sa = read_timeseries(series_path(a));
  const auto sb = read_timeseries(series_path(b));
  REQUIRE(sb.size() == 500);
  for (std::size_t i = 0; i < sb.size(); ++i) CHECK(sb[i] == sa[i + 501]);

  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("series row count and determinism") {
  RunConfig c = small_kolmogorov(2.0);
  c.sample_every = 20;
  const fs::path a = scratch("rows_a");
  const fs::path b = scratch("rows_b");
  cli::SimulateOptions o;
  o.out_dir = a;
  const auto out = cli::cmd_simulate(c, o);
  CHECK(out.series.size() == 200 / 20 + 1);
  CHECK(read_timeseries(series_path(a)).size() == 11);
  o.out_dir = b;
  cli::cmd_simulate(c, o);
  CHECK(slurp(series_path(a)) == slurp(series_path(b)));
  fs::remove_all(a);
  fs::remove_all(b);
}

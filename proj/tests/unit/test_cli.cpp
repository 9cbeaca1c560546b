#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "commands.hpp"
#include "fsav/errors.hpp"
#include "support.hpp"

using namespace fsav;
using namespace fsav::cli;
using namespace fsav::test;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fsav_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("zero forcing from rest gives an all-zero series") {
  RunConfig c = parse_config("k = 0.01\nre = 10\nnx = 16\nny = 16\nT = 0.5\nsample_every = 5\n");
  SimulateOptions o;
  o.write_files = false;
  const SimulateOutcome out = cmd_simulate(c, o);
  CHECK(out.status == RunStatus::completed);
  REQUIRE(out.series.size() == 11);
  for (const auto& r : out.series) {
    CHECK(r.l2_omega == 0.0);
    CHECK(r.h1_omega == 0.0);
    CHECK(r.max_omega == 0.0);
    CHECK(r.q == 1.0);
    CHECK(r.energy_residual == 0.0);
    CHECK(r.mode_re == 0.0);
    CHECK(r.mode_im == 0.0);
  }
  CHECK(out.series.back().t == doctest::Approx(0.5));
}

TEST_CASE("suspend and resume") {
  RunConfig c = parse_config(
      "k = 0.01\nre = 40\nnx = 16\nny = 16\nT = 1\nforcing = kolmogorov\nm = 2\nic = kolmogorov\n"
      "ic_amplitude = 0.1\nic_kx = 1\nic_ky = 1\n");
  const fs::path dir = scratch("suspend");
  SimulateOptions o;
  o.out_dir = dir;
  o.max_wall_seconds = 1e-12;
  const SimulateOutcome first = cmd_simulate(c, o);
  REQUIRE(first.status == RunStatus::suspended);
  CHECK(first.steps == 1);
  CHECK(fs::exists(checkpoint_path(dir, 1)));
  CHECK(lines_of(series_path(dir)).size() == 3);

  o.max_wall_seconds = 0.0;
  o.resume = checkpoint_path(dir, 1);
  const SimulateOutcome rest = cmd_simulate(c, o);
  CHECK(rest.status == RunStatus::completed);
  CHECK(rest.steps == 100);
  const auto rows = read_timeseries(series_path(dir));
  REQUIRE(rows.size() == 101);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].t > rows[i - 1].t);

  SimulateOptions straight;
  straight.write_files = false;
  const SimulateOutcome ref = cmd_simulate(c, straight);
  CHECK(max_diff(ref.final_state.w_n, rest.final_state.w_n) < 1e-12);
  fs::remove_all(dir);
}

TEST_CASE("shortened horizon ends exactly at T") {
  RunConfig c = parse_config(
      "k = 0.03\nre = 40\nnx = 16\nny = 16\nT = 1\nforcing = kolmogorov\nm = 2\nic = kolmogorov\n"
      "ic_amplitude = 0.1\nic_kx = 1\nic_ky = 1\nallow_shortening = true\nsample_every = 100\n");
  SimulateOptions o;
  o.write_files = false;
  const SimulateOutcome out = cmd_simulate(c, o);
  CHECK(out.status == RunStatus::completed);
  CHECK(out.steps == 34);
  CHECK(out.t_end == 1.0);
  CHECK(out.series.back().t == 1.0);
  CHECK(out.min_denominator_margin >= 0.0);
  CHECK(out.max_energy_residual < 1e-10);
}

TEST_CASE("blow-up is reported, not thrown") {
  RunConfig c = parse_config(
      "k = 0.01\nre = 40\nnx = 16\nny = 16\nT = 1\nforcing = kolmogorov\nm = 2\nic = kolmogorov\n"
      "blowup_threshold = 2\n");
  SimulateOptions o;
  o.write_files = false;
  const SimulateOutcome out = cmd_simulate(c, o);
  CHECK(out.status == RunStatus::blowup);
  CHECK(out.blowup_t == doctest::Approx(0.01));
  CHECK(out.steps == 1);
  CHECK_FALSE(out.message.empty());
}

TEST_CASE("convergence sweep") {
  RunConfig c = load_config(fs::path(FSAV_SOURCE_DIR) / "configs" / "table3.conf");
  c.horizon = 2.0;
  const std::vector<double> ks{0.025, 0.0125, 0.00625};
  const auto rows = cmd_converge(c, ks, 2);
  REQUIRE(rows.size() == 3);
  CHECK_FALSE(rows[0].order_omega.has_value());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].order_omega.has_value());
    CHECK(*rows[i].order_omega == doctest::Approx(2.0).epsilon(0.1));
    CHECK(*rows[i].order_omega ==
          doctest::Approx(std::log2(rows[i - 1].error_omega / rows[i].error_omega)).epsilon(1e-12));
  }
  const auto single = cmd_converge(c, std::span(ks).first(1));
  CHECK_FALSE(single[0].order_omega.has_value());
  CHECK(single[0].error_omega == rows[0].error_omega);

  const fs::path dir = scratch("converge");
  fs::create_directories(dir);
  write_converge_csv(dir / "converge.csv", rows);
  const auto lines = lines_of(dir / "converge.csv");
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "k,status,blowup_t,error_omega,order_omega,error_psi,order_psi,q_error,runtime_s");
  CHECK(lines[1].starts_with("0.025000000000000001,completed,,"));
  fs::remove_all(dir);
}

TEST_CASE("bursting needs Kolmogorov forcing") {
  RunConfig c = parse_config("k = 0.01\nre = 10\nnx = 16\nny = 16\nT = 0.5\n");
  SimulateOptions o;
  o.write_files = false;
  CHECK_THROWS_AS(cmd_bursting(c, o), ConfigError);
}

TEST_CASE("bursting writes its tables") {
  RunConfig c = parse_config(
      "k = 0.05\nre = 30\nnx = 16\nny = 16\nT = 30\nforcing = kolmogorov\nm = 2\nic = kolmogorov\n"
      "ic_amplitude = 0.001\nic_kx = 1\nic_ky = 1\nburst_warmup = 10\nsample_every = 2\n");
  const fs::path dir = scratch("bursting");
  SimulateOptions o;
  o.out_dir = dir;
  const BurstingOutcome b = cmd_bursting(c, o);
  REQUIRE(b.sim.status == RunStatus::completed);
  CHECK(b.spectrum.size() == 301 / 2 + 1);
  CHECK(lines_of(dir / "bursts.csv").front() == "t_start,t_peak,t_end,peak_value");
  CHECK(lines_of(dir / "intervals.csv").front() == "index,interval");
  const auto psd_lines = lines_of(dir / "psd.csv");
  CHECK(psd_lines.front() == "freq,power");
  CHECK(psd_lines.size() == b.spectrum.size() + 1);
  fs::remove_all(dir);
}

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "fsav/errors.hpp"

using namespace fsav;
using namespace fsav::cli;

namespace {

std::vector<double> parse_k_list(const std::string& s) {
  std::vector<double> ks;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size() || !(v > 0.0)) throw ConfigError(0, "bad entry in --k: '" + item + "'");
    ks.push_back(v);
  }
  if (ks.empty()) throw ConfigError(0, "--k is empty");
  return ks;
}

void emit(const nlohmann::json& j) { std::cout << j.dump() << std::endl; }

int report_simulation(const SimulateOutcome& o, const std::string& experiment) {
  nlohmann::json j{{"experiment", experiment}, {"t_end", o.t_end}, {"steps", o.steps}};
  switch (o.status) {
    case RunStatus::completed:
      j["status"] = "completed";
      j["max_energy_residual"] = o.max_energy_residual;
      emit(j);
      return kExitOk;
    case RunStatus::blowup:
      j["status"] = "blowup";
      j["blowup_t"] = o.blowup_t;
      j["message"] = o.message;
      emit(j);
      return kExitBlowUp;
    case RunStatus::suspended:
      j["status"] = "suspended";
      emit(j);
      return kExitSuspended;
  }
  return kExitInvariant;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic 2D Navier-Stokes with the FSAV-BDF2 scheme"};
  app.require_subcommand(1);

  std::string config_path;
  std::string k_list;
  std::string out_dir;
  double max_wall = 0.0;
  std::string resume;
  int workers = 1;

  auto* converge = app.add_subcommand("converge", "Time-step refinement on the manufactured case");
  converge->add_option("--config", config_path, "Run configuration")->required();
  converge->add_option("--k", k_list, "Comma-separated time steps (halving)")->required();
  converge->add_option("--out", out_dir, "Output directory");
  converge->add_option("--workers", workers, "Parallel runs")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "Single run with diagnostics and checkpoints");
  auto* bursting = app.add_subcommand("bursting", "Simulation plus burst statistics");
  for (auto* sub : {simulate, bursting}) {
    sub->add_option("--config", config_path, "Run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--max-wall-seconds", max_wall, "Checkpoint and stop after this long");
    sub->add_option("--resume", resume, "Continue from a checkpoint file");
  }
  auto* verify = app.add_subcommand("verify", "Run the invariant suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      bool ok = true;
      for (const auto& s : cmd_verify()) {
        std::printf("%-32s %s  value=%.3e  tol=%.3e  %s\n", s.name.c_str(), s.pass ? "ok  " : "FAIL",
                    s.value, s.tolerance, s.detail.c_str());
        ok = ok && s.pass;
      }
      return ok ? kExitOk : kExitInvariant;
    }

    const RunConfig cfg = load_config(config_path);
    SimulateOptions opts;
    opts.out_dir = out_dir;
    opts.max_wall_seconds = max_wall;
    if (!resume.empty()) opts.resume = resume;
    const std::filesystem::path dir = out_dir.empty() ? cfg.output_dir : out_dir;

    if (converge->parsed()) {
      const std::vector<double> ks = parse_k_list(k_list);
      const auto rows = cmd_converge(cfg, ks, workers);
      std::filesystem::create_directories(dir);
      write_converge_csv(dir / "converge.csv", rows);
      for (const auto& r : rows) {
        nlohmann::json j{{"experiment", "converge"}, {"k", r.k},
                         {"status", r.blowup ? "blowup" : "completed"}};
        if (r.blowup) {
          j["blowup_t"] = r.blowup_t;
        } else {
          j["error_omega"] = r.error_omega;
          j["error_psi"] = r.error_psi;
          j["q_error"] = r.q_error;
          if (r.order_omega) j["order_omega"] = *r.order_omega;
          if (r.order_psi) j["order_psi"] = *r.order_psi;
        }
        j["runtime_s"] = r.runtime_s;
        emit(j);
      }
      return kExitOk;
    }
    if (simulate->parsed()) return report_simulation(cmd_simulate(cfg, opts), "simulate");
    if (bursting->parsed()) {
      const BurstingOutcome b = cmd_bursting(cfg, opts);
      const int code = report_simulation(b.sim, "bursting");
      if (code == kExitOk) emit({{"experiment", "bursting"}, {"bursts", b.events.size()}});
      return code;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidGrid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainMismatch& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const BlowUp& e) {
    emit({{"status", "blowup"}, {"blowup_t", e.time()}, {"message", e.what()}});
    return kExitBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return kExitOk;
}

// sdex: command-line driver for the crossbar experiments.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <map>
#include <thread>

#include "sdex/config.hpp"
#include "sdex/errors.hpp"
#include "sdex/experiments.hpp"
#include "sdex/io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

void print_outcome(const sdex::CommandOutcome& outcome) {
  for (const auto& c : outcome.checks) {
    fmt::print("{} {} value={} ({})\n", c.pass ? "PASS" : "FAIL", c.name, c.value, c.detail);
  }
  for (const auto& f : outcome.files) fmt::print("wrote {}\n", f.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic differential equations on a simulated memristor crossbar"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  int threads = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  std::vector<std::string> overrides;
  sdex::RunControls ctl;
  bool print_config = false;

  app.add_option("--config", config_path, "Plain-text key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Master seed (overrides run.master_seed)");
  app.add_option("--out-dir", out_dir, "Output directory (overrides run.out_dir)");
  app.add_option("--threads", threads, "Worker threads for trajectory ensembles")->check(CLI::PositiveNumber);
  app.add_option("--set", overrides, "Extra key=value settings, applied last")->take_all();
  app.add_flag("--dump-nodal", ctl.dump_nodal, "Write the reduced nodal system of one read");
  app.add_flag("--dump-trajectories", ctl.dump_trajectories, "Write every trajectory to trajectories.csv");
  app.add_flag("--print-config", print_config, "Print the effective configuration before running");

  auto* rng = app.add_subcommand("rng-characterize", "Moments of crossbar-generated gaussian vectors");
  auto* bs = app.add_subcommand("solve-bs", "Black-Scholes ensemble with Euler-Maruyama");
  std::string mode_name = "noise-only";
  const std::map<std::string, sdex::RunMode> modes{{"digital", sdex::RunMode::digital()},
                                                   {"noise-only", sdex::RunMode::noise_only()},
                                                   {"full-crossbar", sdex::RunMode::full_crossbar()}};
  bs->add_option("--mode", mode_name, "Where noise and coefficients come from")
      ->check(CLI::IsMember({"digital", "noise-only", "full-crossbar"}));
  auto* energy = app.add_subcommand("energy-report", "Energy of the default Black-Scholes workload");

  CLI11_PARSE(app, argc, argv);

  sdex::ExperimentConfig cfg;
  std::string command;
  try {
    if (!config_path.empty()) sdex::apply_config_file(cfg, config_path);
    sdex::apply_process_env(cfg);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw sdex::ConfigError("--set expects key=value, got '" + kv + "'");
      sdex::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.master_seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    ctl.threads = threads;
    if (print_config) fmt::print("{}", sdex::dump_config(cfg));

    sdex::CommandOutcome outcome;
    if (rng->parsed()) {
      command = "rng-characterize";
      outcome = sdex::cmd_rng_characterize(cfg, ctl);
    } else if (bs->parsed()) {
      command = "solve-bs";
      outcome = sdex::cmd_solve_bs(cfg, modes.at(mode_name), ctl);
    } else if (energy->parsed()) {
      command = "energy-report";
      outcome = sdex::cmd_energy_report(cfg, ctl);
    }
    print_outcome(outcome);
    if (!outcome.ok()) {
      const auto body = sdex::failure_json(command, outcome);
      sdex::write_text_file(std::filesystem::path(cfg.out_dir) / (command + "-failure.json"), body + "\n");
      std::fputs((body + "\n").c_str(), stderr);
      return kExitChecksFailed;
    }
    return kExitOk;
  } catch (const sdex::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitUsage;
  } catch (const sdex::UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kExitUsage;
  } catch (const sdex::RangeError& e) {
    fmt::print(stderr, "range error: {}\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
}

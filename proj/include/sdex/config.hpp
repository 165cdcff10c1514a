#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdex/circuit.hpp"
#include "sdex/device.hpp"
#include "sdex/energy.hpp"
#include "sdex/sde.hpp"

namespace sdex {

// Pass/fail thresholds applied by the CLI commands.
struct CheckThresholds {
  double moment_abs_max = 0.6;      // |skew| and |excess kurtosis| per pair
  double mean_diff_se = 3.0;        // first vs last pair, pooled standard errors
  double std_ratio_lo = 0.95;
  double std_ratio_hi = 1.05;
  double mean_se = 3.0;             // ensemble mean vs analytic mean
  double var_rel = 0.10;            // ensemble variance vs analytic variance
  double ks_max = 0.08;
  bool skew_excess = false;         // full-crossbar skew must exceed digital skew
  double energy_factor = 2.0;
  double program_energy_j = 0.8e-6;
  double total_energy_j = 0.16;
  double read_energy_j = 3e-6;
  double write_ops = 200000;
  double write_ops_rel = 0.10;
};

struct ExperimentConfig {
  CrossbarConfig crossbar{};
  DeviceSpec device{};
  PulseModel pulse{};
  int calib_n = 1000;

  // Random-vector characterization.
  int n_vectors = 500;
  int vector_len = 16;
  int rng_rows = 32;
  int rng_cols = 32;

  // Black-Scholes ensemble.
  BlackScholesParams bs{};
  double t1 = 1.0;
  int n_steps = 100;
  int m_trajectories = 1000;
  double x_max = 4.0;

  std::uint64_t master_seed = 1;
  std::string out_dir = "out";
  CheckThresholds check{};

  void validate() const;
};

// Reads `key = value` lines ('#' starts a comment). Unknown keys and
// malformed values raise ConfigError with the line number.
void apply_config_text(ExperimentConfig& cfg, const std::string& text, const std::string& origin = "<text>");
void apply_config_file(ExperimentConfig& cfg, const std::string& path);
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// SDEX_<KEY> overrides, with '.' in the key written as '_' and the key
// upper-cased (crossbar.r_line -> SDEX_CROSSBAR_R_LINE).
using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
void apply_env(ExperimentConfig& cfg, const EnvLookup& lookup);
void apply_process_env(ExperimentConfig& cfg);

std::vector<std::string> config_keys();
std::string env_name(const std::string& key);

// Effective configuration, one `key = value` line per setting.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace sdex

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sdex/config.hpp"
#include "sdex/gauss.hpp"
#include "sdex/sde.hpp"
#include "sdex/stats.hpp"

namespace sdex {

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct CommandOutcome {
  std::vector<Check> checks;
  std::vector<std::filesystem::path> files;
  bool ok() const;
};

struct RunControls {
  int threads = 1;
  bool dump_nodal = false;         // nodal_system.txt for the first read
  bool dump_trajectories = false;  // trajectories.csv
};

// Random-vector characterization on a dedicated tile: `vector_len` pairs on
// word line 0, calibrated, then `n_vectors` draws.
struct RngCharacterization {
  Eigen::MatrixXd z;    // n_vectors x vector_len
  Eigen::MatrixXd raw;  // A
  std::vector<MomentStats> per_pair;  // of z
  TrendFit kurtosis_trend;            // excess kurtosis vs pair index
  double mean_diff_se = 0.0;          // |mean_first - mean_last| / pooled SE, raw currents
  double std_ratio = 0.0;             // std_first / std_last, raw currents
  Calibration calibration;
  EnergyLedger ledger;
  std::optional<CrossbarTile> tile;
};

RngCharacterization characterize_rng(const ExperimentConfig& cfg);

EnsembleOptions ensemble_options(const ExperimentConfig& cfg, RunMode mode, int threads);

// Summary of an ensemble against the analytic law at t1.
struct BsComparison {
  MomentStats finals;
  double analytic_mean = 0.0;
  double analytic_var = 0.0;
  double mean_error_se = 0.0;   // |mean - analytic| / (std / sqrt(n))
  double var_rel_error = 0.0;   // |var - analytic| / analytic
  double ks_analytic = 0.0;
};

BsComparison compare_to_analytic(const ExperimentConfig& cfg, const Eigen::MatrixXd& finals);

CommandOutcome cmd_rng_characterize(const ExperimentConfig& cfg, const RunControls& ctl = {});
CommandOutcome cmd_solve_bs(const ExperimentConfig& cfg, RunMode mode, const RunControls& ctl = {});
CommandOutcome cmd_energy_report(const ExperimentConfig& cfg, const RunControls& ctl = {});

// {"ok": false, "command": ..., "failed": [...]} for the failed checks.
std::string failure_json(const std::string& command, const CommandOutcome& outcome);

}  // namespace sdex

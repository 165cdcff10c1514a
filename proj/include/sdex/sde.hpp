#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sdex/energy.hpp"
#include "sdex/gauss.hpp"

namespace sdex {

using Field = std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x)>;

// drift(t, x) = drift_matrix * x, diffusion(t, x) = diffusion_matrix * x.
// Needed when the coefficients are evaluated on the crossbar.
struct LinearCoefficients {
  Eigen::MatrixXd drift_matrix;
  Eigen::MatrixXd diffusion_matrix;
};

// dX = drift(t, X) dt + diffusion(t, X) (.) dW with diagonal noise.
struct SdeProblem {
  int dim = 1;
  Field drift;
  Field diffusion;
  Eigen::VectorXd x0;
  double t0 = 0.0;
  double t1 = 1.0;
  int n_steps = 100;
  std::optional<LinearCoefficients> linear;
  // Terminal value given the Brownian endpoint W(t1) - W(t0), when known.
  std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& w)> exact;

  double dt() const { return (t1 - t0) / n_steps; }
  void validate() const;
};

struct BlackScholesParams {
  double r = 0.1;
  double sigma = 0.2;
  double x0 = 1.0;
  void validate() const;
};

// x0 * exp(sigma * w + (r - sigma^2 / 2) t)
double bs_analytic_final(const BlackScholesParams& p, double t, double w);
double bs_mean(const BlackScholesParams& p, double t);
double bs_var(const BlackScholesParams& p, double t);
// Lognormal CDF of X(t).
double bs_cdf(const BlackScholesParams& p, double t, double x);

// dX = r X dt - sigma X dW on [0, t1].
SdeProblem make_black_scholes(const BlackScholesParams& p, double t1 = 1.0, int n_steps = 100);
// dX = dW in `dim` dimensions.
SdeProblem make_wiener(int dim = 1, double t1 = 1.0, int n_steps = 100);

Eigen::VectorXd em_update(const Eigen::VectorXd& x, const Eigen::VectorXd& drift, const Eigen::VectorXd& diffusion,
                          double dt, const Eigen::VectorXd& dw);
// Forward Euler-Maruyama step x + r(t,x) dt + sigma(t,x) (.) dw.
Eigen::VectorXd em_step(const Eigen::VectorXd& x, double t, double dt, const Eigen::VectorXd& dw,
                        const SdeProblem& problem);

enum class NoiseSource { Digital, Crossbar };
enum class ParamSource { Digital, Crossbar };

struct RunMode {
  NoiseSource noise = NoiseSource::Digital;
  ParamSource params = ParamSource::Digital;

  static RunMode digital() { return {NoiseSource::Digital, ParamSource::Digital}; }
  static RunMode noise_only() { return {NoiseSource::Crossbar, ParamSource::Digital}; }
  static RunMode full_crossbar() { return {NoiseSource::Crossbar, ParamSource::Crossbar}; }
  std::string name() const;
};

struct CrossbarSetup {
  CrossbarConfig config{};
  DeviceSpec spec{};
  PulseModel pulses{};
  int calib_n = 1000;
  double x_max = 4.0;  // input range of the coefficient read
};

struct EnsembleOptions {
  int m = 1000;
  std::uint64_t seed = 1;
  RunMode mode{};
  CrossbarSetup crossbar{};
  int threads = 1;
  bool keep_paths = false;
  int trace_reads = 16;  // bit-line currents recorded from trajectory 0
  double divergence_limit = 1e12;
};

struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXd states;  // (n_steps + 1) x d
};

struct ReadTrace {
  std::string kind;  // "noise" or "vmm"
  std::vector<double> bitline_currents;
};

struct EnsembleResult {
  Eigen::MatrixXd finals;                // surviving trajectories x d
  std::vector<int> final_ids;            // trajectory index of each finals row
  std::vector<std::uint64_t> seeds;      // per trajectory, all m
  int diverged = 0;
  EnergyLedger ledger;                   // calibration + all trajectories
  EnergyLedger calibration_ledger;
  std::vector<Trajectory> paths;         // when keep_paths
  std::vector<ReadTrace> trace;
  std::optional<CrossbarTile> tile;      // crossbar modes: tile as used by trajectory 0
  std::optional<Calibration> calibration;
};

// Solver tile: coefficient pairs on rows [0, d), noise pairs on row
// d starting at column 4d, everything else unused at LRS.
struct SolverLayout {
  int dim = 1;
  std::vector<PairAddr> noise_pairs;
  int weight_row0 = 0;
  int weight_col0 = 0;
  static SolverLayout make(const CrossbarConfig& config, int dim);
};

EnsembleResult simulate_ensemble(const SdeProblem& problem, const EnsembleOptions& options);

struct StrongOrderResult {
  double slope = 0.0;
  std::vector<double> dts;
  std::vector<double> errors;  // mean |X_T^dt - X_T^ref|
};

// Coupled-path strong error regression with digital noise.
StrongOrderResult estimate_strong_order(const SdeProblem& problem, const std::vector<double>& dts, int m,
                                        std::uint64_t seed);

}  // namespace sdex

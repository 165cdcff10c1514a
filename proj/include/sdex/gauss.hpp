#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "sdex/circuit.hpp"
#include "sdex/energy.hpp"

namespace sdex {

// A differential pair of random-source devices on one word line; the
// sample is the bit-line current difference I(col_plus) - I(col_minus).
struct PairAddr {
  int row = 0;
  int col_plus = 0;
  int col_minus = 1;
};

// Adjacent-column pairs along one word line: (row, col0), (row, col0+1), ...
std::vector<PairAddr> pairs_on_row(int row, int count, int col0 = 0);

// Draws every Unused device of the tile once around g_lrs with the DeviceSpec
// LRS spread, and applies stuck faults at the configured rates.
void populate_background(CrossbarTile& tile, const DeviceSpec& spec, Rng& rng);

struct Calibration {
  std::vector<double> mu;     // A
  std::vector<double> sigma;  // A
};

class GaussianSource {
 public:
  struct Params {
    double g_target = 1e-5;
    double variability = 0.25;
    int calib_n = 1000;
    double g_reset = 1e-4;  // each cycle starts from the reset state
    PulseModel pulses{};
  };

  // `extra_ports` are cells outside the pairs whose conductance may be
  // changed later through set_device (for example weights sharing the tile).
  GaussianSource(CrossbarTile tile, std::vector<PairAddr> pairs, Params params, std::uint64_t seed,
                 std::vector<CellAddr> extra_ports = {});

  int dim() const { return static_cast<int>(pairs_.size()); }
  const std::vector<PairAddr>& pairs() const { return pairs_; }
  const Params& params() const { return params_; }
  const CrossbarTile& tile() const { return tile_; }
  const TileResponse& response() const { return *response_; }
  std::span<const double> port_conductances() const { return port_g_; }

  bool calibrated() const { return calibration_.has_value(); }
  const Calibration& calibration() const;
  void calibrate();

  void reseed(std::uint64_t seed) { rng_.seed(seed); }

  // One fresh draw: reprogram every pair, read once, return current
  // differences (A). Charges programs and the read to the ledger.
  void draw_raw(std::span<double> out);
  // Calibrated unit-normal draw.
  void draw(std::span<double> z);
  void draw(std::span<double> z, std::span<double> raw);

  // n x d matrices.
  Eigen::MatrixXd sample_unit_normal(int n);
  Eigen::MatrixXd sample_unit_normal(int n, Eigen::MatrixXd& raw);

  // Replaces a device on an extra port (program energy is charged when
  // `charge` is set, moving from the previous conductance).
  void set_device(CellAddr cell, const DeviceState& state, bool charge);

  // Linear operator of the tile at the current conductances.
  const TileOperator& current_operator();

  // Bit-line currents of the most recent draw.
  const Eigen::VectorXd& last_bitline_currents() const { return last_bitlines_; }

  EnergyLedger& ledger() { return ledger_; }
  const EnergyLedger& ledger() const { return ledger_; }

 private:
  void reprogram_pairs();

  CrossbarTile tile_;
  std::vector<PairAddr> pairs_;
  Params params_;
  Rng rng_;
  std::vector<CellAddr> ports_;
  std::vector<double> port_g_;
  std::shared_ptr<const TileResponse> response_;
  std::optional<Calibration> calibration_;
  Eigen::VectorXd read_drive_;
  Eigen::VectorXd last_bitlines_;
  EnergyLedger ledger_;
  std::optional<TileOperator> op_cache_;
};

// Lower-triangular L with L * L' = sigma. Throws DecompositionError naming
// the first non-positive pivot.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& sigma);

// Imposes a covariance on unit-normal vectors through a crossbar-mapped
// Cholesky factor.
class CovarianceShaper {
 public:
  CovarianceShaper(const Eigen::MatrixXd& sigma, const CrossbarConfig& config, const DeviceSpec& spec,
                   std::uint64_t seed, double z_max = 8.0);

  int dim() const { return static_cast<int>(sigma_.rows()); }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& factor() const { return chol_; }
  const WeightArray& weights() const { return *array_; }

  // y = L z through the crossbar.
  std::vector<double> apply(std::span<const double> z, EnergyLedger* ledger = nullptr) const;

 private:
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd chol_;
  std::optional<WeightArray> array_;
};

// n x d correlated draws: z from the source, then L z on the crossbar.
Eigen::MatrixXd sample_correlated(const CovarianceShaper& shaper, GaussianSource& source, int n);

}  // namespace sdex

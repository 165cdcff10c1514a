#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseCholesky>
#include <iosfwd>
#include <span>
#include <vector>

#include "sdex/device.hpp"

namespace sdex {

struct CrossbarConfig {
  int rows = 8;
  int cols = 8;
  double r_line = 5.0;    // per wire segment between adjacent cells
  double r_in = 1000.0;   // word-line driver resistance
  double r_out = 1000.0;  // bit-line sense resistance
  double v_read = 0.2;
  int dac_bits = 16;
  double t_read = 200e-9;  // duration of one bit-plane read pulse

  void validate() const;
  int sources() const { return rows + cols; }
};

struct CellAddr {
  int row = 0;
  int col = 0;
  friend bool operator==(const CellAddr&, const CellAddr&) = default;
};

class CrossbarTile {
 public:
  CrossbarTile(const CrossbarConfig& config, const DeviceState& fill);

  const CrossbarConfig& config() const { return config_; }
  int rows() const { return config_.rows; }
  int cols() const { return config_.cols; }

  const DeviceState& at(int row, int col) const { return devices_[index(row, col)]; }
  DeviceState& at(int row, int col) { return devices_[index(row, col)]; }
  const DeviceState& at(CellAddr a) const { return at(a.row, a.col); }
  DeviceState& at(CellAddr a) { return at(a.row, a.col); }

  // rows x cols matrix of realized conductances.
  Eigen::MatrixXd conductances() const;

 private:
  std::size_t index(int row, int col) const;

  CrossbarConfig config_;
  std::vector<DeviceState> devices_;
};

struct ReadEvent {
  double voltage = 0.0;   // largest applied drive magnitude
  double duration = 0.0;  // s
  double energy_j = 0.0;  // total dissipation over the pulse
};

struct ReadResult {
  std::vector<double> bitline_currents;  // A, current into each bit line's sense resistor
  std::vector<ReadEvent> energy_events;
};

// Exact nodal solve of the tile. Word line i is driven by wordline_v[i]
// through r_in; bit line j terminates through r_out into bitline_v[j]
// (ground when bitline_v is empty).
ReadResult solve_tile(const CrossbarTile& tile, std::span<const double> wordline_v,
                      std::span<const double> bitline_v = {});

// Writes the assembled reduced nodal matrix, right-hand side and solution.
void dump_nodal_system(std::ostream& os, const CrossbarTile& tile, std::span<const double> wordline_v,
                       std::span<const double> bitline_v = {});

// Sparse nodal network for one tile. Cells listed as ports are left out of
// the matrix; their currents enter as injections. Zero resistances merge
// nodes (or pin them to their source) instead of producing infinite stamps.
class NodalNetwork {
 public:
  NodalNetwork(const CrossbarConfig& config, const Eigen::MatrixXd& conductance,
               std::vector<CellAddr> ports = {});

  struct Solution {
    Eigen::VectorXd port_voltage;      // w-node minus b-node per port
    Eigen::VectorXd bitline_current;   // cols
    Eigen::VectorXd source_current;    // rows + cols, out of each source
  };

  // Source vector u = [wordline drives; bitline terminals]; port currents
  // flow from the word-line node to the bit-line node of each port.
  Solution evaluate(const Eigen::VectorXd& u, const Eigen::VectorXd& port_current) const;

  int free_nodes() const { return static_cast<int>(free_count_); }
  const std::vector<CellAddr>& ports() const { return ports_; }
  void dump(std::ostream& os, const Eigen::VectorXd& u) const;

 private:
  struct Edge {
    int a;
    int b;
    double g;
  };

  int wl_node(int r, int c) const { return r * config_.cols + c; }
  int bl_node(int r, int c) const { return config_.rows * config_.cols + r * config_.cols + c; }
  double node_voltage(int node, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
  Eigen::VectorXd rhs(const Eigen::VectorXd& u, const Eigen::VectorXd& port_current) const;

  CrossbarConfig config_;
  Eigen::MatrixXd g_;
  std::vector<CellAddr> ports_;
  std::vector<int> cls_;           // node -> class id
  std::vector<int> cls_free_;      // class -> free index or -1
  std::vector<int> cls_source_;    // class -> pinned source or -1
  std::vector<Edge> edges_;        // finite-conductance edges between nodes
  std::vector<int> source_node_;   // attach node per source
  std::vector<double> source_g_;   // 0 when the source pins its class
  std::size_t free_count_ = 0;
  Eigen::SparseMatrix<double> k_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

// Linear map from drives to outputs for one fixed set of conductances.
struct TileOperator {
  Eigen::MatrixXd bitline;  // cols x sources
  Eigen::MatrixXd source;   // sources x sources; power = u' * source * u

  struct Output {
    Eigen::VectorXd bitline_current;
    double power_w = 0.0;
  };
  Output read(const Eigen::VectorXd& u) const;
};

// Port-reduced response of a tile: the fixed part of the network is solved
// once; reads with arbitrary conductances on the port cells then cost a
// k x k solve. Exact by superposition.
class TileResponse {
 public:
  explicit TileResponse(const CrossbarTile& tile, std::vector<CellAddr> ports = {});

  const CrossbarConfig& config() const { return config_; }
  const std::vector<CellAddr>& ports() const { return ports_; }
  int port_index(CellAddr a) const;

  TileOperator op(std::span<const double> port_g) const;

  struct Output {
    Eigen::VectorXd bitline_current;
    Eigen::VectorXd port_current;
    double power_w = 0.0;
  };
  Output read(const Eigen::VectorXd& u, std::span<const double> port_g) const;

  // Total power drawn from the drives u as a function of the conductance of
  // one port, all other ports held at port_g:
  //   P(g) = open_power + slope * g * v_th / (1 + g * r_th)
  struct PowerCurve {
    double open_power = 0.0;
    double v_th = 0.0;
    double r_th = 0.0;
    double slope = 0.0;
    double at(double g) const { return open_power + slope * g * v_th / (1.0 + g * r_th); }
  };
  PowerCurve power_curve(const Eigen::VectorXd& u, std::span<const double> port_g, int port) const;

 private:
  CrossbarConfig config_;
  std::vector<CellAddr> ports_;
  Eigen::MatrixXd h_;   // k x S   open-circuit port voltages per unit source
  Eigen::MatrixXd z_;   // k x k   port voltage drop per unit port current
  Eigen::MatrixXd ou_;  // C x S
  Eigen::MatrixXd oi_;  // C x k
  Eigen::MatrixXd qu_;  // S x S
  Eigen::MatrixXd qi_;  // S x k
};

// Concatenates drives into the source vector used by NodalNetwork.
Eigen::VectorXd drive_vector(const CrossbarConfig& config, std::span<const double> wordline_v,
                             std::span<const double> bitline_v = {});

// Differential weight map: w -> (G+, G-) around the midpoint of [g_hrs, g_lrs].
struct MappingParams {
  double w_max = 1.0;
  double x_max = 1.0;
  double g_lo = 1e-5;
  double g_hi = 1e-4;
  std::vector<double> gains;  // optional per-output correction

  static MappingParams from(const DeviceSpec& spec, double w_max, double x_max);
  double g_mid() const { return 0.5 * (g_hi + g_lo); }
  double delta_g() const { return g_hi - g_lo; }
  std::pair<double, double> pair_targets(double w) const;
};

struct VmmResult {
  std::vector<double> values;
  std::vector<ReadEvent> events;
};

// Bit-serial sign-magnitude read. x has one entry per tile row; output p is
// decoded from the column pair (2p, 2p+1). When `planes` is given, the raw
// bit-line currents of every issued bit-plane read are appended to it.
VmmResult vmm_read(const TileOperator& op, const CrossbarConfig& config, std::span<const double> x,
                   const MappingParams& mapping, std::vector<Eigen::VectorXd>* planes = nullptr);
VmmResult vmm_read(const CrossbarTile& tile, std::span<const double> x, const MappingParams& mapping);

// Places W (outputs x inputs) into the tile: input i on row row0+i, output p
// on columns col0+2p (G+) and col0+2p+1 (G-). Returns the touched cells in
// programming order.
std::vector<CellAddr> place_weights(CrossbarTile& tile, const Eigen::MatrixXd& w, const MappingParams& mapping,
                                    int row0 = 0, int col0 = 0);

// Per-output least-squares gain that makes a tile holding the *target*
// conductances reproduce the logical weights under single-row probes.
std::vector<double> twin_gains(const TileOperator& twin, const CrossbarConfig& config, const Eigen::MatrixXd& w,
                               const MappingParams& mapping, int row0 = 0, int col0 = 0);

// A weight matrix spread over as many tiles as needed, with digital
// accumulation of partial sums. Edge tiles are padded with unused devices
// at g_hrs.
class WeightArray {
 public:
  WeightArray(const Eigen::MatrixXd& w, const CrossbarConfig& config, const DeviceSpec& spec, double w_max,
              double x_max, Rng& rng);

  int inputs() const { return static_cast<int>(weights_.cols()); }
  int outputs() const { return static_cast<int>(weights_.rows()); }
  const std::vector<CrossbarTile>& tiles() const { return tiles_; }
  const MappingParams& mapping() const { return mapping_; }

  VmmResult read(std::span<const double> x) const;

 private:
  struct Block {
    int in0, out0, n_in, n_out;
  };
  Eigen::MatrixXd weights_;
  CrossbarConfig config_;
  MappingParams mapping_;
  std::vector<CrossbarTile> tiles_;
  std::vector<Block> blocks_;
  std::vector<TileOperator> ops_;
  std::vector<std::vector<double>> gains_;
};

}  // namespace sdex

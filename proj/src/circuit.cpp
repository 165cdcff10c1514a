#include "sdex/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include <Eigen/LU>

#include "sdex/errors.hpp"

namespace sdex {

void CrossbarConfig::validate() const {
  if (rows < 1 || cols < 1) throw RangeError("crossbar rows and cols must be >= 1");
  for (double r : {r_line, r_in, r_out}) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw RangeError("crossbar resistances must be finite and >= 0");
  }
  if (dac_bits < 1 || dac_bits > 32) throw RangeError("crossbar.dac_bits must lie in [1, 32]");
  if (!(v_read > 0.0)) throw RangeError("crossbar.v_read must be positive");
  if (!(t_read >= 0.0)) throw RangeError("crossbar.t_read must be >= 0");
}

CrossbarTile::CrossbarTile(const CrossbarConfig& config, const DeviceState& fill) : config_(config) {
  config_.validate();
  if (!(fill.g_actual > 0.0)) throw RangeError("tile fill conductance must be positive");
  devices_.assign(static_cast<std::size_t>(config_.rows) * config_.cols, fill);
}

std::size_t CrossbarTile::index(int row, int col) const {
  if (row < 0 || row >= config_.rows || col < 0 || col >= config_.cols) {
    throw UsageError("cell (" + std::to_string(row) + ", " + std::to_string(col) + ") outside tile");
  }
  return static_cast<std::size_t>(row) * config_.cols + col;
}

Eigen::MatrixXd CrossbarTile::conductances() const {
  Eigen::MatrixXd g(config_.rows, config_.cols);
  for (int r = 0; r < config_.rows; ++r)
    for (int c = 0; c < config_.cols; ++c) g(r, c) = at(r, c).g_actual;
  return g;
}

// ---------------------------------------------------------------------------

namespace {

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

NodalNetwork::NodalNetwork(const CrossbarConfig& config, const Eigen::MatrixXd& conductance,
                           std::vector<CellAddr> ports)
    : config_(config), g_(conductance), ports_(std::move(ports)) {
  config_.validate();
  const int rows = config_.rows;
  const int cols = config_.cols;
  if (g_.rows() != rows || g_.cols() != cols) throw UsageError("conductance grid does not match tile dimensions");

  std::vector<char> is_port(static_cast<std::size_t>(rows) * cols, 0);
  for (const auto& p : ports_) {
    if (p.row < 0 || p.row >= rows || p.col < 0 || p.col >= cols) throw UsageError("port outside tile");
    auto& flag = is_port[static_cast<std::size_t>(p.row) * cols + p.col];
    if (flag) throw UsageError("duplicate port");
    flag = 1;
  }

  const int n_nodes = 2 * rows * cols;
  DisjointSet dsu(n_nodes);
  if (config_.r_line == 0.0) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c + 1 < cols; ++c) dsu.unite(wl_node(r, c), wl_node(r, c + 1));
    for (int r = 0; r + 1 < rows; ++r)
      for (int c = 0; c < cols; ++c) dsu.unite(bl_node(r, c), bl_node(r + 1, c));
  }

  cls_.resize(n_nodes);
  std::vector<int> root_to_cls(n_nodes, -1);
  int n_cls = 0;
  for (int n = 0; n < n_nodes; ++n) {
    const int root = dsu.find(n);
    if (root_to_cls[root] < 0) root_to_cls[root] = n_cls++;
    cls_[n] = root_to_cls[root];
  }

  const int n_src = config_.sources();
  source_node_.resize(n_src);
  source_g_.resize(n_src);
  cls_source_.assign(n_cls, -1);
  for (int r = 0; r < rows; ++r) {
    source_node_[r] = wl_node(r, 0);
    source_g_[r] = config_.r_in > 0.0 ? 1.0 / config_.r_in : 0.0;
  }
  for (int c = 0; c < cols; ++c) {
    source_node_[rows + c] = bl_node(rows - 1, c);
    source_g_[rows + c] = config_.r_out > 0.0 ? 1.0 / config_.r_out : 0.0;
  }
  for (int s = 0; s < n_src; ++s) {
    if (source_g_[s] != 0.0) continue;
    int& pinned = cls_source_[cls_[source_node_[s]]];
    if (pinned >= 0) throw InternalError("two ideal sources share one node");
    pinned = s;
  }

  cls_free_.assign(n_cls, -1);
  for (int k = 0; k < n_cls; ++k) {
    if (cls_source_[k] < 0) cls_free_[k] = static_cast<int>(free_count_++);
  }

  if (config_.r_line > 0.0) {
    const double gl = 1.0 / config_.r_line;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c + 1 < cols; ++c) edges_.push_back({wl_node(r, c), wl_node(r, c + 1), gl});
    for (int r = 0; r + 1 < rows; ++r)
      for (int c = 0; c < cols; ++c) edges_.push_back({bl_node(r, c), bl_node(r + 1, c), gl});
  }
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      if (is_port[static_cast<std::size_t>(r) * cols + c]) continue;
      const double g = g_(r, c);
      if (!(g > 0.0) || !std::isfinite(g)) throw RangeError("device conductance must be positive and finite");
      edges_.push_back({wl_node(r, c), bl_node(r, c), g});
    }
  }

  if (free_count_ == 0) return;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(edges_.size() * 4 + n_src);
  for (const auto& e : edges_) {
    const int fa = cls_free_[cls_[e.a]];
    const int fb = cls_free_[cls_[e.b]];
    if (cls_[e.a] == cls_[e.b]) continue;
    if (fa >= 0) trip.emplace_back(fa, fa, e.g);
    if (fb >= 0) trip.emplace_back(fb, fb, e.g);
    if (fa >= 0 && fb >= 0) {
      trip.emplace_back(fa, fb, -e.g);
      trip.emplace_back(fb, fa, -e.g);
    }
  }
  for (int s = 0; s < n_src; ++s) {
    const int f = cls_free_[cls_[source_node_[s]]];
    if (source_g_[s] > 0.0 && f >= 0) trip.emplace_back(f, f, source_g_[s]);
  }
  const auto n = static_cast<Eigen::Index>(free_count_);
  k_.resize(n, n);
  k_.setFromTriplets(trip.begin(), trip.end());
  ldlt_.compute(k_);
  if (ldlt_.info() != Eigen::Success) throw InternalError("nodal matrix is singular");
}

double NodalNetwork::node_voltage(int node, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
  const int k = cls_[node];
  const int f = cls_free_[k];
  return f >= 0 ? x[f] : u[cls_source_[k]];
}

Eigen::VectorXd NodalNetwork::rhs(const Eigen::VectorXd& u, const Eigen::VectorXd& port_current) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_count_));
  for (const auto& e : edges_) {
    const int ka = cls_[e.a];
    const int kb = cls_[e.b];
    if (ka == kb) continue;
    if (cls_free_[ka] >= 0 && cls_source_[kb] >= 0) f[cls_free_[ka]] += e.g * u[cls_source_[kb]];
    if (cls_free_[kb] >= 0 && cls_source_[ka] >= 0) f[cls_free_[kb]] += e.g * u[cls_source_[ka]];
  }
  for (int s = 0; s < config_.sources(); ++s) {
    const int fr = cls_free_[cls_[source_node_[s]]];
    if (source_g_[s] > 0.0 && fr >= 0) f[fr] += source_g_[s] * u[s];
  }
  for (std::size_t p = 0; p < ports_.size(); ++p) {
    const int fw = cls_free_[cls_[wl_node(ports_[p].row, ports_[p].col)]];
    const int fb = cls_free_[cls_[bl_node(ports_[p].row, ports_[p].col)]];
    if (fw >= 0) f[fw] -= port_current[p];
    if (fb >= 0) f[fb] += port_current[p];
  }
  return f;
}

NodalNetwork::Solution NodalNetwork::evaluate(const Eigen::VectorXd& u, const Eigen::VectorXd& port_current) const {
  const int rows = config_.rows;
  const int cols = config_.cols;
  if (u.size() != config_.sources()) throw UsageError("source vector has wrong length");
  if (port_current.size() != static_cast<Eigen::Index>(ports_.size())) {
    throw UsageError("port current vector has wrong length");
  }

  Eigen::VectorXd x;
  if (free_count_ > 0) {
    x = ldlt_.solve(rhs(u, port_current));
    if (ldlt_.info() != Eigen::Success) throw InternalError("nodal solve failed");
  }

  Solution sol;
  sol.port_voltage.resize(static_cast<Eigen::Index>(ports_.size()));
  sol.bitline_current = Eigen::VectorXd::Zero(cols);
  sol.source_current = Eigen::VectorXd::Zero(config_.sources());

  for (std::size_t p = 0; p < ports_.size(); ++p) {
    const auto& a = ports_[p];
    sol.port_voltage[p] = node_voltage(wl_node(a.row, a.col), x, u) - node_voltage(bl_node(a.row, a.col), x, u);
    sol.bitline_current[a.col] += port_current[p];
  }

  // Bit line j only touches its devices and its terminal, so the terminal
  // current is the sum of the device currents in that column.
  const int device_edge0 = config_.r_line > 0.0 ? rows * (cols - 1) + (rows - 1) * cols : 0;
  for (std::size_t e = device_edge0; e < edges_.size(); ++e) {
    const auto& ed = edges_[e];
    const int col = (ed.a % (rows * cols)) % cols;
    sol.bitline_current[col] += ed.g * (node_voltage(ed.a, x, u) - node_voltage(ed.b, x, u));
  }

  for (int s = 0; s < config_.sources(); ++s) {
    if (source_g_[s] > 0.0) sol.source_current[s] = source_g_[s] * (u[s] - node_voltage(source_node_[s], x, u));
  }
  for (const auto& e : edges_) {
    const int ka = cls_[e.a];
    const int kb = cls_[e.b];
    if (ka == kb) continue;
    const double i_ab = e.g * (node_voltage(e.a, x, u) - node_voltage(e.b, x, u));
    if (cls_source_[ka] >= 0) sol.source_current[cls_source_[ka]] += i_ab;
    if (cls_source_[kb] >= 0) sol.source_current[cls_source_[kb]] -= i_ab;
  }
  for (std::size_t p = 0; p < ports_.size(); ++p) {
    const int kw = cls_[wl_node(ports_[p].row, ports_[p].col)];
    const int kb = cls_[bl_node(ports_[p].row, ports_[p].col)];
    if (cls_source_[kw] >= 0) sol.source_current[cls_source_[kw]] += port_current[p];
    if (cls_source_[kb] >= 0) sol.source_current[cls_source_[kb]] -= port_current[p];
  }
  return sol;
}

void NodalNetwork::dump(std::ostream& os, const Eigen::VectorXd& u) const {
  const Eigen::VectorXd f = rhs(u, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ports_.size())));
  Eigen::VectorXd x;
  if (free_count_ > 0) x = ldlt_.solve(f);
  os << "# reduced nodal system: " << free_count_ << " unknowns\n";
  os << "# matrix entries (row col value)\n";
  for (int k = 0; k < k_.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(k_, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  os << "# rhs solution\n";
  for (Eigen::Index i = 0; i < f.size(); ++i) os << f[i] << ' ' << x[i] << '\n';
}

// ---------------------------------------------------------------------------

Eigen::VectorXd drive_vector(const CrossbarConfig& config, std::span<const double> wordline_v,
                             std::span<const double> bitline_v) {
  if (static_cast<int>(wordline_v.size()) != config.rows) {
    throw UsageError("expected " + std::to_string(config.rows) + " word-line voltages, got " +
                     std::to_string(wordline_v.size()));
  }
  if (!bitline_v.empty() && static_cast<int>(bitline_v.size()) != config.cols) {
    throw UsageError("expected " + std::to_string(config.cols) + " bit-line voltages, got " +
                     std::to_string(bitline_v.size()));
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(config.sources());
  for (int r = 0; r < config.rows; ++r) u[r] = wordline_v[r];
  for (std::size_t c = 0; c < bitline_v.size(); ++c) u[config.rows + static_cast<Eigen::Index>(c)] = bitline_v[c];
  const double limit = 2.0 * config.v_read;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i]) || std::abs(u[i]) > limit * (1.0 + 1e-12)) {
      throw RangeError("drive voltage " + std::to_string(u[i]) + " V exceeds 2*v_read");
    }
  }
  return u;
}

ReadResult solve_tile(const CrossbarTile& tile, std::span<const double> wordline_v, std::span<const double> bitline_v) {
  const auto& cfg = tile.config();
  const Eigen::VectorXd u = drive_vector(cfg, wordline_v, bitline_v);
  const NodalNetwork net(cfg, tile.conductances());
  const auto sol = net.evaluate(u, Eigen::VectorXd());

  ReadResult out;
  out.bitline_currents.assign(sol.bitline_current.data(), sol.bitline_current.data() + sol.bitline_current.size());
  for (double i : out.bitline_currents) {
    if (!std::isfinite(i)) throw InternalError("non-finite bit-line current");
  }
  const double power = std::max(0.0, u.dot(sol.source_current));
  out.energy_events.push_back({u.cwiseAbs().maxCoeff(), cfg.t_read, power * cfg.t_read});
  return out;
}

void dump_nodal_system(std::ostream& os, const CrossbarTile& tile, std::span<const double> wordline_v,
                       std::span<const double> bitline_v) {
  const Eigen::VectorXd u = drive_vector(tile.config(), wordline_v, bitline_v);
  NodalNetwork(tile.config(), tile.conductances()).dump(os, u);
}

// ---------------------------------------------------------------------------

TileOperator::Output TileOperator::read(const Eigen::VectorXd& u) const {
  Output out;
  out.bitline_current = bitline * u;
  out.power_w = std::max(0.0, u.dot(source * u));
  return out;
}

TileResponse::TileResponse(const CrossbarTile& tile, std::vector<CellAddr> ports)
    : config_(tile.config()), ports_(std::move(ports)) {
  const NodalNetwork net(config_, tile.conductances(), ports_);
  const int n_src = config_.sources();
  const auto k = static_cast<Eigen::Index>(ports_.size());
  h_.resize(k, n_src);
  z_.resize(k, k);
  ou_.resize(config_.cols, n_src);
  oi_.resize(config_.cols, k);
  qu_.resize(n_src, n_src);
  qi_.resize(n_src, k);

  const Eigen::VectorXd no_current = Eigen::VectorXd::Zero(k);
  for (int s = 0; s < n_src; ++s) {
    const auto sol = net.evaluate(Eigen::VectorXd::Unit(n_src, s), no_current);
    h_.col(s) = sol.port_voltage;
    ou_.col(s) = sol.bitline_current;
    qu_.col(s) = sol.source_current;
  }
  const Eigen::VectorXd no_drive = Eigen::VectorXd::Zero(n_src);
  for (Eigen::Index p = 0; p < k; ++p) {
    const auto sol = net.evaluate(no_drive, Eigen::VectorXd::Unit(k, p));
    z_.col(p) = -sol.port_voltage;
    oi_.col(p) = sol.bitline_current;
    qi_.col(p) = sol.source_current;
  }
}

int TileResponse::port_index(CellAddr a) const {
  for (std::size_t i = 0; i < ports_.size(); ++i)
    if (ports_[i] == a) return static_cast<int>(i);
  return -1;
}

namespace {

Eigen::VectorXd as_vector(std::span<const double> v, std::size_t expected) {
  if (v.size() != expected) throw UsageError("port conductance vector has wrong length");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0) || !std::isfinite(v[i])) throw RangeError("port conductance must be finite and >= 0");
    out[static_cast<Eigen::Index>(i)] = v[i];
  }
  return out;
}

}  // namespace

TileOperator TileResponse::op(std::span<const double> port_g) const {
  const Eigen::VectorXd g = as_vector(port_g, ports_.size());
  TileOperator out;
  if (g.size() == 0) {
    out.bitline = ou_;
    out.source = qu_;
    return out;
  }
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(g.size(), g.size()) + z_ * g.asDiagonal();
  const Eigen::MatrixXd m = a.partialPivLu().solve(h_);  // port voltage per unit source
  const Eigen::MatrixXd dm = g.asDiagonal() * m;         // port current per unit source
  out.bitline = ou_ + oi_ * dm;
  out.source = qu_ + qi_ * dm;
  return out;
}

TileResponse::Output TileResponse::read(const Eigen::VectorXd& u, std::span<const double> port_g) const {
  const Eigen::VectorXd g = as_vector(port_g, ports_.size());
  if (u.size() != config_.sources()) throw UsageError("source vector has wrong length");
  Output out;
  if (g.size() == 0) {
    out.bitline_current = ou_ * u;
    out.power_w = std::max(0.0, u.dot(qu_ * u));
    return out;
  }
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(g.size(), g.size()) + z_ * g.asDiagonal();
  const Eigen::VectorXd v = a.partialPivLu().solve(h_ * u);
  out.port_current = g.cwiseProduct(v);
  out.bitline_current = ou_ * u + oi_ * out.port_current;
  out.power_w = std::max(0.0, u.dot(qu_ * u + qi_ * out.port_current));
  return out;
}

TileResponse::PowerCurve TileResponse::power_curve(const Eigen::VectorXd& u, std::span<const double> port_g,
                                                   int port) const {
  Eigen::VectorXd g = as_vector(port_g, ports_.size());
  if (port < 0 || port >= g.size()) throw UsageError("port index out of range");
  if (u.size() != config_.sources()) throw UsageError("source vector has wrong length");
  g[port] = 0.0;
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(g.size(), g.size()) + z_ * g.asDiagonal();
  const auto lu = a.partialPivLu();
  const Eigen::VectorXd v0 = lu.solve(h_ * u);
  const Eigen::VectorXd w = lu.solve(z_.col(port));

  PowerCurve c;
  c.v_th = v0[port];
  c.r_th = w[port];
  c.open_power = u.dot(qu_ * u + qi_ * g.cwiseProduct(v0));
  Eigen::VectorXd di = -g.cwiseProduct(w);
  di[port] += 1.0;
  c.slope = u.dot(qi_ * di);
  return c;
}

// ---------------------------------------------------------------------------

MappingParams MappingParams::from(const DeviceSpec& spec, double w_max, double x_max) {
  if (!(w_max > 0.0) || !(x_max > 0.0)) throw RangeError("w_max and x_max must be positive");
  MappingParams m;
  m.w_max = w_max;
  m.x_max = x_max;
  m.g_lo = spec.g_hrs;
  m.g_hi = spec.g_lrs;
  return m;
}

std::pair<double, double> MappingParams::pair_targets(double w) const {
  if (!(std::abs(w) <= w_max * (1.0 + 1e-12))) {
    throw RangeError("weight " + std::to_string(w) + " exceeds w_max " + std::to_string(w_max));
  }
  w = std::clamp(w, -w_max, w_max);
  const double half = w * delta_g() / (2.0 * w_max);
  // |w| == w_max lands on the window edge, where rounding can step outside it.
  return {std::clamp(g_mid() + half, g_lo, g_hi), std::clamp(g_mid() - half, g_lo, g_hi)};
}

VmmResult vmm_read(const TileOperator& op, const CrossbarConfig& config, std::span<const double> x,
                   const MappingParams& mapping, std::vector<Eigen::VectorXd>* planes) {
  if (static_cast<int>(x.size()) != config.rows) {
    throw UsageError("vmm_read: expected " + std::to_string(config.rows) + " inputs, got " + std::to_string(x.size()));
  }
  if (config.cols % 2 != 0) throw UsageError("vmm_read needs an even number of columns");
  const int bits = config.dac_bits;
  const auto levels = static_cast<double>((std::uint64_t{1} << bits) - 1);

  std::vector<std::uint64_t> q(x.size());
  std::vector<int> sign(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) > mapping.x_max) {
      throw RangeError("vmm_read: input " + std::to_string(x[i]) + " exceeds x_max " + std::to_string(mapping.x_max));
    }
    q[i] = static_cast<std::uint64_t>(std::llround(std::abs(x[i]) / mapping.x_max * levels));
    sign[i] = x[i] < 0.0 ? -1 : 1;
  }

  VmmResult out;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(config.cols);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(config.sources());
  for (int phase : {1, -1}) {
    for (int k = 0; k < bits; ++k) {
      bool any = false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const bool on = sign[i] == phase && ((q[i] >> k) & 1U);
        u[static_cast<Eigen::Index>(i)] = on ? config.v_read : 0.0;
        any = any || on;
      }
      if (!any) continue;
      const auto r = op.read(u);
      acc += (phase * std::ldexp(1.0, k)) * r.bitline_current;
      if (planes) planes->push_back(r.bitline_current);
      out.events.push_back({config.v_read, config.t_read, r.power_w * config.t_read});
    }
  }

  const int n_out = config.cols / 2;
  const double scale = mapping.x_max / levels / config.v_read / (mapping.delta_g() / mapping.w_max);
  out.values.resize(n_out);
  for (int p = 0; p < n_out; ++p) {
    double v = (acc[2 * p] - acc[2 * p + 1]) * scale;
    if (static_cast<int>(mapping.gains.size()) > p) v *= mapping.gains[p];
    out.values[p] = v;
  }
  return out;
}

VmmResult vmm_read(const CrossbarTile& tile, std::span<const double> x, const MappingParams& mapping) {
  return vmm_read(TileResponse(tile).op({}), tile.config(), x, mapping);
}

std::vector<CellAddr> place_weights(CrossbarTile& tile, const Eigen::MatrixXd& w, const MappingParams& mapping,
                                    int row0, int col0) {
  if (row0 < 0 || col0 < 0 || row0 + w.cols() > tile.rows() || col0 + 2 * w.rows() > tile.cols()) {
    throw UsageError("weight block does not fit in the tile");
  }
  std::vector<CellAddr> cells;
  for (Eigen::Index i = 0; i < w.cols(); ++i) {
    for (Eigen::Index p = 0; p < w.rows(); ++p) {
      const auto [gp, gm] = mapping.pair_targets(w(p, i));
      const CellAddr plus{row0 + static_cast<int>(i), col0 + 2 * static_cast<int>(p)};
      const CellAddr minus{plus.row, plus.col + 1};
      for (auto [a, g] : {std::pair{plus, gp}, std::pair{minus, gm}}) {
        auto& d = tile.at(a);
        d.g_target = g;
        d.g_actual = g;
        d.cls = DeviceClass::Weight;
        cells.push_back(a);
      }
    }
  }
  return cells;
}

std::vector<double> twin_gains(const TileOperator& twin, const CrossbarConfig& config, const Eigen::MatrixXd& w,
                               const MappingParams& mapping, int row0, int col0) {
  std::vector<double> gains(static_cast<std::size_t>(config.cols / 2), 1.0);
  const double per_weight = mapping.delta_g() / mapping.w_max;
  for (Eigen::Index p = 0; p < w.rows(); ++p) {
    const int c = col0 + 2 * static_cast<int>(p);
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index i = 0; i < w.cols(); ++i) {
      const int r = row0 + static_cast<int>(i);
      const double s = (twin.bitline(c, r) - twin.bitline(c + 1, r)) / per_weight;
      num += w(p, i) * s;
      den += s * s;
    }
    if (den > 0.0 && num != 0.0) gains[static_cast<std::size_t>(c / 2)] = num / den;
  }
  return gains;
}

WeightArray::WeightArray(const Eigen::MatrixXd& w, const CrossbarConfig& config, const DeviceSpec& spec, double w_max,
                         double x_max, Rng& rng)
    : weights_(w), config_(config), mapping_(MappingParams::from(spec, w_max, x_max)) {
  config_.validate();
  if (config_.cols < 2) throw UsageError("weight tiles need at least two columns");
  const int per_in = config_.rows;
  const int per_out = config_.cols / 2;
  const DeviceState pad = make_device(spec, spec.g_hrs, DeviceClass::Unused);

  for (int in0 = 0; in0 < w.cols(); in0 += per_in) {
    for (int out0 = 0; out0 < w.rows(); out0 += per_out) {
      Block b{in0, out0, std::min<int>(per_in, static_cast<int>(w.cols()) - in0),
              std::min<int>(per_out, static_cast<int>(w.rows()) - out0)};
      CrossbarTile tile(config_, pad);
      const Eigen::MatrixXd sub = w.block(b.out0, b.in0, b.n_out, b.n_in);
      const auto cells = place_weights(tile, sub, mapping_);
      const Eigen::MatrixXd twin_g = tile.conductances();
      for (const auto& a : cells) {
        tile.at(a) = program_weight(spec, tile.at(a), tile.at(a).g_target, rng).state;
      }
      CrossbarTile twin = tile;
      for (int r = 0; r < config_.rows; ++r)
        for (int c = 0; c < config_.cols; ++c) twin.at(r, c).g_actual = twin_g(r, c);
      gains_.push_back(twin_gains(TileResponse(twin).op({}), config_, sub, mapping_));
      ops_.push_back(TileResponse(tile).op({}));
      tiles_.push_back(std::move(tile));
      blocks_.push_back(b);
    }
  }
}

VmmResult WeightArray::read(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != inputs()) throw UsageError("WeightArray::read: input length mismatch");
  VmmResult out;
  out.values.assign(static_cast<std::size_t>(outputs()), 0.0);
  std::vector<double> slice(static_cast<std::size_t>(config_.rows));
  for (std::size_t t = 0; t < blocks_.size(); ++t) {
    const auto& b = blocks_[t];
    std::fill(slice.begin(), slice.end(), 0.0);
    for (int i = 0; i < b.n_in; ++i) slice[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(b.in0 + i)];
    MappingParams m = mapping_;
    m.gains = gains_[t];
    auto part = vmm_read(ops_[t], config_, slice, m);
    for (int p = 0; p < b.n_out; ++p) out.values[static_cast<std::size_t>(b.out0 + p)] += part.values[static_cast<std::size_t>(p)];
    out.events.insert(out.events.end(), part.events.begin(), part.events.end());
  }
  return out;
}

}  // namespace sdex

#include "sdex/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdex/errors.hpp"

namespace sdex {

std::vector<PairAddr> pairs_on_row(int row, int count, int col0) {
  std::vector<PairAddr> out;
  for (int p = 0; p < count; ++p) out.push_back({row, col0 + 2 * p, col0 + 2 * p + 1});
  return out;
}

void populate_background(CrossbarTile& tile, const DeviceSpec& spec, Rng& rng) {
  for (int r = 0; r < tile.rows(); ++r) {
    for (int c = 0; c < tile.cols(); ++c) {
      auto& d = tile.at(r, c);
      if (d.cls == DeviceClass::Unused) {
        double eps = 0.0;
        do {
          eps = standard_normal(rng);
        } while (std::abs(eps) > 4.0);
        d.g_target = spec.g_lrs;
        d.g_actual = std::max(spec.g_lrs * (1.0 + spec.lrs_variability * eps), kConductanceFloor);
      }
      const Fault f = draw_fault(spec, rng);
      if (f != Fault::None) d = apply_fault(spec, d, f);
    }
  }
}

// ---------------------------------------------------------------------------

GaussianSource::GaussianSource(CrossbarTile tile, std::vector<PairAddr> pairs, Params params, std::uint64_t seed,
                               std::vector<CellAddr> extra_ports)
    : tile_(std::move(tile)), pairs_(std::move(pairs)), params_(params), rng_(seed) {
  if (pairs_.empty()) throw UsageError("gaussian source needs at least one pair");
  if (!(params_.g_target > 0.0)) throw RangeError("gaussian source target conductance must be positive");
  if (!(params_.variability >= 0.0 && params_.variability < 1.0)) throw RangeError("variability must lie in [0, 1)");
  params_.pulses.validate();

  const auto& cfg = tile_.config();
  read_drive_ = Eigen::VectorXd::Zero(cfg.sources());
  std::vector<int> used_cols(static_cast<std::size_t>(cfg.cols), 0);
  for (const auto& p : pairs_) {
    if (p.col_plus == p.col_minus) throw UsageError("pair columns must differ");
    for (int c : {p.col_plus, p.col_minus}) {
      if (c < 0 || c >= cfg.cols || p.row < 0 || p.row >= cfg.rows) throw UsageError("pair outside tile");
      if (used_cols[static_cast<std::size_t>(c)]++) throw UsageError("pairs must occupy distinct bit lines");
      auto& d = tile_.at(p.row, c);
      d.cls = DeviceClass::RandomSource;
      d.g_target = params_.g_target;
      if (!d.faulted()) d.g_actual = params_.g_target;
      ports_.push_back({p.row, c});
    }
    read_drive_[p.row] = cfg.v_read;
  }
  for (const auto& a : extra_ports) {
    if (std::find(ports_.begin(), ports_.end(), a) != ports_.end()) throw UsageError("extra port overlaps a pair");
    ports_.push_back(a);
  }
  for (const auto& a : ports_) port_g_.push_back(tile_.at(a).g_actual);
  response_ = std::make_shared<const TileResponse>(tile_, ports_);
}

const Calibration& GaussianSource::calibration() const {
  if (!calibration_) throw UsageError("gaussian source is not calibrated");
  return *calibration_;
}

void GaussianSource::reprogram_pairs() {
  for (std::size_t k = 0; k < 2 * pairs_.size(); ++k) {
    const CellAddr a = ports_[k];
    auto& dev = tile_.at(a);
    const DeviceState next = cycle_resample(dev, params_.variability, rng_);
    charge_program(ledger_, *response_, port_g_, static_cast<int>(k), params_.g_reset, next.g_actual,
                   params_.pulses);
    dev = next;
    port_g_[k] = next.g_actual;
  }
  op_cache_.reset();
}

void GaussianSource::draw_raw(std::span<double> out) {
  if (out.size() != pairs_.size()) throw UsageError("draw buffer has wrong length");
  reprogram_pairs();
  const auto r = response_->read(read_drive_, port_g_);
  const auto& cfg = tile_.config();
  const ReadEvent ev{cfg.v_read, cfg.t_read, r.power_w * cfg.t_read};
  charge_vmm_read(ledger_, std::span<const ReadEvent>(&ev, 1));
  ledger_.gaussian_draws += 1;
  last_bitlines_ = r.bitline_current;
  for (std::size_t p = 0; p < pairs_.size(); ++p) {
    out[p] = r.bitline_current[pairs_[p].col_plus] - r.bitline_current[pairs_[p].col_minus];
  }
}

void GaussianSource::draw(std::span<double> z, std::span<double> raw) {
  const auto& cal = calibration();
  draw_raw(raw);
  for (std::size_t p = 0; p < pairs_.size(); ++p) z[p] = (raw[p] - cal.mu[p]) / cal.sigma[p];
}

void GaussianSource::draw(std::span<double> z) {
  std::vector<double> raw(pairs_.size());
  draw(z, raw);
}

void GaussianSource::calibrate() {
  if (params_.calib_n < 100) throw UsageError("calibration needs calib_n >= 100");
  const std::size_t d = pairs_.size();
  const int n = params_.calib_n;
  std::vector<double> sum(d, 0.0);
  std::vector<double> sq(d, 0.0);
  std::vector<double> raw(d);
  std::vector<std::vector<double>> all(d, std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i) {
    draw_raw(raw);
    for (std::size_t p = 0; p < d; ++p) all[p][static_cast<std::size_t>(i)] = raw[p];
  }
  Calibration cal;
  for (std::size_t p = 0; p < d; ++p) {
    double mean = 0.0;
    for (double v : all[p]) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : all[p]) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1));
    if (!(sd >= 1e-15)) {
      throw CalibrationError("pair " + std::to_string(p) + " has degenerate spread (" + std::to_string(sd) + " A)");
    }
    cal.mu.push_back(mean);
    cal.sigma.push_back(sd);
  }
  calibration_ = std::move(cal);
}

Eigen::MatrixXd GaussianSource::sample_unit_normal(int n, Eigen::MatrixXd& raw) {
  if (n < 0) throw UsageError("sample count must be >= 0");
  const auto d = static_cast<Eigen::Index>(pairs_.size());
  Eigen::MatrixXd z(n, d);
  raw.resize(n, d);
  std::vector<double> zr(pairs_.size());
  std::vector<double> rr(pairs_.size());
  for (int i = 0; i < n; ++i) {
    draw(zr, rr);
    for (Eigen::Index p = 0; p < d; ++p) {
      z(i, p) = zr[static_cast<std::size_t>(p)];
      raw(i, p) = rr[static_cast<std::size_t>(p)];
    }
  }
  return z;
}

Eigen::MatrixXd GaussianSource::sample_unit_normal(int n) {
  Eigen::MatrixXd raw;
  return sample_unit_normal(n, raw);
}

void GaussianSource::set_device(CellAddr cell, const DeviceState& state, bool charge) {
  const auto it = std::find(ports_.begin(), ports_.end(), cell);
  if (it == ports_.end()) throw UsageError("set_device: cell is not a port of this source");
  const auto k = static_cast<std::size_t>(it - ports_.begin());
  if (k < 2 * pairs_.size()) throw UsageError("set_device: random-source cells are reprogrammed by draws");
  if (charge) {
    charge_program(ledger_, *response_, port_g_, static_cast<int>(k), port_g_[k], state.g_actual, params_.pulses);
  }
  tile_.at(cell) = state;
  port_g_[k] = state.g_actual;
  op_cache_.reset();
}

const TileOperator& GaussianSource::current_operator() {
  if (!op_cache_) op_cache_ = response_->op(port_g_);
  return *op_cache_;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd cholesky(const Eigen::MatrixXd& sigma) {
  const Eigen::Index d = sigma.rows();
  if (d == 0 || sigma.cols() != d) throw UsageError("cholesky needs a non-empty square matrix");
  const double scale = std::max(sigma.cwiseAbs().maxCoeff(), 1e-300);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (std::abs(sigma(i, j) - sigma(j, i)) > 1e-10 * scale) {
        throw DecompositionError("covariance is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")",
                                 static_cast<int>(i));
      }

  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    double diag = sigma(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) {
      throw DecompositionError("covariance is not positive definite: pivot " + std::to_string(j) + " = " +
                                   std::to_string(diag),
                               static_cast<int>(j));
    }
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double s = sigma(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

CovarianceShaper::CovarianceShaper(const Eigen::MatrixXd& sigma, const CrossbarConfig& config, const DeviceSpec& spec,
                                   std::uint64_t seed, double z_max)
    : sigma_(sigma), chol_(cholesky(sigma)) {
  Rng rng(seed);
  const double w_max = chol_.cwiseAbs().maxCoeff();
  array_.emplace(chol_, config, spec, w_max, z_max, rng);
}

std::vector<double> CovarianceShaper::apply(std::span<const double> z, EnergyLedger* ledger) const {
  auto r = array_->read(z);
  if (ledger) charge_vmm_read(*ledger, r.events);
  return r.values;
}

Eigen::MatrixXd sample_correlated(const CovarianceShaper& shaper, GaussianSource& source, int n) {
  if (shaper.dim() != source.dim()) throw UsageError("shaper and source dimensions differ");
  const auto d = static_cast<Eigen::Index>(source.dim());
  Eigen::MatrixXd out(n, d);
  std::vector<double> z(static_cast<std::size_t>(d));
  for (int i = 0; i < n; ++i) {
    source.draw(z);
    const auto y = shaper.apply(z, &source.ledger());
    for (Eigen::Index p = 0; p < d; ++p) out(i, p) = y[static_cast<std::size_t>(p)];
  }
  return out;
}

}  // namespace sdex

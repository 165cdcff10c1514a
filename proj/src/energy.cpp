#include "sdex/energy.hpp"

#include "sdex/errors.hpp"

namespace sdex {

void PulseModel::validate() const {
  if (!(write_v > 0.0) || !(write_t >= 0.0) || !(verify_v > 0.0) || !(verify_t >= 0.0) || writes_per_program < 1) {
    throw RangeError("pulse model parameters must be positive");
  }
}

EnergyLedger& EnergyLedger::merge(const EnergyLedger& other) {
  programs += other.programs;
  write_pulses += other.write_pulses;
  verify_reads += other.verify_reads;
  vmm_reads += other.vmm_reads;
  gaussian_draws += other.gaussian_draws;
  write_energy_j += other.write_energy_j;
  verify_energy_j += other.verify_energy_j;
  read_energy_j += other.read_energy_j;
  return *this;
}

Eigen::VectorXd verify_drive(const CrossbarConfig& config, CellAddr cell, double verify_v) {
  if (cell.row < 0 || cell.row >= config.rows || cell.col < 0 || cell.col >= config.cols) {
    throw UsageError("verify target outside tile");
  }
  Eigen::VectorXd u = Eigen::VectorXd::Zero(config.sources());
  u[cell.row] = 0.5 * verify_v;
  u[config.rows + cell.col] = -0.5 * verify_v;
  return u;
}

void charge_program(EnergyLedger& ledger, const TileResponse& response, std::span<const double> port_g, int port,
                    double g_start, double g_end, const PulseModel& model) {
  const int n = model.writes_per_program;
  const auto cell = response.ports().at(static_cast<std::size_t>(port));
  const auto curve = response.power_curve(verify_drive(response.config(), cell, model.verify_v), port_g, port);

  double write_j = 0.0;
  double verify_j = 0.0;
  const double step = (g_end - g_start) / n;
  const double v2t = model.write_v * model.write_v * model.write_t;
  for (int k = 0; k < n; ++k) {
    write_j += v2t * (g_start + step * k);
    verify_j += curve.at(g_start + step * (k + 1)) * model.verify_t;
  }
  ledger.programs += 1;
  ledger.write_pulses += static_cast<std::uint64_t>(n);
  ledger.verify_reads += static_cast<std::uint64_t>(n);
  ledger.write_energy_j += write_j;
  ledger.verify_energy_j += verify_j;
}

void charge_program(EnergyLedger& ledger, const CrossbarTile& tile, CellAddr cell, double g_start, double g_end,
                    const PulseModel& model) {
  const TileResponse response(tile, {cell});
  const double g = tile.at(cell).g_actual;
  charge_program(ledger, response, std::span<const double>(&g, 1), 0, g_start, g_end, model);
}

void charge_vmm_read(EnergyLedger& ledger, std::span<const ReadEvent> events) {
  for (const auto& e : events) {
    ledger.vmm_reads += 1;
    ledger.read_energy_j += e.energy_j;
  }
}

EnergySummary report(const EnergyLedger& ledger) {
  EnergySummary s;
  s.programs = ledger.programs;
  s.write_pulses = ledger.write_pulses;
  s.verify_reads = ledger.verify_reads;
  s.vmm_reads = ledger.vmm_reads;
  s.gaussian_draws = ledger.gaussian_draws;
  s.write_energy_j = ledger.write_energy_j;
  s.verify_energy_j = ledger.verify_energy_j;
  s.read_energy_j = ledger.read_energy_j;
  s.total_j = ledger.total_j();
  if (ledger.programs > 0) {
    s.per_program_j = (ledger.write_energy_j + ledger.verify_energy_j) / static_cast<double>(ledger.programs);
  }
  if (ledger.gaussian_draws > 0) s.per_draw_j = s.total_j / static_cast<double>(ledger.gaussian_draws);
  return s;
}

}  // namespace sdex

#pragma once

#include <cstdint>
#include <span>

#include "sdex/circuit.hpp"

namespace sdex {

// Write-and-verify programming model: each program is a train of write
// pulses with a verify read after every pulse.
struct PulseModel {
  double write_v = 1.0;
  double write_t = 200e-9;
  int writes_per_program = 100;
  double verify_v = 0.2;
  double verify_t = 1e-3;

  void validate() const;
};

struct EnergyLedger {
  std::uint64_t programs = 0;
  std::uint64_t write_pulses = 0;
  std::uint64_t verify_reads = 0;
  std::uint64_t vmm_reads = 0;
  std::uint64_t gaussian_draws = 0;
  double write_energy_j = 0.0;
  double verify_energy_j = 0.0;
  double read_energy_j = 0.0;

  double total_j() const { return write_energy_j + verify_energy_j + read_energy_j; }
  EnergyLedger& merge(const EnergyLedger& other);
  friend bool operator==(const EnergyLedger&, const EnergyLedger&) = default;
};

// Half-select verify bias for one cell: +verify_v/2 on its word line,
// -verify_v/2 on its bit line, every other line at 0 V.
Eigen::VectorXd verify_drive(const CrossbarConfig& config, CellAddr cell, double verify_v);

// Charges one program of `port` moving from g_start to g_end. Conductance
// is interpolated linearly over the pulse train; verify energy is solved on
// the tile with every other port at port_g.
void charge_program(EnergyLedger& ledger, const TileResponse& response, std::span<const double> port_g, int port,
                    double g_start, double g_end, const PulseModel& model);

// Convenience form that builds the response for a single cell.
void charge_program(EnergyLedger& ledger, const CrossbarTile& tile, CellAddr cell, double g_start, double g_end,
                    const PulseModel& model);

void charge_vmm_read(EnergyLedger& ledger, std::span<const ReadEvent> events);

struct EnergySummary {
  std::uint64_t programs = 0;
  std::uint64_t write_pulses = 0;
  std::uint64_t verify_reads = 0;
  std::uint64_t vmm_reads = 0;
  std::uint64_t gaussian_draws = 0;
  double write_energy_j = 0.0;
  double verify_energy_j = 0.0;
  double read_energy_j = 0.0;
  double total_j = 0.0;
  double per_program_j = 0.0;  // (write + verify) / programs
  double per_draw_j = 0.0;     // total / gaussian draws
};

EnergySummary report(const EnergyLedger& ledger);

}  // namespace sdex

#include <cmath>
#include <random>

#include "doctest.h"
#include "sdex/energy.hpp"
#include "sdex/gauss.hpp"
#include "sdex/sde.hpp"
#include "support/dense_mna.hpp"

using namespace sdex;

namespace {

CrossbarConfig ideal(int rows, int cols) {
  CrossbarConfig c;
  c.rows = rows;
  c.cols = cols;
  c.r_line = c.r_in = c.r_out = 0.0;
  return c;
}

}  // namespace

TEST_CASE("write energy is V^2 g t per pulse") {
  const CrossbarTile tile(ideal(1, 1), make_device(DeviceSpec{}, 5e-5, DeviceClass::Weight));
  PulseModel m;
  m.verify_t = 0.0;
  EnergyLedger l;
  charge_program(l, tile, {0, 0}, 5e-5, 5e-5, m);
  CHECK(l.write_energy_j == doctest::Approx(100 * 1.0 * 5e-5 * 200e-9));
  CHECK(l.write_energy_j == doctest::Approx(1e-9));
  CHECK(l.verify_energy_j == 0.0);
  CHECK(l.write_pulses == 100);
  CHECK(l.verify_reads == 100);
  CHECK(l.programs == 1);
}

TEST_CASE("zero-length pulses cost nothing") {
  const CrossbarTile tile(ideal(2, 2), make_device(DeviceSpec{}, 5e-5, DeviceClass::Weight));
  PulseModel m;
  m.write_t = 0.0;
  m.verify_t = 0.0;
  EnergyLedger l;
  charge_program(l, tile, {1, 1}, 1e-4, 1e-5, m);
  CHECK(l.total_j() == 0.0);
}

TEST_CASE("pulse train interpolates conductance linearly") {
  // One ideal device: verify sees the full verify_v across it.
  const CrossbarTile tile(ideal(1, 1), make_device(DeviceSpec{}, 1e-4, DeviceClass::Weight));
  const PulseModel m;
  EnergyLedger l;
  const double g0 = 1e-4, g1 = 1e-5;
  charge_program(l, tile, {0, 0}, g0, g1, m);
  double w = 0.0, v = 0.0;
  const double step = (g1 - g0) / 100.0;
  for (int k = 0; k < 100; ++k) {
    w += m.write_v * m.write_v * (g0 + step * k) * m.write_t;
    v += m.verify_v * m.verify_v * (g0 + step * (k + 1)) * m.verify_t;
  }
  CHECK(l.write_energy_j == doctest::Approx(w).epsilon(1e-12));
  CHECK(l.verify_energy_j == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("half-select verify dissipation matches the dense oracle") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> ug(1e-5, 1e-4);
  CrossbarConfig cfg;  // default parasitics
  CrossbarTile tile(cfg, make_device(DeviceSpec{}, 1e-4, DeviceClass::Unused));
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) tile.at(r, c).g_actual = ug(rng);
  const CellAddr cell{3, 6};
  const double g = tile.at(cell).g_actual;
  PulseModel m;
  m.write_t = 0.0;
  EnergyLedger l;
  charge_program(l, tile, cell, g, g, m);

  std::vector<double> wl(8, 0.0), bl(8, 0.0);
  wl[3] = 0.5 * m.verify_v;
  bl[6] = -0.5 * m.verify_v;
  const auto ref = oracle::solve_crossbar(tile.conductances(), cfg.r_line, cfg.r_in, cfg.r_out, wl, bl);
  CHECK(l.verify_energy_j == doctest::Approx(100 * ref.power * m.verify_t).epsilon(1e-9));
}

TEST_CASE("one random-source program in the solver layout costs about 0.8 uJ") {
  const CrossbarConfig cfg;
  const DeviceSpec spec;
  CrossbarTile tile(cfg, make_device(spec, spec.g_lrs, DeviceClass::Unused));
  const auto layout = SolverLayout::make(cfg, 1);
  const CellAddr cell{layout.noise_pairs[0].row, layout.noise_pairs[0].col_plus};
  tile.at(cell) = make_device(spec, spec.g_hrs, DeviceClass::RandomSource);
  EnergyLedger l;
  charge_program(l, tile, cell, spec.g_lrs, spec.g_hrs, PulseModel{});
  const double per_program = report(l).per_program_j;
  CHECK(per_program > 0.4e-6);
  CHECK(per_program < 1.6e-6);
}

TEST_CASE("vmm reads are charged per bit plane") {
  const auto cfg = ideal(1, 2);
  CrossbarTile tile(cfg, make_device(DeviceSpec{}, 1e-4, DeviceClass::Weight));
  const auto mapping = MappingParams::from(DeviceSpec{}, 1.0, 1.0);
  EnergyLedger l;
  charge_vmm_read(l, vmm_read(tile, std::vector<double>{0.0}, mapping).events);
  CHECK(l.read_energy_j == 0.0);
  CHECK(l.vmm_reads == 0);

  // x = x_max sets every bit; each plane drives 0.2 V across two 1e-4 S devices.
  charge_vmm_read(l, vmm_read(tile, std::vector<double>{1.0}, mapping).events);
  CHECK(l.vmm_reads == 16);
  CHECK(l.read_energy_j == doctest::Approx(16 * 0.04 * 2e-4 * cfg.t_read));
}

TEST_CASE("ledger merge is associative and commutative") {
  EnergyLedger a, b, c;
  a.programs = 1;
  a.write_energy_j = 0.5;
  b.vmm_reads = 3;
  b.read_energy_j = 0.25;
  c.verify_reads = 7;
  c.verify_energy_j = 0.125;
  EnergyLedger ab_c = a;
  ab_c.merge(b).merge(c);
  EnergyLedger bc = b;
  bc.merge(c);
  EnergyLedger a_bc = a;
  a_bc.merge(bc);
  EnergyLedger cba = c;
  cba.merge(b).merge(a);
  CHECK(ab_c == a_bc);
  CHECK(ab_c == cba);
  CHECK(ab_c.total_j() == 0.875);
}

TEST_CASE("report") {
  const auto empty = report(EnergyLedger{});
  CHECK(empty.total_j == 0.0);
  CHECK(empty.per_program_j == 0.0);
  CHECK(empty.per_draw_j == 0.0);

  const CrossbarTile tile(ideal(1, 1), make_device(DeviceSpec{}, 5e-5, DeviceClass::Weight));
  EnergyLedger one, five;
  charge_program(one, tile, {0, 0}, 1e-4, 1e-5, PulseModel{});
  for (int i = 0; i < 5; ++i) charge_program(five, tile, {0, 0}, 1e-4, 1e-5, PulseModel{});
  CHECK(five.total_j() == doctest::Approx(5 * one.total_j()));
  CHECK(report(five).per_program_j == doctest::Approx(report(one).per_program_j));
  CHECK(five.write_pulses == 500);
}

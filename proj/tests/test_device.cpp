#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "sdex/device.hpp"
#include "sdex/errors.hpp"

using namespace sdex;

namespace {

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
};

Summary summarize(const std::vector<double>& v) {
  Summary s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.sd += (x - s.mean) * (x - s.mean);
  s.sd = std::sqrt(s.sd / static_cast<double>(v.size() - 1));
  return s;
}

}  // namespace

TEST_CASE("spec validation") {
  DeviceSpec s;
  CHECK_NOTHROW(s.validate());
  s.g_hrs = 2e-4;
  CHECK_THROWS_AS(s.validate(), RangeError);
  s = {};
  s.write_perturbation = 1.2;
  CHECK_THROWS_AS(s.validate(), RangeError);
  s = {};
  s.stuck_on_rate = 0.6;
  s.stuck_off_rate = 0.5;
  CHECK_THROWS_AS(s.validate(), RangeError);
}

TEST_CASE("variability follows the nearer resistance state") {
  const DeviceSpec s;
  CHECK(s.variability_for(1e-5) == 0.25);
  CHECK(s.variability_for(2e-5) == 0.25);
  CHECK(s.variability_for(1e-4) == 0.10);
  CHECK(s.variability_for(5e-5) == 0.10);
}

TEST_CASE("program_weight spread matches the write perturbation") {
  const DeviceSpec spec;
  Rng rng(4);
  const auto dev = make_device(spec, 1e-5, DeviceClass::Weight);
  const double g = 5e-5;
  const int n = 20000;
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(program_weight(spec, dev, g, rng).state.g_actual);
  const auto s = summarize(out);
  CHECK(std::abs(s.mean - g) < 3.0 * g * spec.write_perturbation / std::sqrt(n));
  CHECK(s.sd == doctest::Approx(g * spec.write_perturbation).epsilon(0.03));
}

TEST_CASE("program_weight edge cases") {
  DeviceSpec spec;
  Rng rng(1);
  const auto dev = make_device(spec, 1e-5, DeviceClass::Weight);
  CHECK_THROWS_AS(program_weight(spec, dev, 2e-4, rng), RangeError);
  CHECK_THROWS_AS(program_weight(spec, dev, 5e-6, rng), RangeError);

  const auto stuck = apply_fault(spec, dev, Fault::StuckOff);
  const auto r = program_weight(spec, stuck, 1e-4, rng);
  CHECK(r.skipped_fault);
  CHECK(r.state.g_actual == spec.g_hrs);

  spec.write_perturbation = 0.0;
  CHECK(program_weight(spec, dev, 3e-5, rng).state.g_actual == 3e-5);
}

TEST_CASE("cycle_resample draws a truncated normal around the target") {
  const DeviceSpec spec;
  Rng rng(9);
  const double g = 1e-5;
  const double v = 0.25;
  const auto dev = make_device(spec, g, DeviceClass::RandomSource);
  const int n = 40000;
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const auto d = cycle_resample(dev, v, rng);
    CHECK(std::abs(d.g_actual - g) <= 4.0 * v * g * (1.0 + 1e-12));
    out.push_back(d.g_actual);
  }
  const auto s = summarize(out);
  CHECK(std::abs(s.mean - g) < 3.0 * v * g / std::sqrt(n));
  // Truncation at 4 sigma shrinks the spread by under 0.1%.
  CHECK(s.sd == doctest::Approx(v * g).epsilon(0.02));
}

TEST_CASE("cycle_resample contract") {
  const DeviceSpec spec;
  Rng rng(2);
  CHECK_THROWS_AS(cycle_resample(make_device(spec, 1e-5, DeviceClass::Weight), 0.2, rng), UsageError);
  const auto dev = make_device(spec, 1e-5, DeviceClass::RandomSource);
  CHECK(cycle_resample(dev, 0.0, rng).g_actual == 1e-5);
  const auto on = apply_fault(spec, dev, Fault::StuckOn);
  CHECK(cycle_resample(on, 0.25, rng).g_actual == spec.g_lrs);
  // Never below the physical floor even with a huge spread.
  for (int i = 0; i < 1000; ++i) CHECK(cycle_resample(dev, 0.99, rng).g_actual >= kConductanceFloor);
}

TEST_CASE("fault rates") {
  DeviceSpec spec;
  Rng rng(3);
  for (int i = 0; i < 100; ++i) CHECK(draw_fault(spec, rng) == Fault::None);
  spec.stuck_on_rate = 0.1;
  spec.stuck_off_rate = 0.2;
  int on = 0, off = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto f = draw_fault(spec, rng);
    on += f == Fault::StuckOn;
    off += f == Fault::StuckOff;
  }
  CHECK(on / double(n) == doctest::Approx(0.1).epsilon(0.1));
  CHECK(off / double(n) == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("derived seeds are distinct across streams and indices") {
  std::set<std::uint64_t> seen;
  for (auto s : {Stream::Tile, Stream::Calibration, Stream::Trajectory, Stream::Reference, Stream::Weights})
    for (std::uint64_t i = 0; i < 100; ++i) seen.insert(derive_seed(7, s, i));
  CHECK(seen.size() == 500);
  CHECK(derive_seed(7, Stream::Tile) == derive_seed(7, Stream::Tile));
  CHECK(derive_seed(7, Stream::Tile) != derive_seed(8, Stream::Tile));
}

#include "sdex/device.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdex/errors.hpp"

namespace sdex {

namespace {

void check_fraction(double v, const char* name) {
  if (!(v >= 0.0 && v < 1.0)) {
    throw RangeError(std::string("device.") + name + " must lie in [0, 1), got " + std::to_string(v));
  }
}

}  // namespace

void DeviceSpec::validate() const {
  if (!(g_hrs > 0.0) || !(g_lrs > 0.0)) throw RangeError("device conductances must be positive");
  if (!(g_hrs < g_lrs)) throw RangeError("device.g_hrs must be below device.g_lrs");
  check_fraction(write_perturbation, "write_perturbation");
  check_fraction(lrs_variability, "lrs_variability");
  check_fraction(hrs_variability, "hrs_variability");
  check_fraction(stuck_on_rate, "stuck_on_rate");
  check_fraction(stuck_off_rate, "stuck_off_rate");
  if (stuck_on_rate + stuck_off_rate >= 1.0) throw RangeError("combined fault rate must be below 1");
}

double DeviceSpec::variability_for(double g_target) const {
  // Nearest state wins; geometric midpoint between the two levels.
  return g_target >= std::sqrt(g_lrs * g_hrs) ? lrs_variability : hrs_variability;
}

DeviceState make_device(const DeviceSpec& spec, double g, DeviceClass cls) {
  (void)spec;
  if (!(g > 0.0)) throw RangeError("device conductance must be positive");
  return DeviceState{g, g, cls, Fault::None};
}

DeviceState apply_fault(const DeviceSpec& spec, DeviceState state, Fault fault) {
  state.fault = fault;
  if (fault == Fault::StuckOn) state.g_actual = spec.g_lrs;
  if (fault == Fault::StuckOff) state.g_actual = spec.g_hrs;
  return state;
}

Fault draw_fault(const DeviceSpec& spec, Rng& rng) {
  if (spec.stuck_on_rate == 0.0 && spec.stuck_off_rate == 0.0) return Fault::None;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double p = u(rng);
  if (p < spec.stuck_on_rate) return Fault::StuckOn;
  if (p < spec.stuck_on_rate + spec.stuck_off_rate) return Fault::StuckOff;
  return Fault::None;
}

ProgramResult program_weight(const DeviceSpec& spec, const DeviceState& state, double g_target, Rng& rng) {
  if (!(g_target >= spec.g_hrs && g_target <= spec.g_lrs)) {
    throw RangeError("program_weight: target " + std::to_string(g_target) + " S outside [g_hrs, g_lrs]");
  }
  if (state.faulted()) return {state, true};

  const double p = spec.write_perturbation;
  double g = g_target;
  if (p > 0.0) g = g_target * (1.0 + p * standard_normal(rng));
  const double lo = spec.g_hrs * (1.0 - 3.0 * p);
  const double hi = spec.g_lrs * (1.0 + 3.0 * p);

  DeviceState out = state;
  out.g_target = g_target;
  out.g_actual = std::clamp(g, lo, hi);
  return {out, false};
}

DeviceState cycle_resample(const DeviceState& state, double variability, Rng& rng) {
  if (state.cls != DeviceClass::RandomSource) {
    throw UsageError("cycle_resample called on a device that is not a random source");
  }
  if (state.faulted()) return state;
  if (!(variability >= 0.0 && variability < 1.0)) throw RangeError("variability must lie in [0, 1)");

  DeviceState out = state;
  if (variability == 0.0) {
    out.g_actual = state.g_target;
    return out;
  }
  double eps = 0.0;
  do {
    eps = standard_normal(rng);
  } while (std::abs(eps) > 4.0);
  out.g_actual = std::max(state.g_target * (1.0 + variability * eps), kConductanceFloor);
  return out;
}

}  // namespace sdex

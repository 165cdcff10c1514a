#pragma once

#include "sdex/random.hpp"

namespace sdex {

// Conductances in siemens throughout.
struct DeviceSpec {
  double g_lrs = 1e-4;              // 10 kOhm
  double g_hrs = 1e-5;              // 100 kOhm
  double write_perturbation = 0.05; // relative std of a weight write
  double lrs_variability = 0.10;    // cycle-to-cycle spread when cycled into LRS
  double hrs_variability = 0.25;    // cycle-to-cycle spread when cycled into HRS
  double stuck_on_rate = 0.0;
  double stuck_off_rate = 0.0;

  void validate() const;
  // Spread applied by cycle_resample for a device programmed near `g_target`.
  double variability_for(double g_target) const;
};

enum class DeviceClass { Weight, RandomSource, Unused };
enum class Fault { None, StuckOn, StuckOff };

inline constexpr double kConductanceFloor = 1e-7;

struct DeviceState {
  double g_target = 0.0;
  double g_actual = 0.0;
  DeviceClass cls = DeviceClass::Unused;
  Fault fault = Fault::None;

  bool faulted() const { return fault != Fault::None; }
};

DeviceState make_device(const DeviceSpec& spec, double g, DeviceClass cls);

// Pins the device to the fault's conductance.
DeviceState apply_fault(const DeviceSpec& spec, DeviceState state, Fault fault);

// Draws a fault from the DeviceSpec stuck-on/stuck-off rates.
Fault draw_fault(const DeviceSpec& spec, Rng& rng);

struct ProgramResult {
  DeviceState state;
  bool skipped_fault = false;
};

// Linear programming with multiplicative gaussian write error, clamped to
// [g_hrs(1-3p), g_lrs(1+3p)]. Throws RangeError when the target lies outside
// [g_hrs, g_lrs]. A faulted device is returned unchanged with skipped_fault set.
ProgramResult program_weight(const DeviceSpec& spec, const DeviceState& state, double g_target, Rng& rng);

// Fresh cycle-to-cycle draw around g_target: Normal(g_target, v*g_target),
// truncated at +-4 sigma by rejection and floored at kConductanceFloor.
// Only valid for RandomSource devices; faulted devices are returned unchanged.
DeviceState cycle_resample(const DeviceState& state, double variability, Rng& rng);

}  // namespace sdex

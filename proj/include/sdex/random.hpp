#pragma once

#include <cstdint>
#include <random>

namespace sdex {

using Rng = std::mt19937_64;

// splitmix64 finalizer; mixes a (seed, stream) pair into an independent seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named sub-streams so that changing one consumer never shifts another.
enum class Stream : std::uint64_t {
  Tile = 1,
  Calibration = 2,
  Trajectory = 3,
  Reference = 4,
  Weights = 5,
  Order = 6,
};

inline std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return mix_seed(mix_seed(master, static_cast<std::uint64_t>(stream)), index);
}

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace sdex

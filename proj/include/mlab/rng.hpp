#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mlab {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x);

/// Counter-based seed derivation: the result depends only on the master seed
/// and the ordered key path, never on call order or thread schedule.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Stream identifiers used when splitting a master seed.
enum class Stream : std::uint64_t {
  Demand = 1,
  Payoffs = 2,
  Premia = 3,
  States = 4,
  Emm = 5,
  Resample = 6,
};

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t instance = 0) {
  return Rng(derive_seed(master, {static_cast<std::uint64_t>(stream), instance}));
}

}  // namespace mlab

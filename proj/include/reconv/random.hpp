#pragma once

#include <cstdint>
#include <random>

namespace reconv {

// Independent generator streams derived from a user seed. `stream` keeps
// e.g. initialisation and shuffling draws apart for the same seed.
enum class Stream : std::uint32_t {
  init = 1,
  shuffle = 2,
  synthetic = 3,
  gradcheck = 4,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace reconv

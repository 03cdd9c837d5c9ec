#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace synrec {

// All stochastic stages derive their generator from one user seed plus a
// stage label, so adding a stage never shifts the streams of the others.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  for (char c : label) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
    h *= 1099511628211ull;
  }
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  return h;
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view label) {
  return std::mt19937_64(derive_seed(seed, label));
}

}  // namespace synrec

#pragma once

#include <cstdint>
#include <random>

namespace vtc::detail {

// Independent stream for path p of a run seeded with `seed`.
inline std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t p) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(p >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace vtc::detail

#ifndef IVMBL_RNG_HPP_
#define IVMBL_RNG_HPP_

#include <cstdint>
#include <random>

namespace ivmbl {

using Rng = std::mt19937_64;

/// Independent child stream for (seed, index). Tags separate streams that
/// share a seed and index but serve different purposes.
inline Rng child_stream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag = 0) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(index), hi(index), lo(tag), hi(tag)};
  return Rng(seq);
}

}  // namespace ivmbl

#endif  // IVMBL_RNG_HPP_

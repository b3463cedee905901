#pragma once

#include <cstdint>
#include <random>

namespace franson_lab {

using RandomEngine = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream (block, trial, restart) of a master seed.
/// The result depends only on (master, stream), so work can be split across
/// any number of workers without changing the draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t domain = 0) {
  return splitmix64(splitmix64(master ^ splitmix64(domain)) + stream);
}

inline RandomEngine make_engine(std::uint64_t master, std::uint64_t stream,
                                std::uint64_t domain = 0) {
  std::uint64_t a = derive_seed(master, stream, domain);
  std::uint64_t b = derive_seed(master, stream, domain + 0x51ed27ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return RandomEngine(seq);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(RandomEngine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace franson_lab

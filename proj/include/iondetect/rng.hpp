#pragma once

#include <cstdint>
#include <random>

namespace iondetect {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for (seed, domain, index). Streams never depend on
/// how work is scheduled, only on these three numbers.
inline Rng derive_stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t index = 0) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ splitmix64(domain + 0x632be59bd9b4e019ULL));
  s = splitmix64(s ^ splitmix64(index + 0x8cb92ba72f3d8dd7ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
  return Rng(seq);
}

// Stream domains, one per independent random process.
namespace stream {
inline constexpr std::uint64_t hidden_chain = 1;
inline constexpr std::uint64_t sequence_photons = 2;
inline constexpr std::uint64_t zeeman_readout = 3;
inline constexpr std::uint64_t rsb_sampling = 4;
inline constexpr std::uint64_t nmr_sampling = 5;
inline constexpr std::uint64_t ensemble_trial = 6;
}  // namespace stream

}  // namespace iondetect

#ifndef ARPO_RNG_HPP_
#define ARPO_RNG_HPP_

#include <cstdint>
#include <random>

namespace arpo {

// SplitMix64 finalizer. Used to derive independent stream seeds so that
// restart/step/prompt sub-streams never alias.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

// Uniform in [0,1) from the top 53 bits; avoids the implementation-defined
// std::uniform_real_distribution so streams are stable across toolchains.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace arpo

#endif  // ARPO_RNG_HPP_

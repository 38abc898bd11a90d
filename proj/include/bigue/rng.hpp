#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bigue {

using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Named substreams. Every random quantity in the project is drawn from a
// generator derived from (seed, stream, index...), never from a global one.
enum class Stream : std::uint64_t {
  chain = 1,
  draw = 2,
  analysis = 3,
  instance = 4,
  removal = 5,
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = detail::splitmix64(seed);
  for (std::uint64_t p : path) h = detail::splitmix64(h ^ detail::splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0, std::uint64_t sub = 0) {
  return Rng(derive_seed(seed, {static_cast<std::uint64_t>(stream), index, sub}));
}

// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return x;
}

}  // namespace bigue

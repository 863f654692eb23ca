#pragma once

#include <cstdint>
#include <initializer_list>

namespace envdebias {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream seed for a (root seed, purpose, indices...) tuple.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = mix64(root);
  for (std::uint64_t p : parts) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

// Purpose tags for derive_seed.
enum SeedTag : std::uint64_t {
  kSeedInit = 1,
  kSeedShuffle = 2,
  kSeedNegatives = 3,
  kSeedSplit = 4,
  kSeedDropout = 5,
  kSeedGraph = 6,
  kSeedDirections = 7,
  kSeedBias = 8,
};

}  // namespace envdebias

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aigx {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the named substream `name` under `master`, optionally indexed by a
/// counter (e.g. a chunk number). Consumers with different names never share
/// state, so adding one does not perturb the others.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view name,
                                    std::uint64_t counter = 0) {
  return mix64(mix64(master ^ hash_name(name)) + mix64(counter + 1));
}

inline Rng make_stream(std::uint64_t master, std::string_view name,
                       std::uint64_t counter = 0) {
  return Rng{derive_seed(master, name, counter)};
}

}  // namespace aigx

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace repconf::detail {

// 64-bit FNV-1a. Used for content digests in manifests and for deriving
// per-pair generator sub-seeds.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(seed ^ mix64(a)) ^ b);
}

std::string hex64(std::uint64_t h);

// Digest of a whole file; throws std::runtime_error if unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace repconf::detail

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace studentsim {

/// 64-bit FNV-1a; stable across platforms, used for prompt and template fingerprints.
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Maps a hash to [0, 1).
[[nodiscard]] constexpr double unit_from_hash(std::uint64_t h) {
  return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
}

[[nodiscard]] std::string hex64(std::uint64_t v);

}  // namespace studentsim

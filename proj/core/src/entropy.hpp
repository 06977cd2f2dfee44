#pragma once

#include <cmath>
#include <map>

namespace studentsim::detail {

/// Base-2 Shannon entropy of an empirical count table. Empty tables have zero entropy.
template <typename Key>
double entropy_bits(const std::map<Key, std::size_t>& counts) {
  std::size_t total = 0;
  for (const auto& [_, n] : counts) total += n;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [_, n] : counts) {
    if (n == 0) continue;
    const double p = static_cast<double>(n) / static_cast<double>(total);
    h -= p * std::log2(p);
  }
  return h;
}

}  // namespace studentsim::detail

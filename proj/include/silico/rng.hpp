#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "silico/sha256.hpp"

namespace silico {

// SplitMix64. Used everywhere randomness is needed so that runs are
// reproducible bit-for-bit across platforms (std:: distributions are
// implementation-defined and would not be).
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). Rejection-free modulo is fine at these scales.
  size_t next_index(size_t n) { return size_t(next_u64() % uint64_t(n)); }

  // Standard normal via Box-Muller.
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  uint64_t state_;
};

// Stable seed splitting: every stage and every stochastic site derives its
// stream from the run's root seed plus a fixed label.
inline uint64_t derive_seed(uint64_t root, std::string_view label) {
  std::string key = std::to_string(root);
  key.push_back(':');
  key.append(label);
  return sha256_prefix64(key);
}

// Partial Fisher-Yates: k distinct indices drawn uniformly from [0, n).
inline std::vector<size_t> sample_without_replacement(size_t n, size_t k, Rng& rng) {
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + rng.next_index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace silico

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "alearn/errors.hpp"

namespace alearn {

// splitmix64 finalizer: a cheap bijective scramble of a 64-bit value.
inline std::uint64_t mix_seed(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from a root seed and a textual tag.
// Uses a splitmix64 mix over the root xored with a FNV-1a hash of the tag,
// so every named concern (data, init, shuffle, ...) gets its own stream and
// the mapping is identical on every platform.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view tag) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return mix_seed(root ^ h);
}

// Deterministic random stream. The engine is std::mt19937_64 (its output
// sequence is pinned by the standard); every distribution on top of it is
// implemented here rather than taken from <random>, because the standard
// library distributions are not bit-reproducible across implementations.
// The seed is scrambled before it reaches the engine: mt19937_64 warms up
// slowly from small seeds, and neighboring raw seeds (0, 1, 2, ...) would
// otherwise yield visibly correlated first draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(mix_seed(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 bits of resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double next_uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // Uniform integer in [0, bound). Rejection sampling keeps it exactly
  // uniform; bound == 0 is a caller bug.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw PreconditionError("next_below: bound must be positive");
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  // Standard normal via the Marsaglia polar method; the spare deviate is
  // cached so consecutive calls consume a predictable amount of the stream.
  double next_normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    if (values.empty()) return;
    for (std::size_t i = values.size() - 1; i > 0; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i + 1));
      std::swap(values[i], values[j]);
    }
  }

  // k distinct indices drawn uniformly from [0, n), in draw order
  // (partial Fisher-Yates over an index table).
  std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw PreconditionError("sample_indices: k exceeds n");
    std::vector<std::size_t> table(n);
    for (std::size_t i = 0; i < n; ++i) table[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(next_below(n - i));
      std::swap(table[i], table[j]);
      out.push_back(table[i]);
    }
    return out;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace alearn

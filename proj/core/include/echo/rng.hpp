// Copyright 2026 The ECHO Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace echo {

// Deterministic random stream. Every source of randomness in the project is a
// named fork of one root seed, so components can be varied independently and
// training state can be resumed exactly. Distributions are implemented here
// rather than via std::*_distribution, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Child stream derived from this stream's seed and a label. Independent of
  // how much the parent has been consumed.
  Rng fork(std::string_view name) const;

  uint64_t seed() const { return seed_; }

  uint64_t next_u64();
  double uniform();                    // [0, 1)
  double uniform(double lo, double hi);
  uint64_t uniform_int(uint64_t n);    // [0, n), unbiased
  double normal();                     // standard normal, Box-Muller
  double truncated_normal(double stddev);  // resampled to |z| <= 2 sigma

  // k distinct values from [0, n), in draw order.
  std::vector<size_t> sample_without_replacement(size_t n, size_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Exact textual state round trip, used for resumable checkpoints.
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
};

// FNV-1a 64-bit, the project-wide content hash for cache keys and checksums.
uint64_t fnv1a64(const void* data, size_t len, uint64_t basis = 0xcbf29ce484222325ULL);
uint64_t fnv1a64(std::string_view s);
std::string to_hex(uint64_t v);

}  // namespace echo

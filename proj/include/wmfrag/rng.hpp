// Copyright 2026 The wmfrag Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef WMFRAG_RNG_HPP
#define WMFRAG_RNG_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace wmfrag {

/// SplitMix64 output finalizer:
///   z ^= z >> 30; z *= 0xbf58476d1ce4e5b9;
///   z ^= z >> 27; z *= 0x94d049bb133111eb;
///   z ^= z >> 31;
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Per-trial seed: splitmix64_mix(master_seed XOR trial_id).
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trial_id) noexcept {
  return splitmix64_mix(master_seed ^ trial_id);
}

/// Seeded randomness source. Gaussian draws come from libstdc++'s
/// normal_distribution, so bit-exact streams are only promised within one
/// standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent child stream keyed by `stream`.
  static Rng stream(std::uint64_t seed, std::uint64_t stream) {
    return Rng(splitmix64_mix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1)));
  }

  double gaussian() { return normal_(engine_); }

  Eigen::VectorXd gaussian_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal_(engine_);
    return v;
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  bool coin() { return (engine_() >> 63) != 0; }

  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace wmfrag

#endif  // WMFRAG_RNG_HPP

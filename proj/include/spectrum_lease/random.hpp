/*
 * Copyright 2026 The spectrum-lease Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SPECTRUM_LEASE_RANDOM_HPP
#define SPECTRUM_LEASE_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace spectrum_lease {

/// Stream purposes. Distinct tags keep the session, SGD and validation
/// sample paths independent under the same root seed.
enum class StreamTag : std::uint64_t {
  session = 1,
  sgd = 2,
  theta_estimate = 3,
  fading = 4,
  validation = 5,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Derives the seed of stream (tag, index) from a root seed. The mapping is a
/// pure function of its arguments, so a given session sees the same numbers
/// whichever worker evaluates it.
constexpr std::uint64_t derive_seed(std::uint64_t root, StreamTag tag, std::uint64_t index) noexcept {
  std::uint64_t h = detail::splitmix64(root);
  h = detail::splitmix64(h ^ static_cast<std::uint64_t>(tag));
  return detail::splitmix64(h ^ detail::splitmix64(index));
}

/// A reproducible random stream. Distribution transforms are written out
/// explicitly so the sample paths do not depend on the standard library's
/// distribution implementations.
class RandomStream {
 public:
  using engine_type = std::mt19937_64;

  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  RandomStream(std::uint64_t root, StreamTag tag, std::uint64_t index)
      : engine_(derive_seed(root, tag, index)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_low() { return 1.0 - uniform(); }

  /// Uniform on (0, 1), the midpoint of a 2^-53 cell; safe for quantiles
  /// with unbounded support.
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  /// Exp(1), i.e. the power gain of a unit-mean Rayleigh channel.
  double exponential() { return -std::log(uniform_open_low()); }

  std::uint64_t bits() { return engine_(); }

 private:
  engine_type engine_;
};

}  // namespace spectrum_lease

#endif  // SPECTRUM_LEASE_RANDOM_HPP

// Copyright 2026 The zoomcascade Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string_view>

namespace zoomcascade {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Folds a tuple of integers into a single stream key.
constexpr std::uint64_t derive_key(std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t k = 0x2545f4914f6cdd1dULL;
  for (auto p : parts) k = mix64(k ^ mix64(p));
  return k;
}

/**
 * Counter-based random stream.
 *
 * The n-th output is a pure function of (key, n), so streams keyed by
 * (seed, scene, tile, tier) produce the same values regardless of the order
 * in which tiles are visited or which thread visits them. Satisfies
 * UniformRandomBitGenerator so it plugs into <random> distributions.
 */
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Stream(std::uint64_t key) noexcept : key_(key) {}

  constexpr result_type operator()() noexcept {
    return mix64(key_ ^ mix64(counter_++));
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace zoomcascade

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace placebo {

/// SplitMix64 finalizer. Used to derive independent seeds from structured keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a sequence of 64-bit words into one seed: h = mix64(h ^ w) per word.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (auto w : words) h = mix64(h ^ w);
  return h;
}

/// FNV-1a over bytes; a portable stand-in for std::hash when keying seeds by text.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  return h;
}

/// Deterministic random stream for one solver run.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The conversions below are written out explicitly because the
/// std distributions are implementation-defined, and paired-seed
/// experiments must reproduce across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// One fair bit (top bit of the next word).
  bool next_bit() { return (engine_() >> 63) != 0; }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = bound * (UINT64_MAX / bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace placebo

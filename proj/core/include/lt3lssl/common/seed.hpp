#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lt3lssl {

// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from an ordered tuple of integers, so
// per-sample randomness depends only on (global seed, epoch, sample id, ...)
// and never on visitation order.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::initializer_list<std::uint64_t> parts) {
  return Rng(derive_seed(parts));
}

// Stream tags keep unrelated consumers of the same seed apart.
enum class Stream : std::uint64_t {
  kSubsample = 1,
  kPairing = 2,
  kEvalFill = 3,
  kOracleFill = 4,
  kAugment = 5,
  kShuffle = 6,
  kInit = 7,
  kBalancedSampler = 8,
  kSynthetic = 9,
  kNegatives = 10,
};

constexpr std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace lt3lssl

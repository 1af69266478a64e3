#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace synsem {

using Rng = std::mt19937_64;

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view s,
                              std::uint64_t h = 1469598103934665603ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// splitmix64 finalizer, used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream keyed by (global seed, label).
constexpr std::uint64_t derive_seed(std::uint64_t global, std::string_view label) noexcept {
  return mix_seed(global ^ fnv1a(label));
}

/// Seed for a per-sentence task: global ⊕ hash(story, sentence index).
std::uint64_t sentence_seed(std::uint64_t global, std::string_view story, int sent_index);

}  // namespace synsem

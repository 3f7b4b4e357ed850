#include "ptychoforge/random.hpp"

namespace ptychoforge {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RandomSeed derive_stream(RandomSeed parent, std::string_view label, std::uint64_t index) {
  std::uint64_t h = splitmix64(parent.stream_index ^ 0x5bd1e995ULL);
  h = splitmix64(h ^ fnv1a(label));
  h = splitmix64(h ^ index);
  return RandomSeed{parent.seed, h};
}

Rng make_rng(RandomSeed seed) {
  const std::uint64_t a = splitmix64(seed.seed);
  const std::uint64_t b = splitmix64(a ^ seed.stream_index);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace ptychoforge

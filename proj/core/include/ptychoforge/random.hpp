#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <string_view>

namespace ptychoforge {

/// Identifies one reproducible random stream. Child streams are derived,
/// never shared across threads.
struct RandomSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  auto operator<=>(const RandomSeed&) const = default;
};

using Rng = std::mt19937_64;

/// Deterministic child stream keyed by (label, index).
RandomSeed derive_stream(RandomSeed parent, std::string_view label, std::uint64_t index);

Rng make_rng(RandomSeed seed);

}  // namespace ptychoforge

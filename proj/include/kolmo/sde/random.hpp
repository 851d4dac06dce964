#pragma once

#include <cstdint>
#include <random>

namespace kolmo::sde {

// Purposes of independent random substreams derived from one user seed.
enum class StreamTag : std::uint64_t {
  kIncrements = 1,
  kInitialPoints = 2,
  kNetworkInit = 3,
  kProbes = 4,
  kReference = 5,
  kPilot = 6,
};

/// Stream key combining a purpose with a counter such as the training step.
constexpr std::uint64_t stream_key(StreamTag tag, std::uint64_t counter = 0) {
  return (static_cast<std::uint64_t>(tag) << 48) ^ counter;
}

/// Engine for substream (seed, stream, index). Distinct keys give independent
/// streams; the same key always gives the same stream.
std::mt19937_64 substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

}  // namespace kolmo::sde

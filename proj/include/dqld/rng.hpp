#pragma once

#include <cstdint>
#include <random>

namespace dqld {

using Rng = std::mt19937_64;

// Every module draws from its own stream so that it can be exercised in
// isolation with the same numbers it sees inside a full run.
enum class Stream : std::uint64_t {
    Topology = 1,
    Mobility = 2,
    Traffic = 3,
    Channel = 4,
    Mac = 5,
    Agent = 6,
    Clustering = 7,
};

// Substream for (run seed, stream, index). index separates e.g. gNBs.
Rng make_stream(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

} // namespace dqld

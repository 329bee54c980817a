#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace uniedge {

using Rng = std::mt19937_64;

// Independent pseudo-random stream derived from (seed, stream name, index).
// All randomness in the library flows through named streams so that each
// consumer (init, batching, sampling, ...) is reproducible on its own.
Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

}  // namespace uniedge

#pragma once

#include "sdlr/types.hpp"

#include <cstdint>
#include <random>

namespace sdlr {

using Rng = std::mt19937_64;

/// Deterministic 64-bit seed for the stream (master, experiment, index).
/// Streams for distinct triples are independent for all practical purposes,
/// so trials can be executed in any order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t experiment,
                          std::uint64_t index);

inline Rng make_stream(std::uint64_t master, std::uint64_t experiment,
                       std::uint64_t index) {
    return Rng{derive_seed(master, experiment, index)};
}

Vector gaussian_vector(Index n, Rng& rng);
Matrix gaussian_matrix(Index rows, Index cols, Rng& rng);

}  // namespace sdlr

#include "sdlr/random.hpp"

#include <array>

namespace sdlr {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t experiment,
                          std::uint64_t index) {
    auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x); };
    auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
    std::seed_seq seq{lo(master), hi(master), lo(experiment), hi(experiment),
                      lo(index),  hi(index)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

Vector gaussian_vector(Index n, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
}

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix a(rows, cols);
    // Row-by-row fill so that the i-th row depends only on the stream prefix.
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) a(i, j) = normal(rng);
    return a;
}

}  // namespace sdlr

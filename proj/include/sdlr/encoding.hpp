#pragma once

#include "sdlr/types.hpp"

#include <cstdint>

namespace sdlr {

struct RecoveryProblem;
struct RecoverySolution;
struct SolverParams;

/// L_enc x m Bernoulli (±1) matrix B used to compress D^{-r} q.
struct EncoderMatrix {
    Index out_dim = 0;
    Index in_dim = 0;
    std::uint64_t seed = 0;
    Matrix data;
    double norm_estimate = 0.0;  // power-iteration estimate of ‖B‖₂→₂
    bool norm_check_passed = false;

    /// √L_enc + 2√m
    double norm_bound() const;
};

EncoderMatrix draw_encoder(Index out_dim, Index in_dim, std::uint64_t seed);

struct EncodedMeasurements {
    Vector payload;                 // B D^{-r} q
    std::int64_t rate_bits = 0;     // ⌈L r log₂(α m)⌉
    std::int64_t rate_bits_ln = 0;  // ⌈L r ln m⌉
    double alphabet_max = 0.0;      // α
    int order = 0;
};

/// ⌈L r log₂(α m)⌉, floored at one bit.
std::int64_t rate_bits_log2(Index out_dim, int order, double alphabet_max, Index m);
/// ⌈L r ln m⌉, floored at one bit.
std::int64_t rate_bits_ln(Index out_dim, int order, Index m);

EncodedMeasurements encode(const Vector& q, int order, const EncoderMatrix& encoder,
                           double alphabet_max);

/// Constrained nuclear-norm recovery from the encoded constraint
/// ‖B D^{-r}(M(Z) + ν − q)‖₂ ≤ 3 m γ(r).
RecoverySolution recover_encoded(const RecoveryProblem& problem, const SolverParams& params);

}  // namespace sdlr

#pragma once

#include "sdlr/types.hpp"

#include <cstdint>
#include <vector>

namespace sdlr {

/// Largest noise-shaping order supported; binomial coefficients stay exact.
inline constexpr int kMaxOrder = 8;

/// 2L-level mid-rise alphabet {±(j − 1/2)β : j = 1..L}, stored increasing.
struct Alphabet {
    int num_levels_half = 1;
    double step = 1.0;
    std::vector<double> values;

    /// Largest level, (L − 1/2)β.
    double max_value() const { return values.back(); }
};

Alphabet build_alphabet(int num_levels_half, double step);

/// Nearest alphabet level to z. Exact midpoints go to the larger level;
/// inputs beyond the range saturate at the extreme levels.
double scalar_quantize(double z, const Alphabet& alphabet);

/// Half-size L = 2⌈μ/β⌉ + 2^r + 1 for which the greedy rule keeps every
/// state within β/2 when ‖y‖∞ ≤ μ.
int required_levels(double input_bound, double step, int order);

/// Exact C(n, k) for small arguments.
std::int64_t binomial(int n, int k);

enum class StabilityModel { exact_half_step, parametric };

struct SigmaDeltaScheme {
    int order = 1;
    Alphabet alphabet;
    double stability_constant = 0.5;
    StabilityModel stability_model = StabilityModel::exact_half_step;

    /// Greedy scheme with γ(r) = β/2.
    static SigmaDeltaScheme greedy(int order, Alphabet alphabet);
    /// Greedy scheme carrying the growth model γ(r) = C^r r^r β.
    static SigmaDeltaScheme parametric(int order, Alphabet alphabet, double growth);
};

struct QuantizationRun {
    Vector input;   // y
    Vector output;  // q, entries in the alphabet
    Vector state;   // u
    bool overflow = false;

    double max_state() const { return state.size() ? state.cwiseAbs().maxCoeff() : 0.0; }
};

/// r-th order greedy Sigma-Delta recursion with zero initial state:
///   v_i = y_i + Σ_{j=1}^{min(r,i−1)} (−1)^{j+1} C(r,j) u_{i−j},
///   q_i = Q(v_i),  u_i = v_i − q_i,
/// so that y − q = D^r u. Never aborts; overflow records any |u_i| > γ(r).
QuantizationRun quantize(const Vector& y, const SigmaDeltaScheme& scheme);

/// ‖y − q − D^r u‖∞ computed by explicit r-fold backward differencing.
double state_residual(const QuantizationRun& run, int order);

}  // namespace sdlr

#include "sdlr/encoding.hpp"

#include "sdlr/noise_shaping.hpp"
#include "sdlr/random.hpp"
#include "sdlr/recovery.hpp"

#include <cmath>
#include <stdexcept>

namespace sdlr {

double EncoderMatrix::norm_bound() const {
    return std::sqrt(static_cast<double>(out_dim)) + 2.0 * std::sqrt(static_cast<double>(in_dim));
}

namespace {

double power_iteration_norm(const Matrix& b, int iterations) {
    Vector x = Vector::Ones(b.cols()) / std::sqrt(static_cast<double>(b.cols()));
    // A constant start can be orthogonal to the top singular vector; perturb
    // it deterministically.
    for (Index i = 0; i < x.size(); ++i) x[i] += 1e-3 * std::sin(static_cast<double>(i + 1));
    x.normalize();
    double sigma = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector y = b.transpose() * (b * x);
        const double n = y.norm();
        if (n == 0) return 0.0;
        const double next = std::sqrt(n);
        x = y / n;
        if (it > 10 && std::abs(next - sigma) <= 1e-13 * next) return next;
        sigma = next;
    }
    return sigma;
}

}  // namespace

EncoderMatrix draw_encoder(Index out_dim, Index in_dim, std::uint64_t seed) {
    if (out_dim < 1 || out_dim > in_dim)
        throw std::invalid_argument("draw_encoder: requires 1 <= L_enc <= m");
    EncoderMatrix e;
    e.out_dim = out_dim;
    e.in_dim = in_dim;
    e.seed = seed;
    e.data.resize(out_dim, in_dim);
    Rng rng(seed);
    std::bernoulli_distribution coin(0.5);
    for (Index i = 0; i < out_dim; ++i)
        for (Index j = 0; j < in_dim; ++j) e.data(i, j) = coin(rng) ? 1.0 : -1.0;
    e.norm_estimate = power_iteration_norm(e.data, 5000);
    e.norm_check_passed = e.norm_estimate <= e.norm_bound();
    return e;
}

std::int64_t rate_bits_log2(Index out_dim, int order, double alphabet_max, Index m) {
    const double bits = static_cast<double>(out_dim) * order *
                        std::log2(alphabet_max * static_cast<double>(m));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(bits)));
}

std::int64_t rate_bits_ln(Index out_dim, int order, Index m) {
    const double bits = static_cast<double>(out_dim) * order * std::log(static_cast<double>(m));
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(bits)));
}

EncodedMeasurements encode(const Vector& q, int order, const EncoderMatrix& encoder,
                           double alphabet_max) {
    if (q.size() != encoder.in_dim) throw std::invalid_argument("encode: dimension mismatch");
    if (!(alphabet_max > 0)) throw std::invalid_argument("encode: alphabet max must be positive");
    EncodedMeasurements out;
    out.payload = encoder.data * apply_inverse_power(q, DifferenceOperator{q.size(), order});
    out.order = order;
    out.alphabet_max = alphabet_max;
    out.rate_bits = rate_bits_log2(encoder.out_dim, order, alphabet_max, q.size());
    out.rate_bits_ln = rate_bits_ln(encoder.out_dim, order, q.size());
    return out;
}

RecoverySolution recover_encoded(const RecoveryProblem& problem, const SolverParams& params) {
    if (problem.constraint_form != ConstraintForm::encoded)
        throw std::invalid_argument("recover_encoded: problem must use the encoded constraint");
    return recover(problem, params);
}

}  // namespace sdlr

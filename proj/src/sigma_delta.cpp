#include "sdlr/sigma_delta.hpp"

#include "sdlr/noise_shaping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sdlr {

Alphabet build_alphabet(int num_levels_half, double step) {
    if (num_levels_half < 1)
        throw std::invalid_argument("build_alphabet: num_levels_half must be >= 1");
    if (!(step > 0) || !std::isfinite(step))
        throw std::invalid_argument("build_alphabet: step must be positive and finite");
    Alphabet a;
    a.num_levels_half = num_levels_half;
    a.step = step;
    a.values.reserve(2 * static_cast<std::size_t>(num_levels_half));
    for (int j = num_levels_half; j >= 1; --j) a.values.push_back(-(j - 0.5) * step);
    for (int j = 1; j <= num_levels_half; ++j) a.values.push_back((j - 0.5) * step);
    return a;
}

double scalar_quantize(double z, const Alphabet& alphabet) {
    if (!std::isfinite(z)) throw std::invalid_argument("scalar_quantize: non-finite input");
    const auto& v = alphabet.values;
    const long last = static_cast<long>(v.size()) - 1;
    // Level j sits at (j − L + 1/2)β, so round-half-up of z/β + L − 1/2 is
    // floor(z/β + L). Neighbours are re-checked with exact distances.
    const double t = std::floor(z / alphabet.step + alphabet.num_levels_half);
    long idx = static_cast<long>(std::clamp(t, 0.0, static_cast<double>(last)));
    auto better = [&](long cand) {
        const double dc = std::abs(v[cand] - z);
        const double di = std::abs(v[idx] - z);
        return dc < di || (dc == di && cand > idx);
    };
    if (idx > 0 && better(idx - 1)) idx = idx - 1;
    if (idx < last && better(idx + 1)) idx = idx + 1;
    return v[idx];
}

int required_levels(double input_bound, double step, int order) {
    if (!(input_bound >= 0) || !std::isfinite(input_bound))
        throw std::invalid_argument("required_levels: input bound must be finite and >= 0");
    if (!(step > 0)) throw std::invalid_argument("required_levels: step must be positive");
    if (order < 1 || order > kMaxOrder)
        throw std::invalid_argument("required_levels: order out of range");
    return 2 * static_cast<int>(std::ceil(input_bound / step)) + (1 << order) + 1;
}

std::int64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    k = std::min(k, n - k);
    std::int64_t c = 1;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c;
}

SigmaDeltaScheme SigmaDeltaScheme::greedy(int order, Alphabet alphabet) {
    if (order < 1 || order > kMaxOrder)
        throw std::invalid_argument("SigmaDeltaScheme: order must be in [1, " +
                                    std::to_string(kMaxOrder) + "]");
    SigmaDeltaScheme s;
    s.order = order;
    s.stability_constant = alphabet.step / 2;
    s.alphabet = std::move(alphabet);
    s.stability_model = StabilityModel::exact_half_step;
    return s;
}

SigmaDeltaScheme SigmaDeltaScheme::parametric(int order, Alphabet alphabet, double growth) {
    if (!(growth > 0)) throw std::invalid_argument("SigmaDeltaScheme: growth constant must be > 0");
    SigmaDeltaScheme s = greedy(order, std::move(alphabet));
    s.stability_constant = std::pow(growth * order, order) * s.alphabet.step;
    s.stability_model = StabilityModel::parametric;
    return s;
}

QuantizationRun quantize(const Vector& y, const SigmaDeltaScheme& scheme) {
    if (y.size() == 0) throw std::invalid_argument("quantize: empty input");
    if (!y.allFinite()) throw std::invalid_argument("quantize: non-finite input");
    const int r = scheme.order;
    if (r < 1 || r > kMaxOrder) throw std::invalid_argument("quantize: order out of range");

    // feedback[j] = (−1)^{j+1} C(r, j)
    std::vector<double> feedback(r + 1, 0.0);
    for (int j = 1; j <= r; ++j)
        feedback[j] = static_cast<double>((j % 2 ? 1 : -1) * binomial(r, j));

    const Index m = y.size();
    QuantizationRun run;
    run.input = y;
    run.output.resize(m);
    run.state.resize(m);
    for (Index i = 0; i < m; ++i) {
        double v = y[i];
        const Index depth = std::min<Index>(r, i);
        for (Index j = 1; j <= depth; ++j) v += feedback[j] * run.state[i - j];
        const double q = scalar_quantize(v, scheme.alphabet);
        run.output[i] = q;
        run.state[i] = v - q;
        if (std::abs(run.state[i]) > scheme.stability_constant) run.overflow = true;
    }
    return run;
}

double state_residual(const QuantizationRun& run, int order) {
    const Index m = run.input.size();
    if (run.output.size() != m || run.state.size() != m)
        throw std::invalid_argument("state_residual: dimension mismatch");
    if (m == 0) return 0.0;
    const Vector shaped = apply_difference(run.state, DifferenceOperator{m, order});
    return (run.input - run.output - shaped).cwiseAbs().maxCoeff();
}

}  // namespace sdlr

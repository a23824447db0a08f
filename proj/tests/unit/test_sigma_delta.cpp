#include "sdlr/random.hpp"
#include "sdlr/sigma_delta.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

using namespace sdlr;

namespace {

// Independent re-implementation of the recursion, used as an oracle.
void reference_recursion(const Vector& y, int r, const Alphabet& a, Vector& q, Vector& u) {
    const Index m = y.size();
    q.resize(m);
    u.resize(m);
    for (Index i = 0; i < m; ++i) {
        double v = y[i];
        for (int j = 1; j <= r && i - j >= 0; ++j) {
            double c = 1;
            for (int t = 0; t < j; ++t) c = c * (r - t) / (t + 1);
            v += ((j % 2) ? 1.0 : -1.0) * c * u[i - j];
        }
        double best = a.values.front();
        for (double lv : a.values)
            if (std::abs(lv - v) <= std::abs(best - v)) best = lv;
        q[i] = best;
        u[i] = v - best;
    }
}

Vector uniform_vector(Index m, double bound, Rng& rng) {
    std::uniform_real_distribution<double> d(-bound, bound);
    Vector y(m);
    for (auto& v : y) v = d(rng);
    return y;
}

}  // namespace

TEST(Alphabet, TwoLevelHalfStep) {
    const auto a = build_alphabet(2, 0.5);
    EXPECT_EQ(a.values, (std::vector<double>{-0.75, -0.25, 0.25, 0.75}));
    EXPECT_DOUBLE_EQ(a.max_value(), 0.75);
}

TEST(Alphabet, OneBit) {
    EXPECT_EQ(build_alphabet(1, 0.5).values, (std::vector<double>{-0.25, 0.25}));
    EXPECT_EQ(build_alphabet(1, 2.0).values, (std::vector<double>{-1.0, 1.0}));
}

TEST(Alphabet, InvariantsAcrossSizes) {
    for (int l = 1; l <= 12; ++l) {
        const auto a = build_alphabet(l, 0.3);
        ASSERT_EQ(a.values.size(), 2u * l);
        for (std::size_t i = 0; i + 1 < a.values.size(); ++i)
            EXPECT_NEAR(a.values[i + 1] - a.values[i], 0.3, 1e-12);
        for (std::size_t i = 0; i < a.values.size(); ++i)
            EXPECT_DOUBLE_EQ(a.values[i], -a.values[a.values.size() - 1 - i]);
        EXPECT_NEAR(a.max_value(), (l - 0.5) * 0.3, 1e-12);
    }
}

TEST(Alphabet, RejectsBadInput) {
    EXPECT_THROW(build_alphabet(0, 0.5), std::invalid_argument);
    EXPECT_THROW(build_alphabet(2, 0.0), std::invalid_argument);
    EXPECT_THROW(build_alphabet(2, -1.0), std::invalid_argument);
}

TEST(ScalarQuantize, NearestSaturatingAndTies) {
    const auto a2 = build_alphabet(2, 0.5);
    EXPECT_DOUBLE_EQ(scalar_quantize(0.3, a2), 0.25);
    EXPECT_DOUBLE_EQ(scalar_quantize(1.9, a2), 0.75);
    EXPECT_DOUBLE_EQ(scalar_quantize(-7.0, a2), -0.75);
    EXPECT_DOUBLE_EQ(scalar_quantize(0.5, a2), 0.75);
    EXPECT_DOUBLE_EQ(scalar_quantize(-0.5, a2), -0.25);
    EXPECT_DOUBLE_EQ(scalar_quantize(0.0, build_alphabet(1, 0.5)), 0.25);
    EXPECT_THROW(scalar_quantize(std::numeric_limits<double>::quiet_NaN(), a2), std::invalid_argument);
}

TEST(ScalarQuantize, NondecreasingInInput) {
    const auto a = build_alphabet(5, 0.5);
    double prev = -1e9;
    for (double z = -4; z <= 4; z += 0.001) {
        const double q = scalar_quantize(z, a);
        EXPECT_GE(q, prev);
        prev = q;
    }
}

TEST(RequiredLevels, Formula) {
    EXPECT_EQ(required_levels(1.0, 0.5, 2), 9);
    EXPECT_EQ(required_levels(0.0, 0.5, 1), 3);
    EXPECT_EQ(required_levels(0.9, 0.5, 3), 13);
    EXPECT_THROW(required_levels(-1.0, 0.5, 1), std::invalid_argument);
    EXPECT_THROW(required_levels(1.0, 0.0, 1), std::invalid_argument);
}

TEST(Binomial, SmallTable) {
    EXPECT_EQ(binomial(8, 4), 70);
    EXPECT_EQ(binomial(3, 0), 1);
    EXPECT_EQ(binomial(5, 6), 0);
}

TEST(Scheme, StabilityConstants) {
    const auto a = build_alphabet(3, 0.5);
    const auto g = SigmaDeltaScheme::greedy(2, a);
    EXPECT_DOUBLE_EQ(g.stability_constant, 0.25);
    EXPECT_EQ(g.stability_model, StabilityModel::exact_half_step);
    const auto p = SigmaDeltaScheme::parametric(3, a, 1.5);
    EXPECT_NEAR(p.stability_constant, std::pow(1.5, 3) * 27 * 0.5, 1e-12);
    EXPECT_THROW(SigmaDeltaScheme::greedy(0, a), std::invalid_argument);
    EXPECT_THROW(SigmaDeltaScheme::greedy(kMaxOrder + 1, a), std::invalid_argument);
}

TEST(Quantize, HandExecutedFirstOrder) {
    Vector y(2);
    y << 0.3, 0.3;
    const auto run = quantize(y, SigmaDeltaScheme::greedy(1, build_alphabet(1, 0.5)));
    EXPECT_DOUBLE_EQ(run.output[0], 0.25);
    EXPECT_DOUBLE_EQ(run.output[1], 0.25);
    EXPECT_NEAR(run.state[0], 0.05, 1e-15);
    EXPECT_NEAR(run.state[1], 0.10, 1e-15);
    EXPECT_FALSE(run.overflow);
    EXPECT_LE(state_residual(run, 1), 1e-15);
}

TEST(Quantize, ZeroStateFixedPoint) {
    Vector y(2);
    y << 0.25, 0.25;
    for (int r = 1; r <= 3; ++r) {
        const auto run = quantize(y, SigmaDeltaScheme::greedy(r, build_alphabet(1, 0.5)));
        EXPECT_EQ(run.output, y);
        EXPECT_TRUE(run.state.isZero(0.0));
    }
}

TEST(Quantize, RejectsEmptyAndNonFinite) {
    const auto s = SigmaDeltaScheme::greedy(1, build_alphabet(1, 0.5));
    EXPECT_THROW(quantize(Vector(), s), std::invalid_argument);
    Vector y = Vector::Zero(3);
    y[1] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(quantize(y, s), std::invalid_argument);
}

TEST(Quantize, MatchesReferenceRecursion) {
    Rng rng(11);
    for (int r = 1; r <= 4; ++r) {
        const auto a = build_alphabet(4, 0.5);
        for (int t = 0; t < 20; ++t) {
            const Vector y = uniform_vector(64, 1.5, rng);
            Vector q, u;
            reference_recursion(y, r, a, q, u);
            const auto run = quantize(y, SigmaDeltaScheme::greedy(r, a));
            EXPECT_EQ(run.output, q);
            EXPECT_LE((run.state - u).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Quantize, StabilityOverRandomDraws) {
    Rng rng(2024);
    for (int r = 1; r <= 3; ++r) {
        const auto scheme = SigmaDeltaScheme::greedy(r, build_alphabet(required_levels(0.9, 0.5, r), 0.5));
        for (int t = 0; t < 1000; ++t) {
            const Vector y = uniform_vector(100, 0.9, rng);
            const auto run = quantize(y, scheme);
            ASSERT_FALSE(run.overflow) << "r=" << r << " draw " << t;
            ASSERT_LE(run.max_state(), 0.25);
            ASSERT_LE(state_residual(run, r), 1e-9);
        }
    }
}

TEST(Quantize, MembershipAndDeterminism) {
    Rng rng(5);
    const auto a = build_alphabet(1, 0.5);
    const Vector y = uniform_vector(300, 2.0, rng);
    for (int r = 1; r <= 3; ++r) {
        const auto s = SigmaDeltaScheme::greedy(r, a);
        const auto run1 = quantize(y, s);
        const auto run2 = quantize(y, s);
        EXPECT_EQ(run1.output, run2.output);
        EXPECT_EQ(run1.state, run2.state);
        for (double v : run1.output)
            EXPECT_TRUE(std::find(a.values.begin(), a.values.end(), v) != a.values.end());
        EXPECT_LE(state_residual(run1, r), 1e-9 * std::max(1.0, y.cwiseAbs().maxCoeff()) * (1 << (3 * r)));
    }
}

TEST(Quantize, OneBitOverflowIsFlaggedNotFatal) {
    Vector y = Vector::Constant(50, 0.9);
    const auto run = quantize(y, SigmaDeltaScheme::greedy(2, build_alphabet(1, 0.5)));
    EXPECT_TRUE(run.overflow);
    EXPECT_EQ(run.output.size(), 50);
    EXPECT_LE(state_residual(run, 2), 1e-9 * std::max(1.0, run.max_state()));
}

TEST(StateResidual, DetectsCorruption) {
    Vector y(2);
    y << 0.3, 0.3;
    auto run = quantize(y, SigmaDeltaScheme::greedy(1, build_alphabet(1, 0.5)));
    EXPECT_LE(state_residual(run, 1), 1e-15);
    run.state[0] += 0.1;
    EXPECT_GE(state_residual(run, 1), 0.05);
    run.state.resize(1);
    EXPECT_THROW(state_residual(run, 1), std::invalid_argument);
}

#include "sdlr/container.hpp"
#include "sdlr/recovery.hpp"
#include "sdlr/sigma_delta.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sdlr;

namespace {

struct Instance {
    Matrix truth;
    RecoveryProblem problem;
};

// Quantizes M(X) for a fresh rank-k X and wraps it in a problem of the given form.
Instance make_instance(Index n, Index k, Index m, int r, ConstraintForm form, std::uint64_t seed, Index ell = 0) {
    Instance inst;
    Rng rng(seed);
    inst.truth = sample_low_rank(n, n, k, rng);
    auto op = std::make_shared<MeasurementOperator>(draw_operator(m, n, n, Distribution::gaussian, seed + 1));
    const Vector y = op->apply(inst.truth);
    const auto scheme =
        SigmaDeltaScheme::greedy(r, build_alphabet(required_levels(y.cwiseAbs().maxCoeff(), 0.5, r), 0.5));
    auto& p = inst.problem;
    p.op = op;
    p.quantized = quantize(y, scheme).output;
    p.order = r;
    p.gamma = scheme.stability_constant;
    p.constraint_form = form;
    if (form == ConstraintForm::projected)
        p.basis = std::make_shared<NoiseShapingBasis>(compute_basis(m, r, ell ? ell : m / 2));
    return inst;
}

}  // namespace

TEST(NuclearNorm, Examples) {
    EXPECT_DOUBLE_EQ(nuclear_norm(Matrix::Zero(3, 4)), 0.0);
    EXPECT_NEAR(nuclear_norm(Matrix::Identity(4, 4)), 4.0, 1e-12);
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 3, -2, 0.5;
    EXPECT_NEAR(nuclear_norm(d), 5.5, 1e-12);
}

TEST(BestRankKError, Examples) {
    Matrix d = Matrix::Zero(3, 3);
    d.diagonal() << 3, 2, 1;
    EXPECT_NEAR(best_rank_k_error(d, 0), 6.0, 1e-12);
    EXPECT_NEAR(best_rank_k_error(d, 1), 3.0, 1e-12);
    EXPECT_NEAR(best_rank_k_error(d, 2), 1.0, 1e-12);
    EXPECT_NEAR(best_rank_k_error(d, 3), 0.0, 1e-12);
    EXPECT_THROW(best_rank_k_error(d, 4), std::invalid_argument);
}

TEST(Problem, RadiiAndValidation) {
    auto inst = make_instance(3, 1, 16, 1, ConstraintForm::projected, 5, 4);
    auto& p = inst.problem;
    EXPECT_NEAR(p.radius(), 0.25 * 4.0, 1e-12);
    p.noise_bound = 0.5;
    EXPECT_NEAR(p.noise_radius(), 2.0, 1e-12);
    EXPECT_NO_THROW(p.validate());

    auto bad = p;
    bad.gamma = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = p;
    bad.basis = std::make_shared<NoiseShapingBasis>(compute_basis(16, 2, 4));
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = p;
    bad.basis.reset();
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = p;
    bad.quantized.resize(15);
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = p;
    bad.constraint_form = ConstraintForm::encoded;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    EXPECT_THROW(parse_constraint_form("diagonal"), std::invalid_argument);
    EXPECT_EQ(parse_constraint_form(to_string(ConstraintForm::full_inverse_power)), ConstraintForm::full_inverse_power);

    SolverParams sp;
    sp.relaxation = 2.0;
    EXPECT_THROW(recover(p, sp), std::invalid_argument);
}

TEST(Feasibility, FlagsViolations) {
    auto inst = make_instance(3, 1, 24, 1, ConstraintForm::full_inverse_power, 9);
    const auto& p = inst.problem;
    const Vector no_noise;
    EXPECT_TRUE(check_feasibility(p, inst.truth, no_noise).feasible());
    const auto far = check_feasibility(p, inst.truth + Matrix::Constant(3, 3, 50.0), no_noise);
    EXPECT_TRUE(far.shaped_violated);
    EXPECT_LT(far.shaped_slack(), 0);
    auto noisy = p;
    noisy.noise_bound = 0.01;
    const auto rep = check_feasibility(noisy, inst.truth, Vector::Constant(24, 1.0));
    EXPECT_TRUE(rep.noise_violated);
    EXPECT_FALSE(rep.feasible());
}

TEST(Recover, ZeroMeasurementsGiveZero) {
    for (auto form : {ConstraintForm::projected, ConstraintForm::full_inverse_power}) {
        auto inst = make_instance(4, 1, 32, 2, form, 3);
        inst.problem.quantized.setZero();
        const auto sol = recover(inst.problem);
        EXPECT_TRUE(sol.estimate.isZero(0.0));
        EXPECT_EQ(sol.objective, 0.0);
        EXPECT_TRUE(sol.converged);
    }
}

TEST(Recover, ObjectiveNotAboveFeasibleTruth) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto inst = make_instance(3, 1, 48, 1, ConstraintForm::full_inverse_power, seed);
        ASSERT_TRUE(check_feasibility(inst.problem, inst.truth, Vector()).feasible());
        const auto sol = recover(inst.problem);
        ASSERT_TRUE(sol.converged);
        EXPECT_TRUE(check_feasibility(sol, inst.problem).feasible());
        EXPECT_LE(sol.objective, nuclear_norm(inst.truth) + 1e-4 * std::max(1.0, nuclear_norm(inst.truth)));
    }
}

TEST(Recover, ExactRankOneRecoveryFromUnquantizedData) {
    Rng rng(77);
    const Index n = 6, m = 48;
    const Matrix truth = sample_low_rank(n, n, 1, rng);
    RecoveryProblem p;
    auto op = std::make_shared<MeasurementOperator>(draw_operator(m, n, n, Distribution::gaussian, 78));
    p.op = op;
    p.quantized = op->apply(truth);
    p.order = 1;
    p.gamma = 1e-6 / std::sqrt(double(m));
    p.constraint_form = ConstraintForm::full_inverse_power;
    const auto sol = recover(p);
    EXPECT_TRUE(sol.converged);
    EXPECT_TRUE(check_feasibility(sol, p).feasible());
    EXPECT_LE((sol.estimate - truth).norm() / truth.norm(), 1e-3);
}

TEST(Recover, ScaleEquivariance) {
    auto inst = make_instance(4, 1, 40, 2, ConstraintForm::projected, 21, 20);
    const auto base = recover(inst.problem);
    auto scaled = inst.problem;
    scaled.quantized *= 4.0;
    scaled.gamma *= 4.0;
    const auto big = recover(scaled);
    ASSERT_TRUE(base.converged);
    ASSERT_TRUE(big.converged);
    EXPECT_NEAR(big.objective, 4.0 * base.objective, 1e-3 * big.objective);
}

TEST(Recover, ErrorDecreasesWithOrderAtHighOversampling) {
    double err[3];
    for (int r = 1; r <= 3; ++r) {
        double sum = 0;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            auto inst = make_instance(4, 1, 192, r, ConstraintForm::projected, 100 + seed, 24);
            const auto sol = recover(inst.problem);
            sum += (sol.estimate - inst.truth).norm() / inst.truth.norm();
        }
        err[r - 1] = sum / 3;
    }
    EXPECT_LT(err[1], err[0]);
    EXPECT_LT(err[2], err[1]);
}

TEST(ReferenceSolve, AgreesWithDefaultSolver) {
    auto inst = make_instance(4, 1, 64, 2, ConstraintForm::projected, 8, 32);
    const auto ref = reference_solve(inst.problem);
    const auto sol = recover(inst.problem);
    EXPECT_TRUE(ref.converged);
    EXPECT_NEAR(sol.objective, ref.objective, 1e-3 * std::max(1.0, ref.objective));
    EXPECT_LE(ref.objective, nuclear_norm(inst.truth) * (1 + 1e-6) + 1e-6);

    auto zero = inst.problem;
    zero.quantized.setZero();
    EXPECT_EQ(reference_solve(zero).objective, 0.0);

    auto large = make_instance(11, 1, 40, 1, ConstraintForm::full_inverse_power, 1);
    EXPECT_THROW(reference_solve(large.problem), std::invalid_argument);
}

TEST(ReferenceSolve, WarmRestartIsStationary) {
    auto inst = make_instance(3, 1, 36, 1, ConstraintForm::full_inverse_power, 14);
    const auto ref = reference_solve(inst.problem);
    SolverParams sp;
    sp.tolerance = 1e-8;
    sp.relaxation = 1.0;
    sp.max_iterations = 50000;
    const auto again = recover(inst.problem, sp, &ref.state);
    EXPECT_NEAR(again.objective, ref.objective, 1e-6 * std::max(1.0, ref.objective));
}

TEST(Recover, NoiseConstraintRespected) {
    auto inst = make_instance(4, 1, 48, 1, ConstraintForm::projected, 33, 24);
    auto& p = inst.problem;
    p.noise_bound = 0.3;
    const auto sol = recover(p);
    ASSERT_TRUE(sol.converged);
    EXPECT_EQ(sol.noise_estimate.size(), 48);
    EXPECT_TRUE(check_feasibility(sol, p).feasible());
    EXPECT_LE(sol.residual_noise, p.noise_radius() * (1 + 1e-6) + 1e-6);
}

TEST(Solution, ContainerFields) {
    auto inst = make_instance(3, 1, 24, 1, ConstraintForm::full_inverse_power, 4);
    const auto sol = recover(inst.problem);
    const auto c = sol.to_container();
    EXPECT_EQ(c.text("kind"), "recovery_solution");
    EXPECT_EQ(c.matrix("estimate"), sol.estimate);
    EXPECT_EQ(c.integer("iterations"), sol.iterations);
}

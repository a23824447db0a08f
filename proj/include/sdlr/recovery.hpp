#pragma once

#include "sdlr/encoding.hpp"
#include "sdlr/noise_shaping.hpp"
#include "sdlr/sensing.hpp"
#include "sdlr/types.hpp"

#include <memory>
#include <string>
#include <string_view>

namespace sdlr {

class Container;

enum class ConstraintForm {
    full_inverse_power,  // ‖D^{-r}(M(Z)+ν−q)‖₂ ≤ γ√m
    projected,           // σ_ℓ‖P_ℓV*(M(Z)+ν−q)‖₂ ≤ γ√m
    encoded,             // ‖B D^{-r}(M(Z)+ν−q)‖₂ ≤ 3mγ
};

std::string to_string(ConstraintForm f);
ConstraintForm parse_constraint_form(std::string_view name);

/// min ‖Z‖_* over (Z, ν) subject to the shaped-residual ball and ‖ν‖₂ ≤ ε√m.
///
/// `gamma` is the stability constant with β already absorbed (β/2 for the
/// greedy scheme); `step` is carried for reporting only.
struct RecoveryProblem {
    std::shared_ptr<const MeasurementOperator> op;
    Vector quantized;
    int order = 1;
    double gamma = 0.25;
    double step = 0.5;
    double noise_bound = 0.0;
    ConstraintForm constraint_form = ConstraintForm::projected;
    std::shared_ptr<const NoiseShapingBasis> basis;   // projected
    std::shared_ptr<const EncoderMatrix> encoder;     // encoded

    Index rows() const { return quantized.size(); }
    double radius() const;
    double noise_radius() const;
    void validate() const;
};

struct SolverParams {
    int max_iterations = 5000;
    double tolerance = 1e-6;
    double penalty = 1.0;
    bool adapt_penalty = true;
    /// ADMM over-relaxation factor in (0, 2).
    double relaxation = 1.6;
};

/// Scaled ADMM iterate in the solver's internal normalised coordinates.
/// Only meaningful for the problem that produced it.
struct SolverState {
    Vector y;
    Vector u;
    double penalty = 0.0;
};

struct RecoverySolution {
    Matrix estimate;        // X♯
    Vector noise_estimate;  // ν♯ (length m; zero when ε = 0)
    double objective = 0.0; // ‖X♯‖_*
    double residual_shaped = 0.0;
    double residual_noise = 0.0;
    int iterations = 0;
    bool converged = false;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    SolverState state;

    Container to_container() const;
};

RecoverySolution recover(const RecoveryProblem& problem, const SolverParams& params = {},
                         const SolverState* warm_start = nullptr);

/// Constraint left-hand side of (Z, ν) evaluated from scratch through the
/// operator, the difference/projection routines and the encoder.
double shaped_residual(const RecoveryProblem& problem, const Matrix& z, const Vector& nu);

struct FeasibilityReport {
    double shaped_lhs = 0.0;
    double shaped_radius = 0.0;
    double noise_lhs = 0.0;
    double noise_radius = 0.0;
    bool shaped_violated = false;
    bool noise_violated = false;

    double shaped_slack() const { return shaped_radius - shaped_lhs; }
    double noise_slack() const { return noise_radius - noise_lhs; }
    bool feasible() const { return !shaped_violated && !noise_violated; }
};

/// Flags violations beyond 1e-6 relative (plus 1e-6 absolute).
FeasibilityReport check_feasibility(const RecoveryProblem& problem, const Matrix& z,
                                    const Vector& nu);
FeasibilityReport check_feasibility(const RecoverySolution& solution,
                                    const RecoveryProblem& problem);

double nuclear_norm(const Matrix& x);

/// σ_k(X)_* = Σ_{i>k} σ_i(X).
double best_rank_k_error(const Matrix& x, Index k);

/// High-accuracy solve for small instances (n1·n2 ≤ 100, m ≤ 200): tolerance
/// 1e-8, ten times the iteration budget, plain ADMM, then a warm restart whose
/// objective must agree to 1e-6. Throws on any failure.
RecoverySolution reference_solve(const RecoveryProblem& problem,
                                 const SolverParams& base = {});

}  // namespace sdlr

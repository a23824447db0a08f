#pragma once

#include "sdlr/random.hpp"
#include "sdlr/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace sdlr {

class Container;
struct NoiseShapingBasis;

enum class Distribution { gaussian, rademacher };

std::string to_string(Distribution d);
Distribution parse_distribution(std::string_view name);

/// Linear map R^{n1 x n2} → R^p held as a dense p x (n1·n2) matrix acting on
/// vec(X) (columns stacked).
class DenseMatrixMap {
public:
    DenseMatrixMap() = default;
    DenseMatrixMap(Matrix rows, Index n1, Index n2);

    Index output_dim() const { return rows_.rows(); }
    Index n1() const { return n1_; }
    Index n2() const { return n2_; }
    const Matrix& matrix() const { return rows_; }

    /// y_i = ⟨X, A_i⟩
    Vector apply(const Matrix& x) const;
    /// Σ_i v_i A_i
    Matrix adjoint_apply(const Vector& v) const;

protected:
    Matrix rows_;
    Index n1_ = 0, n2_ = 0;
};

/// Sub-Gaussian measurement operator: row i is vec(A_i)ᵀ, entries i.i.d. from
/// `distribution`, generated row by row from `seed`.
class MeasurementOperator : public DenseMatrixMap {
public:
    MeasurementOperator() = default;
    MeasurementOperator(Matrix data, Index n1, Index n2, Distribution distribution,
                        std::uint64_t seed);

    Index rows() const { return rows_.rows(); }
    Distribution distribution() const { return distribution_; }
    std::uint64_t seed() const { return seed_; }
    const Matrix& data() const { return rows_; }

    Container to_container() const;
    static MeasurementOperator from_container(const Container& c);

private:
    Distribution distribution_ = Distribution::gaussian;
    std::uint64_t seed_ = 0;
};

inline constexpr Index kDefaultOperatorBudget = 100'000'000;

MeasurementOperator draw_operator(Index m, Index n1, Index n2, Distribution distribution,
                                  std::uint64_t seed,
                                  Index max_entries = kDefaultOperatorBudget);

/// (U, V)-restriction x ↦ M(U diag(x) V*) of a matrix map.
class RestrictedOperator {
public:
    /// Frames must have p orthonormal columns (checked to 1e-8).
    RestrictedOperator(DenseMatrixMap base, Matrix left_frame, Matrix right_frame);

    Index input_dim() const { return left_.cols(); }
    const DenseMatrixMap& base() const { return base_; }
    const Matrix& left_frame() const { return left_; }
    const Matrix& right_frame() const { return right_; }

    /// Σ_j x_j M(u_j v_jᵀ) through the precomputed columns.
    Vector apply(const Vector& x) const;
    /// M(U diag(x) V*) evaluated literally.
    Vector apply_by_definition(const Vector& x) const;

private:
    DenseMatrixMap base_;
    Matrix left_, right_;
    Matrix columns_;
};

/// X ↦ (1/√ℓ) P_ℓ V* M(X) with V the right singular vectors of D^{-r}.
DenseMatrixMap composed_operator(const DenseMatrixMap& op, const NoiseShapingBasis& basis,
                                 Index ell);

/// Rank-k matrix Σ_{i≤k} α_i u_i v_iᵀ with standard normal α, u, v.
Matrix sample_low_rank(Index n1, Index n2, Index k, Rng& rng);

struct RipEstimate {
    Index rank = 0;
    Index trials = 0;
    double delta_hat = 0.0;
    double min_ratio = 1.0;
    double max_ratio = 1.0;
    double mean_ratio = 1.0;
};

/// Sampled lower bound on the order-k matrix-RIP constant: extremes of
/// ‖map(X)‖² over `trials` random unit-Frobenius rank-k matrices.
RipEstimate empirical_rip(const DenseMatrixMap& map, Index k, Index trials, std::uint64_t seed);

}  // namespace sdlr

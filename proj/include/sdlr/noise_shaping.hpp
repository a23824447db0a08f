#pragma once

#include "sdlr/types.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace sdlr {

class Container;

/// D^r for the m x m lower bi-diagonal difference matrix D
/// (1 on the diagonal, −1 on the subdiagonal).
struct DifferenceOperator {
    Index size = 1;
    int order = 1;
};

/// D^r v by r backward-difference passes; no matrix is formed.
Vector apply_difference(const Vector& v, const DifferenceOperator& op);
/// D^{-r} v by r cumulative-sum passes.
Vector apply_inverse_power(const Vector& v, const DifferenceOperator& op);
/// D^{-r} applied to every column of a.
Matrix apply_inverse_power_columns(const Matrix& a, int order);

/// Exact integer D^{-r}: entry (i, j) = C(i − j + r − 1, r − 1) for i ≥ j.
/// Guarded to m ≤ 512, r ≤ 4 so that every entry fits in 64 bits.
IntMatrix inverse_power_entries(Index m, int order);
/// Exact integer D^r: entry (i, j) = (−1)^{i−j} C(r, i − j).
IntMatrix difference_power_entries(Index m, int order);

inline constexpr Index kDefaultSvdBudget = 4096;

/// Dense SVD D^{-r} = U Σ V* together with a truncation level ℓ.
struct NoiseShapingBasis {
    Index size = 0;
    int order = 0;
    Matrix left_vectors;    // U, m x m
    Vector singular_values; // σ_1 ≥ … ≥ σ_m > 0
    Matrix right_vectors;   // V, m x m
    Index truncation = 0;   // ℓ

    /// σ_ℓ
    double truncation_value() const { return singular_values[truncation - 1]; }
    NoiseShapingBasis with_truncation(Index ell) const;

    /// The ℓ x m matrix σ_ℓ P_ℓ V*.
    Matrix shaped_rows() const;

    Container to_container() const;
    static NoiseShapingBasis from_container(const Container& c, Index truncation);
};

NoiseShapingBasis compute_basis(Index m, int order, Index truncation,
                                Index svd_budget = kDefaultSvdBudget);

/// σ_ℓ P_ℓ V* v, the left-hand side of the stabilised constraint.
Vector project_shaped(const Vector& v, const NoiseShapingBasis& basis);

/// Bases keyed by (m, r), memoised in memory and persisted under a
/// directory. Safe to use from several threads.
class BasisCache {
public:
    explicit BasisCache(std::filesystem::path directory = {},
                        Index svd_budget = kDefaultSvdBudget);

    std::shared_ptr<const NoiseShapingBasis> get(Index m, int order, Index truncation);

    static std::filesystem::path file_name(Index m, int order);

private:
    std::filesystem::path directory_;
    Index svd_budget_;
    std::mutex mutex_;
    std::map<std::pair<Index, int>, std::shared_ptr<const NoiseShapingBasis>> memo_;
};

}  // namespace sdlr

#include "sdlr/noise_shaping.hpp"

#include "sdlr/container.hpp"
#include "sdlr/sigma_delta.hpp"

#include <Eigen/SVD>

#include <sstream>
#include <stdexcept>

namespace sdlr {
namespace {

void check_op(const Vector& v, const DifferenceOperator& op, const char* who) {
    if (v.size() != op.size)
        throw std::invalid_argument(std::string(who) + ": dimension mismatch");
    if (op.order < 0 || op.order > kMaxOrder)
        throw std::invalid_argument(std::string(who) + ": order out of range");
}

}  // namespace

Vector apply_difference(const Vector& v, const DifferenceOperator& op) {
    check_op(v, op, "apply_difference");
    Vector out = v;
    for (int pass = 0; pass < op.order; ++pass)
        for (Index i = out.size() - 1; i >= 1; --i) out[i] -= out[i - 1];
    return out;
}

Vector apply_inverse_power(const Vector& v, const DifferenceOperator& op) {
    check_op(v, op, "apply_inverse_power");
    Vector out = v;
    for (int pass = 0; pass < op.order; ++pass)
        for (Index i = 1; i < out.size(); ++i) out[i] += out[i - 1];
    return out;
}

Matrix apply_inverse_power_columns(const Matrix& a, int order) {
    if (order < 0 || order > kMaxOrder)
        throw std::invalid_argument("apply_inverse_power_columns: order out of range");
    Matrix out = a;
    for (int pass = 0; pass < order; ++pass)
        for (Index i = 1; i < out.rows(); ++i) out.row(i) += out.row(i - 1);
    return out;
}

IntMatrix inverse_power_entries(Index m, int order) {
    if (m < 1 || m > 512 || order < 1 || order > 4)
        throw std::invalid_argument("inverse_power_entries: requires 1 <= m <= 512, 1 <= r <= 4");
    IntMatrix out = IntMatrix::Zero(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j <= i; ++j)
            out(i, j) = binomial(static_cast<int>(i - j) + order - 1, order - 1);
    return out;
}

IntMatrix difference_power_entries(Index m, int order) {
    if (m < 1 || order < 0 || order > kMaxOrder)
        throw std::invalid_argument("difference_power_entries: bad arguments");
    IntMatrix out = IntMatrix::Zero(m, m);
    for (Index i = 0; i < m; ++i)
        for (Index d = 0; d <= order && d <= i; ++d)
            out(i, i - d) = (d % 2 ? -1 : 1) * binomial(order, static_cast<int>(d));
    return out;
}

NoiseShapingBasis NoiseShapingBasis::with_truncation(Index ell) const {
    if (ell < 1 || ell > size)
        throw std::invalid_argument("NoiseShapingBasis: truncation must satisfy 1 <= l <= m");
    NoiseShapingBasis b = *this;
    b.truncation = ell;
    return b;
}

Matrix NoiseShapingBasis::shaped_rows() const {
    return truncation_value() * right_vectors.leftCols(truncation).transpose();
}

Container NoiseShapingBasis::to_container() const {
    Container c;
    c.put_text("kind", "noise_shaping_basis");
    c.put_int("m", size);
    c.put_int("r", order);
    c.put("singular_values", singular_values);
    c.put("U", left_vectors);
    c.put("V", right_vectors);
    return c;
}

NoiseShapingBasis NoiseShapingBasis::from_container(const Container& c, Index truncation) {
    if (c.text("kind") != "noise_shaping_basis")
        throw std::runtime_error("container does not hold a noise-shaping basis");
    NoiseShapingBasis b;
    b.size = c.integer("m");
    b.order = static_cast<int>(c.integer("r"));
    b.singular_values = c.vector("singular_values");
    b.left_vectors = c.matrix("U");
    b.right_vectors = c.matrix("V");
    if (b.singular_values.size() != b.size || b.left_vectors.rows() != b.size ||
        b.right_vectors.rows() != b.size)
        throw std::runtime_error("noise-shaping basis container is inconsistent");
    return b.with_truncation(truncation);
}

NoiseShapingBasis compute_basis(Index m, int order, Index truncation, Index svd_budget) {
    if (m < 1) throw std::invalid_argument("compute_basis: m must be positive");
    if (order < 1 || order > kMaxOrder)
        throw std::invalid_argument("compute_basis: order out of range");
    if (truncation < 1 || truncation > m)
        throw std::invalid_argument("compute_basis: truncation must satisfy 1 <= l <= m");
    if (m > svd_budget) {
        std::ostringstream msg;
        msg << "compute_basis: m = " << m << " exceeds the SVD size budget of " << svd_budget
            << "; lower the oversampling grid (or raise svd_budget for a long run)";
        throw std::invalid_argument(msg.str());
    }
    const Matrix dinv = apply_inverse_power_columns(Matrix::Identity(m, m), order);
    Eigen::BDCSVD<Matrix> svd(dinv, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "compute_basis: SVD of D^-" << order << " (m = " << m
            << ") did not converge, info = " << static_cast<int>(svd.info());
        throw std::runtime_error(msg.str());
    }
    NoiseShapingBasis b;
    b.size = m;
    b.order = order;
    b.left_vectors = svd.matrixU();
    b.right_vectors = svd.matrixV();
    b.singular_values = svd.singularValues();
    if (!(b.singular_values.minCoeff() > 0))
        throw std::runtime_error("compute_basis: non-positive singular value; D^-r is invertible");
    b.truncation = truncation;
    return b;
}

Vector project_shaped(const Vector& v, const NoiseShapingBasis& basis) {
    if (v.size() != basis.size) throw std::invalid_argument("project_shaped: dimension mismatch");
    return basis.truncation_value() *
           (basis.right_vectors.leftCols(basis.truncation).transpose() * v);
}

BasisCache::BasisCache(std::filesystem::path directory, Index svd_budget)
    : directory_(std::move(directory)), svd_budget_(svd_budget) {}

std::filesystem::path BasisCache::file_name(Index m, int order) {
    return "basis_m" + std::to_string(m) + "_r" + std::to_string(order) + ".sdlr";
}

std::shared_ptr<const NoiseShapingBasis> BasisCache::get(Index m, int order, Index truncation) {
    std::lock_guard lock(mutex_);
    const auto key = std::make_pair(m, order);
    if (auto it = memo_.find(key); it != memo_.end()) {
        if (it->second->truncation == truncation) return it->second;
        return std::make_shared<const NoiseShapingBasis>(it->second->with_truncation(truncation));
    }
    std::shared_ptr<const NoiseShapingBasis> basis;
    const bool persist = !directory_.empty();
    const auto path = directory_ / file_name(m, order);
    if (persist && std::filesystem::exists(path)) {
        try {
            basis = std::make_shared<const NoiseShapingBasis>(
                NoiseShapingBasis::from_container(Container::load(path), truncation));
        } catch (const std::exception&) {
            basis.reset();  // unreadable cache entry: recompute and overwrite
        }
    }
    if (!basis) {
        basis = std::make_shared<const NoiseShapingBasis>(
            compute_basis(m, order, truncation, svd_budget_));
        if (persist) {
            std::filesystem::create_directories(directory_);
            basis->to_container().save(path);
        }
    }
    memo_[key] = basis;
    return basis;
}

}  // namespace sdlr

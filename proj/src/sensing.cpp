#include "sdlr/sensing.hpp"

#include "sdlr/container.hpp"
#include "sdlr/noise_shaping.hpp"

#include <cmath>
#include <stdexcept>

namespace sdlr {

std::string to_string(Distribution d) {
    return d == Distribution::gaussian ? "gaussian" : "rademacher";
}

Distribution parse_distribution(std::string_view name) {
    if (name == "gaussian") return Distribution::gaussian;
    if (name == "rademacher") return Distribution::rademacher;
    throw std::invalid_argument("unknown distribution '" + std::string(name) + "'");
}

DenseMatrixMap::DenseMatrixMap(Matrix rows, Index n1, Index n2)
    : rows_(std::move(rows)), n1_(n1), n2_(n2) {
    if (n1 < 1 || n2 < 1 || rows_.cols() != n1 * n2)
        throw std::invalid_argument("DenseMatrixMap: column count must equal n1*n2");
}

Vector DenseMatrixMap::apply(const Matrix& x) const {
    if (x.rows() != n1_ || x.cols() != n2_)
        throw std::invalid_argument("apply: shape mismatch");
    return rows_ * vec(x);
}

Matrix DenseMatrixMap::adjoint_apply(const Vector& v) const {
    if (v.size() != rows_.rows()) throw std::invalid_argument("adjoint_apply: dimension mismatch");
    return unvec(rows_.transpose() * v, n1_, n2_);
}

MeasurementOperator::MeasurementOperator(Matrix data, Index n1, Index n2,
                                         Distribution distribution, std::uint64_t seed)
    : DenseMatrixMap(std::move(data), n1, n2), distribution_(distribution), seed_(seed) {}

Container MeasurementOperator::to_container() const {
    Container c;
    c.put_text("kind", "measurement_operator");
    c.put_text("distribution", to_string(distribution_));
    c.put_int("seed", static_cast<std::int64_t>(seed_));
    c.put_int("n1", n1_);
    c.put_int("n2", n2_);
    c.put("data", rows_);
    return c;
}

MeasurementOperator MeasurementOperator::from_container(const Container& c) {
    if (c.text("kind") != "measurement_operator")
        throw std::runtime_error("container does not hold a measurement operator");
    return MeasurementOperator(c.matrix("data"), c.integer("n1"), c.integer("n2"),
                               parse_distribution(c.text("distribution")),
                               static_cast<std::uint64_t>(c.integer("seed")));
}

MeasurementOperator draw_operator(Index m, Index n1, Index n2, Distribution distribution,
                                  std::uint64_t seed, Index max_entries) {
    if (m < 1 || n1 < 1 || n2 < 1)
        throw std::invalid_argument("draw_operator: dimensions must be positive");
    if (m * n1 * n2 > max_entries)
        throw std::invalid_argument("draw_operator: m*n1*n2 exceeds the memory budget");
    Rng rng(seed);
    const Index n = n1 * n2;
    Matrix data(m, n);
    if (distribution == Distribution::gaussian) {
        data = gaussian_matrix(m, n, rng);
    } else {
        std::bernoulli_distribution coin(0.5);
        for (Index i = 0; i < m; ++i)
            for (Index j = 0; j < n; ++j) data(i, j) = coin(rng) ? 1.0 : -1.0;
    }
    return MeasurementOperator(std::move(data), n1, n2, distribution, seed);
}

namespace {

void require_orthonormal(const Matrix& f, const char* which) {
    const Index p = f.cols();
    const double err = (f.transpose() * f - Matrix::Identity(p, p)).cwiseAbs().maxCoeff();
    if (!(err <= 1e-8))
        throw std::invalid_argument(std::string("RestrictedOperator: ") + which +
                                    " frame columns are not orthonormal");
}

}  // namespace

RestrictedOperator::RestrictedOperator(DenseMatrixMap base, Matrix left_frame, Matrix right_frame)
    : base_(std::move(base)), left_(std::move(left_frame)), right_(std::move(right_frame)) {
    if (left_.rows() != base_.n1() || right_.rows() != base_.n2() ||
        left_.cols() != right_.cols())
        throw std::invalid_argument("RestrictedOperator: frame shapes do not match the operator");
    require_orthonormal(left_, "left");
    require_orthonormal(right_, "right");
    columns_.resize(base_.output_dim(), left_.cols());
    for (Index j = 0; j < left_.cols(); ++j)
        columns_.col(j) = base_.apply(left_.col(j) * right_.col(j).transpose());
}

Vector RestrictedOperator::apply(const Vector& x) const {
    if (x.size() != columns_.cols()) throw std::invalid_argument("apply_restricted: dimension mismatch");
    return columns_ * x;
}

Vector RestrictedOperator::apply_by_definition(const Vector& x) const {
    if (x.size() != left_.cols()) throw std::invalid_argument("apply_restricted: dimension mismatch");
    return base_.apply(left_ * x.asDiagonal() * right_.transpose());
}

DenseMatrixMap composed_operator(const DenseMatrixMap& op, const NoiseShapingBasis& basis,
                                 Index ell) {
    if (basis.size != op.output_dim())
        throw std::invalid_argument("composed_operator: basis size must equal operator rows");
    if (ell < 1 || ell > basis.size)
        throw std::invalid_argument("composed_operator: ell out of range");
    Matrix rows = basis.right_vectors.leftCols(ell).transpose() * op.matrix();
    rows /= std::sqrt(static_cast<double>(ell));
    return DenseMatrixMap(std::move(rows), op.n1(), op.n2());
}

Matrix sample_low_rank(Index n1, Index n2, Index k, Rng& rng) {
    if (k < 0 || k > std::min(n1, n2))
        throw std::invalid_argument("sample_low_rank: rank out of range");
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x = Matrix::Zero(n1, n2);
    for (Index i = 0; i < k; ++i) {
        const double alpha = normal(rng);
        const Vector u = gaussian_vector(n1, rng);
        const Vector v = gaussian_vector(n2, rng);
        x.noalias() += alpha * u * v.transpose();
    }
    return x;
}

RipEstimate empirical_rip(const DenseMatrixMap& map, Index k, Index trials, std::uint64_t seed) {
    if (trials < 1) throw std::invalid_argument("empirical_rip: trials must be >= 1");
    if (k < 1 || k > std::min(map.n1(), map.n2()))
        throw std::invalid_argument("empirical_rip: rank out of range");
    Rng rng(seed);
    RipEstimate est;
    est.rank = k;
    est.trials = trials;
    est.min_ratio = std::numeric_limits<double>::infinity();
    est.max_ratio = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    Index used = 0;
    for (Index t = 0; t < trials; ++t) {
        Matrix x = sample_low_rank(map.n1(), map.n2(), k, rng);
        const double norm = x.norm();
        if (norm == 0) continue;
        x /= norm;
        const double ratio = map.apply(x).squaredNorm();
        est.min_ratio = std::min(est.min_ratio, ratio);
        est.max_ratio = std::max(est.max_ratio, ratio);
        sum += ratio;
        ++used;
    }
    est.mean_ratio = used ? sum / static_cast<double>(used) : 0.0;
    est.delta_hat = std::max({0.0, 1.0 - est.min_ratio, est.max_ratio - 1.0});
    return est;
}

}  // namespace sdlr

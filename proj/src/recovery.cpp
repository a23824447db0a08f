#include "sdlr/recovery.hpp"

#include "sdlr/container.hpp"
#include "sdlr/sigma_delta.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace sdlr {

std::string to_string(ConstraintForm f) {
    switch (f) {
        case ConstraintForm::full_inverse_power: return "full_inverse_power";
        case ConstraintForm::projected: return "projected";
        case ConstraintForm::encoded: return "encoded";
    }
    return "?";
}

ConstraintForm parse_constraint_form(std::string_view name) {
    if (name == "full_inverse_power") return ConstraintForm::full_inverse_power;
    if (name == "projected") return ConstraintForm::projected;
    if (name == "encoded") return ConstraintForm::encoded;
    throw std::invalid_argument("unknown constraint form '" + std::string(name) + "'");
}

double RecoveryProblem::radius() const {
    const double m = static_cast<double>(rows());
    return constraint_form == ConstraintForm::encoded ? 3.0 * m * gamma : gamma * std::sqrt(m);
}

double RecoveryProblem::noise_radius() const {
    return noise_bound * std::sqrt(static_cast<double>(rows()));
}

void RecoveryProblem::validate() const {
    if (!op) throw std::invalid_argument("RecoveryProblem: missing measurement operator");
    if (quantized.size() != op->rows())
        throw std::invalid_argument("RecoveryProblem: q length must equal operator rows");
    if (!quantized.allFinite()) throw std::invalid_argument("RecoveryProblem: q is not finite");
    if (order < 1 || order > kMaxOrder)
        throw std::invalid_argument("RecoveryProblem: order out of range");
    if (!(gamma > 0) || !std::isfinite(gamma))
        throw std::invalid_argument("RecoveryProblem: gamma must be positive (radius < 0 is infeasible)");
    if (!(noise_bound >= 0) || !std::isfinite(noise_bound))
        throw std::invalid_argument("RecoveryProblem: noise bound must be >= 0");
    switch (constraint_form) {
        case ConstraintForm::projected:
            if (!basis) throw std::invalid_argument("RecoveryProblem: projected form needs a basis");
            if (basis->size != rows() || basis->order != order)
                throw std::invalid_argument("RecoveryProblem: basis does not match (m, r)");
            break;
        case ConstraintForm::encoded:
            if (!encoder) throw std::invalid_argument("RecoveryProblem: encoded form needs an encoder");
            if (encoder->in_dim != rows())
                throw std::invalid_argument("RecoveryProblem: encoder input dimension must equal m");
            break;
        case ConstraintForm::full_inverse_power:
            break;
    }
}

Container RecoverySolution::to_container() const {
    Container c;
    c.put_text("kind", "recovery_solution");
    c.put("estimate", estimate);
    c.put("noise_estimate", noise_estimate);
    c.put_real("objective", objective);
    c.put_real("residual_shaped", residual_shaped);
    c.put_real("residual_noise", residual_noise);
    c.put_int("iterations", iterations);
    c.put_int("converged", converged ? 1 : 0);
    c.put_real("primal_residual", primal_residual);
    c.put_real("dual_residual", dual_residual);
    return c;
}

double nuclear_norm(const Matrix& x) {
    if (x.size() == 0) return 0.0;
    return Eigen::BDCSVD<Matrix>(x).singularValues().sum();
}

double best_rank_k_error(const Matrix& x, Index k) {
    const Index n = std::min(x.rows(), x.cols());
    if (k < 0 || k > n) throw std::invalid_argument("best_rank_k_error: k out of range");
    const Vector s = Eigen::BDCSVD<Matrix>(x).singularValues();
    return s.tail(n - k).sum();
}

double shaped_residual(const RecoveryProblem& problem, const Matrix& z, const Vector& nu) {
    Vector w = problem.op->apply(z) - problem.quantized;
    if (nu.size() == w.size()) w += nu;
    else if (nu.size() != 0) throw std::invalid_argument("shaped_residual: noise length mismatch");
    const DifferenceOperator d{w.size(), problem.order};
    switch (problem.constraint_form) {
        case ConstraintForm::projected: return project_shaped(w, *problem.basis).norm();
        case ConstraintForm::full_inverse_power: return apply_inverse_power(w, d).norm();
        case ConstraintForm::encoded: return (problem.encoder->data * apply_inverse_power(w, d)).norm();
    }
    return 0.0;
}

FeasibilityReport check_feasibility(const RecoveryProblem& problem, const Matrix& z,
                                    const Vector& nu) {
    FeasibilityReport rep;
    rep.shaped_lhs = shaped_residual(problem, z, nu);
    rep.shaped_radius = problem.radius();
    rep.noise_lhs = nu.norm();
    rep.noise_radius = problem.noise_radius();
    rep.shaped_violated = rep.shaped_lhs > rep.shaped_radius * (1 + 1e-6) + 1e-6;
    rep.noise_violated = rep.noise_lhs > rep.noise_radius * (1 + 1e-6) + 1e-6;
    return rep;
}

FeasibilityReport check_feasibility(const RecoverySolution& solution,
                                    const RecoveryProblem& problem) {
    return check_feasibility(problem, solution.estimate, solution.noise_estimate);
}

namespace {

// Shaped constraint ‖W (M(Z) + ν − q)‖₂ ≤ radius held through the thin SVD
// W = U diag(s) Vᵀ; only s and V matter for the norm.
struct ShapedEllipsoid {
    Matrix v;  // m x k, orthonormal columns
    Vector s;  // k, positive
    double radius = 0.0;
};

ShapedEllipsoid build_ellipsoid(const RecoveryProblem& p) {
    const Index m = p.rows();
    ShapedEllipsoid e;
    e.radius = p.radius();
    switch (p.constraint_form) {
        case ConstraintForm::projected: {
            const Index ell = p.basis->truncation;
            e.v = p.basis->right_vectors.leftCols(ell);
            e.s = Vector::Constant(ell, p.basis->truncation_value());
            break;
        }
        case ConstraintForm::full_inverse_power: {
            std::shared_ptr<const NoiseShapingBasis> basis = p.basis;
            if (!basis || basis->size != m || basis->order != p.order)
                basis = std::make_shared<const NoiseShapingBasis>(compute_basis(m, p.order, 1, std::max(m, kDefaultSvdBudget)));
            e.v = basis->right_vectors;
            e.s = basis->singular_values;
            break;
        }
        case ConstraintForm::encoded: {
            // Wᵀ = D^{-r}ᵀ Bᵀ, m x L; its left singular vectors are W's right ones.
            // D^{-1}ᵀ is a reverse cumulative sum down each column.
            Matrix wt = p.encoder->data.transpose();
            for (int pass = 0; pass < p.order; ++pass)
                for (Index i = m - 2; i >= 0; --i) wt.row(i) += wt.row(i + 1);
            Eigen::BDCSVD<Matrix> svd(wt, Eigen::ComputeThinU);
            const Vector sv = svd.singularValues();
            Index k = 0;
            while (k < sv.size() && sv[k] > sv[0] * 1e-14) ++k;
            e.v = svd.matrixU().leftCols(k);
            e.s = sv.head(k);
            break;
        }
    }
    return e;
}

double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    const Matrix gram = a.rows() < a.cols() ? Matrix(a * a.transpose()) : Matrix(a.transpose() * a);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    return std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
}

void project_ball(Eigen::Ref<Vector> v, double radius) {
    const double n = v.norm();
    if (n > radius) v *= radius / n;
}

// Euclidean projection of c onto {c : ‖diag(s) c‖₂ ≤ radius}. The minimiser
// is c_i / (1 + μ s_i²) with μ ≥ 0 the root of ‖diag(s) c(μ)‖ = radius,
// found by safeguarded Newton on 1/‖·‖ − 1/radius.
void project_ellipsoid(Eigen::Ref<Vector> c, const Vector& s, double radius) {
    const Vector sc = s.cwiseProduct(c);
    const double n0 = sc.norm();
    if (n0 <= radius) return;
    if (!(radius > 0)) {
        c.setZero();
        return;
    }
    auto norm_at = [&](double mu, double* deriv) {
        double g = 0, dg = 0;
        for (Index i = 0; i < c.size(); ++i) {
            const double d = 1.0 + mu * s[i] * s[i];
            const double t = sc[i] * sc[i] / (d * d);
            g += t;
            dg += -2.0 * t * s[i] * s[i] / d;
        }
        if (deriv) *deriv = dg;
        return g;
    };
    double lo = 0.0;
    double hi = c.cwiseQuotient(s).norm() / radius;
    double mu = 0.0;
    for (int it = 0; it < 200; ++it) {
        double dg = 0;
        const double g = norm_at(mu, &dg);
        const double nrm = std::sqrt(g);
        if (std::abs(nrm - radius) <= 1e-13 * radius) break;
        if (nrm > radius) lo = mu;
        else hi = mu;
        // φ(μ) = 1/√g − 1/R is close to linear in μ.
        const double phi = 1.0 / nrm - 1.0 / radius;
        const double dphi = -0.5 * dg / (g * nrm);
        double next = dphi != 0 ? mu - phi / dphi : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        mu = next;
        if (hi - lo <= 1e-16 * hi) break;
    }
    for (Index i = 0; i < c.size(); ++i) c[i] /= 1.0 + mu * s[i] * s[i];
    // Guarantee feasibility against the last rounding step.
    const double n1 = s.cwiseProduct(c).norm();
    if (n1 > radius) c *= radius / n1;
}

RecoverySolution zero_solution(const RecoveryProblem& p) {
    RecoverySolution s;
    s.estimate = Matrix::Zero(p.op->n1(), p.op->n2());
    s.noise_estimate = Vector::Zero(p.rows());
    s.residual_shaped = shaped_residual(p, s.estimate, s.noise_estimate);
    s.converged = true;
    return s;
}

// Scaled ADMM on  min ‖Z‖_* + I_E(y_b) + I_ball(y_c)  s.t.  K x = y, with
// x = (z, ν), K x = (z, A z + ν, ν) and A the measurement matrix scaled to unit
// spectral norm. The shaped constraint enters only through the exact
// projection onto the ellipsoid E = q + {t : ‖W t‖ ≤ radius}, so the
// conditioning of W never reaches the linear system. The x-update solves with
// the fixed matrix KᵀK, which does not depend on the penalty.
class AdmmSolver {
public:
    AdmmSolver(const RecoveryProblem& p, const SolverParams& params)
        : params_(params) {
        with_noise_ = p.noise_bound > 0;
        ell_ = build_ellipsoid(p);
        anorm_ = spectral_norm(p.op->matrix());
        if (!(anorm_ > 0)) throw std::invalid_argument("recover: measurement operator is zero");

        n1_ = p.op->n1();
        n2_ = p.op->n2();
        nz_ = n1_ * n2_;
        m_ = p.rows();
        nv_ = with_noise_ ? m_ : 0;

        scale_ = std::max({p.quantized.norm(), p.noise_radius(), 1e-300});
        a_ = p.op->matrix() / anorm_;
        q_ = p.quantized / scale_;
        rw_ = ell_.radius / scale_;
        rn_ = p.noise_radius() / scale_;

        Matrix k(nz_ + nv_, nz_ + nv_);
        k.topLeftCorner(nz_, nz_) = a_.transpose() * a_;
        k.topLeftCorner(nz_, nz_).diagonal().array() += 1.0;
        if (with_noise_) {
            k.topRightCorner(nz_, nv_) = a_.transpose();
            k.bottomLeftCorner(nv_, nz_) = a_;
            k.bottomRightCorner(nv_, nv_) = 2.0 * Matrix::Identity(nv_, nv_);
        }
        llt_.compute(k);
        if (llt_.info() != Eigen::Success)
            throw std::runtime_error("recover: factorisation of the x-update system failed");
    }

    bool zero_is_optimal() const {
        return shaped_norm(-q_) * scale_ <= ell_.radius;
    }

    RecoverySolution solve(const SolverState* warm) {
        const Index p = nz_ + m_ + nv_;
        Vector y = Vector::Zero(p), u = Vector::Zero(p);
        double rho = params_.penalty;
        if (warm) {
            if (warm->y.size() != p || warm->u.size() != p || !(warm->penalty > 0))
                throw std::invalid_argument("recover: warm start does not match this problem");
            y = warm->y;
            u = warm->u;
            rho = warm->penalty;
        }
        const double alpha = params_.relaxation;
        Vector x(nz_ + nv_), kx(p), khat(p), y_old(p);
        double best_metric = std::numeric_limits<double>::infinity();
        Vector best_y = y;
        RecoverySolution out;
        int it = 0;
        bool converged = false;
        double r_pri = 0, r_dual = 0;
        for (it = 1; it <= params_.max_iterations; ++it) {
            x = llt_.solve(apply_kt(y - u));
            kx = apply_k(x);
            khat = alpha * kx + (1 - alpha) * y;
            y_old = y;

            y.head(nz_) = shrink(khat.head(nz_) + u.head(nz_), 1.0 / rho);
            y.segment(nz_, m_) = project_shaped_set(khat.segment(nz_, m_) + u.segment(nz_, m_));
            if (with_noise_) {
                Vector vc = khat.tail(nv_) + u.tail(nv_);
                project_ball(vc, rn_);
                y.tail(nv_) = vc;
            }
            u += khat - y;

            r_pri = (kx - y).norm();
            r_dual = rho * apply_kt(y - y_old).norm();
            const double eps_pri = params_.tolerance * (1 + std::max(kx.norm(), y.norm()));
            const double eps_dual = params_.tolerance * (1 + rho * apply_kt(u).norm());
            const double metric = std::max(r_pri / eps_pri, r_dual / eps_dual);
            if (metric <= 1 && converged_point(y)) {
                converged = true;
                break;
            }
            if (metric < best_metric && feasible(y)) {
                best_metric = metric;
                best_y = y;
            }
            if (params_.adapt_penalty && it % 10 == 0) {
                if (r_pri > 10 * r_dual) {
                    rho *= 2;
                    u /= 2;
                } else if (r_dual > 10 * r_pri) {
                    rho /= 2;
                    u *= 2;
                }
            }
        }
        if (!converged) {
            if (std::isfinite(best_metric)) {
                y = best_y;
            } else {
                Vector candidate = y;
                if (std::isfinite(restore(candidate)) && feasible(candidate)) y = std::move(candidate);
            }
        }
        out.iterations = std::min(it, params_.max_iterations);
        out.converged = converged;
        out.primal_residual = r_pri;
        out.dual_residual = r_dual;
        out.state = SolverState{y, u, rho};
        out.estimate = (scale_ / anorm_) * unvec(y.head(nz_), n1_, n2_);
        out.noise_estimate = with_noise_ ? Vector(scale_ * y.tail(nv_)) : Vector::Zero(m_);
        return out;
    }

private:
    Vector apply_k(const Vector& x) const {
        Vector out(nz_ + m_ + nv_);
        out.head(nz_) = x.head(nz_);
        out.segment(nz_, m_) = a_ * x.head(nz_);
        if (with_noise_) {
            out.segment(nz_, m_) += x.tail(nv_);
            out.tail(nv_) = x.tail(nv_);
        }
        return out;
    }

    Vector apply_kt(const Vector& w) const {
        Vector out(nz_ + nv_);
        out.head(nz_) = w.head(nz_) + a_.transpose() * w.segment(nz_, m_);
        if (with_noise_) out.tail(nv_) = w.segment(nz_, m_) + w.tail(nv_);
        return out;
    }

    // Singular value soft-thresholding of the n1 x n2 matrix held in v.
    Vector shrink(const Vector& v, double tau) const {
        const Matrix z = unvec(v, n1_, n2_);
        Eigen::BDCSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector s = (svd.singularValues().array() - tau).max(0.0).matrix();
        return vec(svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose());
    }

    double shaped_norm(const Vector& t) const {
        return ell_.s.cwiseProduct(ell_.v.transpose() * t).norm();
    }

    Vector project_shaped_set(const Vector& point) const {
        const Vector d = point - q_;
        Vector c = ell_.v.transpose() * d;
        const Vector c0 = c;
        project_ellipsoid(c, ell_.s, rw_);
        return point + ell_.v * (c - c0);
    }

    // Feasibility of the candidate (Z, ν) read from (y_a, y_c), in original
    // units, with half the reporting slack held back for roundoff.
    bool feasible(const Vector& y) const {
        Vector t = a_ * y.head(nz_) - q_;
        if (with_noise_) t += y.tail(nv_);
        const double lhs = shaped_norm(t) * scale_;
        return lhs <= ell_.radius * (1 + 0.5e-6) + 0.5e-6;
    }

    // Euclidean projection of the z-block onto {z : ‖W(A z + ν − q)‖ ≤ radius}
    // with ν held fixed. In the SVD coordinates of G = diag(s) Vᵀ A this is
    // an ellipsoid projection around the weighted least-squares point. Returns
    // the size of the move relative to max(1, ‖z‖), or +inf when the set is
    // empty for this ν.
    double restore(Vector& y) {
        if (!restore_ready_) {
            restore_ready_ = true;
            const Matrix g = ell_.s.asDiagonal() * (ell_.v.transpose() * a_);
            Eigen::BDCSVD<Matrix> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Vector sv = svd.singularValues();
            Index k = 0;
            while (k < sv.size() && sv[k] > sv[0] * 1e-13) ++k;
            gu_ = svd.matrixU().leftCols(k);
            gv_ = svd.matrixV().leftCols(k);
            gs_ = sv.head(k);
        }
        Vector target = q_;
        if (with_noise_) target -= y.tail(nv_);
        const Vector h = ell_.s.cwiseProduct(ell_.v.transpose() * target);
        const Vector hc = gu_.transpose() * h;
        // Differencing ‖h‖² − ‖hc‖² cancels badly when W is ill conditioned.
        const double perp2 = (h - gu_ * hc).squaredNorm();
        const double room2 = rw_ * rw_ - perp2;
        if (!(room2 > 0)) return std::numeric_limits<double>::infinity();
        const Vector z = y.head(nz_);
        const Vector center = hc.cwiseQuotient(gs_);
        const Vector w0 = gv_.transpose() * z;
        Vector d = w0 - center;
        project_ellipsoid(d, gs_, std::sqrt(room2) * (1 - 1e-12));
        const Vector dz = gv_ * (center + d - w0);
        y.head(nz_) = z + dz;
        return dz.norm() / std::max(1.0, z.norm());
    }

    bool converged_point(Vector& y) {
        if (feasible(y)) return true;
        Vector candidate = y;
        if (restore(candidate) <= kRestoreTolerance && feasible(candidate)) {
            y = std::move(candidate);
            return true;
        }
        return false;
    }

    static constexpr double kRestoreTolerance = 1e-4;
    bool restore_ready_ = false;
    Matrix gu_, gv_;
    Vector gs_;

    SolverParams params_;
    bool with_noise_ = false;
    ShapedEllipsoid ell_;
    double anorm_ = 1, scale_ = 1, rw_ = 0, rn_ = 0;
    Index n1_ = 0, n2_ = 0, nz_ = 0, m_ = 0, nv_ = 0;
    Matrix a_;
    Vector q_;
    Eigen::LLT<Matrix> llt_;
};

void validate_params(const SolverParams& params) {
    if (params.max_iterations < 1) throw std::invalid_argument("SolverParams: max_iterations must be >= 1");
    if (!(params.tolerance > 0)) throw std::invalid_argument("SolverParams: tolerance must be > 0");
    if (!(params.penalty > 0)) throw std::invalid_argument("SolverParams: penalty must be > 0");
    if (!(params.relaxation > 0 && params.relaxation < 2))
        throw std::invalid_argument("SolverParams: relaxation must lie in (0, 2)");
}

}  // namespace

RecoverySolution recover(const RecoveryProblem& problem, const SolverParams& params,
                         const SolverState* warm_start) {
    problem.validate();
    validate_params(params);
    AdmmSolver solver(problem, params);
    RecoverySolution sol;
    if (solver.zero_is_optimal()) {
        sol = zero_solution(problem);
    } else {
        sol = solver.solve(warm_start);
        sol.residual_shaped = shaped_residual(problem, sol.estimate, sol.noise_estimate);
    }
    sol.objective = nuclear_norm(sol.estimate);
    sol.residual_noise = sol.noise_estimate.norm();
    return sol;
}

RecoverySolution reference_solve(const RecoveryProblem& problem, const SolverParams& base) {
    problem.validate();
    if (problem.op->n1() * problem.op->n2() > 100 || problem.rows() > 200)
        throw std::invalid_argument("reference_solve: small instances only (n1*n2 <= 100, m <= 200)");
    SolverParams params = base;
    params.tolerance = 1e-8;
    params.max_iterations = 10 * base.max_iterations;
    params.relaxation = 1.0;

    auto fail = [](const char* what, const RecoverySolution& s) {
        std::ostringstream msg;
        msg << "reference_solve: " << what << " (iterations " << s.iterations << ", primal "
            << s.primal_residual << ", dual " << s.dual_residual << ", objective " << s.objective
            << ")";
        throw std::runtime_error(msg.str());
    };
    RecoverySolution cold = recover(problem, params);
    if (!cold.converged) fail("cold start did not converge", cold);
    if (cold.iterations == 0) return cold;
    RecoverySolution warm = recover(problem, params, &cold.state);
    if (!warm.converged) fail("warm restart did not converge", warm);
    if (std::abs(warm.objective - cold.objective) > 1e-6 * std::max(1.0, cold.objective))
        fail("warm restart moved the objective", warm);
    if (!check_feasibility(warm, problem).feasible()) fail("solution is infeasible", warm);
    return warm;
}

}  // namespace sdlr

#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "epismooth/convex_set.hpp"
#include "epismooth/polytope.hpp"
#include "epismooth/types.hpp"

namespace epismooth {

/// theta(x) = sup_{u in U} <u, R x - b> - 0.5 u^T B u.
/// U is a box (possibly with infinite bounds) or a Euclidean ball in R^m,
/// B is m x m symmetric psd, R is m x n with full column rank, b in R^m.
struct EPLQSpec {
    ConvexSet U;
    Matrix B;
    Matrix R;
    Vector b;

    Eigen::Index dual_dim() const { return R.rows(); }
    Eigen::Index primal_dim() const { return R.cols(); }
};

namespace detail {

inline bool is_positive_definite(const Matrix& B, double tol = 1e-12) {
    if (B.size() == 0) {
        return true;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(B, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() > tol * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
}

inline bool is_zero_matrix(const Matrix& B) { return B.size() == 0 || B.cwiseAbs().maxCoeff() == 0.0; }

// Largest eigenvalue of a symmetric psd matrix by power iteration.
inline double power_iteration(const Matrix& B, int iterations = 50) {
    const Eigen::Index m = B.rows();
    if (m == 0) {
        return 0.0;
    }
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        // Deterministic start with no special symmetry, so it is not orthogonal
        // to the dominant eigenvector of the usual +-1 structured matrices.
        v(i) = 1.0 + 0.37 * static_cast<double>(i) + 0.1 * std::sin(1.7 * static_cast<double>(i + 1));
    }
    v.normalize();
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        Vector w = B * v;
        const double len = w.norm();
        if (len == 0.0) {
            return 0.0;
        }
        estimate = v.dot(w);
        v = w / len;
    }
    return std::max(estimate, (B * v).norm());
}

} // namespace detail

inline EPLQSpec make_eplq(ConvexSet U, Matrix B, Matrix R, Vector b) {
    if (!std::holds_alternative<Box>(U.kind()) && !std::holds_alternative<EuclideanBall>(U.kind())) {
        throw ArgumentError("EPLQ: U must be a box or a Euclidean ball");
    }
    const Eigen::Index m = U.dim();
    if (B.rows() != m || B.cols() != m || R.rows() != m || b.size() != m) {
        throw ArgumentError("EPLQ: inconsistent dimensions");
    }
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, B.cwiseAbs().maxCoeff())) {
        throw ArgumentError("EPLQ: B must be symmetric");
    }
    if (m > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(B, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff())) {
            throw ArgumentError("EPLQ: B must be positive semidefinite");
        }
    }
    if (R.cols() > 0) {
        Eigen::JacobiSVD<Matrix> svd(R);
        const auto& sv = svd.singularValues();
        if (sv.size() < R.cols() || sv(sv.size() - 1) <= 1e-10 * std::max(1.0, sv(0))) {
            throw ArgumentError("EPLQ: R must have full column rank");
        }
    }
    return EPLQSpec{std::move(U), std::move(B), std::move(R), std::move(b)};
}

/// 1-norm on R^n: U = [-1,1]^n, B = 0, R = I, b = 0.
inline EPLQSpec eplq_one_norm(Eigen::Index n) {
    return make_eplq(ConvexSet::box(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0)), Matrix::Zero(n, n),
                     Matrix::Identity(n, n), Vector::Zero(n));
}

/// Euclidean norm: U = closed unit ball (self-polar), B = 0, R = I, b = 0.
inline EPLQSpec eplq_euclidean_norm(Eigen::Index n) {
    return make_eplq(ConvexSet::euclidean_ball(Vector::Zero(n), 1.0), Matrix::Zero(n, n), Matrix::Identity(n, n),
                     Vector::Zero(n));
}

/// Huber penalty with threshold kappa: U = [-kappa,kappa]^n, B = I, R = I, b = 0.
inline EPLQSpec eplq_huber(Eigen::Index n, double kappa = 1.0) {
    if (!(kappa > 0.0)) {
        throw ArgumentError("huber: kappa must be positive");
    }
    return make_eplq(ConvexSet::box(Vector::Constant(n, -kappa), Vector::Constant(n, kappa)),
                     Matrix::Identity(n, n), Matrix::Identity(n, n), Vector::Zero(n));
}

/// Vapnik penalty sum_i max(0, |x_i| - eps): U = [0,1]^{2n}, B = 0,
/// R = [I; -I], b = eps * ones(2n).
inline EPLQSpec eplq_vapnik(Eigen::Index n, double eps) {
    if (!(eps > 0.0)) {
        throw ArgumentError("vapnik: eps must be positive");
    }
    Matrix R(2 * n, n);
    R << Matrix::Identity(n, n), -Matrix::Identity(n, n);
    return make_eplq(ConvexSet::box(Vector::Zero(2 * n), Vector::Ones(2 * n)), Matrix::Zero(2 * n, 2 * n),
                     std::move(R), Vector::Constant(2 * n, eps));
}

struct QPResult {
    Vector u;
    double value = 0.0;
    int iterations = 0;
};

/// Maximizes c^T u - 0.5 u^T B u over a box or ball by projected gradient with
/// fixed step 1/L, L the power-iteration estimate of the top eigenvalue of B.
/// B == 0 is solved exactly as a linear program over U.
inline QPResult box_qp_maximize(const Matrix& B, const Vector& c, const ConvexSet& U, double tol = 1e-9,
                                int max_iter = 50000, const std::optional<Vector>& warm_start = std::nullopt) {
    const Eigen::Index m = c.size();
    detail::require_dim(U.dim(), m, "box_qp_maximize");
    if (B.rows() != m || B.cols() != m) {
        throw ArgumentError("box_qp_maximize: B has wrong shape");
    }
    const bool is_box = std::holds_alternative<Box>(U.kind());
    if (!is_box && !std::holds_alternative<EuclideanBall>(U.kind())) {
        throw ArgumentError("box_qp_maximize: U must be a box or a Euclidean ball");
    }
    auto objective = [&](const Vector& u) { return c.dot(u) - 0.5 * u.dot(B * u); };

    QPResult out;
    const double L = detail::power_iteration(B);
    if (L <= 1e-14) {
        // Linear objective: maximize over U directly.
        Vector u(m);
        if (is_box) {
            const auto& box = std::get<Box>(U.kind());
            for (Eigen::Index i = 0; i < m; ++i) {
                if (c(i) > 0.0) {
                    u(i) = box.hi(i);
                } else if (c(i) < 0.0) {
                    u(i) = box.lo(i);
                } else {
                    u(i) = std::clamp(0.0, box.lo(i), box.hi(i));
                }
                if (!std::isfinite(u(i))) {
                    throw UnboundedError("box_qp_maximize: linear objective unbounded over U");
                }
            }
        } else {
            const auto& ball = std::get<EuclideanBall>(U.kind());
            const double len = c.norm();
            u = len > 0.0 ? Vector(ball.center + (ball.radius / len) * c) : ball.center;
        }
        out.u = u;
        out.value = c.dot(u);
        return out;
    }

    const double step = 1.0 / L;
    Vector u = project(U, warm_start ? *warm_start : Vector::Zero(m));
    for (int it = 0; it < max_iter; ++it) {
        const Vector grad = c - B * u;
        const Vector next = project(U, u + step * grad);
        const double pg_norm = L * (next - u).norm();
        u = next;
        if (pg_norm <= tol) {
            out.u = u;
            out.value = objective(u);
            out.iterations = it + 1;
            return out;
        }
        if (!u.allFinite() || u.norm() > 1e12) {
            throw UnboundedError("box_qp_maximize: iterates diverge; supremum is unbounded");
        }
    }
    throw ConvergenceError("box_qp_maximize: iteration cap reached", u, L * (project(U, u + step * (c - B * u)) - u).norm());
}

struct EPLQValue {
    double value = 0.0;
    Vector maximizer;
};

inline EPLQValue eplq_value(const EPLQSpec& spec, const Vector& x, double qp_tol = 1e-9) {
    detail::require_dim(x.size(), spec.primal_dim(), "eplq_value");
    const Vector c = spec.R * x - spec.b;
    const QPResult qp = box_qp_maximize(spec.B, c, spec.U, qp_tol);
    return EPLQValue{qp.value, qp.u};
}

/// Subdifferential R^T * argmax. Supported when B is positive definite
/// (single maximizer) or B = 0 with a bounded box (optimal vertices within
/// `tie_tol` of the max) or a ball with a nonzero linear term.
inline ConvexPolytope eplq_subdifferential(const EPLQSpec& spec, const Vector& x, double tie_tol = 1e-9) {
    detail::require_dim(x.size(), spec.primal_dim(), "eplq_subdifferential");
    const Eigen::Index n = spec.primal_dim();
    const Vector c = spec.R * x - spec.b;
    if (detail::is_positive_definite(spec.B)) {
        const QPResult qp = box_qp_maximize(spec.B, c, spec.U, 1e-12);
        return ConvexPolytope::point(spec.R.transpose() * qp.u);
    }
    if (!detail::is_zero_matrix(spec.B)) {
        throw UnsupportedError("eplq_subdifferential: singular nonzero B has no representable argmax face");
    }
    if (const auto* ball = std::get_if<EuclideanBall>(&spec.U.kind())) {
        if (c.norm() * ball->radius <= tie_tol) {
            throw UnsupportedError("eplq_subdifferential: argmax face is a whole ball");
        }
        return ConvexPolytope::point(spec.R.transpose() * (ball->center + (ball->radius / c.norm()) * c));
    }
    const auto& box = std::get<Box>(spec.U.kind());
    if (!box.lo.allFinite() || !box.hi.allFinite()) {
        throw UnsupportedError("eplq_subdifferential: B = 0 requires a bounded box");
    }
    const Eigen::Index m = c.size();
    Vector base(m);
    std::vector<Eigen::Index> tied;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::abs(c(i)) * (box.hi(i) - box.lo(i)) <= tie_tol) {
            tied.push_back(i);
            base(i) = box.lo(i);
        } else {
            base(i) = c(i) > 0.0 ? box.hi(i) : box.lo(i);
        }
    }
    if (tied.size() > 20) {
        throw UnsupportedError("eplq_subdifferential: too many tied coordinates to enumerate");
    }
    const std::size_t count = std::size_t{1} << tied.size();
    std::vector<Vector> vertices;
    std::vector<double> values;
    double best = -kInf;
    for (std::size_t mask = 0; mask < count; ++mask) {
        Vector u = base;
        for (std::size_t j = 0; j < tied.size(); ++j) {
            if (mask & (std::size_t{1} << j)) {
                u(tied[j]) = box.hi(tied[j]);
            }
        }
        const double v = c.dot(u);
        best = std::max(best, v);
        vertices.push_back(std::move(u));
        values.push_back(v);
    }
    ConvexPolytope out;
    out.dim = n;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        if (values[i] >= best - tie_tol) {
            out.generators.push_back(spec.R.transpose() * vertices[i]);
        }
    }
    return out;
}

/// Moreau envelope of an EPLQ function is EPLQ with B replaced by B + mu R R^T.
inline EPLQSpec eplq_moreau(const EPLQSpec& spec, double mu) {
    detail::require_positive_mu(mu, "eplq_moreau");
    if (!spec.U.is_bounded() && !detail::is_positive_definite(spec.B)) {
        throw UnsupportedError("eplq_moreau: need bounded U or positive definite B");
    }
    return EPLQSpec{spec.U, spec.B + mu * spec.R * spec.R.transpose(), spec.R, spec.b};
}

/// Proximal point of theta at x: x - mu R^T u_hat, u_hat maximizing the
/// Moreau-transformed spec.
inline Vector eplq_prox(const EPLQSpec& spec, const Vector& x, double mu, double qp_tol = 1e-12) {
    const EPLQSpec env = eplq_moreau(spec, mu);
    const EPLQValue val = eplq_value(env, x, qp_tol);
    return x - mu * spec.R.transpose() * val.maximizer;
}

} // namespace epismooth

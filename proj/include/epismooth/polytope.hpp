#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "epismooth/types.hpp"

namespace epismooth {

/// conv(generators) + cone(rays). With no generators the hull part is {0}, so
/// an empty polytope is the origin and a rays-only polytope is a cone.
struct ConvexPolytope {
    Eigen::Index dim = 0;
    std::vector<Vector> generators;
    std::vector<Vector> rays;

    static ConvexPolytope origin(Eigen::Index n) { return ConvexPolytope{n, {}, {}}; }
    static ConvexPolytope point(const Vector& p) { return ConvexPolytope{p.size(), {p}, {}}; }
    static ConvexPolytope cone(Eigen::Index n, std::vector<Vector> rays) {
        return ConvexPolytope{n, {}, std::move(rays)};
    }

    bool is_singleton() const { return rays.empty() && generators.size() <= 1; }
};

struct SimplexMinNormResult {
    Vector weights;
    double residual = 0.0;
    int iterations = 0;
};

/// Minimizes 0.5*||G*lambda||^2 over the unit simplex by Frank-Wolfe with away
/// steps and exact line search. Stops when the Frank-Wolfe gap drops below
/// 0.5*tol^2, which bounds 0.5*||G lambda||^2 - min from above, or below the
/// rounding level of the Gram matrix when tol asks for more than that.
inline SimplexMinNormResult simplex_min_norm(const Matrix& G, double tol = 1e-8, int max_iter = 100000) {
    const Eigen::Index k = G.cols();
    if (k < 1) {
        throw ArgumentError("simplex_min_norm: need at least one column");
    }
    const Matrix gram = G.transpose() * G;

    // Start at the column of smallest norm.
    Eigen::Index start = 0;
    gram.diagonal().minCoeff(&start);
    Vector lambda = Vector::Zero(k);
    lambda(start) = 1.0;
    Vector glam = gram.col(start); // gram * lambda

    const double rounding = 64.0 * std::numeric_limits<double>::epsilon() * gram.diagonal().maxCoeff();
    const double stop_gap = std::max({0.5 * tol * tol, rounding, 1e-300});
    SimplexMinNormResult out;
    for (int it = 0; it < max_iter; ++it) {
        // gradient of 0.5 lambda^T gram lambda is glam
        const double dot = glam.dot(lambda);
        Eigen::Index s = 0;
        glam.minCoeff(&s);
        Eigen::Index v = -1;
        double vmax = -kInf;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (lambda(i) > 0.0 && glam(i) > vmax) {
                vmax = glam(i);
                v = i;
            }
        }
        const double fw_gap = dot - glam(s);
        const double away_gap = vmax - dot;
        if (fw_gap <= stop_gap) {
            out.weights = lambda;
            out.residual = std::sqrt(std::max(0.0, dot));
            out.iterations = it;
            return out;
        }

        Vector dir = -lambda;
        double gamma_max = 1.0;
        if (fw_gap >= away_gap || v < 0 || lambda(v) >= 1.0) {
            dir(s) += 1.0;
        } else {
            dir = lambda;
            dir(v) -= 1.0;
            gamma_max = lambda(v) / (1.0 - lambda(v));
        }
        const Vector gdir = gram * dir;
        const double curv = dir.dot(gdir);
        const double slope = glam.dot(dir);
        double gamma = gamma_max;
        if (curv > 0.0) {
            gamma = std::clamp(-slope / curv, 0.0, gamma_max);
        }
        if (gamma <= 0.0) {
            // No progress possible along the chosen direction: we are optimal to
            // working precision.
            out.weights = lambda;
            out.residual = std::sqrt(std::max(0.0, dot));
            out.iterations = it;
            return out;
        }
        lambda += gamma * dir;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (lambda(i) < 1e-15) {
                lambda(i) = 0.0;
            }
        }
        lambda /= lambda.sum();
        glam = gram * lambda;
    }
    const double res = std::sqrt(std::max(0.0, glam.dot(lambda)));
    throw ConvergenceError("simplex_min_norm: iteration cap reached", lambda, res);
}

struct NearestPointResult {
    Vector point;
    double distance = 0.0;
    Vector hull_weights; // one per generator (or the implicit origin)
    Vector ray_weights;
};

namespace detail {

// Primal active-set method for
//   min 0.5*||G*lambda + R*t - v||^2   s.t. lambda >= 0, sum(lambda) = 1, t >= 0.
// Small dense problems only. Finite termination barring degenerate cycling,
// which is caught by the iteration cap.
inline NearestPointResult nearest_hull_plus_cone(const Matrix& G, const Matrix& R, const Vector& v) {
    const Eigen::Index kg = G.cols();
    const Eigen::Index kr = R.cols();
    const Eigen::Index k = kg + kr;
    Matrix M(v.size(), k);
    M << G, R;
    const Matrix gram = M.transpose() * M;
    const Vector mtv = M.transpose() * v;

    std::vector<bool> passive(static_cast<std::size_t>(k), false);
    Vector z = Vector::Zero(k);
    {
        Eigen::Index best = 0;
        double best_d = kInf;
        for (Eigen::Index i = 0; i < kg; ++i) {
            const double d = (G.col(i) - v).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        z(best) = 1.0;
        passive[static_cast<std::size_t>(best)] = true;
    }

    auto solve_subproblem = [&](Vector& sol, double& nu) {
        std::vector<Eigen::Index> idx;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (passive[static_cast<std::size_t>(i)]) {
                idx.push_back(i);
            }
        }
        const auto p = static_cast<Eigen::Index>(idx.size());
        Matrix kkt = Matrix::Zero(p + 1, p + 1);
        Vector rhs = Vector::Zero(p + 1);
        for (Eigen::Index a = 0; a < p; ++a) {
            for (Eigen::Index b = 0; b < p; ++b) {
                kkt(a, b) = gram(idx[a], idx[b]);
            }
            const bool is_hull = idx[a] < kg;
            kkt(a, p) = is_hull ? 1.0 : 0.0;
            kkt(p, a) = is_hull ? 1.0 : 0.0;
            rhs(a) = mtv(idx[a]);
        }
        rhs(p) = 1.0;
        const Vector x = kkt.completeOrthogonalDecomposition().solve(rhs);
        sol = Vector::Zero(k);
        for (Eigen::Index a = 0; a < p; ++a) {
            sol(idx[a]) = x(a);
        }
        nu = x(p);
    };

    const int max_outer = static_cast<int>(20 * k + 100);
    double nu = 0.0;
    Vector trial;
    solve_subproblem(trial, nu);
    z = trial;
    for (int outer = 0; outer < max_outer; ++outer) {
        const Vector grad = gram * z - mtv;
        const double scale = 1e-12 * (1.0 + mtv.cwiseAbs().maxCoeff() + gram.cwiseAbs().maxCoeff());
        Eigen::Index enter = -1;
        double most_negative = -scale;
        for (Eigen::Index i = 0; i < k; ++i) {
            if (passive[static_cast<std::size_t>(i)]) {
                continue;
            }
            const double reduced = grad(i) + (i < kg ? nu : 0.0);
            if (reduced < most_negative) {
                most_negative = reduced;
                enter = i;
            }
        }
        if (enter < 0) {
            NearestPointResult out;
            out.point = M * z;
            out.distance = (out.point - v).norm();
            out.hull_weights = z.head(kg);
            out.ray_weights = z.tail(kr);
            return out;
        }
        passive[static_cast<std::size_t>(enter)] = true;

        for (int inner = 0; inner < max_outer; ++inner) {
            solve_subproblem(trial, nu);
            bool feasible = true;
            for (Eigen::Index i = 0; i < k; ++i) {
                if (passive[static_cast<std::size_t>(i)] && trial(i) <= 0.0) {
                    feasible = false;
                    break;
                }
            }
            if (feasible) {
                z = trial;
                break;
            }
            double alpha = 1.0;
            for (Eigen::Index i = 0; i < k; ++i) {
                if (passive[static_cast<std::size_t>(i)] && trial(i) <= 0.0) {
                    const double denom = z(i) - trial(i);
                    if (denom > 0.0) {
                        alpha = std::min(alpha, z(i) / denom);
                    }
                }
            }
            z += alpha * (trial - z);
            for (Eigen::Index i = 0; i < k; ++i) {
                if (passive[static_cast<std::size_t>(i)] && z(i) <= 1e-14) {
                    passive[static_cast<std::size_t>(i)] = false;
                    z(i) = 0.0;
                }
            }
            if (kg > 0) {
                const double s = z.head(kg).sum();
                if (s > 0.0) {
                    z.head(kg) /= s;
                }
            }
        }
    }
    const Vector best = M * z;
    throw ConvergenceError("nearest point in polytope: active-set iteration cap", best, (best - v).norm());
}

} // namespace detail

/// Euclidean projection of v onto the polytope, with the combination weights.
inline NearestPointResult nearest_point(const ConvexPolytope& poly, const Vector& v) {
    detail::require_dim(v.size(), poly.dim, "nearest_point");
    const Eigen::Index n = poly.dim;
    Matrix G;
    if (poly.generators.empty()) {
        G = Matrix::Zero(n, 1);
    } else {
        G.resize(n, static_cast<Eigen::Index>(poly.generators.size()));
        for (std::size_t i = 0; i < poly.generators.size(); ++i) {
            detail::require_dim(poly.generators[i].size(), n, "nearest_point generator");
            G.col(static_cast<Eigen::Index>(i)) = poly.generators[i];
        }
    }
    Matrix R(n, static_cast<Eigen::Index>(poly.rays.size()));
    for (std::size_t j = 0; j < poly.rays.size(); ++j) {
        detail::require_dim(poly.rays[j].size(), n, "nearest_point ray");
        const double len = poly.rays[j].norm();
        // Rays are normalized; a zero ray adds nothing to the cone.
        R.col(static_cast<Eigen::Index>(j)) = len > 0.0 ? Vector(poly.rays[j] / len) : Vector::Zero(n);
    }
    return detail::nearest_hull_plus_cone(G, R, v);
}

inline double distance_to(const ConvexPolytope& poly, const Vector& v) { return nearest_point(poly, v).distance; }

/// Image of the polytope under a linear map.
inline ConvexPolytope map_polytope(const Matrix& A, const ConvexPolytope& poly) {
    ConvexPolytope out;
    out.dim = A.rows();
    for (const auto& g : poly.generators) {
        out.generators.push_back(A * g);
    }
    for (const auto& r : poly.rays) {
        out.rays.push_back(A * r);
    }
    return out;
}

/// Minkowski sum. Generator count multiplies, so keep the inputs small.
inline ConvexPolytope minkowski_sum(const ConvexPolytope& a, const ConvexPolytope& b) {
    detail::require_dim(b.dim, a.dim, "minkowski_sum");
    ConvexPolytope out;
    out.dim = a.dim;
    if (a.generators.empty()) {
        out.generators = b.generators;
    } else if (b.generators.empty()) {
        out.generators = a.generators;
    } else {
        for (const auto& ga : a.generators) {
            for (const auto& gb : b.generators) {
                out.generators.push_back(ga + gb);
            }
        }
    }
    out.rays = a.rays;
    out.rays.insert(out.rays.end(), b.rays.begin(), b.rays.end());
    return out;
}

inline ConvexPolytope translate(const ConvexPolytope& poly, const Vector& shift) {
    ConvexPolytope out = poly;
    if (out.generators.empty()) {
        out.generators.push_back(shift);
    } else {
        for (auto& g : out.generators) {
            g += shift;
        }
    }
    return out;
}

} // namespace epismooth

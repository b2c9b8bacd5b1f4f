#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "epismooth/polytope.hpp"
#include "epismooth/types.hpp"

namespace epismooth {

struct Box {
    Vector lo;
    Vector hi;
};

struct EuclideanBall {
    Vector center;
    double radius = 0.0;
};

/// {0}^s x R_-^(m-s): the constraint set of a standard nonlinear program with
/// s equalities followed by m-s inequalities h_i(x) <= 0.
struct ZeroCrossNegative {
    Eigen::Index s = 0;
    Eigen::Index m = 0;
};

/// {y : A y = c}, A with full row rank.
struct AffineSubspace {
    Matrix A;
    Vector c;
};

struct Singleton {
    Vector point;
};

struct NonnegOrthant {
    Eigen::Index m = 0;
};

struct WholeSpace {
    Eigen::Index m = 0;
};

/// A nonempty closed convex set with an exact projection.
class ConvexSet {
  public:
    using Kind = std::variant<Box, EuclideanBall, ZeroCrossNegative, AffineSubspace, Singleton, NonnegOrthant, WholeSpace>;

    static ConvexSet box(Vector lo, Vector hi) {
        if (lo.size() != hi.size()) {
            throw ArgumentError("box: lo/hi dimension mismatch");
        }
        for (Eigen::Index i = 0; i < lo.size(); ++i) {
            if (!(lo(i) <= hi(i))) {
                throw ArgumentError("box: lo must not exceed hi");
            }
        }
        return ConvexSet(Box{std::move(lo), std::move(hi)});
    }
    static ConvexSet euclidean_ball(Vector center, double radius) {
        if (!(radius >= 0.0)) {
            throw ArgumentError("euclidean_ball: radius must be nonnegative");
        }
        return ConvexSet(EuclideanBall{std::move(center), radius});
    }
    static ConvexSet zero_cross_negative(Eigen::Index s, Eigen::Index m) {
        if (s < 0 || m < s) {
            throw ArgumentError("zero_cross_negative: need 0 <= s <= m");
        }
        return ConvexSet(ZeroCrossNegative{s, m});
    }
    static ConvexSet affine_subspace(Matrix A, Vector c) {
        if (A.rows() != c.size()) {
            throw ArgumentError("affine_subspace: A rows must match c");
        }
        if (A.rows() > 0) {
            Eigen::JacobiSVD<Matrix> svd(A);
            const auto& sv = svd.singularValues();
            if (sv.size() < A.rows() || sv(sv.size() - 1) <= 1e-10 * std::max(1.0, sv(0))) {
                throw ArgumentError("affine_subspace: A must have full row rank");
            }
        }
        return ConvexSet(AffineSubspace{std::move(A), std::move(c)});
    }
    static ConvexSet singleton(Vector point) { return ConvexSet(Singleton{std::move(point)}); }
    static ConvexSet nonneg_orthant(Eigen::Index m) { return ConvexSet(NonnegOrthant{m}); }
    static ConvexSet whole_space(Eigen::Index m) { return ConvexSet(WholeSpace{m}); }

    const Kind& kind() const noexcept { return kind_; }

    Eigen::Index dim() const {
        return std::visit(
            [](const auto& k) -> Eigen::Index {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Box>) {
                    return k.lo.size();
                } else if constexpr (std::is_same_v<T, EuclideanBall>) {
                    return k.center.size();
                } else if constexpr (std::is_same_v<T, ZeroCrossNegative>) {
                    return k.m;
                } else if constexpr (std::is_same_v<T, AffineSubspace>) {
                    return k.A.cols();
                } else if constexpr (std::is_same_v<T, Singleton>) {
                    return k.point.size();
                } else {
                    return k.m;
                }
            },
            kind_);
    }

    bool is_bounded() const {
        if (const auto* b = std::get_if<Box>(&kind_)) {
            return b->lo.allFinite() && b->hi.allFinite();
        }
        return std::holds_alternative<EuclideanBall>(kind_) || std::holds_alternative<Singleton>(kind_) ||
               (std::holds_alternative<ZeroCrossNegative>(kind_) && std::get<ZeroCrossNegative>(kind_).s ==
                                                                         std::get<ZeroCrossNegative>(kind_).m) ||
               dim() == 0;
    }

    std::string describe() const {
        return std::visit(
            [](const auto& k) -> std::string {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, Box>) {
                    return "box";
                } else if constexpr (std::is_same_v<T, EuclideanBall>) {
                    return "euclidean_ball";
                } else if constexpr (std::is_same_v<T, ZeroCrossNegative>) {
                    return "zero_cross_negative";
                } else if constexpr (std::is_same_v<T, AffineSubspace>) {
                    return "affine_subspace";
                } else if constexpr (std::is_same_v<T, Singleton>) {
                    return "singleton";
                } else if constexpr (std::is_same_v<T, NonnegOrthant>) {
                    return "nonneg_orthant";
                } else {
                    return "whole_space";
                }
            },
            kind_);
    }

  private:
    explicit ConvexSet(Kind k) : kind_(std::move(k)) {}

    Kind kind_;
};

inline Vector project(const ConvexSet& set, const Vector& y) {
    detail::require_dim(y.size(), set.dim(), "project");
    return std::visit(
        [&](const auto& k) -> Vector {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Box>) {
                return y.cwiseMax(k.lo).cwiseMin(k.hi);
            } else if constexpr (std::is_same_v<T, EuclideanBall>) {
                const Vector d = y - k.center;
                const double len = d.norm();
                if (len <= k.radius) {
                    return y;
                }
                return k.center + (k.radius / len) * d;
            } else if constexpr (std::is_same_v<T, ZeroCrossNegative>) {
                Vector p = y.cwiseMin(0.0);
                p.head(k.s).setZero();
                return p;
            } else if constexpr (std::is_same_v<T, AffineSubspace>) {
                if (k.A.rows() == 0) {
                    return y;
                }
                const Vector r = k.A * y - k.c;
                const Matrix aat = k.A * k.A.transpose();
                return y - k.A.transpose() * aat.ldlt().solve(r);
            } else if constexpr (std::is_same_v<T, Singleton>) {
                return k.point;
            } else if constexpr (std::is_same_v<T, NonnegOrthant>) {
                return y.cwiseMax(0.0);
            } else {
                return y;
            }
        },
        set.kind());
}

inline double distance(const ConvexSet& set, const Vector& y) { return (y - project(set, y)).norm(); }

/// Gradient of 0.5*dist^2(.|C), which is y - proj_C(y).
inline Vector dist_sq_half_gradient(const ConvexSet& set, const Vector& y) { return y - project(set, y); }

inline bool contains(const ConvexSet& set, const Vector& y, double tol = 0.0) { return distance(set, y) <= tol; }

/// Finite ray generators of N(proj_C(y) | C). Faces within `tol` of the
/// projection count as active. A full space of normals is returned as +-e_i.
inline ConvexPolytope normal_cone(const ConvexSet& set, const Vector& y, double tol = 1e-9) {
    const Eigen::Index m = set.dim();
    if (distance(set, y) > tol) {
        throw PreconditionError("normal_cone: point is farther than tol from the set");
    }
    const Vector p = project(set, y);
    std::vector<Vector> rays;
    auto unit = [m](Eigen::Index i, double sign) {
        Vector e = Vector::Zero(m);
        e(i) = sign;
        return e;
    };
    std::visit(
        [&](const auto& k) {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, Box>) {
                for (Eigen::Index i = 0; i < m; ++i) {
                    if (p(i) >= k.hi(i) - tol) {
                        rays.push_back(unit(i, 1.0));
                    }
                    if (p(i) <= k.lo(i) + tol) {
                        rays.push_back(unit(i, -1.0));
                    }
                }
            } else if constexpr (std::is_same_v<T, EuclideanBall>) {
                const Vector d = p - k.center;
                if (k.radius <= tol) {
                    for (Eigen::Index i = 0; i < m; ++i) {
                        rays.push_back(unit(i, 1.0));
                        rays.push_back(unit(i, -1.0));
                    }
                } else if (d.norm() >= k.radius - tol) {
                    rays.push_back(d / d.norm());
                }
            } else if constexpr (std::is_same_v<T, ZeroCrossNegative>) {
                for (Eigen::Index i = 0; i < k.s; ++i) {
                    rays.push_back(unit(i, 1.0));
                    rays.push_back(unit(i, -1.0));
                }
                for (Eigen::Index i = k.s; i < m; ++i) {
                    if (p(i) >= -tol) {
                        rays.push_back(unit(i, 1.0));
                    }
                }
            } else if constexpr (std::is_same_v<T, AffineSubspace>) {
                for (Eigen::Index r = 0; r < k.A.rows(); ++r) {
                    const Vector row = k.A.row(r).transpose();
                    rays.push_back(row / row.norm());
                    rays.push_back(-row / row.norm());
                }
            } else if constexpr (std::is_same_v<T, Singleton>) {
                for (Eigen::Index i = 0; i < m; ++i) {
                    rays.push_back(unit(i, 1.0));
                    rays.push_back(unit(i, -1.0));
                }
            } else if constexpr (std::is_same_v<T, NonnegOrthant>) {
                for (Eigen::Index i = 0; i < m; ++i) {
                    if (p(i) <= tol) {
                        rays.push_back(unit(i, -1.0));
                    }
                }
            }
        },
        set.kind());
    return ConvexPolytope::cone(m, std::move(rays));
}

} // namespace epismooth

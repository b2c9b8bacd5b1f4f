#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "epismooth/convex_set.hpp"
#include "epismooth/eplq.hpp"
#include "epismooth/polytope.hpp"
#include "epismooth/types.hpp"

namespace epismooth {

/// A proper lsc convex function g : R^n -> R u {+inf} given by oracles.
struct ConvexFunctionOracle {
    std::string name;
    Eigen::Index dim = 0;
    std::function<double(const Vector&)> value;
    /// argmin_w g(w) + ||w - x||^2 / (2 mu). May be empty.
    std::function<Vector(const Vector&, double)> prox;
    ConvexSet domain = ConvexSet::whole_space(0);
    /// Polyhedral subdifferential. Empty when no representation is available.
    std::function<ConvexPolytope(const Vector&)> subdiff;
    bool bounded_below = true;

    bool has_prox() const { return static_cast<bool>(prox); }
    bool has_subdiff() const { return static_cast<bool>(subdiff); }
};

/// A differentiable function with its gradient.
struct SmoothFunction {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
};

inline double soft_threshold(double x, double t) {
    if (x > t) {
        return x - t;
    }
    if (x < -t) {
        return x + t;
    }
    return 0.0;
}

inline Vector soft_threshold(const Vector& x, double t) {
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        out(i) = soft_threshold(x(i), t);
    }
    return out;
}

namespace detail {

// Product of per-coordinate intervals [lo_i, hi_i] as a vertex list.
inline ConvexPolytope interval_product(const Vector& lo, const Vector& hi) {
    const Eigen::Index n = lo.size();
    std::vector<Eigen::Index> wide;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (hi(i) > lo(i)) {
            wide.push_back(i);
        }
    }
    if (wide.size() > 20) {
        throw UnsupportedError("subdifferential: too many kinks to enumerate");
    }
    ConvexPolytope out;
    out.dim = n;
    const std::size_t count = std::size_t{1} << wide.size();
    for (std::size_t mask = 0; mask < count; ++mask) {
        Vector v = lo;
        for (std::size_t j = 0; j < wide.size(); ++j) {
            if (mask & (std::size_t{1} << j)) {
                v(wide[j]) = hi(wide[j]);
            }
        }
        out.generators.push_back(std::move(v));
    }
    return out;
}

} // namespace detail

inline ConvexFunctionOracle zero_function(Eigen::Index n) {
    ConvexFunctionOracle g;
    g.name = "zero";
    g.dim = n;
    g.value = [](const Vector&) { return 0.0; };
    g.prox = [](const Vector& x, double) { return x; };
    g.domain = ConvexSet::whole_space(n);
    g.subdiff = [n](const Vector&) { return ConvexPolytope::origin(n); };
    return g;
}

/// weight * ||x||_1. Coordinates with |x_i| <= zero_tol are treated as kinks
/// by the subdifferential oracle.
inline ConvexFunctionOracle one_norm(Eigen::Index n, double weight = 1.0, double zero_tol = 1e-8) {
    if (!(weight > 0.0)) {
        throw ArgumentError("one_norm: weight must be positive");
    }
    ConvexFunctionOracle g;
    g.name = "one_norm";
    g.dim = n;
    g.value = [weight](const Vector& x) { return weight * x.lpNorm<1>(); };
    g.prox = [weight](const Vector& x, double mu) { return soft_threshold(x, weight * mu); };
    g.domain = ConvexSet::whole_space(n);
    g.subdiff = [n, weight, zero_tol](const Vector& x) {
        Vector lo(n), hi(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(x(i)) <= zero_tol) {
                lo(i) = -weight;
                hi(i) = weight;
            } else {
                lo(i) = hi(i) = x(i) > 0.0 ? weight : -weight;
            }
        }
        return detail::interval_product(lo, hi);
    };
    return g;
}

inline double huber_scalar(double x, double kappa) {
    const double a = std::abs(x);
    return a <= kappa ? 0.5 * x * x : kappa * a - 0.5 * kappa * kappa;
}

/// sum_i huber_kappa(x_i); smooth, so the subdifferential is a singleton.
inline ConvexFunctionOracle huber(Eigen::Index n, double kappa = 1.0) {
    if (!(kappa > 0.0)) {
        throw ArgumentError("huber: kappa must be positive");
    }
    ConvexFunctionOracle g;
    g.name = "huber";
    g.dim = n;
    g.value = [kappa](const Vector& x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            s += huber_scalar(x(i), kappa);
        }
        return s;
    };
    g.prox = [kappa](const Vector& x, double mu) {
        Vector w(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double xi = x(i);
            w(i) = std::abs(xi) <= kappa * (1.0 + mu) ? xi / (1.0 + mu) : xi - mu * kappa * (xi > 0.0 ? 1.0 : -1.0);
        }
        return w;
    };
    g.domain = ConvexSet::whole_space(n);
    g.subdiff = [kappa](const Vector& x) {
        return ConvexPolytope::point(x.cwiseMax(-kappa).cwiseMin(kappa));
    };
    return g;
}

/// sum_i max(0, |x_i| - eps).
inline ConvexFunctionOracle vapnik(Eigen::Index n, double eps, double kink_tol = 1e-8) {
    if (!(eps > 0.0)) {
        throw ArgumentError("vapnik: eps must be positive");
    }
    ConvexFunctionOracle g;
    g.name = "vapnik";
    g.dim = n;
    g.value = [eps](const Vector& x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            s += std::max(0.0, std::abs(x(i)) - eps);
        }
        return s;
    };
    g.prox = [eps](const Vector& x, double mu) {
        Vector w(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double a = std::abs(x(i));
            const double sgn = x(i) > 0.0 ? 1.0 : -1.0;
            if (a <= eps) {
                w(i) = x(i);
            } else if (a <= eps + mu) {
                w(i) = sgn * eps;
            } else {
                w(i) = x(i) - sgn * mu;
            }
        }
        return w;
    };
    g.domain = ConvexSet::whole_space(n);
    g.subdiff = [n, eps, kink_tol](const Vector& x) {
        Vector lo(n), hi(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double a = std::abs(x(i));
            const double sgn = x(i) > 0.0 ? 1.0 : -1.0;
            if (std::abs(a - eps) <= kink_tol) {
                lo(i) = std::min(0.0, sgn);
                hi(i) = std::max(0.0, sgn);
            } else if (a < eps) {
                lo(i) = hi(i) = 0.0;
            } else {
                lo(i) = hi(i) = sgn;
            }
        }
        return detail::interval_product(lo, hi);
    };
    return g;
}

/// delta(.|C). Points within `member_tol` of C count as members.
inline ConvexFunctionOracle indicator(const ConvexSet& set, double member_tol = 1e-12) {
    ConvexFunctionOracle g;
    g.name = "indicator_" + set.describe();
    g.dim = set.dim();
    g.value = [set, member_tol](const Vector& x) {
        return distance(set, x) <= member_tol * (1.0 + x.norm()) ? 0.0 : kInf;
    };
    g.prox = [set](const Vector& x, double) { return project(set, x); };
    g.domain = set;
    g.subdiff = [set](const Vector& x) { return normal_cone(set, x, 1e-9); };
    return g;
}

/// theta_{(U,B,R,b)} with exact prox through the Moreau-transformed spec.
inline ConvexFunctionOracle eplq_function(const EPLQSpec& spec, std::string name = "eplq", double tie_tol = 1e-9) {
    ConvexFunctionOracle g;
    g.name = std::move(name);
    g.dim = spec.primal_dim();
    g.value = [spec](const Vector& x) { return eplq_value(spec, x).value; };
    g.prox = [spec](const Vector& x, double mu) { return eplq_prox(spec, x, mu); };
    g.domain = ConvexSet::whole_space(spec.primal_dim());
    g.subdiff = [spec, tie_tol](const Vector& x) { return eplq_subdifferential(spec, x, tie_tol); };
    g.bounded_below = true; // theta >= -<u0, b> - 0.5 u0^T B u0 for any fixed u0 in U
    return g;
}

/// w * g. Uses prox_{mu}(w g) = prox_{w mu}(g).
inline ConvexFunctionOracle scaled(const ConvexFunctionOracle& g, double w) {
    if (!(w > 0.0)) {
        throw ArgumentError("scaled: weight must be positive");
    }
    ConvexFunctionOracle out = g;
    out.name = std::to_string(w) + "*" + g.name;
    out.value = [v = g.value, w](const Vector& x) {
        const double gx = v(x);
        return std::isinf(gx) ? gx : w * gx;
    };
    if (g.prox) {
        out.prox = [p = g.prox, w](const Vector& x, double mu) { return p(x, w * mu); };
    }
    if (g.subdiff) {
        out.subdiff = [s = g.subdiff, w](const Vector& x) {
            ConvexPolytope poly = s(x);
            for (auto& gen : poly.generators) {
                gen *= w;
            }
            return poly;
        };
    }
    return out;
}

/// ||x||_1 + 0.5 ||x - x0||^2, whose unique minimizer is soft_threshold(x0, 1).
inline ConvexFunctionOracle one_norm_plus_quadratic(const Vector& x0, double zero_tol = 1e-8) {
    const Eigen::Index n = x0.size();
    ConvexFunctionOracle g;
    g.name = "one_norm_plus_quadratic";
    g.dim = n;
    g.value = [x0](const Vector& x) { return x.lpNorm<1>() + 0.5 * (x - x0).squaredNorm(); };
    g.prox = [x0](const Vector& x, double mu) {
        const Vector center = (mu * x0 + x) / (1.0 + mu);
        return soft_threshold(center, mu / (1.0 + mu));
    };
    g.domain = ConvexSet::whole_space(n);
    g.subdiff = [x0, l1 = one_norm(n, 1.0, zero_tol)](const Vector& x) {
        return translate(l1.subdiff(x), x - x0);
    };
    return g;
}

} // namespace epismooth

#pragma once

#include <optional>
#include <string>

#include "epismooth/composite.hpp"
#include "epismooth/convex_set.hpp"
#include "epismooth/functions.hpp"
#include "epismooth/polytope.hpp"
#include "epismooth/smooth_map.hpp"
#include "epismooth/smoothing.hpp"
#include "epismooth/types.hpp"

namespace epismooth {

/// minimize phi(x) [+ r(x)] subject to h(x) in C.
/// The optional convex term r is kept out of the penalty and enters the
/// stationarity residual through its subdifferential.
struct ConstrainedProblem {
    SmoothFunction objective;
    SmoothMap h;
    ConvexSet C = ConvexSet::whole_space(0);
    std::optional<ConvexFunctionOracle> regularizer;

    Eigen::Index n() const { return h.in_dim; }
    Eigen::Index m() const { return h.out_dim; }
};

inline void validate(const ConstrainedProblem& p) {
    if (!p.objective.value || !p.objective.gradient || !p.h.value || !p.h.jacobian) {
        throw ArgumentError("constrained problem: missing oracle");
    }
    detail::require_dim(p.C.dim(), p.h.out_dim, "constrained problem: set vs constraint map");
    if (p.regularizer) {
        detail::require_dim(p.regularizer->dim, p.h.in_dim, "constrained problem: regularizer");
    }
}

/// s_f(x, mu) = phi(x) + dist^2(h(x)|C) / (2 mu).
inline SmoothingFamily penalty_family(const ConstrainedProblem& p) {
    validate(p);
    SmoothingFamily fam;
    fam.target = "phi + indicator(h(x) in " + p.C.describe() + ")";
    fam.provenance = {"penalty"};
    fam.dim = p.n();
    fam.eval = [p](const Vector& x, double mu) {
        detail::require_positive_mu(mu, "penalty_family");
        const double d = distance(p.C, p.h.value(x));
        return p.objective.value(x) + d * d / (2.0 * mu);
    };
    fam.grad = [p](const Vector& x, double mu) {
        detail::require_positive_mu(mu, "penalty_family");
        Vector g = p.objective.gradient(x);
        if (p.m() > 0) {
            const Vector hx = p.h.value(x);
            g += p.h.jacobian(x).transpose() * (dist_sq_half_gradient(p.C, hx) / mu);
        }
        return g;
    };
    fam.target_value = [p](const Vector& x) {
        const Vector hx = p.h.value(x);
        return distance(p.C, hx) <= 1e-12 * (1.0 + hx.norm()) ? p.objective.value(x) : kInf;
    };
    fam.monotone = true;
    return fam;
}

/// The same family assembled through the calculus: g(gamma, y) = gamma + delta(y|C)
/// smoothed in its indicator part only, composed with H = (phi, h).
inline SmoothingFamily penalty_family_via_composite(const ConstrainedProblem& p) {
    validate(p);
    const Eigen::Index m = p.m();
    if (m == 0) {
        throw ArgumentError("penalty_family_via_composite: needs at least one constraint");
    }
    const ConvexFunctionOracle ind = indicator(p.C);
    Matrix select = Matrix::Zero(m, m + 1);
    select.rightCols(m) = Matrix::Identity(m, m);
    const SmoothingFamily lifted = calculus_affine(select, Vector::Zero(m), moreau_family(ind));
    SmoothFunction gamma{[](const Vector& z) { return z(0); },
                         [m](const Vector&) {
                             Vector e = Vector::Zero(m + 1);
                             e(0) = 1.0;
                             return e;
                         }};
    const SmoothingFamily fam_g = calculus_sum_smooth(gamma, lifted);

    ConvexFunctionOracle g;
    g.name = "gamma + indicator";
    g.dim = m + 1;
    g.value = [ind](const Vector& z) {
        const double v = ind.value(z.tail(z.size() - 1));
        return std::isinf(v) ? v : z(0) + v;
    };
    // dom g = R x C is not a supported set kind; composite_family only needs the value.
    g.domain = ConvexSet::whole_space(m + 1);
    CompositeProblem cp{g, stack(p.objective.value, p.objective.gradient, p.h), fam_g, false};
    return composite_family(cp);
}

/// y = (h(x) - proj_C(h(x))) / mu.
inline Vector multiplier_estimate(const ConstrainedProblem& p, const Vector& x, double mu) {
    detail::require_positive_mu(mu, "multiplier_estimate");
    if (p.m() == 0) {
        return Vector::Zero(0);
    }
    return dist_sq_half_gradient(p.C, p.h.value(x)) / mu;
}

struct KKTTolerances {
    double stationarity = 1e-6;
    double feasibility = 1e-6;
    double cone = 1e-6;
};

enum class Classification { kkt_point, infeasible_stationary, undetermined };

inline std::string to_string(Classification c) {
    switch (c) {
    case Classification::kkt_point:
        return "kkt_point";
    case Classification::infeasible_stationary:
        return "infeasible_stationary";
    default:
        return "undetermined";
    }
}

struct InfeasibleStationarity {
    bool is_candidate = false;
    double psi = 0.0;      // dist(h(x)|C)
    double residual = 0.0; // ||h'(x)^T (h(x) - proj) || / dist
};

/// Tests 0 in d psi(x) for psi = dist(h(.)|C) at a strictly infeasible x.
inline InfeasibleStationarity infeasible_stationarity_check(const ConstrainedProblem& p, const Vector& x,
                                                            double tol = 1e-6, std::optional<double> feas_tol = {}) {
    validate(p);
    const Vector hx = p.h.value(x);
    const Vector diff = dist_sq_half_gradient(p.C, hx);
    const double psi = diff.norm();
    if (!(psi > feas_tol.value_or(tol))) {
        throw PreconditionError("infeasible_stationarity_check: point is feasible within tol");
    }
    InfeasibleStationarity out;
    out.psi = psi;
    out.residual = (p.h.jacobian(x).transpose() * diff).norm() / psi;
    out.is_candidate = out.residual <= tol;
    return out;
}

struct KKTReport {
    double stationarity_residual = 0.0;
    double feasibility_residual = 0.0;
    double cone_residual = 0.0;
    Classification classification = Classification::undetermined;
    std::optional<InfeasibleStationarity> infeasibility;
};

/// Residuals of 0 in grad phi(x) + dr(x) + h'(x)^T y, y in N(proj_C(h(x))|C).
inline KKTReport kkt_report(const ConstrainedProblem& p, const Vector& x, const Vector& y,
                            const KKTTolerances& tol = {}) {
    validate(p);
    detail::require_dim(y.size(), p.m(), "kkt_report multiplier");
    KKTReport rep;
    Vector lagrangian_grad = p.objective.gradient(x);
    if (p.m() > 0) {
        lagrangian_grad += p.h.jacobian(x).transpose() * y;
    }
    if (p.regularizer && p.regularizer->has_subdiff()) {
        rep.stationarity_residual = distance_to(p.regularizer->subdiff(x), -lagrangian_grad);
    } else {
        rep.stationarity_residual = lagrangian_grad.norm();
    }
    if (p.m() > 0) {
        const Vector hx = p.h.value(x);
        const Vector proj = project(p.C, hx);
        rep.feasibility_residual = (hx - proj).norm();
        rep.cone_residual = distance_to(normal_cone(p.C, proj, 1e-9), y);
    }
    if (rep.stationarity_residual <= tol.stationarity && rep.feasibility_residual <= tol.feasibility &&
        rep.cone_residual <= tol.cone) {
        rep.classification = Classification::kkt_point;
    } else if (rep.feasibility_residual > tol.feasibility) {
        rep.infeasibility = infeasible_stationarity_check(p, x, tol.stationarity, tol.feasibility);
        if (rep.infeasibility->is_candidate) {
            rep.classification = Classification::infeasible_stationary;
        }
    }
    return rep;
}

/// Extended constraint qualification. At feasible x it is the BCQ with
/// N(h(x)|C); elsewhere the inflated set has the single normal ray h - proj.
inline QualificationReport ecq_check(const ConstrainedProblem& p, const Vector& x, double tol = 1e-8) {
    validate(p);
    const Vector hx = p.h.value(x);
    const Matrix J = p.h.jacobian(x);
    const Vector diff = dist_sq_half_gradient(p.C, hx);
    const double d = diff.norm();
    if (d <= tol) {
        return qualification_check(J, normal_cone(p.C, hx, tol).rays, tol);
    }
    QualificationReport rep;
    rep.residual = (J.transpose() * diff).norm() / d;
    rep.holds = rep.residual > tol;
    if (!rep.holds) {
        rep.witness = diff / d;
    }
    return rep;
}

/// Accept x iff s_f(x, mu) <= s_f(x_feasible, mu).
inline bool feasible_guard(const ConstrainedProblem& p, const Vector& x_feasible, const Vector& x, double mu,
                           double feas_tol = 1e-9) {
    validate(p);
    if (p.m() > 0 && distance(p.C, p.h.value(x_feasible)) > feas_tol) {
        throw PreconditionError("feasible_guard: reference point is not feasible");
    }
    const SmoothingFamily fam = penalty_family(p);
    return fam.eval(x, mu) <= fam.eval(x_feasible, mu);
}

} // namespace epismooth

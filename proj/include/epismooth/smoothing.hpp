#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "epismooth/eplq.hpp"
#include "epismooth/functions.hpp"
#include "epismooth/smooth_map.hpp"
#include "epismooth/types.hpp"

namespace epismooth {

/// Convex C^1 kernel omega with Lipschitz gradient. omega_mu(y) = mu * omega(y / mu).
struct Kernel {
    std::string name;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    double grad_lipschitz = 1.0;
    bool one_coercive = false;
    bool zero_at_origin_nonpositive = false; // omega(0) <= 0
    bool continuously_convergent = false;
    bool is_quadratic = false; // exactly 0.5*||.||^2; enables the prox path
};

inline Kernel kernel_quadratic() {
    Kernel k;
    k.name = "quadratic";
    k.value = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
    k.gradient = [](const Vector& x) { return x; };
    k.grad_lipschitz = 1.0;
    k.one_coercive = true;
    k.zero_at_origin_nonpositive = true;
    k.continuously_convergent = true;
    k.is_quadratic = true;
    return k;
}

/// omega(x) = a^T x. Not 1-coercive; omega_mu = omega for every mu.
inline Kernel kernel_linear(const Vector& a) {
    Kernel k;
    k.name = "linear";
    k.value = [a](const Vector& x) { return a.dot(x); };
    k.gradient = [a](const Vector&) { return a; };
    k.grad_lipschitz = 0.0;
    k.one_coercive = false;
    k.zero_at_origin_nonpositive = true;
    k.continuously_convergent = true;
    return k;
}

/// omega(x) = sum_i huber_kappa(x_i). Linear growth, so not 1-coercive.
inline Kernel kernel_huber_sum(double kappa = 1.0) {
    Kernel k;
    k.name = "huber_sum";
    k.value = [kappa](const Vector& x) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            s += huber_scalar(x(i), kappa);
        }
        return s;
    };
    k.gradient = [kappa](const Vector& x) { return Vector(x.cwiseMax(-kappa).cwiseMin(kappa)); };
    k.grad_lipschitz = 1.0;
    k.one_coercive = false;
    k.zero_at_origin_nonpositive = true;
    return k;
}

/// omega(x) = 0.5*||x||^2 + sum_i huber_1(x_i). 1-coercive, not quadratic,
/// gradient Lipschitz with constant 2.
inline Kernel kernel_quadratic_plus_huber() {
    Kernel k;
    k.name = "quadratic_plus_huber";
    k.value = [](const Vector& x) {
        double s = 0.5 * x.squaredNorm();
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            s += huber_scalar(x(i), 1.0);
        }
        return s;
    };
    k.gradient = [](const Vector& x) { return Vector(x + x.cwiseMax(-1.0).cwiseMin(1.0)); };
    k.grad_lipschitz = 2.0;
    k.one_coercive = true;
    k.zero_at_origin_nonpositive = true;
    k.continuously_convergent = true;
    return k;
}

inline double scaled_kernel_value(const Kernel& k, double mu, const Vector& y) {
    detail::require_positive_mu(mu, "scaled_kernel_value");
    return mu * k.value(y / mu);
}

inline Vector scaled_kernel_gradient(const Kernel& k, double mu, const Vector& y) {
    detail::require_positive_mu(mu, "scaled_kernel_gradient");
    return k.gradient(y / mu);
}

/// s(x, mu), smooth in x for every mu > 0, with exact gradient.
struct SmoothingFamily {
    std::string target;
    std::vector<std::string> provenance;
    Eigen::Index dim = 0;
    std::function<double(const Vector&, double)> eval;
    std::function<Vector(const Vector&, double)> grad;
    /// Value of the limit function. May be empty.
    std::function<double(const Vector&)> target_value;
    /// eval(x, .) is nondecreasing as mu decreases and bounded by the target.
    bool monotone = false;
    bool continuously_convergent = false;
};

struct InfconvOptions {
    double tol = 1e-9;
    int max_iter = 100000;
};

struct InfconvPoint {
    double value = 0.0;
    Vector minimizer; // u_mu(x)
    int iterations = 0;
};

/// min_u g(u) + omega_mu(x - u) by proximal gradient on u (the smooth part is
/// the kernel term), warm-started at u = x, backtracking on the step.
inline InfconvPoint infconv_inner_minimize(const ConvexFunctionOracle& g, const Kernel& k, const Vector& x,
                                           double mu, const InfconvOptions& opts = {}) {
    detail::require_positive_mu(mu, "infconv_inner_minimize");
    if (!g.has_prox()) {
        throw UnsupportedError("infconv_inner_minimize: function has no prox oracle");
    }
    auto smooth = [&](const Vector& u) { return scaled_kernel_value(k, mu, x - u); };
    auto smooth_grad = [&](const Vector& u) { return Vector(-scaled_kernel_gradient(k, mu, x - u)); };

    double step = k.grad_lipschitz > 0.0 ? mu / k.grad_lipschitz : 1.0;
    Vector u = x;
    for (int it = 0; it < opts.max_iter; ++it) {
        const double fu = smooth(u);
        const Vector gu = smooth_grad(u);
        Vector next;
        for (int bt = 0; bt < 60; ++bt) {
            next = g.prox(u - step * gu, step);
            const Vector d = next - u;
            if (smooth(next) <= fu + gu.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15 * std::abs(fu)) {
                break;
            }
            step *= 0.5;
        }
        const double mapping_norm = (next - u).norm() / step;
        u = next;
        if (mapping_norm <= opts.tol) {
            return InfconvPoint{g.value(u) + smooth(u), u, it + 1};
        }
    }
    throw ConvergenceError("infconv_inner_minimize: iteration cap reached", u, kInf);
}

/// s_g(x, mu) = (g # omega_mu)(x), gradient grad omega_mu(x - u_mu(x)).
/// A kernel that is not 1-coercive is accepted only if the caller asserts g is
/// bounded below.
inline SmoothingFamily infconv_smoother(const ConvexFunctionOracle& g, const Kernel& k,
                                        bool assert_bounded_below = false, const InfconvOptions& opts = {}) {
    if (!k.one_coercive && !assert_bounded_below) {
        throw PreconditionError("infconv_smoother: kernel is not 1-coercive and g is not asserted bounded below");
    }
    SmoothingFamily fam;
    fam.target = g.name;
    fam.provenance = {"infconv(" + g.name + ", " + k.name + ")"};
    if (!k.one_coercive) {
        fam.provenance.push_back("asserted: g bounded below");
    }
    fam.dim = g.dim;
    fam.target_value = g.value;
    fam.monotone = k.zero_at_origin_nonpositive;
    // Finite-valued g: the envelope converges continuously.
    fam.continuously_convergent = std::holds_alternative<WholeSpace>(g.domain.kind());
    if (k.is_quadratic && g.has_prox()) {
        fam.eval = [g](const Vector& x, double mu) {
            detail::require_positive_mu(mu, "moreau envelope");
            const Vector u = g.prox(x, mu);
            return g.value(u) + (x - u).squaredNorm() / (2.0 * mu);
        };
        fam.grad = [g](const Vector& x, double mu) {
            detail::require_positive_mu(mu, "moreau envelope");
            return Vector((x - g.prox(x, mu)) / mu);
        };
    } else {
        fam.eval = [g, k, opts](const Vector& x, double mu) { return infconv_inner_minimize(g, k, x, mu, opts).value; };
        fam.grad = [g, k, opts](const Vector& x, double mu) {
            const InfconvPoint p = infconv_inner_minimize(g, k, x, mu, opts);
            return scaled_kernel_gradient(k, mu, x - p.minimizer);
        };
    }
    return fam;
}

inline Vector moreau_prox(const ConvexFunctionOracle& g, double mu, const Vector& x) {
    detail::require_positive_mu(mu, "moreau_prox");
    detail::require_dim(x.size(), g.dim, "moreau_prox");
    if (!g.has_prox()) {
        throw UnsupportedError("moreau_prox: function has no prox oracle");
    }
    return g.prox(x, mu);
}

inline double moreau_envelope(const ConvexFunctionOracle& g, double mu, const Vector& x) {
    const Vector u = moreau_prox(g, mu, x);
    return g.value(u) + (x - u).squaredNorm() / (2.0 * mu);
}

inline Vector moreau_gradient(const ConvexFunctionOracle& g, double mu, const Vector& x) {
    return (x - moreau_prox(g, mu, x)) / mu;
}

inline SmoothingFamily moreau_family(const ConvexFunctionOracle& g) { return infconv_smoother(g, kernel_quadratic()); }

/// Moreau family of an EPLQ function through the closed form B + mu R R^T.
inline SmoothingFamily eplq_family(const EPLQSpec& spec, std::string name = "eplq") {
    SmoothingFamily fam;
    fam.target = name;
    fam.provenance = {"eplq_moreau(" + name + ")"};
    fam.dim = spec.primal_dim();
    fam.eval = [spec](const Vector& x, double mu) { return eplq_value(eplq_moreau(spec, mu), x).value; };
    fam.grad = [spec](const Vector& x, double mu) {
        return Vector(spec.R.transpose() * eplq_value(eplq_moreau(spec, mu), x).maximizer);
    };
    fam.target_value = [spec](const Vector& x) { return eplq_value(spec, x).value; };
    fam.monotone = true;
    fam.continuously_convergent = true;
    return fam;
}

/// Records a caller assertion that the family converges continuously.
inline SmoothingFamily assert_continuously_convergent(SmoothingFamily fam) {
    fam.continuously_convergent = true;
    fam.provenance.push_back("asserted: continuously convergent");
    return fam;
}

/// smooth + s_g; the smooth part is not smoothed.
inline SmoothingFamily calculus_sum_smooth(const SmoothFunction& smooth, const SmoothingFamily& fam) {
    SmoothingFamily out;
    out.target = "smooth + " + fam.target;
    out.provenance = fam.provenance;
    out.provenance.push_back("sum_smooth");
    out.dim = fam.dim;
    out.eval = [smooth, e = fam.eval](const Vector& x, double mu) { return smooth.value(x) + e(x, mu); };
    out.grad = [smooth, g = fam.grad](const Vector& x, double mu) { return Vector(smooth.gradient(x) + g(x, mu)); };
    if (fam.target_value) {
        out.target_value = [smooth, t = fam.target_value](const Vector& x) { return smooth.value(x) + t(x); };
    }
    out.monotone = fam.monotone;
    out.continuously_convergent = fam.continuously_convergent;
    return out;
}

/// s_a + s_b where s_a converges continuously.
inline SmoothingFamily calculus_sum_continuous(const SmoothingFamily& a, const SmoothingFamily& b) {
    if (!a.continuously_convergent) {
        throw PreconditionError("calculus_sum_continuous: first family is not flagged continuously convergent");
    }
    detail::require_dim(b.dim, a.dim, "calculus_sum_continuous");
    SmoothingFamily out;
    out.target = a.target + " + " + b.target;
    out.provenance = a.provenance;
    out.provenance.insert(out.provenance.end(), b.provenance.begin(), b.provenance.end());
    out.provenance.push_back("sum_continuous");
    out.dim = a.dim;
    out.eval = [ea = a.eval, eb = b.eval](const Vector& x, double mu) { return ea(x, mu) + eb(x, mu); };
    out.grad = [ga = a.grad, gb = b.grad](const Vector& x, double mu) { return Vector(ga(x, mu) + gb(x, mu)); };
    if (a.target_value && b.target_value) {
        out.target_value = [ta = a.target_value, tb = b.target_value](const Vector& x) { return ta(x) + tb(x); };
    }
    out.monotone = a.monotone && b.monotone;
    out.continuously_convergent = a.continuously_convergent && b.continuously_convergent;
    return out;
}

/// lambda * s_g (scales the envelope, not the function inside it).
inline SmoothingFamily calculus_scale(double lambda, const SmoothingFamily& fam) {
    if (!(lambda > 0.0)) {
        throw ArgumentError("calculus_scale: lambda must be positive");
    }
    SmoothingFamily out = fam;
    out.target = std::to_string(lambda) + "*" + fam.target;
    out.provenance.push_back("scale(" + std::to_string(lambda) + ")");
    out.eval = [e = fam.eval, lambda](const Vector& x, double mu) { return lambda * e(x, mu); };
    out.grad = [g = fam.grad, lambda](const Vector& x, double mu) { return Vector(lambda * g(x, mu)); };
    if (fam.target_value) {
        out.target_value = [t = fam.target_value, lambda](const Vector& x) {
            const double v = t(x);
            return std::isinf(v) ? v : lambda * v;
        };
    }
    return out;
}

/// s_g(A x + b, mu), A with full row rank.
inline SmoothingFamily calculus_affine(const Matrix& A, const Vector& b, const SmoothingFamily& fam) {
    detail::require_dim(A.rows(), fam.dim, "calculus_affine");
    detail::require_dim(b.size(), A.rows(), "calculus_affine offset");
    Eigen::JacobiSVD<Matrix> svd(A);
    const auto& sv = svd.singularValues();
    if (A.rows() > 0 && (sv.size() < A.rows() || sv(sv.size() - 1) <= 1e-10)) {
        throw PreconditionError("calculus_affine: A must have full row rank");
    }
    SmoothingFamily out = fam;
    out.target = fam.target + "(A x + b)";
    out.provenance.push_back("affine");
    out.dim = A.cols();
    out.eval = [e = fam.eval, A, b](const Vector& x, double mu) { return e(A * x + b, mu); };
    out.grad = [g = fam.grad, A, b](const Vector& x, double mu) { return Vector(A.transpose() * g(A * x + b, mu)); };
    if (fam.target_value) {
        out.target_value = [t = fam.target_value, A, b](const Vector& x) { return t(A * x + b); };
    }
    return out;
}

/// s_g(F(x), mu) for a smooth F the caller asserts is metrically regular.
inline SmoothingFamily calculus_nonlinear_compose(const SmoothMap& F, const SmoothingFamily& fam) {
    detail::require_dim(F.out_dim, fam.dim, "calculus_nonlinear_compose");
    SmoothingFamily out = fam;
    out.target = fam.target + "(F(x))";
    out.provenance.push_back("compose");
    out.provenance.push_back("asserted: F metrically regular");
    out.dim = F.in_dim;
    out.eval = [e = fam.eval, F](const Vector& x, double mu) { return e(F.value(x), mu); };
    out.grad = [g = fam.grad, F](const Vector& x, double mu) {
        return Vector(F.jacobian(x).transpose() * g(F.value(x), mu));
    };
    if (fam.target_value) {
        out.target_value = [t = fam.target_value, F](const Vector& x) { return t(F.value(x)); };
    }
    return out;
}

} // namespace epismooth

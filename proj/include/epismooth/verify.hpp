#pragma once

// Numerical probes for smoothing families: finite differences, the two
// branches of epi-convergence, kernel epi-limits, gradient consistency and
// monotonicity. All randomness comes from a stream derived from (seed, probe
// name) so a fixed seed reproduces a report exactly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "epismooth/polytope.hpp"
#include "epismooth/smoothing.hpp"
#include "epismooth/solver.hpp"
#include "epismooth/types.hpp"

namespace epismooth::verify {

struct ProbeConfig {
    Vector base_point;
    std::vector<double> radii{1e-1, 1e-2, 1e-3, 1e-4};
    std::vector<double> mus{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    int samples_per_shell = 200;
    std::uint64_t seed = 7;

    double liminf_tol = 1e-3;
    int liminf_tail = 2;
    double limsup_tol = 1e-9;

    std::vector<double> kernel_mus{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12};
    double kernel_tol = 1e-3;

    double containment_abs = 1e-6;
    double containment_rel = 0.0; // containment slack is abs + rel * delta_j
    double coverage_tol = 0.02;

    void validate() const {
        auto strictly_decreasing = [](const std::vector<double>& v) {
            if (v.empty() || !(v.back() > 0.0)) {
                return false;
            }
            for (std::size_t i = 1; i < v.size(); ++i) {
                if (!(v[i] < v[i - 1])) {
                    return false;
                }
            }
            return true;
        };
        if (!strictly_decreasing(radii) || !strictly_decreasing(mus) || !strictly_decreasing(kernel_mus)) {
            throw ArgumentError("probe config: radii and mu schedules must decrease strictly to a positive value");
        }
        if (samples_per_shell < 1 || liminf_tail < 1) {
            throw ArgumentError("probe config: samples_per_shell and liminf_tail must be positive");
        }
    }
};

struct ProbeReport {
    std::string name;
    bool passed = false;
    double margin = 0.0; // >= 0 on pass; the most violated slack on failure
    std::optional<Vector> witness;
    std::string detail;
    std::vector<std::pair<std::string, double>> metrics;
    /// Set by suites for negative controls, which must fail.
    bool expect_failure = false;

    bool as_expected() const { return passed != expect_failure; }
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

class Stream {
  public:
    Stream(std::uint64_t seed, const std::string& name) : rng_(seed ^ fnv1a(name)) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

    Vector unit(Eigen::Index n) {
        std::normal_distribution<double> normal(0.0, 1.0);
        Vector u(n);
        double len = 0.0;
        while (!(len > 1e-12)) {
            for (Eigen::Index i = 0; i < n; ++i) {
                u(i) = normal(rng_);
            }
            len = u.norm();
        }
        return u / len;
    }

    /// Uniform in the ball of radius r.
    Vector in_ball(Eigen::Index n, double r) {
        const Vector u = unit(n);
        return u * (r * std::pow(uniform(), 1.0 / static_cast<double>(n)));
    }

  private:
    std::mt19937_64 rng_;
};

inline ProbeReport finish(ProbeReport rep, double margin, std::optional<Vector> witness) {
    rep.margin = margin;
    rep.passed = margin >= 0.0;
    if (!rep.passed) {
        rep.witness = std::move(witness);
    }
    return rep;
}

inline double at_clamped(const std::vector<double>& v, std::size_t i) { return v[std::min(i, v.size() - 1)]; }

} // namespace detail

/// Central differences with step h (1 + ||x||); relative error against
/// max(1, ||grad||).
inline ProbeReport check_gradient(const std::string& name, const std::function<double(const Vector&)>& f,
                                  const std::function<Vector(const Vector&)>& grad, const std::vector<Vector>& points,
                                  double h = 1e-6, double tol = 1e-6) {
    ProbeReport rep;
    rep.name = name;
    double worst = 0.0;
    std::optional<Vector> witness;
    for (const Vector& x : points) {
        const Vector g = grad(x);
        const double step = h * (1.0 + x.norm());
        Vector fd(x.size());
        Vector xp = x;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double xi = x(i);
            xp(i) = xi + step;
            const double fp = f(xp);
            xp(i) = xi - step;
            const double fm = f(xp);
            xp(i) = xi;
            fd(i) = (fp - fm) / (2.0 * step);
        }
        const double err = (fd - g).norm() / std::max(1.0, g.norm());
        if (!(err <= worst)) {
            worst = err;
            witness = x;
        }
    }
    rep.metrics = {{"max_rel_error", worst}, {"points", static_cast<double>(points.size())}};
    return detail::finish(rep, tol - worst, witness);
}

inline ProbeReport check_gradient(const std::string& name, const SmoothingFamily& fam, double mu,
                                  const std::vector<Vector>& points, double h = 1e-6, double tol = 1e-6) {
    return check_gradient(
        name, [&fam, mu](const Vector& x) { return fam.eval(x, mu); },
        [&fam, mu](const Vector& x) { return fam.grad(x, mu); }, points, h, tol);
}

/// liminf branch: along x_k = xbar + delta_k u paired with mu_k, the tail of
/// family.eval stays above target(xbar) - tol. A target of +inf is read as
/// "tail values exceed 1/tol".
inline ProbeReport epi_liminf_probe(const std::string& name, const SmoothingFamily& fam,
                                    const std::function<double(const Vector&)>& target, const ProbeConfig& cfg) {
    cfg.validate();
    ProbeReport rep;
    rep.name = name;
    const Vector& xbar = cfg.base_point;
    const double t = target(xbar);
    const double bound = std::isinf(t) ? 1.0 / cfg.liminf_tol : t - cfg.liminf_tol;
    const std::size_t K = std::max(cfg.radii.size(), cfg.mus.size());
    const std::size_t tail_start = K > static_cast<std::size_t>(cfg.liminf_tail) ? K - cfg.liminf_tail : 0;
    detail::Stream rng(cfg.seed, name);
    double worst = kInf;
    std::optional<Vector> witness;
    for (int s = 0; s < cfg.samples_per_shell; ++s) {
        const Vector u = rng.unit(xbar.size());
        for (std::size_t k = tail_start; k < K; ++k) {
            const Vector x = xbar + detail::at_clamped(cfg.radii, k) * u;
            const double v = fam.eval(x, detail::at_clamped(cfg.mus, k));
            if (v - bound < worst) {
                worst = v - bound;
                witness = x;
            }
        }
    }
    rep.metrics = {{"target", t}, {"worst_tail_minus_bound", worst}};
    return detail::finish(rep, worst, witness);
}

/// limsup branch with the constant sequence x_k = xbar, which is a valid
/// witness for monotone families. Otherwise the caller supplies the sequence.
inline ProbeReport epi_limsup_probe(const std::string& name, const SmoothingFamily& fam,
                                    const std::function<double(const Vector&)>& target, const ProbeConfig& cfg,
                                    const std::function<Vector(std::size_t)>& witness_sequence = {}) {
    cfg.validate();
    if (!fam.monotone && !witness_sequence) {
        throw PreconditionError("epi_limsup_probe: family is not monotone and no witness sequence was supplied");
    }
    ProbeReport rep;
    rep.name = name;
    const double t = target(cfg.base_point);
    if (std::isinf(t) && t > 0.0) {
        rep.passed = true;
        rep.margin = kInf;
        rep.detail = "vacuous: target is +inf at the base point";
        return rep;
    }
    const double bound = t + cfg.limsup_tol;
    double worst = kInf;
    std::optional<Vector> witness;
    const std::size_t first = witness_sequence ? cfg.mus.size() - std::min<std::size_t>(cfg.mus.size(), cfg.liminf_tail) : 0;
    for (std::size_t k = first; k < cfg.mus.size(); ++k) {
        const Vector x = witness_sequence ? witness_sequence(k) : cfg.base_point;
        const double slack = bound - fam.eval(x, cfg.mus[k]);
        if (slack < worst) {
            worst = slack;
            witness = x;
        }
    }
    rep.metrics = {{"target", t}, {"worst_slack", worst}};
    return detail::finish(rep, worst, witness);
}

/// (a) omega_mu(z) = mu omega(z / mu) exceeds 1/tol at the smallest mu for
/// every sampled z != 0, and (b) |mu omega(0)| <= tol there.
inline ProbeReport kernel_epilimit_probe(const std::string& name, const Kernel& k, Eigen::Index dim,
                                         const ProbeConfig& cfg) {
    cfg.validate();
    ProbeReport rep;
    rep.name = name;
    const double mu_last = cfg.kernel_mus.back();
    detail::Stream rng(cfg.seed, name);
    std::vector<double> radii{1.0};
    radii.insert(radii.end(), cfg.radii.begin(), cfg.radii.end());
    std::vector<Vector> zs;
    for (const double r : radii) {
        for (Eigen::Index i = 0; i < dim; ++i) {
            Vector e = Vector::Zero(dim);
            e(i) = r;
            zs.push_back(e);
            zs.push_back(-e);
        }
        for (int s = 0; s < cfg.samples_per_shell; ++s) {
            zs.push_back(r * rng.unit(dim));
        }
    }
    double worst_a = kInf;
    std::optional<Vector> witness;
    for (const Vector& z : zs) {
        const double v = scaled_kernel_value(k, mu_last, z);
        const double slack = std::isfinite(v) ? v - 1.0 / cfg.kernel_tol : kInf;
        if (slack < worst_a) {
            worst_a = slack;
            witness = z;
        }
    }
    const double at_origin = std::abs(scaled_kernel_value(k, mu_last, Vector::Zero(dim)));
    const double slack_b = cfg.kernel_tol - at_origin;
    rep.metrics = {{"growth_slack", worst_a}, {"origin_value", at_origin}};
    if (slack_b < 0.0 && slack_b < worst_a) {
        witness = Vector::Zero(dim);
    }
    return detail::finish(rep, std::min(worst_a, slack_b), witness);
}

/// Two one-sided checks of Lim sup grad s(x, mu) against a polyhedral
/// subdifferential at xbar. Containment: every sampled gradient in shell j lies
/// within abs + rel delta_j of the polytope. Coverage: every generator has a
/// finest-shell gradient within coverage_tol, and in one dimension the sorted
/// cloud has no gap wider than coverage_tol across the hull.
inline ProbeReport gradient_consistency_probe(const std::string& name, const SmoothingFamily& fam,
                                              const std::function<ConvexPolytope(const Vector&)>& subdiff,
                                              const ProbeConfig& cfg) {
    cfg.validate();
    if (!subdiff) {
        throw PreconditionError("gradient_consistency_probe: no subdifferential oracle");
    }
    const Vector& xbar = cfg.base_point;
    const Eigen::Index n = xbar.size();
    const ConvexPolytope poly = subdiff(xbar);
    epismooth::detail::require_dim(poly.dim, n, "gradient_consistency_probe");
    ProbeReport rep;
    rep.name = name;
    detail::Stream rng(cfg.seed, name);
    const std::size_t shells = std::max(cfg.radii.size(), cfg.mus.size());

    double containment = kInf;
    std::optional<Vector> containment_witness;
    std::vector<Vector> finest;
    for (std::size_t j = 0; j < shells; ++j) {
        const double delta = detail::at_clamped(cfg.radii, j);
        const double mu = detail::at_clamped(cfg.mus, j);
        const double slack = cfg.containment_abs + cfg.containment_rel * delta;
        for (int s = 0; s < cfg.samples_per_shell; ++s) {
            const Vector x = xbar + rng.in_ball(n, delta);
            const Vector g = fam.grad(x, mu);
            const double margin = slack - distance_to(poly, g);
            if (margin < containment) {
                containment = margin;
                containment_witness = x;
            }
            if (j + 1 == shells) {
                finest.push_back(g);
            }
        }
    }

    double coverage = kInf;
    std::optional<Vector> coverage_witness;
    std::vector<Vector> generators = poly.generators;
    if (generators.empty()) {
        generators.push_back(Vector::Zero(n));
    }
    for (const Vector& gen : generators) {
        double nearest = kInf;
        for (const Vector& g : finest) {
            nearest = std::min(nearest, (g - gen).norm());
        }
        if (cfg.coverage_tol - nearest < coverage) {
            coverage = cfg.coverage_tol - nearest;
            coverage_witness = gen;
        }
    }
    double max_gap = 0.0;
    if (n == 1 && poly.rays.empty()) {
        std::vector<double> pts;
        double lo = kInf;
        double hi = -kInf;
        for (const Vector& gen : generators) {
            lo = std::min(lo, gen(0));
            hi = std::max(hi, gen(0));
        }
        for (const Vector& g : finest) {
            pts.push_back(std::clamp(g(0), lo, hi));
        }
        pts.push_back(lo);
        pts.push_back(hi);
        std::sort(pts.begin(), pts.end());
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (pts[i] - pts[i - 1] > max_gap) {
                max_gap = pts[i] - pts[i - 1];
                coverage_witness = Vector::Constant(1, 0.5 * (pts[i] + pts[i - 1]));
            }
        }
        coverage = std::min(coverage, cfg.coverage_tol - max_gap);
    }
    if (!poly.rays.empty()) {
        rep.detail = "subdifferential has rays; coverage tested on generators only";
    }
    rep.metrics = {{"containment_margin", containment}, {"coverage_margin", coverage}, {"max_gap", max_gap}};
    const bool containment_first = containment <= coverage;
    return detail::finish(rep, std::min(containment, coverage),
                          containment_first ? containment_witness : coverage_witness);
}

/// eval(x, mu_j) <= eval(x, mu_{j+1}) + tol along a decreasing mu list, and
/// the last value stays below target(x) + tol.
inline ProbeReport monotonicity_probe(const std::string& name, const SmoothingFamily& fam,
                                      const std::function<double(const Vector&)>& target,
                                      const std::vector<Vector>& points, const std::vector<double>& mus,
                                      double tol = 1e-9) {
    for (std::size_t j = 1; j < mus.size(); ++j) {
        if (!(mus[j] < mus[j - 1])) {
            throw ArgumentError("monotonicity_probe: mu list must decrease");
        }
    }
    ProbeReport rep;
    rep.name = name;
    double worst = kInf;
    std::optional<Vector> witness;
    for (const Vector& x : points) {
        double prev = -kInf;
        for (const double mu : mus) {
            const double v = fam.eval(x, mu);
            if (v - prev + tol < worst) {
                worst = v - prev + tol;
                witness = x;
            }
            prev = v;
        }
        const double slack = target(x) + tol - prev;
        if (slack < worst) {
            worst = slack;
            witness = x;
        }
    }
    rep.metrics = {{"worst_slack", worst}};
    return detail::finish(rep, worst, witness);
}

/// Runs the continuation solver and compares the last stage value with the
/// known infimum.
inline ProbeReport inf_convergence_probe(const std::string& name, const SmoothingFamily& fam, double true_inf,
                                         const ContinuationConfig& solver, const Vector& x0, double tol = 1e-4,
                                         const ConstrainedProblem* diagnostics = nullptr) {
    ProbeReport rep;
    rep.name = name;
    try {
        const ContinuationResult res = continuation_solve(fam, solver, x0, diagnostics);
        const double last = res.trace.back().eval;
        const double err = std::abs(last - true_inf);
        rep.metrics = {{"final_eval", last}, {"true_inf", true_inf}, {"error", err},
                       {"stages", static_cast<double>(res.trace.size())}};
        rep.detail = to_string(res.status);
        return detail::finish(rep, tol - err, res.x);
    } catch (const Error& e) {
        rep.detail = std::string("solver failure: ") + e.what();
        return detail::finish(rep, -kInf, x0);
    }
}

} // namespace epismooth::verify

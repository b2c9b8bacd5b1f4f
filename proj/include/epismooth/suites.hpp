#pragma once

// Probe suites over the built-in functions and problems. Each suite returns
// its reports in a fixed order; negative controls carry expect_failure.

#include <cmath>
#include <string>
#include <vector>

#include "epismooth/catalog.hpp"
#include "epismooth/composite.hpp"
#include "epismooth/constrained.hpp"
#include "epismooth/problem_file.hpp"
#include "epismooth/smoothing.hpp"
#include "epismooth/solver.hpp"
#include "epismooth/verify.hpp"

namespace epismooth::verify {

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"kernels", "envelopes", "consistency", "composite", "all"};
    return names;
}

namespace detail {

inline ProbeReport negative_control(ProbeReport r) {
    r.expect_failure = true;
    return r;
}

inline std::vector<Vector> random_points(Stream& rng, Eigen::Index n, int count, double scale) {
    std::vector<Vector> pts;
    for (int i = 0; i < count; ++i) {
        Vector x(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            x(j) = scale * (2.0 * rng.uniform() - 1.0);
        }
        pts.push_back(x);
    }
    return pts;
}

/// Builds a report from a worst-case error against a tolerance.
inline ProbeReport error_report(const std::string& name, double worst, double tol, std::optional<Vector> witness,
                                const char* metric = "max_error") {
    ProbeReport r;
    r.name = name;
    r.metrics = {{metric, worst}, {"tol", tol}};
    return finish(r, tol - worst, std::move(witness));
}

} // namespace detail

inline std::vector<ProbeReport> kernels_suite(std::uint64_t seed) {
    std::vector<ProbeReport> out;
    ProbeConfig cfg;
    cfg.seed = seed;
    cfg.base_point = Vector::Zero(2);
    out.push_back(kernel_epilimit_probe("kernel_epilimit/quadratic", kernel_quadratic(), 2, cfg));
    out.push_back(kernel_epilimit_probe("kernel_epilimit/quadratic_plus_huber", kernel_quadratic_plus_huber(), 2, cfg));
    out.push_back(detail::negative_control(
        kernel_epilimit_probe("kernel_epilimit/linear", kernel_linear(Vector::Unit(2, 0)), 2, cfg)));
    out.push_back(
        detail::negative_control(kernel_epilimit_probe("kernel_epilimit/huber_sum", kernel_huber_sum(1.0), 2, cfg)));

    detail::Stream rng(seed, "kernels/points");
    const std::vector<Vector> pts = detail::random_points(rng, 2, 50, 3.0);
    for (const Kernel& k : {kernel_quadratic(), kernel_quadratic_plus_huber(), kernel_huber_sum(1.0)}) {
        out.push_back(check_gradient("kernel_gradient/" + k.name, k.value, k.gradient, pts, 1e-6, 1e-6));
    }

    // A non-quadratic 1-coercive kernel smooths |x| through the inner solve.
    const ConvexFunctionOracle abs1 = one_norm(1);
    const SmoothingFamily fam = infconv_smoother(abs1, kernel_quadratic_plus_huber());
    const std::vector<Vector> xs = detail::random_points(rng, 1, 20, 2.0);
    out.push_back(check_gradient("infconv_gradient/abs_quadratic_plus_huber", fam, 0.3, xs, 1e-6, 1e-5));
    out.push_back(monotonicity_probe("infconv_monotone/abs_quadratic_plus_huber", fam, abs1.value, xs,
                                     {1.0, 0.3, 0.1, 0.03}, 1e-7));
    return out;
}

inline std::vector<ProbeReport> envelopes_suite(std::uint64_t seed) {
    std::vector<ProbeReport> out;
    const Eigen::Index n = 3;
    detail::Stream rng(seed, "envelopes/points");
    const std::vector<Vector> pts = detail::random_points(rng, n, 100, 3.0);
    std::vector<double> mus;
    for (int i = 0; i < 100; ++i) {
        mus.push_back(std::pow(10.0, -3.0 * rng.uniform()));
    }

    for (const auto& nf : catalog::functions(n)) {
        const SmoothingFamily fam = moreau_family(nf.oracle);

        double worst = 0.0;
        std::optional<Vector> witness;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Vector& x = pts[i];
            const double mu = mus[i];
            const double err = (fam.grad(x, mu) - (x - moreau_prox(nf.oracle, mu, x)) / mu).norm();
            if (err > worst) {
                worst = err;
                witness = x;
            }
        }
        out.push_back(detail::error_report("gradient_identity/" + nf.name, worst, 1e-10, witness));

        std::vector<Vector> fd_pts(pts.begin(), pts.begin() + 30);
        out.push_back(check_gradient("envelope_fd/" + nf.name, fam, 0.5, fd_pts, 1e-6, 1e-5));
        out.push_back(monotonicity_probe("monotone/" + nf.name, fam, nf.oracle.value, pts,
                                         {1.0, 0.5, 0.1, 0.01, 0.001}, 1e-9));

        ProbeConfig cfg;
        cfg.seed = seed;
        cfg.base_point = Vector::Zero(n);
        cfg.samples_per_shell = 50;
        out.push_back(epi_liminf_probe("epi_liminf/" + nf.name, fam, nf.oracle.value, cfg));
        out.push_back(epi_limsup_probe("epi_limsup/" + nf.name, fam, nf.oracle.value, cfg));
    }

    {
        // Outside the ball the target is +inf: liminf must blow up, limsup is vacuous.
        const ConvexFunctionOracle ball = indicator(ConvexSet::euclidean_ball(Vector::Zero(n), 1.0));
        ProbeConfig cfg;
        cfg.seed = seed;
        cfg.base_point = Vector::Constant(n, 2.0);
        cfg.samples_per_shell = 50;
        out.push_back(epi_liminf_probe("epi_liminf/ball_indicator_outside", moreau_family(ball), ball.value, cfg));
        out.push_back(epi_limsup_probe("epi_limsup/ball_indicator_outside", moreau_family(ball), ball.value, cfg));
    }

    {
        // e_mu g - 1/mu drifts to -inf and must fail the liminf branch.
        const ConvexFunctionOracle g = one_norm(n);
        SmoothingFamily shifted = moreau_family(g);
        shifted.eval = [e = shifted.eval](const Vector& x, double mu) { return e(x, mu) - 1.0 / mu; };
        ProbeConfig cfg;
        cfg.seed = seed;
        cfg.base_point = Vector::Zero(n);
        cfg.samples_per_shell = 50;
        out.push_back(detail::negative_control(epi_liminf_probe("epi_liminf/shifted_one_norm", shifted, g.value, cfg)));
    }

    {
        // Closed-form EPLQ envelopes against the direct prox formulas.
        struct Pair {
            std::string name;
            EPLQSpec spec;
            ConvexFunctionOracle direct;
        };
        const std::vector<Pair> pairs{{"huber", eplq_huber(n, 1.0), huber(n, 1.0)},
                                      {"vapnik", eplq_vapnik(n, 0.5), vapnik(n, 0.5)},
                                      {"one_norm", eplq_one_norm(n), one_norm(n)}};
        for (const auto& p : pairs) {
            const SmoothingFamily closed = eplq_family(p.spec, p.name);
            double worst = 0.0;
            std::optional<Vector> witness;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double err = std::abs(closed.eval(pts[i], mus[i]) - moreau_envelope(p.direct, mus[i], pts[i]));
                if (err > worst) {
                    worst = err;
                    witness = pts[i];
                }
            }
            out.push_back(detail::error_report("eplq_moreau_identity/" + p.name, worst, 1e-6, witness));
        }
    }

    {
        // The envelope keeps the minimizer of ||x||_1 + 0.5||x - x0||^2.
        const Vector x0 = (Vector(n) << 2.0, -0.5, 0.3).finished();
        const ConvexFunctionOracle g = one_norm_plus_quadratic(x0);
        const SmoothingFamily fam = moreau_family(g);
        const Vector argmin = soft_threshold(x0, 1.0);
        double worst = 0.0;
        std::optional<Vector> witness;
        for (const double mu : {1.0, 0.1, 0.01}) {
            const MinimizeResult r = minimize_smooth([&](const Vector& x) { return fam.eval(x, mu); },
                                                     [&](const Vector& x) { return fam.grad(x, mu); },
                                                     Vector::Zero(n), 1e-10, 100000);
            const double err = (r.x - argmin).norm();
            if (err > worst) {
                worst = err;
                witness = r.x;
            }
        }
        out.push_back(detail::error_report("argmin_preserved/one_norm_plus_quadratic", worst, 1e-6, witness));
    }

    {
        // Epigraph sum in one dimension: e_mu|.|(x) against a grid minimum.
        const ConvexFunctionOracle g = one_norm(1);
        const SmoothingFamily fam = moreau_family(g);
        const double h = 1e-3;
        double worst = 0.0;
        std::optional<Vector> witness;
        for (int i = 0; i < 20; ++i) {
            const double x = 4.0 * rng.uniform() - 2.0;
            const double mu = 0.1 + rng.uniform();
            double best = kInf;
            for (double u = -3.0; u <= 3.0; u += h) {
                best = std::min(best, std::abs(u) + (x - u) * (x - u) / (2.0 * mu));
            }
            const double err = best - fam.eval(Vector::Constant(1, x), mu);
            // The grid minimum is an upper bound that is within h (1 + 1/mu) of the true value.
            const double gap = std::max(-err, err - h * (1.0 + 1.0 / mu));
            if (gap > worst) {
                worst = gap;
                witness = Vector::Constant(1, x);
            }
        }
        out.push_back(detail::error_report("epigraph_sum_grid/abs", worst, 1e-12, witness, "max_violation"));
    }
    return out;
}

inline std::vector<ProbeReport> consistency_suite(std::uint64_t seed) {
    std::vector<ProbeReport> out;
    ProbeConfig cfg;
    cfg.seed = seed;
    cfg.samples_per_shell = 5000;
    cfg.containment_abs = 1e-6;
    cfg.mus = cfg.radii; // x / mu then sweeps the whole kink region in every shell

    {
        const ConvexFunctionOracle g = one_norm(1);
        cfg.base_point = Vector::Zero(1);
        out.push_back(gradient_consistency_probe("gradient_consistency/abs_at_0", moreau_family(g), g.subdiff, cfg));
        // The same cloud cannot sit inside the wrong subdifferential {0}.
        out.push_back(detail::negative_control(gradient_consistency_probe(
            "gradient_consistency/abs_at_0_wrong_subdiff", moreau_family(g),
            [](const Vector&) { return ConvexPolytope::origin(1); }, cfg)));
    }
    {
        ProbeConfig c2 = cfg;
        c2.samples_per_shell = 2000;
        c2.base_point = (Vector(2) << 0.0, 1.0).finished();
        const ConvexFunctionOracle g = one_norm(2);
        out.push_back(gradient_consistency_probe("gradient_consistency/one_norm_2d", moreau_family(g), g.subdiff, c2));
    }
    {
        const ConvexFunctionOracle g = vapnik(1, 0.5);
        cfg.base_point = Vector::Constant(1, 0.5);
        out.push_back(gradient_consistency_probe("gradient_consistency/vapnik_at_kink", moreau_family(g), g.subdiff, cfg));
    }
    {
        // Smooth target: the cloud collapses onto the gradient, within the shell radius.
        ProbeConfig c3 = cfg;
        c3.samples_per_shell = 500;
        c3.containment_rel = 1.0;
        c3.coverage_tol = 1e-4;
        const ConvexFunctionOracle g = huber(1, 1.0);
        c3.base_point = Vector::Zero(1);
        out.push_back(gradient_consistency_probe("gradient_consistency/huber_smooth", moreau_family(g), g.subdiff, c3));
    }
    return out;
}

inline std::vector<ProbeReport> composite_suite(std::uint64_t seed) {
    std::vector<ProbeReport> out;
    const SmoothMap square_minus_one{1, 1, [](const Vector& x) { return Vector::Constant(1, x(0) * x(0) - 1.0); },
                                     [](const Vector& x) { return Matrix::Constant(1, 1, 2.0 * x(0)); }};
    const ConvexFunctionOracle abs1 = one_norm(1);
    const CompositeProblem cp{abs1, square_minus_one, moreau_family(abs1)};
    const SmoothingFamily fam = composite_family(cp);
    {
        ProbeConfig cfg;
        cfg.seed = seed;
        cfg.samples_per_shell = 5000;
        cfg.mus = cfg.radii;
        cfg.base_point = Vector::Ones(1);
        cfg.containment_rel = 4.0; // |H'(x)| <= 2 (1 + delta)
        out.push_back(gradient_consistency_probe(
            "gradient_consistency/abs_square_minus_one_at_1", fam,
            [&cp](const Vector& x) { return composite_subdifferential(cp, x); }, cfg));
        cfg.samples_per_shell = 50;
        out.push_back(epi_liminf_probe("epi_liminf/abs_square_minus_one", fam, fam.target_value, cfg));
        out.push_back(epi_limsup_probe("epi_limsup/abs_square_minus_one", fam, fam.target_value, cfg));
    }

    auto bcq_report = [](const std::string& name, const BCQReport& r, double tol) {
        ProbeReport rep;
        rep.name = name;
        rep.metrics = {{"residual", r.residual}, {"tol", tol}};
        rep.passed = r.holds;
        rep.margin = r.residual - tol;
        if (!r.holds) {
            rep.witness = r.witness;
        }
        return rep;
    };
    {
        const ConvexFunctionOracle zero_ind = indicator(ConvexSet::singleton(Vector::Zero(1)));
        const SmoothMap sq{1, 1, [](const Vector& x) { return Vector::Constant(1, x(0) * x(0)); },
                           [](const Vector& x) { return Matrix::Constant(1, 1, 2.0 * x(0)); }};
        const CompositeProblem fails{zero_ind, sq, moreau_family(zero_ind)};
        const CompositeProblem holds{zero_ind, identity_map(1), moreau_family(zero_ind)};
        out.push_back(detail::negative_control(bcq_report("bcq/indicator_zero_of_square", bcq_check(fails, Vector::Zero(1)), 1e-8)));
        out.push_back(bcq_report("bcq/indicator_zero_of_identity", bcq_check(holds, Vector::Zero(1)), 1e-8));
    }

    const auto circle = problem::load_text(*catalog::find_problem("circle_inequality"));
    const SmoothingFamily direct = circle.family;
    const SmoothingFamily routed = penalty_family_via_composite(circle.problem);
    detail::Stream rng(seed, "composite/points");
    const std::vector<Vector> pts = detail::random_points(rng, 2, 100, 2.0);
    {
        double worst = 0.0;
        std::optional<Vector> witness;
        for (const Vector& x : pts) {
            for (const double mu : {1.0, 0.1, 1e-3}) {
                const double err = std::max(std::abs(direct.eval(x, mu) - routed.eval(x, mu)),
                                            (direct.grad(x, mu) - routed.grad(x, mu)).norm()) /
                                   (1.0 + std::abs(direct.eval(x, mu)));
                if (err > worst) {
                    worst = err;
                    witness = x;
                }
            }
        }
        out.push_back(detail::error_report("penalty_two_routes/circle", worst, 1e-12, witness));
    }
    out.push_back(check_gradient("penalty_fd/circle", direct, 0.1, std::vector<Vector>(pts.begin(), pts.begin() + 30),
                                 1e-6, 1e-5));
    out.push_back(monotonicity_probe("monotone/penalty_circle", direct, direct.target_value, pts,
                                     {1.0, 0.1, 0.01, 0.001}, 1e-9));
    {
        ProbeConfig cfg;
        cfg.seed = seed;
        cfg.samples_per_shell = 50;
        cfg.base_point = Vector::Zero(2);
        out.push_back(epi_liminf_probe("epi_liminf/penalty_circle_feasible", direct, direct.target_value, cfg));
        out.push_back(epi_limsup_probe("epi_limsup/penalty_circle_feasible", direct, direct.target_value, cfg));
        cfg.base_point = (Vector(2) << 2.0, 0.0).finished();
        out.push_back(epi_liminf_probe("epi_liminf/penalty_circle_infeasible", direct, direct.target_value, cfg));
    }
    {
        // |x^3 + x| through the nonlinear calculus rule.
        const SmoothMap F{1, 1, [](const Vector& x) { return Vector::Constant(1, x(0) * x(0) * x(0) + x(0)); },
                          [](const Vector& x) { return Matrix::Constant(1, 1, 3.0 * x(0) * x(0) + 1.0); }};
        const SmoothingFamily comp = calculus_nonlinear_compose(F, moreau_family(abs1));
        out.push_back(check_gradient("compose_fd/abs_cubic", comp, 0.5, detail::random_points(rng, 1, 20, 1.5), 1e-6,
                                     1e-5));
    }

    struct Known {
        const char* problem;
        double inf;
    };
    for (const Known k : {Known{"lasso_small", 0.395}, Known{"circle_inequality", -std::sqrt(2.0)},
                          Known{"rosenbrock_box", 0.04}, Known{"vapnik_regression_small", 0.1125}}) {
        const auto lp = problem::load_text(*catalog::find_problem(k.problem));
        out.push_back(inf_convergence_probe(std::string("inf_convergence/") + k.problem, lp.family, k.inf, lp.config,
                                            lp.x0, 1e-4, &lp.problem));
    }
    return out;
}

/// Runs a named suite; "all" concatenates the others in order.
inline std::vector<ProbeReport> run_suite(const std::string& name, std::uint64_t seed) {
    if (name == "kernels") {
        return kernels_suite(seed);
    }
    if (name == "envelopes") {
        return envelopes_suite(seed);
    }
    if (name == "consistency") {
        return consistency_suite(seed);
    }
    if (name == "composite") {
        return composite_suite(seed);
    }
    if (name == "all") {
        std::vector<ProbeReport> out;
        for (const auto& part : {"kernels", "envelopes", "consistency", "composite"}) {
            auto r = run_suite(part, seed);
            out.insert(out.end(), r.begin(), r.end());
        }
        return out;
    }
    throw ArgumentError("unknown suite '" + name + "'");
}

} // namespace epismooth::verify

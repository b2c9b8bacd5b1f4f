#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "epismooth/constrained.hpp"
#include "epismooth/smoothing.hpp"
#include "epismooth/types.hpp"

namespace epismooth {

struct MinimizeResult {
    Vector x;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
};

/// Gradient descent with Armijo backtracking (c = 1e-4, halving) and a
/// Barzilai-Borwein initial step. When the function decrease is below
/// rounding level the step is accepted on an approximate-Wolfe slope test
/// instead, so tolerances near machine precision stay reachable.
inline MinimizeResult minimize_smooth(const std::function<double(const Vector&)>& f,
                                      const std::function<Vector(const Vector&)>& grad, const Vector& x0,
                                      double tol, int max_iter) {
    constexpr double armijo_c = 1e-4;
    constexpr double wolfe_sigma = 0.9;
    Vector x = x0;
    double fx = f(x);
    Vector g = grad(x);
    double gnorm = g.norm();
    if (!std::isfinite(fx) || !g.allFinite()) {
        throw ArgumentError("minimize_smooth: non-finite value or gradient at the start point");
    }
    double step = gnorm > 0.0 ? std::min(1.0, 1.0 / gnorm) : 1.0;
    Vector best = x;
    double best_gnorm = gnorm;

    for (int it = 0; it < max_iter; ++it) {
        if (gnorm <= tol) {
            return MinimizeResult{x, fx, gnorm, it};
        }
        const double gg = gnorm * gnorm;
        bool accepted = false;
        Vector x_new;
        double f_new = 0.0;
        Vector g_new;
        double t = step;
        for (int bt = 0; bt < 80; ++bt) {
            x_new = x - t * g;
            f_new = f(x_new);
            if (std::isfinite(f_new)) {
                if (f_new <= fx - armijo_c * t * gg) {
                    g_new = grad(x_new);
                    accepted = true;
                    break;
                }
                if (std::abs(f_new - fx) <= 1e-12 * (1.0 + std::abs(fx))) {
                    g_new = grad(x_new);
                    const double slope = g_new.dot(g);
                    if (slope <= wolfe_sigma * gg && slope >= -(1.0 - 2.0 * armijo_c) * gg) {
                        accepted = true;
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if (!accepted) {
            throw ConvergenceError("minimize_smooth: line search failed", best, best_gnorm);
        }
        const Vector s = x_new - x;
        const Vector yv = g_new - g;
        x = std::move(x_new);
        fx = f_new;
        g = std::move(g_new);
        gnorm = g.norm();
        if (gnorm < best_gnorm) {
            best = x;
            best_gnorm = gnorm;
        }
        const double sy = s.dot(yv);
        if (sy > 0.0) {
            step = std::clamp(s.squaredNorm() / sy, 1e-30, 1e30);
        } else {
            step = std::min(1e30, 2.0 * t);
        }
    }
    if (gnorm <= tol) {
        return MinimizeResult{x, fx, gnorm, max_iter};
    }
    throw ConvergenceError("minimize_smooth: iteration cap reached", best, best_gnorm);
}

struct ContinuationConfig {
    double mu0 = 1.0;
    double rho = 0.5;
    int k_max = 30;
    double eps0 = 1e-2; // inner tolerance at stage k is eps0 * rho^k
    int inner_max_iter = 10000;
    KKTTolerances final_tols{};
    std::optional<Vector> guard; // known feasible point
    double divergence_bound = 1e8;

    void validate() const {
        if (!(mu0 > 0.0) || !(rho > 0.0 && rho < 1.0) || k_max < 1 || !(eps0 > 0.0) || inner_max_iter < 1) {
            throw ArgumentError("continuation config: need mu0 > 0, 0 < rho < 1, k_max >= 1, eps0 > 0");
        }
    }
};

enum class GuardStatus { none, accepted, restarted };

inline std::string to_string(GuardStatus g) {
    switch (g) {
    case GuardStatus::accepted:
        return "accepted";
    case GuardStatus::restarted:
        return "restarted";
    default:
        return "none";
    }
}

struct StageRecord {
    int k = 0;
    double mu = 0.0;
    double inner_tol = 0.0;
    Vector x;
    double grad_norm = 0.0;
    double eval = 0.0;
    Vector y; // multiplier estimate (empty without diagnostics)
    int inner_iterations = 0;
    bool converged = false;
    GuardStatus guard = GuardStatus::none;
    std::optional<KKTReport> kkt;
};

enum class SolveStatus { classified, stages_exhausted, inner_failure, unbounded_iterates };

inline std::string to_string(SolveStatus s) {
    switch (s) {
    case SolveStatus::classified:
        return "classified";
    case SolveStatus::stages_exhausted:
        return "stages_exhausted";
    case SolveStatus::inner_failure:
        return "inner_failure";
    default:
        return "unbounded_iterates";
    }
}

struct ContinuationResult {
    std::vector<StageRecord> trace;
    Vector x;
    Vector y;
    SolveStatus status = SolveStatus::stages_exhausted;
    std::optional<KKTReport> kkt;

    Classification classification() const { return kkt ? kkt->classification : Classification::undetermined; }
};

/// Minimizes family(., mu_k) for mu_k = mu0 rho^k with warm starts. With a
/// constrained problem attached, each stage gets a multiplier estimate and a
/// KKT report, and the loop stops as soon as the report classifies the point.
inline ContinuationResult continuation_solve(const SmoothingFamily& family, const ContinuationConfig& config,
                                             const Vector& x0, const ConstrainedProblem* diagnostics = nullptr) {
    config.validate();
    detail::require_dim(x0.size(), family.dim, "continuation_solve");
    ContinuationResult res;
    Vector x = x0;
    double mu = config.mu0;
    double eps = config.eps0;
    for (int k = 0; k < config.k_max; ++k, mu *= config.rho, eps *= config.rho) {
        StageRecord rec;
        rec.k = k;
        rec.mu = mu;
        rec.inner_tol = eps;
        auto f = [&family, mu](const Vector& z) { return family.eval(z, mu); };
        auto g = [&family, mu](const Vector& z) { return family.grad(z, mu); };

        auto run_inner = [&](const Vector& start) {
            try {
                const MinimizeResult mr = minimize_smooth(f, g, start, eps, config.inner_max_iter);
                rec.x = mr.x;
                rec.inner_iterations += mr.iterations;
                rec.converged = true;
            } catch (const ConvergenceError& e) {
                rec.x = e.best();
                rec.inner_iterations += config.inner_max_iter;
                rec.converged = false;
            }
        };
        run_inner(x);
        if (config.guard) {
            const double ref = f(*config.guard);
            if (f(rec.x) <= ref) {
                rec.guard = GuardStatus::accepted;
            } else {
                // Descent from the feasible point keeps s_f below s_f(x_feasible).
                rec.converged = false;
                run_inner(*config.guard);
                rec.guard = GuardStatus::restarted;
            }
        }
        x = rec.x;
        rec.eval = f(x);
        rec.grad_norm = g(x).norm();
        if (diagnostics != nullptr) {
            rec.y = multiplier_estimate(*diagnostics, x, mu);
            rec.kkt = kkt_report(*diagnostics, x, rec.y, config.final_tols);
        }
        res.trace.push_back(rec);

        if (!x.allFinite() || x.norm() > config.divergence_bound) {
            res.status = SolveStatus::unbounded_iterates;
            break;
        }
        if (!rec.converged) {
            res.status = SolveStatus::inner_failure;
            break;
        }
        if (rec.kkt && rec.kkt->classification != Classification::undetermined) {
            res.status = SolveStatus::classified;
            break;
        }
    }
    const StageRecord& last = res.trace.back();
    res.x = last.x;
    res.y = last.y;
    res.kkt = last.kkt;
    return res;
}

} // namespace epismooth

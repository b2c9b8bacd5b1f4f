#include <cmath>

#include <gtest/gtest.h>

#include "epismooth/catalog.hpp"
#include "epismooth/constrained.hpp"
#include "epismooth/problem_file.hpp"
#include "epismooth/solver.hpp"

using namespace epismooth;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (const double x : v) {
        out(i++) = x;
    }
    return out;
}

SmoothFunction linear_objective(const Vector& c) {
    return SmoothFunction{[c](const Vector& x) { return c.dot(x); }, [c](const Vector&) { return c; }};
}

SmoothMap scalar_map(std::function<double(double)> f, std::function<double(double)> df) {
    return SmoothMap{1, 1, [f](const Vector& x) { return vec({f(x(0))}); },
                     [df](const Vector& x) {
                         Matrix J(1, 1);
                         J(0, 0) = df(x(0));
                         return J;
                     }};
}

const ConvexSet nonpositive = ConvexSet::zero_cross_negative(0, 1);

// min x s.t. x <= 0 has no minimizer, but x in R with h = x, C = R_- makes a
// convenient penalty example.
ConstrainedProblem x_below_zero() {
    return ConstrainedProblem{linear_objective(vec({1})), identity_map(1), nonpositive, std::nullopt};
}

// h(x) = x^2 + 1 in {0}: never feasible.
ConstrainedProblem square_plus_one_is_zero() {
    return ConstrainedProblem{linear_objective(vec({1})),
                              scalar_map([](double x) { return x * x + 1; }, [](double x) { return 2 * x; }),
                              ConvexSet::singleton(vec({0})), std::nullopt};
}

// min x1 + x2 s.t. x1^2 + x2^2 <= 1.
ConstrainedProblem circle() {
    SmoothMap h{2, 1, [](const Vector& x) { return vec({x.squaredNorm() - 1}); },
                [](const Vector& x) { return Matrix(2 * x.transpose()); }};
    return ConstrainedProblem{linear_objective(vec({1, 1})), h, nonpositive, std::nullopt};
}

} // namespace

TEST(Penalty, ScalarExample) {
    const SmoothingFamily fam = penalty_family(x_below_zero());
    EXPECT_DOUBLE_EQ(fam.eval(vec({1}), 0.5), 2.0);
    EXPECT_DOUBLE_EQ(fam.grad(vec({1}), 0.5)(0), 3.0);
    EXPECT_DOUBLE_EQ(fam.eval(vec({-1}), 0.5), -1.0);
    EXPECT_TRUE(std::isinf(fam.target_value(vec({1}))));
    EXPECT_EQ(fam.target_value(vec({-1})), -1.0);
}

TEST(Penalty, CompositeRouteAgrees) {
    const ConstrainedProblem p = circle();
    const SmoothingFamily direct = penalty_family(p);
    const SmoothingFamily via = penalty_family_via_composite(p);
    for (const Vector& x : {vec({1, 1}), vec({0.2, -0.3}), vec({-2, 0.5}), vec({0.7071, 0.7071})}) {
        for (const double mu : {1.0, 0.1, 1e-4}) {
            EXPECT_NEAR(direct.eval(x, mu), via.eval(x, mu), 1e-12 * std::max(1.0, std::abs(direct.eval(x, mu))));
            EXPECT_LE((direct.grad(x, mu) - via.grad(x, mu)).norm(), 1e-12 * std::max(1.0, direct.grad(x, mu).norm()));
        }
    }
}

TEST(Penalty, ValidationErrors) {
    ConstrainedProblem p = x_below_zero();
    p.C = ConvexSet::nonneg_orthant(2);
    EXPECT_THROW(penalty_family(p), ArgumentError);
    ConstrainedProblem q = x_below_zero();
    q.objective.gradient = nullptr;
    EXPECT_THROW(penalty_family(q), ArgumentError);
}

TEST(Multiplier, EstimateFromResidual) {
    EXPECT_DOUBLE_EQ(multiplier_estimate(x_below_zero(), vec({0.25}), 0.5)(0), 0.5);
    EXPECT_DOUBLE_EQ(multiplier_estimate(x_below_zero(), vec({-0.25}), 0.5)(0), 0.0);
}

TEST(KKT, CircleOptimum) {
    const double r = 1.0 / std::sqrt(2.0);
    const KKTReport rep = kkt_report(circle(), vec({-r, -r}), vec({r}));
    EXPECT_EQ(rep.classification, Classification::kkt_point);
    EXPECT_LE(rep.stationarity_residual, 1e-12);
    EXPECT_LE(rep.feasibility_residual, 1e-12);
    EXPECT_LE(rep.cone_residual, 1e-12);
}

TEST(KKT, WrongSignMultiplierHasConeResidual) {
    const double r = 1.0 / std::sqrt(2.0);
    const KKTReport rep = kkt_report(circle(), vec({r, r}), vec({-r}));
    EXPECT_LE(rep.stationarity_residual, 1e-12);
    EXPECT_NEAR(rep.cone_residual, r, 1e-12);
    EXPECT_EQ(rep.classification, Classification::undetermined);
}

TEST(KKT, RegularizerEntersStationarity) {
    // min 0.5 (x - 0.3)^2 + |x|: optimum 0 with subgradient 0.3 of |.|.
    ConstrainedProblem p{SmoothFunction{[](const Vector& x) { return 0.5 * std::pow(x(0) - 0.3, 2); },
                                        [](const Vector& x) { return vec({x(0) - 0.3}); }},
                         SmoothMap{1, 0, [](const Vector&) { return Vector(0); }, [](const Vector&) { return Matrix(0, 1); }},
                         ConvexSet::whole_space(0), one_norm(1)};
    EXPECT_EQ(kkt_report(p, vec({0}), Vector(0)).classification, Classification::kkt_point);
    EXPECT_NEAR(kkt_report(p, vec({0.1}), Vector(0)).stationarity_residual, 0.8, 1e-12);
}

TEST(Infeasible, StationarityOfDistance) {
    const ConstrainedProblem p = square_plus_one_is_zero();
    const InfeasibleStationarity at0 = infeasible_stationarity_check(p, vec({0}));
    EXPECT_TRUE(at0.is_candidate);
    EXPECT_DOUBLE_EQ(at0.psi, 1.0);
    EXPECT_DOUBLE_EQ(at0.residual, 0.0);
    const InfeasibleStationarity at1 = infeasible_stationarity_check(p, vec({1}));
    EXPECT_FALSE(at1.is_candidate);
    EXPECT_DOUBLE_EQ(at1.residual, 2.0);

    const InfeasibleStationarity lin = infeasible_stationarity_check(x_below_zero(), vec({1}));
    EXPECT_FALSE(lin.is_candidate);
    EXPECT_DOUBLE_EQ(lin.residual, 1.0);
    EXPECT_THROW(infeasible_stationarity_check(x_below_zero(), vec({-1})), PreconditionError);
}

TEST(Infeasible, ClassificationAndECQ) {
    const ConstrainedProblem p = square_plus_one_is_zero();
    const KKTReport rep = kkt_report(p, vec({0}), vec({1}));
    EXPECT_EQ(rep.classification, Classification::infeasible_stationary);
    ASSERT_TRUE(rep.infeasibility.has_value());
    EXPECT_FALSE(ecq_check(p, vec({0})).holds);
    EXPECT_TRUE(ecq_check(p, vec({1})).holds);
}

TEST(ECQ, FeasiblePointUsesNormalCone) {
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_TRUE(ecq_check(circle(), vec({-r, -r})).holds);
    EXPECT_TRUE(ecq_check(circle(), vec({0, 0})).holds);
}

TEST(Guard, AcceptsOnlyDescentFromReference) {
    const ConstrainedProblem p = circle();
    EXPECT_TRUE(feasible_guard(p, vec({0, 0}), vec({-0.5, -0.5}), 0.1));
    EXPECT_FALSE(feasible_guard(p, vec({0, 0}), vec({3, 3}), 0.1));
    EXPECT_THROW(feasible_guard(p, vec({2, 0}), vec({0, 0}), 0.1), PreconditionError);
}

TEST(MinimizeSmooth, Quadratic) {
    const Vector c = vec({1, -2, 3});
    auto f = [&](const Vector& x) { return 0.5 * (x - c).squaredNorm(); };
    auto g = [&](const Vector& x) { return Vector(x - c); };
    const MinimizeResult r = minimize_smooth(f, g, Vector::Zero(3), 1e-10, 1000);
    EXPECT_LE((r.x - c).norm(), 1e-9);
    EXPECT_LE(r.grad_norm, 1e-10);
}

TEST(MinimizeSmooth, Rosenbrock) {
    auto f = [](const Vector& x) { return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2); };
    auto g = [](const Vector& x) {
        return vec({-400 * x(0) * (x(1) - x(0) * x(0)) - 2 * (1 - x(0)), 200 * (x(1) - x(0) * x(0))});
    };
    const MinimizeResult r = minimize_smooth(f, g, vec({-1.2, 1}), 1e-8, 100000);
    EXPECT_LE((r.x - vec({1, 1})).norm(), 1e-4);
}

TEST(MinimizeSmooth, StationaryStartTakesNoSteps) {
    auto f = [](const Vector& x) { return x.squaredNorm(); };
    auto g = [](const Vector& x) { return Vector(2 * x); };
    const MinimizeResult r = minimize_smooth(f, g, Vector::Zero(2), 1e-8, 10);
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(r.x, Vector::Zero(2));
}

TEST(MinimizeSmooth, IterationCapRaisesWithBestPoint) {
    auto f = [](const Vector& x) { return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2); };
    auto g = [](const Vector& x) {
        return vec({-400 * x(0) * (x(1) - x(0) * x(0)) - 2 * (1 - x(0)), 200 * (x(1) - x(0) * x(0))});
    };
    try {
        minimize_smooth(f, g, vec({-1.2, 1}), 1e-12, 3);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_EQ(e.best().size(), 2);
        EXPECT_GT(e.residual(), 1e-12);
    }
}

TEST(MinimizeSmooth, NonFiniteStartRejected) {
    auto f = [](const Vector&) { return std::nan(""); };
    auto g = [](const Vector& x) { return x; };
    EXPECT_THROW(minimize_smooth(f, g, vec({1}), 1e-8, 10), ArgumentError);
}

TEST(Continuation, CircleReachesKKT) {
    const ConstrainedProblem p = circle();
    ContinuationConfig cfg;
    cfg.mu0 = 1.0;
    cfg.rho = 0.5;
    cfg.k_max = 40;
    const ContinuationResult res = continuation_solve(penalty_family(p), cfg, vec({0, 0}), &p);
    ASSERT_EQ(res.classification(), Classification::kkt_point);
    EXPECT_EQ(res.status, SolveStatus::classified);
    const double r = 1.0 / std::sqrt(2.0);
    EXPECT_LE((res.x - vec({-r, -r})).norm(), 1e-5);
    EXPECT_NEAR(res.y(0), r, 1e-5);
    for (std::size_t i = 1; i < res.trace.size(); ++i) {
        EXPECT_DOUBLE_EQ(res.trace[i].mu, res.trace[i - 1].mu * 0.5);
        EXPECT_EQ(res.trace[i].k, static_cast<int>(i));
    }
}

TEST(Continuation, InfeasibleProblemClassified) {
    const ConstrainedProblem p = square_plus_one_is_zero();
    ContinuationConfig cfg;
    cfg.mu0 = 1.0;
    cfg.rho = 0.5;
    cfg.k_max = 40;
    const ContinuationResult res = continuation_solve(penalty_family(p), cfg, vec({0.5}), &p);
    EXPECT_EQ(res.classification(), Classification::infeasible_stationary);
    EXPECT_LE(std::abs(res.x(0)), 1e-5);
}

TEST(Continuation, WithoutDiagnosticsRunsAllStages) {
    const ConstrainedProblem p = circle();
    ContinuationConfig cfg;
    cfg.k_max = 5;
    const ContinuationResult res = continuation_solve(penalty_family(p), cfg, vec({0, 0}));
    EXPECT_EQ(res.trace.size(), 5u);
    EXPECT_EQ(res.status, SolveStatus::stages_exhausted);
    EXPECT_EQ(res.classification(), Classification::undetermined);
}

TEST(Continuation, GuardRestartsFromFeasiblePoint) {
    const ConstrainedProblem p = circle();
    ContinuationConfig cfg;
    cfg.k_max = 3;
    cfg.inner_max_iter = 1;
    cfg.guard = vec({0, 0});
    // One inner step from far away cannot get below the penalty value at the origin.
    const ContinuationResult res = continuation_solve(penalty_family(p), cfg, vec({40, 40}), &p);
    ASSERT_FALSE(res.trace.empty());
    EXPECT_EQ(res.trace.front().guard, GuardStatus::restarted);
    const SmoothingFamily fam = penalty_family(p);
    for (const StageRecord& s : res.trace) {
        EXPECT_LE(fam.eval(s.x, s.mu), fam.eval(vec({0, 0}), s.mu) + 1e-12);
    }
}

TEST(Continuation, ConfigValidation) {
    const SmoothingFamily fam = penalty_family(circle());
    ContinuationConfig cfg;
    cfg.rho = 1.0;
    EXPECT_THROW(continuation_solve(fam, cfg, vec({0, 0})), ArgumentError);
    cfg = {};
    cfg.mu0 = 0.0;
    EXPECT_THROW(continuation_solve(fam, cfg, vec({0, 0})), ArgumentError);
    cfg = {};
    EXPECT_THROW(continuation_solve(fam, cfg, vec({0})), ArgumentError);
}

TEST(Continuation, LassoStageValuesApproachOptimum) {
    const auto lp = problem::load_text(*catalog::find_problem("lasso_small"));
    const ContinuationResult res = continuation_solve(lp.family, lp.config, lp.x0, &lp.problem);
    ASSERT_GE(res.trace.size(), 5u);
    for (std::size_t k = 2; k < res.trace.size(); ++k) {
        EXPECT_LE(std::abs(res.trace[k].eval - 0.395), std::abs(res.trace[k - 1].eval - 0.395) + 1e-12) << "stage " << k;
    }
    EXPECT_LE(std::abs(res.trace.back().eval - 0.395), 1e-4);
}

TEST(Continuation, WarmStartWithinTwiceColdStart) {
    const auto lp = problem::load_text(*catalog::find_problem("circle_inequality"));
    const ContinuationResult res = continuation_solve(lp.family, lp.config, lp.x0, &lp.problem);
    for (const StageRecord& s : res.trace) {
        auto f = [&](const Vector& z) { return lp.family.eval(z, s.mu); };
        auto g = [&](const Vector& z) { return lp.family.grad(z, s.mu); };
        const MinimizeResult cold = minimize_smooth(f, g, lp.x0, s.inner_tol, lp.config.inner_max_iter);
        EXPECT_LE(s.inner_iterations, 2 * cold.iterations + 1) << "stage " << s.k;
    }
}

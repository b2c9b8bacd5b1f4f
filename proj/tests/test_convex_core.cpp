#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "epismooth/convex_set.hpp"
#include "epismooth/eplq.hpp"
#include "epismooth/functions.hpp"
#include "epismooth/polytope.hpp"

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

ConvexSet unit_box2() { return ConvexSet::box(Vector::Zero(2), Vector::Ones(2)); }

std::vector<ConvexSet> sample_sets() {
    Matrix A(1, 3);
    A << 1.0, 2.0, -1.0;
    return {ConvexSet::box(vec({-1, 0, 2}), vec({1, 0.5, 3})),
            ConvexSet::euclidean_ball(vec({0.5, -1, 0}), 2.0),
            ConvexSet::zero_cross_negative(1, 3),
            ConvexSet::affine_subspace(A, vec({1})),
            ConvexSet::singleton(vec({1, 2, 3})),
            ConvexSet::nonneg_orthant(3),
            ConvexSet::whole_space(3)};
}

} // namespace

TEST(Projection, BoxClampsComponentwise) {
    EXPECT_TRUE(project(unit_box2(), vec({2, -1})).isApprox(vec({1, 0})));
}

TEST(Projection, ZeroCrossNegative) {
    const Vector p = project(ConvexSet::zero_cross_negative(1, 2), vec({3, 2}));
    EXPECT_EQ(p, vec({0, 0}));
    EXPECT_EQ(project(ConvexSet::zero_cross_negative(1, 2), vec({3, -2})), vec({0, -2}));
}

TEST(Projection, BallScalesRadially) {
    const Vector p = project(ConvexSet::euclidean_ball(Vector::Zero(2), 1.0), vec({3, 4}));
    EXPECT_NEAR(p(0), 0.6, 1e-15);
    EXPECT_NEAR(p(1), 0.8, 1e-15);
}

TEST(Projection, AffineSubspaceLandsOnConstraint) {
    Matrix A(1, 2);
    A << 1.0, 1.0;
    const ConvexSet s = ConvexSet::affine_subspace(A, vec({1}));
    const Vector p = project(s, vec({2, 2}));
    EXPECT_NEAR(p(0), 0.5, 1e-14);
    EXPECT_NEAR(p(1), 0.5, 1e-14);
}

TEST(Projection, DimensionMismatchIsArgumentError) {
    EXPECT_THROW(project(unit_box2(), vec({1, 2, 3})), ArgumentError);
}

TEST(Projection, InvalidSetsRejected) {
    EXPECT_THROW(ConvexSet::box(vec({1}), vec({0})), ArgumentError);
    EXPECT_THROW(ConvexSet::euclidean_ball(vec({0}), -1.0), ArgumentError);
    Matrix A(2, 2);
    A << 1, 1, 2, 2;
    EXPECT_THROW(ConvexSet::affine_subspace(A, vec({0, 0})), ArgumentError);
}

TEST(Projection, IdempotentNonexpansiveAndOptimal) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 3.0);
    auto draw = [&] { return vec({nd(rng), nd(rng), nd(rng)}); };
    for (const ConvexSet& s : sample_sets()) {
        for (int t = 0; t < 200; ++t) {
            const Vector y = draw();
            const Vector z = draw();
            const Vector py = project(s, y);
            const Vector pz = project(s, z);
            EXPECT_TRUE(contains(s, py, 1e-10)) << s.describe();
            EXPECT_LE((project(s, py) - py).norm(), 1e-12) << s.describe();
            EXPECT_LE((py - pz).norm(), (y - z).norm() + 1e-12) << s.describe();
            // pz is in the set, so it cannot be closer to y than py.
            EXPECT_LE((y - py).norm(), (y - pz).norm() + 1e-12) << s.describe();
        }
    }
}

TEST(Distance, BoxResidual) {
    const ConvexSet s = unit_box2();
    EXPECT_NEAR(distance(s, vec({2, -1})), std::sqrt(2.0), 1e-15);
    EXPECT_EQ(dist_sq_half_gradient(s, vec({2, -1})), vec({1, -1}));
    EXPECT_EQ(distance(s, vec({0.5, 0.5})), 0.0);
    EXPECT_EQ(dist_sq_half_gradient(s, vec({0.5, 0.5})), vec({0, 0}));
}

TEST(Distance, ZeroCrossNegativeAgainstGrid) {
    const ConvexSet s = ConvexSet::zero_cross_negative(1, 2);
    const Vector y = vec({3, 2});
    double best = kInf;
    for (int k = -5000; k <= 0; ++k) {
        best = std::min(best, (y - vec({0, 1e-3 * k})).norm());
    }
    EXPECT_NEAR(distance(s, y), std::sqrt(13.0), 1e-15);
    EXPECT_NEAR(distance(s, y), best, 1e-9);
}

TEST(Distance, HalfSquaredGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(0.0, 3.0);
    for (const ConvexSet& s : sample_sets()) {
        for (int t = 0; t < 50; ++t) {
            const Vector y = vec({nd(rng), nd(rng), nd(rng)});
            if (distance(s, y) <= 0.1) {
                continue;
            }
            const double h = 1e-6 * (1.0 + y.norm());
            Vector fd(3);
            for (int i = 0; i < 3; ++i) {
                Vector yp = y, ym = y;
                yp(i) += h;
                ym(i) -= h;
                fd(i) = (0.5 * std::pow(distance(s, yp), 2) - 0.5 * std::pow(distance(s, ym), 2)) / (2 * h);
            }
            const Vector g = dist_sq_half_gradient(s, y);
            EXPECT_LE((fd - g).norm() / std::max(1.0, g.norm()), 1e-6) << s.describe();
        }
    }
}

TEST(NormalCone, BoxFace) {
    const ConvexPolytope c = normal_cone(unit_box2(), vec({1, 0.5}));
    ASSERT_EQ(c.rays.size(), 1u);
    EXPECT_EQ(c.rays[0], vec({1, 0}));
    EXPECT_TRUE(c.generators.empty());
}

TEST(NormalCone, SingletonIsWholeSpace) {
    const ConvexPolytope c = normal_cone(ConvexSet::singleton(Vector::Zero(2)), Vector::Zero(2));
    EXPECT_EQ(c.rays.size(), 4u);
    EXPECT_NEAR(distance_to(c, vec({-3, 7})), 0.0, 1e-12);
}

TEST(NormalCone, InteriorIsOrigin) {
    const ConvexPolytope c = normal_cone(ConvexSet::nonneg_orthant(2), vec({1, 2}));
    EXPECT_TRUE(c.rays.empty());
    EXPECT_TRUE(c.generators.empty());
    EXPECT_NEAR(distance_to(c, vec({3, 4})), 5.0, 1e-12);
}

TEST(NormalCone, FarPointIsPreconditionError) {
    EXPECT_THROW(normal_cone(unit_box2(), vec({3, 3}), 1e-9), PreconditionError);
}

TEST(NormalCone, RaysAreNormalToSampledMembers) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd(0.0, 3.0);
    for (const ConvexSet& s : sample_sets()) {
        for (int t = 0; t < 30; ++t) {
            const Vector at = project(s, vec({nd(rng), nd(rng), nd(rng)}));
            const ConvexPolytope c = normal_cone(s, at);
            for (int j = 0; j < 30; ++j) {
                const Vector z = project(s, vec({nd(rng), nd(rng), nd(rng)}));
                for (const Vector& r : c.rays) {
                    EXPECT_LE(r.dot(z - at), 1e-9) << s.describe();
                }
            }
        }
    }
}

TEST(SimplexMinNorm, SymmetricCancellation) {
    Matrix G(1, 2);
    G << 1.0, -1.0;
    const auto r = simplex_min_norm(G);
    EXPECT_LE(r.residual, 1e-8);
    EXPECT_NEAR(r.weights(0), 0.5, 1e-6);
    EXPECT_NEAR(r.weights(1), 0.5, 1e-6);
}

TEST(SimplexMinNorm, OneSidedPicksSmallest) {
    Matrix G(1, 2);
    G << 1.0, 2.0;
    const auto r = simplex_min_norm(G);
    EXPECT_NEAR(r.residual, 1.0, 1e-12);
    EXPECT_NEAR(r.weights(0), 1.0, 1e-12);
}

TEST(SimplexMinNorm, ZeroColumn) {
    EXPECT_EQ(simplex_min_norm(Matrix::Zero(2, 1)).residual, 0.0);
    EXPECT_THROW(simplex_min_norm(Matrix(2, 0)), ArgumentError);
}

namespace {

// Distance from 0 to conv of the columns by enumerating vertices, edges and
// (for three columns in the plane) the triangle interior.
double enumerate_min_norm(const Matrix& G) {
    double best = kInf;
    const Eigen::Index k = G.cols();
    for (Eigen::Index i = 0; i < k; ++i) {
        best = std::min(best, G.col(i).norm());
        for (Eigen::Index j = i + 1; j < k; ++j) {
            const Vector d = G.col(j) - G.col(i);
            const double t = std::clamp(-G.col(i).dot(d) / d.squaredNorm(), 0.0, 1.0);
            best = std::min(best, (G.col(i) + t * d).norm());
        }
    }
    if (k == 3 && G.rows() == 2) {
        Matrix M(3, 3);
        M << G, Eigen::RowVector3d::Ones();
        if (std::abs(M.determinant()) > 1e-12) {
            const Vector w = M.colPivHouseholderQr().solve(vec({0, 0, 1}));
            if ((w.array() >= 0.0).all()) {
                best = 0.0;
            }
        }
    }
    return best;
}

} // namespace

TEST(SimplexMinNorm, MatchesEnumeration) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        const Eigen::Index k = 2 + t % 2;
        Matrix G(2, k);
        for (Eigen::Index i = 0; i < G.size(); ++i) {
            G.data()[i] = nd(rng);
        }
        const double expected = enumerate_min_norm(G);
        const auto r = simplex_min_norm(G, 1e-10);
        EXPECT_NEAR(r.residual, expected, 1e-6) << G;
        EXPECT_NEAR(r.weights.sum(), 1.0, 1e-12);
        EXPECT_GE(r.weights.minCoeff(), 0.0);
    }
}

TEST(Polytope, NearestPointHullAndCone) {
    ConvexPolytope seg{1, {vec({-1}), vec({1})}, {}};
    EXPECT_NEAR(distance_to(seg, vec({3})), 2.0, 1e-12);
    EXPECT_NEAR(distance_to(seg, vec({0.3})), 0.0, 1e-12);

    const ConvexPolytope ray = ConvexPolytope::cone(2, {vec({1, 0})});
    EXPECT_NEAR(distance_to(ray, vec({-1, 1})), std::sqrt(2.0), 1e-12);
    const auto np = nearest_point(ray, vec({2, 1}));
    EXPECT_TRUE(np.point.isApprox(vec({2, 0}), 1e-12));
    EXPECT_NEAR(np.distance, 1.0, 1e-12);

    ConvexPolytope shifted{2, {vec({1, 1})}, {vec({0, 1})}};
    EXPECT_NEAR(distance_to(shifted, vec({1, 5})), 0.0, 1e-12);
    EXPECT_NEAR(distance_to(shifted, vec({1, 0})), 1.0, 1e-12);
}

TEST(Polytope, Calculus) {
    ConvexPolytope seg{1, {vec({-1}), vec({1})}, {}};
    Matrix A(2, 1);
    A << 2.0, 0.0;
    const ConvexPolytope mapped = map_polytope(A, seg);
    EXPECT_NEAR(distance_to(mapped, vec({2, 0})), 0.0, 1e-12);
    EXPECT_NEAR(distance_to(mapped, vec({3, 0})), 1.0, 1e-12);
    const ConvexPolytope sum = minkowski_sum(seg, ConvexPolytope{1, {vec({0}), vec({3})}, {}});
    EXPECT_NEAR(distance_to(sum, vec({4})), 0.0, 1e-12);
    EXPECT_NEAR(distance_to(sum, vec({5})), 1.0, 1e-12);
    EXPECT_NEAR(distance_to(translate(seg, vec({10})), vec({9})), 0.0, 1e-12);
}

TEST(BoxQP, SeparableCases) {
    const ConvexSet U = ConvexSet::box(Vector::Constant(2, -1.0), Vector::Ones(2));
    const auto a = box_qp_maximize(2.0 * Matrix::Identity(2, 2), vec({2, 0}), U);
    EXPECT_NEAR((a.u - vec({1, 0})).norm(), 0.0, 1e-8);
    EXPECT_NEAR(a.value, 1.0, 1e-9);
    const auto b = box_qp_maximize(Matrix::Identity(2, 2), Vector::Zero(2), U);
    EXPECT_NEAR(b.u.norm(), 0.0, 1e-12);
    EXPECT_NEAR(b.value, 0.0, 1e-12);
    const auto c = box_qp_maximize(Matrix::Identity(2, 2), vec({0.3, 0}), U);
    EXPECT_NEAR((c.u - vec({0.3, 0})).norm(), 0.0, 1e-8);
    EXPECT_NEAR(c.value, 0.045, 1e-12);
}

TEST(BoxQP, UnboundedDirectionReported) {
    const ConvexSet U = ConvexSet::box(vec({0}), vec({kInf}));
    EXPECT_THROW(box_qp_maximize(Matrix::Zero(1, 1), vec({1}), U), UnboundedError);
}

TEST(EPLQ, ValueExamples) {
    EXPECT_NEAR(eplq_value(eplq_huber(1), vec({2})).value, 1.5, 1e-9);
    EXPECT_NEAR(eplq_value(eplq_euclidean_norm(2), vec({3, 4})).value, 5.0, 1e-9);
    EXPECT_NEAR(eplq_value(eplq_vapnik(1, 0.5), vec({2})).value, 1.5, 1e-12);
}

TEST(EPLQ, OneNormMatchesDirect) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> nd(0.0, 2.0);
    const EPLQSpec spec = eplq_one_norm(4);
    for (int t = 0; t < 100; ++t) {
        const Vector x = vec({nd(rng), nd(rng), nd(rng), nd(rng)});
        EXPECT_NEAR(eplq_value(spec, x).value, x.lpNorm<1>(), 1e-8);
    }
}

TEST(EPLQ, HuberMatchesScalarFormula) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> ud(-4.0, 4.0);
    const EPLQSpec spec = eplq_huber(1, 1.5);
    for (int t = 0; t < 100; ++t) {
        const double x = ud(rng);
        EXPECT_NEAR(eplq_value(spec, vec({x})).value, huber_scalar(x, 1.5), 1e-9);
    }
}

TEST(EPLQ, InvalidSpecsRejected) {
    const ConvexSet U = ConvexSet::box(Vector::Constant(1, -1.0), Vector::Ones(1));
    EXPECT_THROW(make_eplq(U, Matrix::Constant(1, 1, -1.0), Matrix::Identity(1, 1), Vector::Zero(1)), ArgumentError);
    EXPECT_THROW(make_eplq(U, Matrix::Zero(1, 1), Matrix::Zero(1, 1), Vector::Zero(1)), ArgumentError);
    EXPECT_THROW(make_eplq(ConvexSet::nonneg_orthant(1), Matrix::Zero(1, 1), Matrix::Identity(1, 1), Vector::Zero(1)),
                 ArgumentError);
}

TEST(EPLQ, Subdifferential) {
    const ConvexPolytope at0 = eplq_subdifferential(eplq_one_norm(1), vec({0}));
    EXPECT_NEAR(distance_to(at0, vec({-1})), 0.0, 1e-12);
    EXPECT_NEAR(distance_to(at0, vec({1})), 0.0, 1e-12);
    EXPECT_NEAR(distance_to(at0, vec({1.5})), 0.5, 1e-12);

    const ConvexPolytope huber2 = eplq_subdifferential(eplq_huber(1), vec({2}));
    ASSERT_TRUE(huber2.is_singleton());
    EXPECT_NEAR(huber2.generators[0](0), 1.0, 1e-9);

    const ConvexPolytope at3 = eplq_subdifferential(eplq_one_norm(1), vec({3}));
    ASSERT_TRUE(at3.is_singleton());
    EXPECT_EQ(at3.generators[0](0), 1.0);

    EXPECT_THROW(eplq_subdifferential(eplq_euclidean_norm(2), Vector::Zero(2)), UnsupportedError);
}

TEST(EPLQ, MoreauTransform) {
    const EPLQSpec env = eplq_moreau(eplq_huber(1), 1.0);
    EXPECT_EQ(env.B(0, 0), 2.0);
    EXPECT_NEAR(eplq_value(env, vec({2})).value, 1.0, 1e-9);
    EXPECT_NEAR(eplq_value(eplq_moreau(eplq_one_norm(1), 1.0), vec({0.5})).value, 0.125, 1e-9);
    const double small = eplq_value(eplq_moreau(eplq_huber(1), 1e-8), vec({2})).value;
    EXPECT_NEAR(small, 1.5, 1e-7);
}

TEST(FunctionOracles, ProxMinimizesOnGrid) {
    const std::vector<ConvexFunctionOracle> gs{one_norm(1), huber(1, 0.7), vapnik(1, 0.5),
                                               indicator(ConvexSet::box(vec({-1}), vec({0.5}))),
                                               eplq_function(eplq_euclidean_norm(1))};
    for (const auto& g : gs) {
        for (const double x : {-2.3, -0.4, 0.0, 0.6, 1.7}) {
            for (const double mu : {0.1, 0.5, 2.0}) {
                const double p = g.prox(vec({x}), mu)(0);
                auto obj = [&](double w) { return g.value(vec({w})) + (w - x) * (w - x) / (2.0 * mu); };
                double best = kInf;
                for (double w = -4.0; w <= 4.0; w += 1e-3) {
                    best = std::min(best, obj(w));
                }
                EXPECT_LE(obj(p), best + 1e-7) << g.name << " x=" << x << " mu=" << mu;
            }
        }
    }
}

TEST(FunctionOracles, ConvexAlongSegments) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd(0.0, 2.0);
    const std::vector<ConvexFunctionOracle> gs{one_norm(2), huber(2), vapnik(2, 0.3),
                                               eplq_function(eplq_euclidean_norm(2)),
                                               one_norm_plus_quadratic(vec({1, -1}))};
    for (const auto& g : gs) {
        for (int t = 0; t < 100; ++t) {
            const Vector x = vec({nd(rng), nd(rng)});
            const Vector z = vec({nd(rng), nd(rng)});
            const double s = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            EXPECT_LE(g.value(s * x + (1 - s) * z), s * g.value(x) + (1 - s) * g.value(z) + 1e-9) << g.name;
        }
    }
}

TEST(FunctionOracles, SoftThresholding) {
    EXPECT_EQ(soft_threshold(vec({2, -0.5, -3}), 1.0), vec({1, 0, -2}));
    EXPECT_EQ(one_norm(3).prox(vec({2, -0.5, -3}), 1.0), vec({1, 0, -2}));
}

TEST(FunctionOracles, IndicatorValueAndProx) {
    const ConvexFunctionOracle g = indicator(unit_box2());
    EXPECT_EQ(g.value(vec({0.5, 0.5})), 0.0);
    EXPECT_TRUE(std::isinf(g.value(vec({2, 0}))));
    EXPECT_EQ(g.prox(vec({2, -1}), 0.3), vec({1, 0}));
}

TEST(FunctionOracles, ZeroFunction) {
    const ConvexFunctionOracle g = zero_function(2);
    EXPECT_EQ(g.prox(vec({1, 2}), 0.5), vec({1, 2}));
    EXPECT_EQ(g.value(vec({1, 2})), 0.0);
}

#pragma once

#include <optional>
#include <vector>

#include "epismooth/convex_set.hpp"
#include "epismooth/functions.hpp"
#include "epismooth/polytope.hpp"
#include "epismooth/smooth_map.hpp"
#include "epismooth/smoothing.hpp"
#include "epismooth/types.hpp"

namespace epismooth {

/// f = g o H with a smoothing family for g.
struct CompositeProblem {
    ConvexFunctionOracle g;
    SmoothMap H;
    SmoothingFamily family_g;
    /// Caller assertion that mu -> family_g.eval is nondecreasing as mu decreases,
    /// for families that do not carry the flag themselves.
    bool assert_monotone = false;
};

/// s_f(x, mu) = s_g(H(x), mu).
inline SmoothingFamily composite_family(const CompositeProblem& p) {
    detail::require_dim(p.H.out_dim, p.family_g.dim, "composite_family");
    if (!p.family_g.monotone && !p.assert_monotone) {
        throw PreconditionError("composite_family: family for g is neither monotone nor asserted monotone");
    }
    SmoothingFamily out;
    out.target = p.family_g.target + " o H";
    out.provenance = p.family_g.provenance;
    out.provenance.push_back(p.family_g.monotone ? "composite" : "composite (asserted monotone)");
    out.dim = p.H.in_dim;
    out.eval = [e = p.family_g.eval, H = p.H](const Vector& x, double mu) { return e(H.value(x), mu); };
    out.grad = [g = p.family_g.grad, H = p.H](const Vector& x, double mu) {
        return Vector(H.jacobian(x).transpose() * g(H.value(x), mu));
    };
    out.target_value = [gv = p.g.value, H = p.H](const Vector& x) { return gv(H.value(x)); };
    out.monotone = true;
    out.continuously_convergent = p.family_g.continuously_convergent;
    return out;
}

struct QualificationReport {
    bool holds = true;
    double residual = kInf;
    std::optional<Vector> witness; // unit normal v with J^T v ~ 0 when the check fails
};

/// Decides whether some nonzero v in cone(rays) has J^T v = 0, where J is the
/// m x n Jacobian. Pairs {r, -r} span a lineality subspace that is tested by
/// its smallest singular value; the remaining pointed part is tested by a
/// simplex min-norm problem after projecting out the lineality image.
inline QualificationReport qualification_check(const Matrix& J, const std::vector<Vector>& rays, double tol) {
    const Eigen::Index m = J.rows();
    const Eigen::Index n = J.cols();
    QualificationReport rep;
    std::vector<Vector> units;
    for (const auto& r : rays) {
        detail::require_dim(r.size(), m, "qualification_check");
        const double len = r.norm();
        if (len > 0.0) {
            units.push_back(r / len);
        }
    }
    if (units.empty()) {
        return rep;
    }
    std::vector<Vector> lineality;
    std::vector<Vector> pointed;
    std::vector<bool> used(units.size(), false);
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (used[i]) {
            continue;
        }
        bool paired = false;
        for (std::size_t j = i + 1; j < units.size(); ++j) {
            if (!used[j] && (units[i] + units[j]).norm() <= 1e-12) {
                used[j] = true;
                paired = true;
                break;
            }
        }
        used[i] = true;
        (paired ? lineality : pointed).push_back(units[i]);
    }

    const Matrix Jt = J.transpose();
    Matrix Q(m, 0);      // orthonormal basis of span(lineality)
    Matrix image(n, 0);  // J^T Q
    double residual = kInf;
    if (!lineality.empty()) {
        Matrix Lmat(m, static_cast<Eigen::Index>(lineality.size()));
        for (std::size_t i = 0; i < lineality.size(); ++i) {
            Lmat.col(static_cast<Eigen::Index>(i)) = lineality[i];
        }
        Eigen::ColPivHouseholderQR<Matrix> qr(Lmat);
        const Eigen::Index rank = qr.rank();
        Q = Matrix(qr.householderQ()).leftCols(rank);
        image = Jt * Q;
        Eigen::JacobiSVD<Matrix> svd(image, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        // More directions than the image can hold means a nontrivial null space.
        const double smallest = rank > n ? 0.0 : sv(sv.size() - 1);
        residual = smallest;
        if (smallest <= tol) {
            rep.holds = false;
            rep.residual = smallest;
            const Vector coeff = rank > n ? Vector(svd.matrixV().col(rank - 1)) : Vector(svd.matrixV().col(sv.size() - 1));
            rep.witness = Q * coeff;
            return rep;
        }
    }
    if (!pointed.empty()) {
        Matrix P = Matrix::Identity(n, n);
        if (image.cols() > 0) {
            const Matrix basis = image.householderQr().householderQ() * Matrix::Identity(n, image.cols());
            P -= basis * basis.transpose();
        }
        Matrix G(n, static_cast<Eigen::Index>(pointed.size()));
        for (std::size_t i = 0; i < pointed.size(); ++i) {
            G.col(static_cast<Eigen::Index>(i)) = P * (Jt * pointed[i]);
        }
        const SimplexMinNormResult smn = simplex_min_norm(G, tol);
        if (smn.residual < residual) {
            residual = smn.residual;
        }
        if (smn.residual <= tol) {
            Vector k = Vector::Zero(m);
            for (std::size_t i = 0; i < pointed.size(); ++i) {
                k += smn.weights(static_cast<Eigen::Index>(i)) * pointed[i];
            }
            Vector v = k;
            if (image.cols() > 0) {
                // add the lineality component that cancels J^T k
                const Vector c = image.completeOrthogonalDecomposition().solve(-(Jt * k));
                v += Q * c;
            }
            rep.holds = false;
            rep.residual = smn.residual;
            rep.witness = v / v.norm();
            return rep;
        }
    }
    rep.holds = true;
    rep.residual = residual;
    return rep;
}

using BCQReport = QualificationReport;

/// N(H(x)|dom g) and null(H'(x)^T) intersect only at 0.
inline BCQReport bcq_check(const CompositeProblem& p, const Vector& x, double tol = 1e-8) {
    const Vector hx = p.H.value(x);
    if (distance(p.g.domain, hx) > tol) {
        throw PreconditionError("bcq_check: H(x) is not in dom g");
    }
    const ConvexPolytope cone = normal_cone(p.g.domain, hx, tol);
    return qualification_check(p.H.jacobian(x), cone.rays, tol);
}

/// H'(x)^T dg(H(x)), valid where the BCQ holds.
inline ConvexPolytope composite_subdifferential(const CompositeProblem& p, const Vector& x, double bcq_tol = 1e-8) {
    if (!p.g.has_subdiff()) {
        throw UnsupportedError("composite_subdifferential: g has no subdifferential oracle");
    }
    if (!bcq_check(p, x, bcq_tol).holds) {
        throw UnsupportedError("composite_subdifferential: BCQ fails, chain rule not justified");
    }
    const Vector hx = p.H.value(x);
    return map_polytope(p.H.jacobian(x).transpose(), p.g.subdiff(hx));
}

} // namespace epismooth

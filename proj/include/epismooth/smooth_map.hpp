#pragma once

#include <functional>

#include "epismooth/types.hpp"

namespace epismooth {

/// A C^1 map R^n -> R^m with its Jacobian.
struct SmoothMap {
    Eigen::Index in_dim = 0;
    Eigen::Index out_dim = 0;
    std::function<Vector(const Vector&)> value;
    std::function<Matrix(const Vector&)> jacobian;
};

inline SmoothMap affine_map(const Matrix& A, const Vector& b) {
    if (A.rows() != b.size()) {
        throw ArgumentError("affine_map: A rows must match b");
    }
    return SmoothMap{A.cols(), A.rows(), [A, b](const Vector& x) -> Vector { return A * x + b; },
                     [A](const Vector&) -> Matrix { return A; }};
}

inline SmoothMap identity_map(Eigen::Index n) { return affine_map(Matrix::Identity(n, n), Vector::Zero(n)); }

/// Stacks f (scalar) on top of h: x -> (f(x), h(x)).
inline SmoothMap stack(const std::function<double(const Vector&)>& f, const std::function<Vector(const Vector&)>& grad_f,
                       const SmoothMap& h) {
    const Eigen::Index n = h.in_dim;
    const Eigen::Index m = h.out_dim;
    return SmoothMap{n, m + 1,
                     [f, h](const Vector& x) -> Vector {
                         Vector out(h.out_dim + 1);
                         out(0) = f(x);
                         out.tail(h.out_dim) = h.value(x);
                         return out;
                     },
                     [grad_f, h, n, m](const Vector& x) -> Matrix {
                         Matrix J(m + 1, n);
                         J.row(0) = grad_f(x).transpose();
                         if (m > 0) {
                             J.bottomRows(m) = h.jacobian(x);
                         }
                         return J;
                     }};
}

} // namespace epismooth

#pragma once

// Problem documents (JSON) and their translation into a constrained problem,
// its smoothing family and a continuation config.
//
//   {
//     "name": "circle_inequality",
//     "description": "...",                       optional
//     "n": 2,
//     "objective": "x1 + x2",
//     "constraints": ["x1^2 + x2^2 - 1"],          optional, rows of h
//     "set": {"type": "zero_cross_negative", "s": 0, "m": 1},
//     "regularizers": [{"type": "one_norm", "weight": 0.5}],
//     "feasible_point": [0, 0],                    optional
//     "x0": [0, 0],                                optional, default 0
//     "solver": {"mu0": 1, "rho": 0.5, "k_max": 30, "eps0": 0.01,
//                "inner_max_iter": 10000, "tol": 1e-6, "guard": false}
//   }
//
// Set types: box {lo, hi}, ball {center, radius}, zero_cross_negative {s, m},
// affine {A, c}, singleton {point}, nonneg_orthant {}, whole_space {}.
// Infinite box bounds are written as the strings "inf" / "-inf".
// Regularizer types: one_norm {weight}, huber {weight, kappa},
// vapnik {weight, epsilon}, custom_eplq {weight, U, B, R, b} with U a box or
// ball descriptor over the dual variable.

#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "epismooth/constrained.hpp"
#include "epismooth/eplq.hpp"
#include "epismooth/expr.hpp"
#include "epismooth/functions.hpp"
#include "epismooth/smoothing.hpp"
#include "epismooth/solver.hpp"

namespace epismooth::problem {

using Json = nlohmann::json;

/// Command-line settings that take precedence over the document.
struct SolveOverrides {
    std::optional<double> mu0;
    std::optional<double> rho;
    std::optional<int> k_max;
    std::optional<double> tol;
    std::optional<bool> guard;
};

struct LoadedProblem {
    std::string name;
    std::string description;
    ConstrainedProblem problem;
    SmoothingFamily family;
    ContinuationConfig config;
    Vector x0;
    std::optional<Vector> feasible_point;
};

namespace detail {

inline void allow_only(const Json& obj, std::initializer_list<const char*> keys, const std::string& where) {
    if (!obj.is_object()) {
        throw ArgumentError(where + ": expected an object");
    }
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ArgumentError(where + ": unknown field '" + it.key() + "'");
        }
    }
}

inline const Json& field(const Json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw ArgumentError(where + ": missing field '" + key + "'");
    }
    return *it;
}

inline double as_number(const Json& j, const std::string& where) {
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") {
            return kInf;
        }
        if (s == "-inf") {
            return -kInf;
        }
    }
    throw ArgumentError(where + ": expected a number");
}

inline double positive(const Json& obj, const char* key, const std::string& where, double fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        return fallback;
    }
    const double v = as_number(*it, where + "." + key);
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw ArgumentError(where + "." + key + ": must be a positive finite number");
    }
    return v;
}

inline Vector as_vector(const Json& j, const std::string& where, std::optional<Eigen::Index> size = {}) {
    if (!j.is_array()) {
        throw ArgumentError(where + ": expected an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = as_number(j[i], where);
    }
    if (size && v.size() != *size) {
        throw ArgumentError(where + ": expected " + std::to_string(*size) + " entries, got " +
                            std::to_string(v.size()));
    }
    return v;
}

inline Matrix as_matrix(const Json& j, const std::string& where) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        throw ArgumentError(where + ": expected a nonempty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        M.row(r) = as_vector(j[static_cast<std::size_t>(r)], where, cols).transpose();
    }
    return M;
}

inline Eigen::Index as_count(const Json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw ArgumentError(where + ": expected a nonnegative integer");
    }
    return static_cast<Eigen::Index>(j.get<long long>());
}

inline ConvexSet parse_set(const Json& s, Eigen::Index m, const std::string& where) {
    if (!s.is_object() || !s.contains("type") || !s["type"].is_string()) {
        throw ArgumentError(where + ": expected an object with a string 'type'");
    }
    const auto type = s["type"].get<std::string>();
    ConvexSet out = ConvexSet::whole_space(m);
    if (type == "box") {
        allow_only(s, {"type", "lo", "hi"}, where);
        out = ConvexSet::box(as_vector(field(s, "lo", where), where + ".lo", m),
                             as_vector(field(s, "hi", where), where + ".hi", m));
    } else if (type == "ball") {
        allow_only(s, {"type", "center", "radius"}, where);
        out = ConvexSet::euclidean_ball(as_vector(field(s, "center", where), where + ".center", m),
                                        as_number(field(s, "radius", where), where + ".radius"));
    } else if (type == "zero_cross_negative") {
        allow_only(s, {"type", "s", "m"}, where);
        out = ConvexSet::zero_cross_negative(as_count(field(s, "s", where), where + ".s"),
                                             as_count(field(s, "m", where), where + ".m"));
    } else if (type == "affine") {
        allow_only(s, {"type", "A", "c"}, where);
        const Matrix A = as_matrix(field(s, "A", where), where + ".A");
        out = ConvexSet::affine_subspace(A, as_vector(field(s, "c", where), where + ".c", A.rows()));
    } else if (type == "singleton") {
        allow_only(s, {"type", "point"}, where);
        out = ConvexSet::singleton(as_vector(field(s, "point", where), where + ".point", m));
    } else if (type == "nonneg_orthant") {
        allow_only(s, {"type"}, where);
        out = ConvexSet::nonneg_orthant(m);
    } else if (type == "whole_space") {
        allow_only(s, {"type"}, where);
    } else {
        throw ArgumentError(where + ": unknown set type '" + type + "'");
    }
    if (out.dim() != m) {
        throw ArgumentError(where + ": set dimension " + std::to_string(out.dim()) + " does not match " +
                            std::to_string(m) + " constraints");
    }
    return out;
}

struct Regularizer {
    ConvexFunctionOracle oracle;
    SmoothingFamily family;
};

/// Kinks of the regularizers are detected within this distance by their
/// subdifferential oracles.
inline constexpr double kink_tol = 1e-8;

inline Regularizer parse_regularizer(const Json& r, Eigen::Index n, const std::string& where) {
    if (!r.is_object() || !r.contains("type") || !r["type"].is_string()) {
        throw ArgumentError(where + ": expected an object with a string 'type'");
    }
    const auto type = r["type"].get<std::string>();
    const double weight = positive(r, "weight", where, 1.0);
    ConvexFunctionOracle base;
    if (type == "one_norm") {
        allow_only(r, {"type", "weight"}, where);
        base = one_norm(n, 1.0, kink_tol);
    } else if (type == "huber") {
        allow_only(r, {"type", "weight", "kappa"}, where);
        base = huber(n, positive(r, "kappa", where, 1.0));
    } else if (type == "vapnik") {
        allow_only(r, {"type", "weight", "epsilon"}, where);
        base = vapnik(n, positive(r, "epsilon", where, 0.1), kink_tol);
    } else if (type == "custom_eplq") {
        allow_only(r, {"type", "weight", "U", "B", "R", "b"}, where);
        const Matrix R = as_matrix(field(r, "R", where), where + ".R");
        if (R.cols() != n) {
            throw ArgumentError(where + ".R: needs " + std::to_string(n) + " columns");
        }
        const Matrix B = as_matrix(field(r, "B", where), where + ".B");
        const ConvexSet U = parse_set(field(r, "U", where), R.rows(), where + ".U");
        const Vector b = as_vector(field(r, "b", where), where + ".b", R.rows());
        base = eplq_function(make_eplq(U, B, R, b), "custom_eplq", kink_tol);
    } else {
        throw ArgumentError(where + ": unknown regularizer type '" + type + "'");
    }
    const ConvexFunctionOracle weighted = weight == 1.0 ? base : scaled(base, weight);
    return Regularizer{weighted, moreau_family(weighted)};
}

inline ConvexFunctionOracle sum_oracle(const ConvexFunctionOracle& a, const ConvexFunctionOracle& b) {
    ConvexFunctionOracle out;
    out.name = a.name + " + " + b.name;
    out.dim = a.dim;
    out.value = [va = a.value, vb = b.value](const Vector& x) { return va(x) + vb(x); };
    out.domain = a.domain;
    if (a.subdiff && b.subdiff) {
        out.subdiff = [sa = a.subdiff, sb = b.subdiff](const Vector& x) { return minkowski_sum(sa(x), sb(x)); };
    }
    return out;
}

} // namespace detail

/// Validates the document and builds every oracle. Schema and expression
/// errors surface as ArgumentError before any numerics run.
inline LoadedProblem load(const Json& doc, const SolveOverrides& ov = {}) {
    using namespace detail;
    const std::string where = "problem";
    allow_only(doc, {"name", "description", "n", "objective", "constraints", "set", "regularizers", "feasible_point",
                     "x0", "solver"},
               where);
    LoadedProblem out;
    const Json& name = field(doc, "name", where);
    if (!name.is_string()) {
        throw ArgumentError("problem.name: expected a string");
    }
    out.name = name.get<std::string>();
    if (doc.contains("description")) {
        if (!doc["description"].is_string()) {
            throw ArgumentError("problem.description: expected a string");
        }
        out.description = doc["description"].get<std::string>();
    }
    const Eigen::Index n = as_count(field(doc, "n", where), "problem.n");
    if (n < 1) {
        throw ArgumentError("problem.n: must be at least 1");
    }
    const Json& obj = field(doc, "objective", where);
    if (!obj.is_string()) {
        throw ArgumentError("problem.objective: expected an expression string");
    }
    const expr::Expr objective = expr::parse(obj.get<std::string>(), static_cast<int>(n));

    std::vector<expr::Expr> rows;
    if (doc.contains("constraints")) {
        const Json& cons = doc["constraints"];
        if (!cons.is_array()) {
            throw ArgumentError("problem.constraints: expected an array of expression strings");
        }
        for (const auto& c : cons) {
            if (!c.is_string()) {
                throw ArgumentError("problem.constraints: expected an array of expression strings");
            }
            rows.push_back(expr::parse(c.get<std::string>(), static_cast<int>(n)));
        }
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    ConvexSet C = ConvexSet::whole_space(m);
    if (doc.contains("set")) {
        C = parse_set(doc["set"], m, "problem.set");
    } else if (m > 0) {
        throw ArgumentError("problem.set: required when constraints are given");
    }

    ContinuationConfig cfg;
    bool guard = false;
    if (doc.contains("solver")) {
        const Json& s = doc["solver"];
        allow_only(s, {"mu0", "rho", "k_max", "eps0", "inner_max_iter", "tol", "guard"}, "problem.solver");
        cfg.mu0 = positive(s, "mu0", "problem.solver", cfg.mu0);
        cfg.rho = positive(s, "rho", "problem.solver", cfg.rho);
        cfg.eps0 = positive(s, "eps0", "problem.solver", cfg.eps0);
        if (s.contains("k_max")) {
            cfg.k_max = static_cast<int>(as_count(s["k_max"], "problem.solver.k_max"));
        }
        if (s.contains("inner_max_iter")) {
            cfg.inner_max_iter = static_cast<int>(as_count(s["inner_max_iter"], "problem.solver.inner_max_iter"));
        }
        const double tol = positive(s, "tol", "problem.solver", cfg.final_tols.stationarity);
        cfg.final_tols = KKTTolerances{tol, tol, tol};
        if (s.contains("guard")) {
            if (!s["guard"].is_boolean()) {
                throw ArgumentError("problem.solver.guard: expected a boolean");
            }
            guard = s["guard"].get<bool>();
        }
    }
    if (ov.mu0) {
        cfg.mu0 = *ov.mu0;
    }
    if (ov.rho) {
        cfg.rho = *ov.rho;
    }
    if (ov.k_max) {
        cfg.k_max = *ov.k_max;
    }
    if (ov.tol) {
        cfg.final_tols = KKTTolerances{*ov.tol, *ov.tol, *ov.tol};
    }
    if (ov.guard) {
        guard = *ov.guard;
    }
    cfg.validate();
    if (!(cfg.final_tols.stationarity > 0.0)) {
        throw ArgumentError("tol: must be positive");
    }

    out.problem.objective = expr::to_smooth_function(objective);
    out.problem.h = expr::to_smooth_map(rows, n);
    out.problem.C = C;

    std::optional<detail::Regularizer> reg;
    if (doc.contains("regularizers")) {
        const Json& regs = doc["regularizers"];
        if (!regs.is_array()) {
            throw ArgumentError("problem.regularizers: expected an array");
        }
        for (std::size_t i = 0; i < regs.size(); ++i) {
            const auto r = parse_regularizer(regs[i], n, "problem.regularizers[" + std::to_string(i) + "]");
            if (!reg) {
                reg = r;
            } else {
                reg = detail::Regularizer{sum_oracle(reg->oracle, r.oracle),
                                          calculus_sum_continuous(r.family, reg->family)};
            }
        }
    }

    out.x0 = doc.contains("x0") ? as_vector(doc["x0"], "problem.x0", n) : Vector::Zero(n);
    if (doc.contains("feasible_point")) {
        out.feasible_point = as_vector(doc["feasible_point"], "problem.feasible_point", n);
        if (m > 0 && distance(C, out.problem.h.value(*out.feasible_point)) > 1e-9) {
            throw ArgumentError("problem.feasible_point: h(feasible_point) is not in the set");
        }
    }
    if (guard) {
        if (!out.feasible_point) {
            throw ArgumentError("guard requested but the problem has no feasible_point");
        }
        cfg.guard = out.feasible_point;
    }
    out.config = cfg;

    SmoothingFamily penalty = penalty_family(out.problem);
    if (reg) {
        out.problem.regularizer = reg->oracle;
        out.family = calculus_sum_continuous(reg->family, penalty);
    } else {
        out.family = std::move(penalty);
    }
    return out;
}

/// Parses JSON text; syntax errors become ArgumentError.
inline LoadedProblem load_text(const std::string& text, const SolveOverrides& ov = {}) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ArgumentError(std::string("malformed JSON: ") + e.what());
    }
    return load(doc, ov);
}

} // namespace epismooth::problem

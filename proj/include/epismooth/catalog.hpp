#pragma once

// Built-in problems and named convex functions used by the command-line tool
// and the verification suites. The problem documents are mirrored in
// problems/*.json.

#include <optional>
#include <string>
#include <vector>

#include "epismooth/convex_set.hpp"
#include "epismooth/eplq.hpp"
#include "epismooth/functions.hpp"

namespace epismooth::catalog {

struct BuiltinProblem {
    const char* name;
    const char* document;
};

inline const std::vector<BuiltinProblem>& problems() {
    static const std::vector<BuiltinProblem> list{
        {"lasso_small", R"json({
  "name": "lasso_small",
  "description": "Lasso with A = [I 0] (2x3, orthonormal rows), b = (1, 0.2), weight 0.5; smoothed by the Moreau envelope of the weighted 1-norm. Optimum x = (0.5, 0, 0), objective 0.395.",
  "n": 3,
  "objective": "0.5*((x1 - 1)^2 + (x2 - 0.2)^2)",
  "regularizers": [{"type": "one_norm", "weight": 0.5}]
})json"},
        {"circle_inequality", R"json({
  "name": "circle_inequality",
  "description": "min x1 + x2 s.t. x1^2 + x2^2 - 1 <= 0; quadratic penalty continuation with KKT classification. Solution (-sqrt(2)/2, -sqrt(2)/2), multiplier 1/sqrt(2).",
  "n": 2,
  "objective": "x1 + x2",
  "constraints": ["x1^2 + x2^2 - 1"],
  "set": {"type": "zero_cross_negative", "s": 0, "m": 1},
  "feasible_point": [0, 0]
})json"},
        {"infeasible_quadratic", R"json({
  "name": "infeasible_quadratic",
  "description": "min x1 s.t. x1^2 + 1 = 0; no feasible point, the penalty path ends at an infeasible stationary point of dist(h(x)|C) near 0.",
  "n": 1,
  "objective": "x1",
  "constraints": ["x1^2 + 1"],
  "set": {"type": "singleton", "point": [0]}
})json"},
        {"rosenbrock_box", R"json({
  "name": "rosenbrock_box",
  "description": "Rosenbrock function with the bound x1 <= 0.8 written as h(x) = x in a box; active bound with multiplier 0.4 at (0.8, 0.64).",
  "n": 2,
  "objective": "100*(x2 - x1^2)^2 + (1 - x1)^2",
  "constraints": ["x1", "x2"],
  "set": {"type": "box", "lo": ["-inf", "-inf"], "hi": [0.8, "inf"]},
  "feasible_point": [0, 0],
  "solver": {"inner_max_iter": 50000}
})json"},
        {"vapnik_regression_small", R"json({
  "name": "vapnik_regression_small",
  "description": "Epsilon-insensitive fit of targets d = (2, 0.3) with tube 0.5 and ridge 0.05||x||^2; the loss is an EPLQ function with U = [0,1]^4, B = 0, R = [I; -I]. Optimum (1.5, 0), objective 0.1125.",
  "n": 2,
  "objective": "0.05*(x1^2 + x2^2)",
  "regularizers": [{
    "type": "custom_eplq",
    "weight": 1,
    "U": {"type": "box", "lo": [0, 0, 0, 0], "hi": [1, 1, 1, 1]},
    "B": [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
    "R": [[1, 0], [0, 1], [-1, 0], [0, -1]],
    "b": [2.5, 0.8, -1.5, 0.2]
  }]
})json"},
    };
    return list;
}

inline std::optional<std::string> find_problem(const std::string& name) {
    for (const auto& p : problems()) {
        if (name == p.name) {
            return std::string(p.document);
        }
    }
    return std::nullopt;
}

struct NamedFunction {
    std::string name;
    std::string description;
    ConvexFunctionOracle oracle;
};

/// Convex functions of dimension n, each with a prox oracle.
inline std::vector<NamedFunction> functions(Eigen::Index n) {
    std::vector<NamedFunction> out;
    out.push_back({"one_norm", "||x||_1", one_norm(n)});
    out.push_back({"huber", "sum of Huber functions, kappa = 1", huber(n, 1.0)});
    out.push_back({"vapnik", "sum of max(0, |x_i| - 0.5)", vapnik(n, 0.5)});
    out.push_back({"box_indicator", "indicator of [-1, 1]^n",
                   indicator(ConvexSet::box(Vector::Constant(n, -1.0), Vector::Constant(n, 1.0)))});
    out.push_back({"ball_indicator", "indicator of the closed unit ball",
                   indicator(ConvexSet::euclidean_ball(Vector::Zero(n), 1.0))});
    out.push_back({"euclidean_norm", "||x||_2 as an EPLQ function", eplq_function(eplq_euclidean_norm(n), "euclidean_norm")});
    out.push_back({"one_norm_plus_quadratic", "||x||_1 + 0.5||x - 1||^2", one_norm_plus_quadratic(Vector::Ones(n))});
    return out;
}

inline std::optional<ConvexFunctionOracle> find_function(const std::string& name, Eigen::Index n) {
    for (auto& f : functions(n)) {
        if (f.name == name) {
            return f.oracle;
        }
    }
    return std::nullopt;
}

} // namespace epismooth::catalog

#pragma once

// A small expression language for smooth objectives and constraint maps.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := '-' unary | factor
//   factor := base ('^' exponent)?
//   base   := number | 'x' index | func '(' expr ')' | '(' expr ')'
//
// func is one of sin, cos, exp, log, sqrt. The exponent is a constant
// (number, optionally negated or parenthesized) and '^' is right-associative
// and binds tighter than unary minus, so -x1^2 is -(x1^2). Variables are
// 1-based: x1 .. xn. Nonsmooth builtins (abs, max, ...) are rejected.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "epismooth/functions.hpp"
#include "epismooth/smooth_map.hpp"
#include "epismooth/types.hpp"

namespace epismooth::expr {

class ParseError : public ArgumentError {
  public:
    ParseError(const std::string& msg, std::size_t pos)
        : ArgumentError("parse error at position " + std::to_string(pos) + ": " + msg), pos_(pos) {}
    std::size_t position() const noexcept { return pos_; }

  private:
    std::size_t pos_;
};

enum class Op { constant, variable, add, sub, mul, div, neg, pow, sin, cos, exp, log, sqrt };

struct Node;
using Expr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::constant;
    double number = 0.0; // constant value, or exponent for pow
    int index = 0;       // 0-based variable index
    Expr lhs;
    Expr rhs;
};

inline Expr make_constant(double v) { return std::make_shared<const Node>(Node{Op::constant, v, 0, nullptr, nullptr}); }
inline Expr make_variable(int i) { return std::make_shared<const Node>(Node{Op::variable, 0.0, i, nullptr, nullptr}); }
inline Expr make_unary(Op op, Expr a) { return std::make_shared<const Node>(Node{op, 0.0, 0, std::move(a), nullptr}); }
inline Expr make_binary(Op op, Expr a, Expr b) {
    return std::make_shared<const Node>(Node{op, 0.0, 0, std::move(a), std::move(b)});
}
inline Expr make_pow(Expr base, double p) { return std::make_shared<const Node>(Node{Op::pow, p, 0, std::move(base), nullptr}); }

inline bool structurally_equal(const Expr& a, const Expr& b) {
    if (!a || !b) {
        return !a && !b;
    }
    if (a->op != b->op) {
        return false;
    }
    if ((a->op == Op::constant || a->op == Op::pow) && a->number != b->number) {
        return false;
    }
    if (a->op == Op::variable && a->index != b->index) {
        return false;
    }
    return structurally_equal(a->lhs, b->lhs) && structurally_equal(a->rhs, b->rhs);
}

namespace detail {

class Parser {
  public:
    Parser(const std::string& src, int n) : src_(src), n_(n) {}

    Expr parse() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) {
            throw ParseError(std::string("unexpected character '") + src_[pos_] + "'", pos_);
        }
        return e;
    }

  private:
    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) {
            throw ParseError(std::string("expected '") + c + "'", pos_);
        }
    }

    Expr parse_expr() {
        Expr left = parse_term();
        for (;;) {
            if (accept('+')) {
                left = make_binary(Op::add, left, parse_term());
            } else if (accept('-')) {
                left = make_binary(Op::sub, left, parse_term());
            } else {
                return left;
            }
        }
    }

    Expr parse_term() {
        Expr left = parse_unary();
        for (;;) {
            if (accept('*')) {
                left = make_binary(Op::mul, left, parse_unary());
            } else if (accept('/')) {
                left = make_binary(Op::div, left, parse_unary());
            } else {
                return left;
            }
        }
    }

    Expr parse_unary() {
        if (accept('-')) {
            return make_unary(Op::neg, parse_unary());
        }
        return parse_factor();
    }

    Expr parse_factor() {
        Expr base = parse_base();
        if (accept('^')) {
            const std::size_t at = pos_;
            const Expr exponent = parse_unary();
            return make_pow(base, fold_constant(exponent, at));
        }
        return base;
    }

    double fold_constant(const Expr& e, std::size_t at) const {
        switch (e->op) {
        case Op::constant:
            return e->number;
        case Op::neg:
            return -fold_constant(e->lhs, at);
        case Op::pow:
            return std::pow(fold_constant(e->lhs, at), e->number);
        default:
            throw ParseError("exponent must be a constant", at);
        }
    }

    Expr parse_base() {
        skip_ws();
        if (pos_ >= src_.size()) {
            throw ParseError("unexpected end of input", pos_);
        }
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            return parse_number();
        }
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            const std::size_t start = pos_;
            while (pos_ < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_]))) {
                ++pos_;
            }
            const std::string name = src_.substr(start, pos_ - start);
            if (name == "x" && pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                const std::size_t digits = pos_;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
                    ++pos_;
                }
                const long idx = std::strtol(src_.substr(digits, pos_ - digits).c_str(), nullptr, 10);
                if (idx < 1 || idx > n_) {
                    throw ParseError("variable index x" + std::to_string(idx) + " outside 1.." + std::to_string(n_), start);
                }
                return make_variable(static_cast<int>(idx - 1));
            }
            Op op;
            if (name == "sin") {
                op = Op::sin;
            } else if (name == "cos") {
                op = Op::cos;
            } else if (name == "exp") {
                op = Op::exp;
            } else if (name == "log") {
                op = Op::log;
            } else if (name == "sqrt") {
                op = Op::sqrt;
            } else if (name == "abs" || name == "max" || name == "min" || name == "sign" || name == "floor" ||
                       name == "ceil" || name == "round" || name == "relu" || name == "heaviside") {
                throw ParseError("nonsmooth function '" + name + "' is not allowed", start);
            } else {
                throw ParseError("unknown identifier '" + name + "'", start);
            }
            expect('(');
            Expr arg = parse_expr();
            expect(')');
            return make_unary(op, arg);
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    Expr parse_number() {
        const char* begin = src_.c_str() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) {
            throw ParseError("malformed number", pos_);
        }
        pos_ += static_cast<std::size_t>(end - begin);
        return make_constant(v);
    }

    const std::string& src_;
    int n_;
    std::size_t pos_ = 0;
};

inline int precedence(const Expr& e) {
    switch (e->op) {
    case Op::add:
    case Op::sub:
        return 1;
    case Op::mul:
    case Op::div:
        return 2;
    case Op::neg:
        return 3;
    case Op::pow:
        return 4;
    default:
        return 5;
    }
}

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string wrap(const Expr& e, bool parens);

inline std::string print_node(const Expr& e) {
    switch (e->op) {
    case Op::constant:
        return format_number(e->number);
    case Op::variable:
        return "x" + std::to_string(e->index + 1);
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div: {
        const int p = precedence(e);
        const char* sym = e->op == Op::add ? " + " : e->op == Op::sub ? " - " : e->op == Op::mul ? " * " : " / ";
        return wrap(e->lhs, precedence(e->lhs) < p) + sym + wrap(e->rhs, precedence(e->rhs) <= p);
    }
    case Op::neg:
        return "-" + wrap(e->lhs, precedence(e->lhs) < 3);
    case Op::pow:
        return wrap(e->lhs, precedence(e->lhs) <= 4) + "^" + format_number(e->number);
    case Op::sin:
        return "sin(" + print_node(e->lhs) + ")";
    case Op::cos:
        return "cos(" + print_node(e->lhs) + ")";
    case Op::exp:
        return "exp(" + print_node(e->lhs) + ")";
    case Op::log:
        return "log(" + print_node(e->lhs) + ")";
    case Op::sqrt:
        return "sqrt(" + print_node(e->lhs) + ")";
    }
    return {};
}

inline std::string wrap(const Expr& e, bool parens) { return parens ? "(" + print_node(e) + ")" : print_node(e); }

struct Dual {
    double value;
    Vector grad;
};

inline bool is_integer(double p) { return std::isfinite(p) && std::floor(p) == p; }

inline Dual eval_node(const Expr& e, const Vector& x) {
    const Eigen::Index n = x.size();
    switch (e->op) {
    case Op::constant:
        return {e->number, Vector::Zero(n)};
    case Op::variable: {
        Vector g = Vector::Zero(n);
        g(e->index) = 1.0;
        return {x(e->index), g};
    }
    case Op::add: {
        const Dual a = eval_node(e->lhs, x);
        const Dual b = eval_node(e->rhs, x);
        return {a.value + b.value, a.grad + b.grad};
    }
    case Op::sub: {
        const Dual a = eval_node(e->lhs, x);
        const Dual b = eval_node(e->rhs, x);
        return {a.value - b.value, a.grad - b.grad};
    }
    case Op::mul: {
        const Dual a = eval_node(e->lhs, x);
        const Dual b = eval_node(e->rhs, x);
        return {a.value * b.value, b.value * a.grad + a.value * b.grad};
    }
    case Op::div: {
        const Dual a = eval_node(e->lhs, x);
        const Dual b = eval_node(e->rhs, x);
        if (b.value == 0.0) {
            throw EvaluationError("division by zero in " + print_node(e));
        }
        return {a.value / b.value, (a.grad * b.value - a.value * b.grad) / (b.value * b.value)};
    }
    case Op::neg: {
        const Dual a = eval_node(e->lhs, x);
        return {-a.value, -a.grad};
    }
    case Op::pow: {
        const Dual a = eval_node(e->lhs, x);
        const double p = e->number;
        if (p == 0.0) {
            return {1.0, Vector::Zero(n)};
        }
        if (!is_integer(p) && a.value < 0.0) {
            throw EvaluationError("negative base with non-integer exponent in " + print_node(e));
        }
        if (a.value == 0.0 && p < 1.0) {
            throw EvaluationError("zero base with exponent below 1 in " + print_node(e));
        }
        return {std::pow(a.value, p), p * std::pow(a.value, p - 1.0) * a.grad};
    }
    case Op::sin: {
        const Dual a = eval_node(e->lhs, x);
        return {std::sin(a.value), std::cos(a.value) * a.grad};
    }
    case Op::cos: {
        const Dual a = eval_node(e->lhs, x);
        return {std::cos(a.value), -std::sin(a.value) * a.grad};
    }
    case Op::exp: {
        const Dual a = eval_node(e->lhs, x);
        const double v = std::exp(a.value);
        return {v, v * a.grad};
    }
    case Op::log: {
        const Dual a = eval_node(e->lhs, x);
        if (!(a.value > 0.0)) {
            throw EvaluationError("log of a nonpositive argument in " + print_node(e));
        }
        return {std::log(a.value), a.grad / a.value};
    }
    case Op::sqrt: {
        const Dual a = eval_node(e->lhs, x);
        if (!(a.value > 0.0)) {
            throw EvaluationError("sqrt of a nonpositive argument in " + print_node(e));
        }
        const double v = std::sqrt(a.value);
        return {v, a.grad / (2.0 * v)};
    }
    }
    throw EvaluationError("corrupt expression tree");
}

inline int max_variable(const Expr& e) {
    if (!e) {
        return -1;
    }
    if (e->op == Op::variable) {
        return e->index;
    }
    return std::max(max_variable(e->lhs), max_variable(e->rhs));
}

} // namespace detail

inline Expr parse(const std::string& source, int n) { return detail::Parser(source, n).parse(); }

inline std::string print(const Expr& e) { return detail::print_node(e); }

struct ValueGradient {
    double value;
    Vector gradient;
};

/// Exact value and gradient by forward differentiation of the tree.
inline ValueGradient eval_with_gradient(const Expr& e, const Vector& x) {
    if (detail::max_variable(e) >= x.size()) {
        throw ArgumentError("eval_with_gradient: point has fewer coordinates than the expression uses");
    }
    const detail::Dual d = detail::eval_node(e, x);
    return {d.value, d.grad};
}

inline double eval(const Expr& e, const Vector& x) { return eval_with_gradient(e, x).value; }

inline SmoothFunction to_smooth_function(const Expr& e) {
    return SmoothFunction{[e](const Vector& x) { return eval(e, x); },
                          [e](const Vector& x) { return eval_with_gradient(e, x).gradient; }};
}

/// Rows of the map are the expressions; the Jacobian is assembled row-wise.
inline SmoothMap to_smooth_map(const std::vector<Expr>& rows, Eigen::Index n) {
    const auto m = static_cast<Eigen::Index>(rows.size());
    return SmoothMap{n, m,
                     [rows, m](const Vector& x) {
                         Vector v(m);
                         for (Eigen::Index i = 0; i < m; ++i) {
                             v(i) = eval(rows[static_cast<std::size_t>(i)], x);
                         }
                         return v;
                     },
                     [rows, m, n](const Vector& x) {
                         Matrix J(m, n);
                         for (Eigen::Index i = 0; i < m; ++i) {
                             J.row(i) = eval_with_gradient(rows[static_cast<std::size_t>(i)], x).gradient.transpose();
                         }
                         return J;
                     }};
}

} // namespace epismooth::expr

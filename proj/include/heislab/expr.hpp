/**
 * @file expr.hpp
 * @brief Expression language for Hamiltonians H(t, x) and map families.
 *
 * Grammar, lowest to highest precedence:
 *
 *     expr   := term (('+' | '-') term)*
 *     term   := unary (('*' | '/') unary)*
 *     unary  := '-' unary | power
 *     power  := atom ('^' ['-'] integer)?
 *     atom   := number | 't' | 'x' index | call | '(' expr ')'
 *     call   := ('sin'|'cos'|'exp'|'sqrt'|'abs') '(' expr ')'
 *             | 'bump' '(' expr {',' expr} ';' number {',' number} ')'
 *
 * Whitespace is ignored. Variables are x1 .. x{2n}. In a bump call the
 * expressions before ';' are the coordinates, the numbers after it are the
 * centre (one per coordinate) followed by the radius R > 0:
 *
 *     bump(e; c, R) = exp(1 - 1/(1 - s)),  s = |e - c|^2 / R^2 < 1,  else 0.
 *
 * `bump_sK` is the K-th derivative of the bump profile with respect to s. It
 * is what symbolic differentiation of a bump produces and parses like bump.
 *
 * A unary minus applied to a literal folds into a negative constant, so
 * Neg(Const) never appears in a tree.
 */
#pragma once

#include "heislab/errors.hpp"

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace heis::dsl {

enum class Op { Const, Time, Var, Neg, Sin, Cos, Exp, Sqrt, Abs, Add, Sub, Mul, Div, Pow, Bump };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    Op op = Op::Const;
    double value = 0.0;    // Const
    int index = 0;         // Var: 0-based coordinate; Pow: exponent; Bump: derivative order
    std::vector<NodePtr> args;
    std::vector<double> center;  // Bump
    double radius = 1.0;         // Bump
};

/// Immutable expression tree; cheap to copy.
class Expr {
public:
    Expr() = default;
    explicit Expr(NodePtr root) : root_(std::move(root)) {}

    const Node& node() const { return *root_; }
    const NodePtr& ptr() const { return root_; }
    bool empty() const { return root_ == nullptr; }

private:
    NodePtr root_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t offset, std::string expected, std::string excerpt);
    std::size_t offset;
    std::string expected;
    std::string excerpt;
};

class EvaluationError : public Error {
public:
    EvaluationError(const std::string& what, std::string node_path)
        : Error(what + " at " + node_path), node_path(std::move(node_path)) {}
    std::string node_path;
};

class UnsupportedNodeError : public Error {
public:
    using Error::Error;
};

// Constructors. Arithmetic ones do not simplify; the *_s variants used by
// differentiation fold zeros, ones and constant pairs.
Expr constant(double v);
Expr time_var();
Expr var(int index0);
Expr neg(Expr e);
Expr unary(Op op, Expr e);
Expr binary(Op op, Expr a, Expr b);
Expr power(Expr base, int exponent);
Expr bump(std::vector<Expr> coords, std::vector<double> center, double radius, int order = 0);

/// Parses `src`. When `n > 0`, variable indices above 2n are rejected.
Expr parse(std::string_view src, int n = 0);

/// Prints in a form that `parse` maps back to a structurally equal tree.
std::string to_string(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

/// Highest variable index used (1-based), 0 if none.
int max_variable(const Expr& e);
bool uses_time(const Expr& e);
bool contains_abs(const Expr& e);

double eval(const Expr& e, double t, std::span<const double> x);

/// d e / d x_{index0}; throws UnsupportedNodeError on abs.
Expr derivative(const Expr& e, int index0);

/// Symbolic spatial gradient of length dim.
std::vector<Expr> grad(const Expr& e, int dim);

/// Flat stack-machine form of an expression for hot loops.
class CompiledExpr {
public:
    CompiledExpr() = default;
    explicit CompiledExpr(const Expr& e);

    double operator()(double t, std::span<const double> x) const;

private:
    struct Instr {
        Op op;
        double value;
        int index;
        int nargs;
        int bump_slot;
        int path_slot;
    };
    struct BumpData {
        std::vector<double> center;
        double inv_r2;
    };
    void emit(const Node& n, const std::string& path);

    std::vector<Instr> code_;
    std::vector<BumpData> bumps_;
    std::vector<std::string> paths_;
    std::size_t max_depth_ = 0;
};

struct RandomExprOptions {
    int dim = 2;          // variables x1 .. x{dim}
    int max_depth = 4;
    bool with_time = true;
    /// Keep to nodes that are smooth everywhere: no abs, denominators and
    /// sqrt arguments bounded away from zero, non-negative exponents.
    bool smooth = false;
};

/// Random tree for property tests; deterministic for a given generator state.
Expr random_expr(std::mt19937_64& rng, const RandomExprOptions& opts = {});

/// Value of the K-th s-derivative of the bump profile at s in [0, 1).
double bump_profile(int order, double s);

}  // namespace heis::dsl

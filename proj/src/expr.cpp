#include "heislab/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace heis::dsl {

namespace {

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

bool is_const(const Expr& e, double v) { return e.node().op == Op::Const && e.node().value == v; }
bool is_const(const Expr& e) { return e.node().op == Op::Const; }

std::string excerpt_of(std::string_view src, std::size_t offset) {
    std::size_t begin = src.rfind('\n', offset == 0 ? 0 : offset - 1);
    begin = (begin == std::string_view::npos) ? 0 : begin + 1;
    if (offset < begin) begin = offset;
    std::size_t end = src.find('\n', offset);
    if (end == std::string_view::npos) end = src.size();
    std::string line(src.substr(begin, end - begin));
    return line + "\n" + std::string(offset - begin, ' ') + "^";
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
public:
    Parser(std::string_view src, int n) : src_(src), max_var_(n > 0 ? 2 * n : 0) {}

    Expr parse_all() {
        Expr e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("end of input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& expected) const {
        throw ParseError(pos_, expected, excerpt_of(src_, pos_));
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
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
        if (!accept(c)) fail(std::string("'") + c + "'");
    }

    Expr parse_expr() {
        Expr lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = binary(Op::Add, lhs, parse_term());
            else if (accept('-')) lhs = binary(Op::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    Expr parse_term() {
        Expr lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = binary(Op::Mul, lhs, parse_unary());
            else if (accept('/')) lhs = binary(Op::Div, lhs, parse_unary());
            else return lhs;
        }
    }

    Expr parse_unary() {
        if (accept('-')) return neg(parse_unary());
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_atom();
        if (accept('^')) {
            skip_ws();
            bool negative = false;
            if (pos_ < src_.size() && src_[pos_] == '-') {
                negative = true;
                ++pos_;
                skip_ws();
            }
            const std::size_t start = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (pos_ == start) fail("integer exponent");
            if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
                pos_ = start;
                fail("integer exponent");
            }
            int k = 0;
            auto [p, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, k);
            if (ec != std::errc()) {
                pos_ = start;
                fail("integer exponent");
            }
            return power(base, negative ? -k : k);
        }
        return base;
    }

    bool at_number_start() const {
        if (pos_ >= src_.size()) return false;
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c))) return true;
        return c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]));
    }

    double parse_number() {
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t q = pos_ + 1;
            if (q < src_.size() && (src_[q] == '+' || src_[q] == '-')) ++q;
            if (q < src_.size() && std::isdigit(static_cast<unsigned char>(src_[q]))) {
                pos_ = q;
                while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
        if (ec != std::errc() || p != src_.data() + pos_) {
            pos_ = start;
            fail("number");
        }
        return v;
    }

    double parse_signed_number() {
        bool negative = accept('-');
        skip_ws();
        if (!at_number_start()) fail("number");
        const double v = parse_number();
        return negative ? -v : v;
    }

    Expr parse_atom() {
        skip_ws();
        if (pos_ >= src_.size()) fail("expression");
        if (at_number_start()) return constant(parse_number());
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            Expr e = parse_expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            const std::string_view id = src_.substr(start, pos_ - start);
            if (id == "t") return time_var();
            if (id.size() > 1 && id[0] == 'x' &&
                std::all_of(id.begin() + 1, id.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
                int idx = 0;
                std::from_chars(id.data() + 1, id.data() + id.size(), idx);
                if (idx < 1 || (max_var_ > 0 && idx > max_var_)) {
                    pos_ = start;
                    fail(max_var_ > 0 ? "variable x1..x" + std::to_string(max_var_) : "variable index >= 1");
                }
                return var(idx - 1);
            }
            Op op{};
            if (id == "sin") op = Op::Sin;
            else if (id == "cos") op = Op::Cos;
            else if (id == "exp") op = Op::Exp;
            else if (id == "sqrt") op = Op::Sqrt;
            else if (id == "abs") op = Op::Abs;
            else if (id == "bump" || id.starts_with("bump_s")) {
                int order = 0;
                if (id != "bump") {
                    auto [p, ec] = std::from_chars(id.data() + 6, id.data() + id.size(), order);
                    if (ec != std::errc() || p != id.data() + id.size() || order < 1) {
                        pos_ = start;
                        fail("function name");
                    }
                }
                return parse_bump_args(order);
            } else {
                pos_ = start;
                fail("t, x<i>, number, '(' or function name");
            }
            expect('(');
            Expr arg = parse_expr();
            expect(')');
            return unary(op, arg);
        }
        fail("expression");
    }

    Expr parse_bump_args(int order) {
        expect('(');
        std::vector<Expr> coords;
        coords.push_back(parse_expr());
        while (accept(',')) coords.push_back(parse_expr());
        expect(';');
        std::vector<double> nums;
        nums.push_back(parse_signed_number());
        while (accept(',')) nums.push_back(parse_signed_number());
        if (nums.size() != coords.size() + 1) {
            fail(std::to_string(coords.size()) + " centre values and a radius");
        }
        const double radius = nums.back();
        if (!(radius > 0.0)) fail("positive bump radius");
        nums.pop_back();
        expect(')');
        return bump(std::move(coords), std::move(nums), radius, order);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int max_var_;
};

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

std::string number_repr(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print(const Node& n, std::string& out) {
    switch (n.op) {
    case Op::Const:
        if (std::signbit(n.value)) out += "(" + number_repr(n.value) + ")";
        else out += number_repr(n.value);
        return;
    case Op::Time: out += "t"; return;
    case Op::Var: out += "x" + std::to_string(n.index + 1); return;
    case Op::Neg:
        out += "-(";
        print(*n.args[0], out);
        out += ")";
        return;
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Sqrt:
    case Op::Abs: {
        static constexpr const char* names[] = {"sin", "cos", "exp", "sqrt", "abs"};
        out += names[static_cast<int>(n.op) - static_cast<int>(Op::Sin)];
        out += "(";
        print(*n.args[0], out);
        out += ")";
        return;
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
        static constexpr const char* syms[] = {" + ", " - ", " * ", " / "};
        out += "(";
        print(*n.args[0], out);
        out += syms[static_cast<int>(n.op) - static_cast<int>(Op::Add)];
        print(*n.args[1], out);
        out += ")";
        return;
    }
    case Op::Pow:
        out += "(";
        print(*n.args[0], out);
        out += ")^" + std::to_string(n.index);
        return;
    case Op::Bump:
        out += n.index == 0 ? "bump(" : "bump_s" + std::to_string(n.index) + "(";
        for (std::size_t i = 0; i < n.args.size(); ++i) {
            if (i) out += ", ";
            print(*n.args[i], out);
        }
        out += "; ";
        for (double c : n.center) out += number_repr(c) + ", ";
        out += number_repr(n.radius) + ")";
        return;
    }
}

// ---------------------------------------------------------------------------
// Evaluation helpers
// ---------------------------------------------------------------------------

double apply_unary(Op op, double a, const std::string& path) {
    switch (op) {
    case Op::Neg: return -a;
    case Op::Sin: return std::sin(a);
    case Op::Cos: return std::cos(a);
    case Op::Exp: return std::exp(a);
    case Op::Sqrt:
        if (a < 0.0) throw EvaluationError("sqrt of negative value", path);
        return std::sqrt(a);
    case Op::Abs: return std::abs(a);
    default: return 0.0;
    }
}

double apply_binary(Op op, double a, double b, const std::string& path) {
    switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div:
        if (b == 0.0) throw EvaluationError("division by zero", path);
        return a / b;
    default: return 0.0;
    }
}

double int_pow(double base, int k, const std::string& path) {
    if (k < 0) {
        if (base == 0.0) throw EvaluationError("negative power of zero", path);
        return 1.0 / int_pow(base, -k, path);
    }
    double r = 1.0;
    while (k) {
        if (k & 1) r *= base;
        base *= base;
        k >>= 1;
    }
    return r;
}

double eval_node(const Node& n, double t, std::span<const double> x, const std::string& path) {
    auto child = [&](std::size_t i) {
        return eval_node(*n.args[i], t, x, path + "." + std::to_string(i));
    };
    switch (n.op) {
    case Op::Const: return n.value;
    case Op::Time: return t;
    case Op::Var:
        if (static_cast<std::size_t>(n.index) >= x.size())
            throw EvaluationError("variable x" + std::to_string(n.index + 1) + " out of range", path);
        return x[static_cast<std::size_t>(n.index)];
    case Op::Neg:
    case Op::Sin:
    case Op::Cos:
    case Op::Exp:
    case Op::Sqrt:
    case Op::Abs: return apply_unary(n.op, child(0), path);
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
        const double a = child(0);
        const double b = child(1);
        return apply_binary(n.op, a, b, path);
    }
    case Op::Pow: return int_pow(child(0), n.index, path);
    case Op::Bump: {
        double s = 0.0;
        for (std::size_t i = 0; i < n.args.size(); ++i) {
            const double d = child(i) - n.center[i];
            s += d * d;
        }
        return bump_profile(n.index, s / (n.radius * n.radius));
    }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Simplifying constructors for differentiation
// ---------------------------------------------------------------------------

Expr add_s(const Expr& a, const Expr& b) {
    if (is_const(a, 0.0)) return b;
    if (is_const(b, 0.0)) return a;
    if (is_const(a) && is_const(b)) return constant(a.node().value + b.node().value);
    return binary(Op::Add, a, b);
}

Expr sub_s(const Expr& a, const Expr& b) {
    if (is_const(b, 0.0)) return a;
    if (is_const(a, 0.0)) return neg(b);
    if (is_const(a) && is_const(b)) return constant(a.node().value - b.node().value);
    return binary(Op::Sub, a, b);
}

Expr mul_s(const Expr& a, const Expr& b) {
    if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
    if (is_const(a, 1.0)) return b;
    if (is_const(b, 1.0)) return a;
    if (is_const(a) && is_const(b)) return constant(a.node().value * b.node().value);
    return binary(Op::Mul, a, b);
}

Expr div_s(const Expr& a, const Expr& b) {
    if (is_const(a, 0.0)) return constant(0.0);
    if (is_const(b, 1.0)) return a;
    return binary(Op::Div, a, b);
}

Expr neg_s(const Expr& a) {
    if (a.node().op == Op::Neg) return Expr(a.node().args[0]);
    return neg(a);
}

Expr pow_s(const Expr& base, int k) {
    if (k == 0) return constant(1.0);
    if (k == 1) return base;
    return power(base, k);
}

template <class F>
bool any_node(const Node& n, F&& pred) {
    if (pred(n)) return true;
    return std::any_of(n.args.begin(), n.args.end(), [&](const NodePtr& c) { return any_node(*c, pred); });
}

}  // namespace

// ---------------------------------------------------------------------------

ParseError::ParseError(std::size_t offset_, std::string expected_, std::string excerpt_)
    : Error("parse error at offset " + std::to_string(offset_) + ": expected " + expected_ + "\n" + excerpt_),
      offset(offset_),
      expected(std::move(expected_)),
      excerpt(std::move(excerpt_)) {}

Expr constant(double v) {
    Node n;
    n.op = Op::Const;
    n.value = v;
    return Expr(make(std::move(n)));
}

Expr time_var() {
    Node n;
    n.op = Op::Time;
    return Expr(make(std::move(n)));
}

Expr var(int index0) {
    if (index0 < 0) throw InvalidArgument("var: negative index");
    Node n;
    n.op = Op::Var;
    n.index = index0;
    return Expr(make(std::move(n)));
}

Expr neg(Expr e) {
    if (e.node().op == Op::Const) return constant(-e.node().value);
    Node n;
    n.op = Op::Neg;
    n.args = {e.ptr()};
    return Expr(make(std::move(n)));
}

Expr unary(Op op, Expr e) {
    if (op == Op::Neg) return neg(std::move(e));
    if (op != Op::Sin && op != Op::Cos && op != Op::Exp && op != Op::Sqrt && op != Op::Abs)
        throw InvalidArgument("unary: not a unary operator");
    Node n;
    n.op = op;
    n.args = {e.ptr()};
    return Expr(make(std::move(n)));
}

Expr binary(Op op, Expr a, Expr b) {
    if (op != Op::Add && op != Op::Sub && op != Op::Mul && op != Op::Div)
        throw InvalidArgument("binary: not a binary operator");
    Node n;
    n.op = op;
    n.args = {a.ptr(), b.ptr()};
    return Expr(make(std::move(n)));
}

Expr power(Expr base, int exponent) {
    Node n;
    n.op = Op::Pow;
    n.index = exponent;
    n.args = {base.ptr()};
    return Expr(make(std::move(n)));
}

Expr bump(std::vector<Expr> coords, std::vector<double> center, double radius, int order) {
    if (coords.empty() || coords.size() != center.size())
        throw InvalidArgument("bump: need one centre value per coordinate");
    if (!(radius > 0.0)) throw InvalidArgument("bump: radius must be positive");
    if (order < 0) throw InvalidArgument("bump: negative derivative order");
    Node n;
    n.op = Op::Bump;
    n.index = order;
    for (auto& c : coords) n.args.push_back(c.ptr());
    n.center = std::move(center);
    n.radius = radius;
    return Expr(make(std::move(n)));
}

Expr parse(std::string_view src, int n) { return Parser(src, n).parse_all(); }

std::string to_string(const Expr& e) {
    std::string out;
    print(e.node(), out);
    return out;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    const Node& x = a.node();
    const Node& y = b.node();
    if (x.op != y.op || x.args.size() != y.args.size()) return false;
    switch (x.op) {
    case Op::Const:
        if (x.value != y.value || std::signbit(x.value) != std::signbit(y.value)) return false;
        break;
    case Op::Var:
    case Op::Pow:
        if (x.index != y.index) return false;
        break;
    case Op::Bump:
        if (x.index != y.index || x.center != y.center || x.radius != y.radius) return false;
        break;
    default: break;
    }
    for (std::size_t i = 0; i < x.args.size(); ++i) {
        if (!structurally_equal(Expr(x.args[i]), Expr(y.args[i]))) return false;
    }
    return true;
}

int max_variable(const Expr& e) {
    int m = 0;
    any_node(e.node(), [&](const Node& n) {
        if (n.op == Op::Var) m = std::max(m, n.index + 1);
        return false;
    });
    return m;
}

bool uses_time(const Expr& e) {
    return any_node(e.node(), [](const Node& n) { return n.op == Op::Time; });
}

bool contains_abs(const Expr& e) {
    return any_node(e.node(), [](const Node& n) { return n.op == Op::Abs; });
}

double eval(const Expr& e, double t, std::span<const double> x) { return eval_node(e.node(), t, x, "$"); }

double bump_profile(int order, double s) {
    if (s >= 1.0) return 0.0;
    const double u = 1.0 / (1.0 - s);
    const double b = std::exp(1.0 - u);
    if (order == 0) return b;
    if (order == 1) return -b * u * u;
    if (order == 2) return b * u * u * u * (u - 2.0);
    // b^(k)(s) = b * P_k(u),  P_0 = 1,  P_{k+1} = u^2 (P_k' - P_k)
    std::vector<double> p{1.0};
    for (int k = 0; k < order; ++k) {
        std::vector<double> q(p.size() + 2, 0.0);
        for (std::size_t i = 0; i < p.size(); ++i) {
            q[i + 2] -= p[i];
            if (i > 0) q[i + 1] += static_cast<double>(i) * p[i];
        }
        p = std::move(q);
    }
    double acc = 0.0;
    for (std::size_t i = p.size(); i-- > 0;) acc = acc * u + p[i];
    return b * acc;
}

Expr derivative(const Expr& e, int i) {
    const Node& n = e.node();
    auto arg = [&](std::size_t k) { return Expr(n.args[k]); };
    auto d = [&](std::size_t k) { return derivative(arg(k), i); };
    switch (n.op) {
    case Op::Const:
    case Op::Time: return constant(0.0);
    case Op::Var: return constant(n.index == i ? 1.0 : 0.0);
    case Op::Neg: {
        Expr da = d(0);
        return is_const(da) ? constant(-da.node().value) : neg_s(da);
    }
    case Op::Add: return add_s(d(0), d(1));
    case Op::Sub: return sub_s(d(0), d(1));
    case Op::Mul: return add_s(mul_s(d(0), arg(1)), mul_s(arg(0), d(1)));
    case Op::Div: {
        Expr num = sub_s(mul_s(d(0), arg(1)), mul_s(arg(0), d(1)));
        return div_s(num, pow_s(arg(1), 2));
    }
    case Op::Pow: {
        const int k = n.index;
        if (k == 0) return constant(0.0);
        return mul_s(mul_s(constant(static_cast<double>(k)), pow_s(arg(0), k - 1)), d(0));
    }
    case Op::Sin: return mul_s(unary(Op::Cos, arg(0)), d(0));
    case Op::Cos: return mul_s(neg_s(unary(Op::Sin, arg(0))), d(0));
    case Op::Exp: return mul_s(e, d(0));
    case Op::Sqrt: return div_s(d(0), mul_s(constant(2.0), e));
    case Op::Abs: throw UnsupportedNodeError("abs is not differentiable; allowed only in reporting expressions");
    case Op::Bump: {
        // d/dx_i b_k(s) = b_{k+1}(s) * sum_j 2 (e_j - c_j) / R^2 * d e_j / d x_i
        Expr inner = constant(0.0);
        const double scale = 2.0 / (n.radius * n.radius);
        for (std::size_t j = 0; j < n.args.size(); ++j) {
            Expr dj = d(j);
            if (is_const(dj, 0.0)) continue;
            Expr offset = sub_s(arg(j), constant(n.center[j]));
            inner = add_s(inner, mul_s(mul_s(constant(scale), offset), dj));
        }
        if (is_const(inner, 0.0)) return inner;
        std::vector<Expr> coords;
        for (const auto& c : n.args) coords.emplace_back(c);
        return mul_s(bump(std::move(coords), n.center, n.radius, n.index + 1), inner);
    }
    }
    return constant(0.0);
}

std::vector<Expr> grad(const Expr& e, int dim) {
    std::vector<Expr> g;
    g.reserve(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) g.push_back(derivative(e, i));
    return g;
}

// ---------------------------------------------------------------------------
// Compiled form
// ---------------------------------------------------------------------------

CompiledExpr::CompiledExpr(const Expr& e) {
    emit(e.node(), "$");
    // stack depth bound: simulate
    std::size_t depth = 0;
    for (const auto& ins : code_) {
        switch (ins.op) {
        case Op::Const:
        case Op::Time:
        case Op::Var: ++depth; break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: --depth; break;
        case Op::Bump: depth -= static_cast<std::size_t>(ins.nargs) - 1; break;
        default: break;
        }
        max_depth_ = std::max(max_depth_, depth);
    }
}

void CompiledExpr::emit(const Node& n, const std::string& path) {
    for (std::size_t i = 0; i < n.args.size(); ++i) emit(*n.args[i], path + "." + std::to_string(i));
    Instr ins{n.op, n.value, n.index, static_cast<int>(n.args.size()), -1, -1};
    if (n.op == Op::Bump) {
        ins.bump_slot = static_cast<int>(bumps_.size());
        bumps_.push_back({n.center, 1.0 / (n.radius * n.radius)});
    }
    if (n.op == Op::Div || n.op == Op::Sqrt || n.op == Op::Pow || n.op == Op::Var) {
        ins.path_slot = static_cast<int>(paths_.size());
        paths_.push_back(path);
    }
    code_.push_back(ins);
}

double CompiledExpr::operator()(double t, std::span<const double> x) const {
    if (code_.empty()) throw InvalidArgument("CompiledExpr: empty program");
    thread_local std::vector<double> stack;
    if (stack.size() < max_depth_ + 1) stack.resize(max_depth_ + 1);
    double* sp = stack.data();  // points one past the top
    for (const auto& ins : code_) {
        switch (ins.op) {
        case Op::Const: *sp++ = ins.value; break;
        case Op::Time: *sp++ = t; break;
        case Op::Var:
            if (static_cast<std::size_t>(ins.index) >= x.size())
                throw EvaluationError("variable out of range", paths_[static_cast<std::size_t>(ins.path_slot)]);
            *sp++ = x[static_cast<std::size_t>(ins.index)];
            break;
        case Op::Neg: sp[-1] = -sp[-1]; break;
        case Op::Sin: sp[-1] = std::sin(sp[-1]); break;
        case Op::Cos: sp[-1] = std::cos(sp[-1]); break;
        case Op::Exp: sp[-1] = std::exp(sp[-1]); break;
        case Op::Abs: sp[-1] = std::abs(sp[-1]); break;
        case Op::Sqrt:
            if (sp[-1] < 0.0)
                throw EvaluationError("sqrt of negative value", paths_[static_cast<std::size_t>(ins.path_slot)]);
            sp[-1] = std::sqrt(sp[-1]);
            break;
        case Op::Add: --sp; sp[-1] += sp[0]; break;
        case Op::Sub: --sp; sp[-1] -= sp[0]; break;
        case Op::Mul: --sp; sp[-1] *= sp[0]; break;
        case Op::Div:
            --sp;
            if (sp[0] == 0.0)
                throw EvaluationError("division by zero", paths_[static_cast<std::size_t>(ins.path_slot)]);
            sp[-1] /= sp[0];
            break;
        case Op::Pow: sp[-1] = int_pow(sp[-1], ins.index, paths_[static_cast<std::size_t>(ins.path_slot)]); break;
        case Op::Bump: {
            const BumpData& b = bumps_[static_cast<std::size_t>(ins.bump_slot)];
            const int k = ins.nargs;
            double s = 0.0;
            for (int j = 0; j < k; ++j) {
                const double d = sp[j - k] - b.center[static_cast<std::size_t>(j)];
                s += d * d;
            }
            sp -= k - 1;
            sp[-1] = bump_profile(ins.index, s * b.inv_r2);
            break;
        }
        }
    }
    return sp[-1];
}

namespace {

Expr random_node(std::mt19937_64& rng, const RandomExprOptions& o, int depth) {
    std::uniform_int_distribution<int> pick(0, 99);
    std::uniform_real_distribution<double> real(-3.0, 3.0);
    auto leaf = [&]() -> Expr {
        const int k = pick(rng);
        if (k < 25) return constant(k < 10 ? std::round(real(rng)) : real(rng));
        if (k < 35 && o.with_time) return time_var();
        return var(std::uniform_int_distribution<int>(0, o.dim - 1)(rng));
    };
    if (depth >= o.max_depth || pick(rng) < 20) return leaf();
    auto sub = [&] { return random_node(rng, o, depth + 1); };
    const int k = pick(rng);
    if (k < 40) {
        static const Op ops[] = {Op::Add, Op::Sub, Op::Mul, Op::Div};
        const Op op = ops[std::uniform_int_distribution<int>(0, 3)(rng)];
        if (op == Op::Div && o.smooth) return binary(Op::Div, sub(), binary(Op::Add, constant(2.0), power(sub(), 2)));
        return binary(op, sub(), sub());
    }
    if (k < 55) {
        const int e = o.smooth ? std::uniform_int_distribution<int>(0, 3)(rng) : std::uniform_int_distribution<int>(-2, 3)(rng);
        return power(sub(), e);
    }
    if (k < 62) return neg(sub());
    if (k < 85) {
        static const Op ops[] = {Op::Sin, Op::Cos, Op::Exp, Op::Sqrt, Op::Abs};
        const Op op = ops[std::uniform_int_distribution<int>(0, o.smooth ? 3 : 4)(rng)];
        if (o.smooth && op == Op::Sqrt) return unary(Op::Sqrt, binary(Op::Add, constant(1.0), power(sub(), 2)));
        if (o.smooth && op == Op::Exp) return unary(Op::Exp, unary(Op::Sin, sub()));
        return unary(op, sub());
    }
    const int m = std::uniform_int_distribution<int>(1, 2)(rng);
    std::vector<Expr> coords;
    std::vector<double> center;
    for (int i = 0; i < m; ++i) {
        coords.push_back(sub());
        center.push_back(0.5 * real(rng));
    }
    const double radius = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    return bump(std::move(coords), std::move(center), radius, o.smooth ? 0 : std::uniform_int_distribution<int>(0, 2)(rng));
}

}  // namespace

Expr random_expr(std::mt19937_64& rng, const RandomExprOptions& opts) {
    if (opts.dim < 1) throw InvalidArgument("random_expr: dim must be positive");
    return random_node(rng, opts, 0);
}

}  // namespace heis::dsl

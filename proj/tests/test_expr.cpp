#include "heislab/expr.hpp"

#include <doctest.h>

#include <array>
#include <cstring>
#include <cmath>
#include <random>
#include <vector>

using namespace heis::dsl;

namespace {

double at(const std::string& src, double t, std::vector<double> x) { return eval(parse(src), t, x); }

}  // namespace

TEST_CASE("parse and evaluate") {
    CHECK(at("0.5*(x1^2 + x2^2)", 0, {1, 0}) == doctest::Approx(0.5));
    CHECK(at("sin(t)*x1", 0, {3, 1}) == 0.0);
    CHECK(at("2^3", 0, {}) == doctest::Approx(8.0));
    CHECK(at("x1^-2", 0, {2}) == doctest::Approx(0.25));
    CHECK(at("-x1^2", 0, {3}) == doctest::Approx(-9.0));
    CHECK(at("1 - 2 - 3", 0, {}) == doctest::Approx(-4.0));
    CHECK(at("8 / 4 / 2", 0, {}) == doctest::Approx(1.0));
    CHECK(at("  exp( 0 ) + sqrt(4)*cos(0) + abs(-3)", 0, {}) == doctest::Approx(6.0));
    CHECK(at("1.5e1 + .5", 0, {}) == doctest::Approx(15.5));
}

TEST_CASE("bump normalisation and support") {
    CHECK(at("bump(x1,x2; 0,0, 1)", 0, {0, 0}) == doctest::Approx(1.0));
    CHECK(at("bump(x1,x2; 0,0, 1)", 0, {1, 0}) == 0.0);
    CHECK(at("bump(x1,x2; 0,0, 1)", 0, {0.8, 0.9}) == 0.0);
    const double s = 0.25;
    CHECK(at("bump(x1,x2; 0,0, 1)", 0, {0.5, 0}) == doctest::Approx(std::exp(1 - 1 / (1 - s))));
    CHECK(at("bump(x1; 1, 2)", 0, {2}) == doctest::Approx(std::exp(1 - 1 / (1 - 0.25))));
    const double a = at("bump(x1;0,1)", 0, {0.3, 0.2}), b = at("bump(x2;0,1)", 0, {0.3, 0.2});
    CHECK(at("bump(x1;0,1)*bump(x2;0,1)", 0, {0.3, 0.2}) == doctest::Approx(a * b));
    CHECK(at("bump(bump(x1;0,1); 0, 2)", 0, {0.3}) == doctest::Approx(std::exp(1 - 1 / (1 - a * a / 4))));
}

TEST_CASE("parse errors carry offsets") {
    try {
        parse("x1 + ");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset == 5);
        CHECK_FALSE(e.expected.empty());
    }
    CHECK_THROWS_AS(parse("x1 x2"), ParseError);
    CHECK_THROWS_AS(parse("(x1"), ParseError);
    CHECK_THROWS_AS(parse("x1^x2"), ParseError);
    CHECK_THROWS_AS(parse("x1^1.5"), ParseError);
    CHECK_THROWS_AS(parse("foo(x1)"), ParseError);
    CHECK_THROWS_AS(parse("x0"), ParseError);
    CHECK_THROWS_AS(parse("x3", 1), ParseError);
    CHECK_NOTHROW(parse("x4", 2));
    CHECK_THROWS_AS(parse("bump(x1; 0, 0)"), ParseError);
    CHECK_THROWS_AS(parse("bump(x1, x2; 0, 1)"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("evaluation errors name the node") {
    const Expr e = parse("x1/x2");
    const std::array<double, 2> x{1.0, 0.0};
    CHECK_THROWS_AS(eval(e, 0, x), EvaluationError);
    try {
        eval(e, 0, x);
    } catch (const EvaluationError& err) {
        CHECK_FALSE(err.node_path.empty());
    }
    const CompiledExpr c(e);
    CHECK_THROWS_AS(c(0, x), EvaluationError);
    const std::array<double, 1> neg{-1.0};
    CHECK_THROWS_AS(eval(parse("sqrt(x1)"), 0, neg), EvaluationError);
}

TEST_CASE("symbolic gradients") {
    const std::array<double, 2> x{0.7, -1.3};
    auto g = grad(parse("0.5*(x1^2+x2^2)"), 2);
    CHECK(eval(g[0], 0, x) == doctest::Approx(0.7));
    CHECK(eval(g[1], 0, x) == doctest::Approx(-1.3));
    g = grad(parse("x1*x2"), 2);
    CHECK(eval(g[0], 0, x) == doctest::Approx(-1.3));
    CHECK(eval(g[1], 0, x) == doctest::Approx(0.7));
    CHECK_THROWS_AS(grad(parse("abs(x1)"), 2), UnsupportedNodeError);

    const Expr b = parse("x1*bump(x1,x2; 0.1,0, 1.5)");
    const std::array<double, 2> p{0.4, 0.3};
    const double h = 1e-6;
    for (int i = 0; i < 2; ++i) {
        auto xp = p, xm = p;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (eval(b, 0, xp) - eval(b, 0, xm)) / (2 * h);
        CHECK(eval(derivative(b, i), 0, p) == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("queries") {
    const Expr e = parse("t*x3 + abs(x1)");
    CHECK(max_variable(e) == 3);
    CHECK(uses_time(e));
    CHECK(contains_abs(e));
    CHECK_FALSE(uses_time(parse("x1")));
}

TEST_CASE("print and reparse round trip") {
    std::mt19937_64 rng(123);
    RandomExprOptions opts;
    opts.dim = 4;
    opts.max_depth = 5;
    for (int k = 0; k < 300; ++k) {
        const Expr e = random_expr(rng, opts);
        const Expr back = parse(to_string(e));
        CHECK_MESSAGE(structurally_equal(e, back), to_string(e));
    }
}

TEST_CASE("evaluation is deterministic and compiled form agrees") {
    std::mt19937_64 rng(8);
    RandomExprOptions opts;
    opts.smooth = true;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        const Expr e = random_expr(rng, opts);
        const std::array<double, 2> x{u(rng), u(rng)};
        const double t = u(rng);
        const double a = eval(e, t, x), b = eval(e, t, x);
        CHECK(std::memcmp(&a, &b, sizeof a) == 0);
        CHECK(CompiledExpr(e)(t, x) == doctest::Approx(a).epsilon(1e-12));
    }
}

TEST_CASE("smooth random corpus: gradients match central differences") {
    std::mt19937_64 rng(99);
    RandomExprOptions opts;
    opts.smooth = true;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
        const Expr e = random_expr(rng, opts);
        const auto g = grad(e, 2);
        const std::array<double, 2> x{u(rng), u(rng)};
        for (int i = 0; i < 2; ++i) {
            auto fd = [&](double h) {
                auto xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                return (eval(e, 0.3, xp) - eval(e, 0.3, xm)) / (2 * h);
            };
            const double rich = (4 * fd(5e-4) - fd(1e-3)) / 3;
            const double sym = eval(g[i], 0.3, x);
            worst = std::max(worst, std::abs(sym - rich) / std::max(1.0, std::abs(sym)));
        }
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("bump profile derivatives") {
    const double s = 0.3, h = 1e-6;
    for (int k = 0; k < 3; ++k) {
        const double fd = (bump_profile(k, s + h) - bump_profile(k, s - h)) / (2 * h);
        CHECK(bump_profile(k + 1, s) == doctest::Approx(fd).epsilon(1e-6));
    }
    CHECK(bump_profile(0, 0.0) == doctest::Approx(1.0));
    CHECK(bump_profile(0, 1.0) == 0.0);
}

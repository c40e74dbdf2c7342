#include "heislab/pansu.hpp"
#include "heislab/lift.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace heis;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

HeisMap shear_lift() {
    SymplectoMap phi;
    phi.eval = [](const Vec& x) { return v2(x(0), x(1) + 3 * x(0) * x(0)); };
    phi.jacobian = [](const Vec& x) {
        Mat D = Mat::Identity(2, 2);
        D(1, 0) = 6 * x(0);
        return D;
    };
    phi.support = Box::cube(2, 0, 2);
    return lift_with(phi, [](const Vec& x) { return 0.5 * x(0) * x(0) * x(0); });
}

}  // namespace

TEST_CASE("finite differences of exact maps") {
    const HeisPoint p(v2(0.3, -0.2), 0.7), y(v2(0.5, 0.1), -0.4);
    const HeisMap L = HeisMap::left_translation(HeisPoint(v2(1.5, 2.0), -3.0));
    for (double eps : {1.0, 0.1, 1e-3}) {
        CHECK(coordinate_gap(finite_difference(L, p, eps, y), y) <= 1e-9);
        CHECK(coordinate_gap(finite_difference(HeisMap::identity(), p, eps, y), y) <= 1e-9);
    }
    Mat A(2, 2);
    A << 2, 1, 1, 1;  // det 1, symplectic in dimension 2
    const HeisMap F = HeisMap::linear({A, 1.0});
    const HeisPoint ref = finite_difference(F, p, 0.5, y);
    CHECK(coordinate_gap(ref, HeisPoint(A * y.x, y.xbar)) <= 1e-12);
    for (double eps : {0.25, 0.1, 0.01}) CHECK(coordinate_gap(finite_difference(F, p, eps, y), ref) <= 1e-12);
}

TEST_CASE("Pansu derivative of linear and central maps") {
    const auto probes = default_probes(1);
    const auto sched = default_pansu_schedule();
    CHECK(sched.size() == 7);
    const HeisPoint p(v2(0.4, 0.9), 0.2);

    PansuReport r = pansu_derivative(HeisMap::identity(), p, sched, probes);
    CHECK(r.converged);
    CHECK((r.candidate.A - Mat::Identity(2, 2)).norm() <= 1e-9);
    CHECK(r.residuals.back() <= 1e-7);  // vertical rounding is amplified by 1/eps^2

    HeisMap shift;
    shift.eval = [](const HeisPoint& q) { return HeisPoint(q.x, q.xbar + 2.5); };
    r = pansu_derivative(shift, p, sched, probes);
    CHECK(r.converged);
    CHECK((r.candidate.A - Mat::Identity(2, 2)).norm() <= 1e-9);
    CHECK(r.candidate.d == doctest::Approx(1.0));

    std::mt19937_64 rng(4);
    const Mat A = random_symplectic(1, rng);
    r = pansu_derivative(HeisMap::linear({A, 1.0}), p, sched, probes);
    CHECK(r.converged);
    CHECK((r.candidate.A - A).norm() <= 1e-8);
    CHECK(r.candidate.d == doctest::Approx(1.0));
}

TEST_CASE("Pansu derivative of the lifted shear converges linearly") {
    const HeisMap f = shear_lift();
    const HeisPoint p(v2(0.3, -0.1), 0.0);
    const PansuReport coarse = pansu_derivative(f, p, {0.2, 0.1, 0.05, 0.025, 0.0125}, default_probes(1), 1e-1);
    CHECK(coarse.slope >= 0.9);
    const PansuReport r = pansu_derivative(f, p, default_pansu_schedule(), default_probes(1), 1e-3);
    CHECK(r.converged);
    CHECK(r.slope >= 0.9);
    const auto c = is_conformal_symplectic(r.candidate.A, 1e-6);
    CHECK(c.ok);
    CHECK(c.factor == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(r.candidate.A(1, 0) == doctest::Approx(6 * 0.3).epsilon(1e-3));
}

TEST_CASE("scalar Pansu derivative") {
    const auto probes = default_probes(1);
    const auto sched = default_pansu_schedule();
    const HeisPoint p(v2(1, 0), 0);

    ClassicalGradient g{v2(0, 0), 1.0};
    auto r = pansu_derivative_scalar([](const HeisPoint& q) { return q.xbar; }, p, sched, probes, 1e-4, &g);
    CHECK(r.covector(0) == doctest::Approx(0.0).scale(1.0));
    CHECK(r.covector(1) == doctest::Approx(0.5));
    CHECK(r.classical_gap <= 1e-6);

    r = pansu_derivative_scalar([](const HeisPoint& q) { return q.x(0); }, p, sched, probes);
    CHECK(r.covector(0) == doctest::Approx(1.0));
    CHECK(std::abs(r.covector(1)) <= 1e-9);
    CHECK(std::isnan(r.classical_gap));

    // The squared gauge is not classically differentiable on the x = 0 axis;
    // its Pansu differential still exists there.
    r = pansu_derivative_scalar(
        [](const HeisPoint& q) {
            const double h = hom_norm(q);
            return h * h;
        },
        HeisPoint(v2(0, 0), 0.3), sched, probes, 1e-2);
    for (double res : r.residuals) CHECK(std::isfinite(res));
}

TEST_CASE("linearity test") {
    std::mt19937_64 rng(2);
    CHECK(is_linear_heis(HeisMap::linear({random_symplectic(1, rng), 1.0}), 1));
    CHECK(is_linear_heis(HeisMap::linear({random_symplectic(2, rng), 1.0}), 2));
    Mat D = Mat::Identity(2, 2);
    D(0, 0) = 2;
    CHECK_FALSE(is_linear_heis(HeisMap::linear({D, 1.0}), 1));
    CHECK_FALSE(is_linear_heis(HeisMap::linear({Mat::Identity(2, 2), 2.0}), 1));
    // Conformal symplectic with the matching vertical factor is linear.
    CHECK(is_linear_heis(HeisMap::linear({D, 2.0}), 1));
    CHECK_FALSE(is_linear_heis(shear_lift(), 1));
}

#include "heislab/heisenberg.hpp"
#include "heislab/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace heis;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

HeisPoint random_point(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    Vec x(2 * n);
    for (int i = 0; i < 2 * n; ++i) x(i) = u(rng);
    return {x, u(rng)};
}

double gap(const HeisPoint& p, const HeisPoint& q) { return std::max((p.x - q.x).cwiseAbs().maxCoeff(), std::abs(p.xbar - q.xbar)); }

}  // namespace

TEST_CASE("group info") {
    GroupInfo g(3);
    CHECK(g.Q == 8);
    CHECK(g.step == 2);
}

TEST_CASE("symplectic form") {
    CHECK(symplectic_form(v2(1, 0), v2(0, 1)) == doctest::Approx(1.0));
    CHECK(symplectic_form(v2(2, 0), v2(0, 3)) == doctest::Approx(6.0));
    CHECK(symplectic_form(v2(0.3, -1.7), v2(0.3, -1.7)) == 0.0);
    Vec e1 = Vec::Zero(4), e3 = Vec::Zero(4);
    e1(0) = 1;
    e3(2) = 1;
    CHECK(symplectic_form(e1, e3) == doctest::Approx(1.0));
    CHECK_THROWS_AS(symplectic_form(v2(1, 0), Vec::Zero(4)), InvalidArgument);
}

TEST_CASE("group law examples") {
    const HeisPoint p(v2(1, 0), 0), q(v2(0, 1), 0);
    const HeisPoint pq = group_mul(p, q);
    CHECK(pq.x(0) == 1.0);
    CHECK(pq.x(1) == 1.0);
    CHECK(pq.xbar == doctest::Approx(0.5));

    const HeisPoint e = HeisPoint::identity(1);
    CHECK(gap(group_mul(p, e), p) == 0.0);

    const HeisPoint comm = group_mul(group_mul(group_mul(p, q), group_inv(p)), group_inv(q));
    CHECK(comm.x.norm() == 0.0);
    CHECK(comm.xbar == doctest::Approx(1.0));

    CHECK_THROWS_AS(group_mul(p, HeisPoint::identity(2)), InvalidArgument);
}

TEST_CASE("inverse") {
    const HeisPoint p(v2(1, 2), 3);
    const HeisPoint ip = group_inv(p);
    CHECK(ip.x(0) == -1.0);
    CHECK(ip.x(1) == -2.0);
    CHECK(ip.xbar == -3.0);
    std::mt19937_64 rng(3);
    for (int k = 0; k < 100; ++k) {
        const HeisPoint r = random_point(2, rng);
        CHECK(gap(group_mul(r, group_inv(r)), HeisPoint::identity(2)) <= 1e-15);
    }
}

TEST_CASE("associativity and commutators on random triples") {
    std::mt19937_64 rng(42);
    for (int n = 1; n <= 3; ++n) {
        double worst = 0.0, worst_comm = 0.0;
        for (int k = 0; k < 2000; ++k) {
            const HeisPoint p = random_point(n, rng), q = random_point(n, rng), r = random_point(n, rng);
            worst = std::max(worst, gap(group_mul(group_mul(p, q), r), group_mul(p, group_mul(q, r))));
            const HeisPoint c = group_mul(group_mul(group_mul(p, q), group_inv(p)), group_inv(q));
            worst_comm = std::max(worst_comm, gap(c, HeisPoint(Vec::Zero(2 * n), symplectic_form(p.x, q.x))));
        }
        CHECK(worst <= 1e-12);
        CHECK(worst_comm <= 1e-12);
    }
}

TEST_CASE("dilations") {
    const HeisPoint d = dilation(2.0, HeisPoint(v2(1, 1), 1));
    CHECK(d.x(0) == 2.0);
    CHECK(d.xbar == 4.0);
    CHECK_THROWS_AS(dilation(0.0, d), InvalidArgument);
    CHECK_THROWS_AS(dilation(-1.0, d), InvalidArgument);

    std::mt19937_64 rng(5);
    for (int k = 0; k < 200; ++k) {
        const HeisPoint p = random_point(2, rng), q = random_point(2, rng);
        CHECK(gap(dilation(1.0, p), p) == 0.0);
        CHECK(gap(dilation(0.7, dilation(1.3, p)), dilation(0.91, p)) <= 1e-12);
        CHECK(gap(dilation(1.7, group_mul(p, q)), group_mul(dilation(1.7, p), dilation(1.7, q))) <= 1e-12);
    }
}

TEST_CASE("homogeneous norm") {
    CHECK(hom_norm(HeisPoint(v2(3, 4), 0)) == doctest::Approx(5.0));
    CHECK(hom_norm(HeisPoint(v2(0, 0), 4)) == doctest::Approx(2.0));
    CHECK(hom_norm(HeisPoint(v2(0, 0), -4)) == doctest::Approx(2.0));
    std::mt19937_64 rng(9);
    for (int k = 0; k < 200; ++k) {
        const HeisPoint p = random_point(1, rng);
        CHECK(hom_norm(dilation(0.37, p)) == doctest::Approx(0.37 * hom_norm(p)).epsilon(1e-12));
        CHECK(hom_norm(group_inv(p)) == doctest::Approx(hom_norm(p)));
    }
}

TEST_CASE("lambda form") {
    CHECK(lambda_form(v2(1, 0), v2(0, 1)) == doctest::Approx(0.5));
    CHECK(lambda_form(v2(0, 0), v2(0.4, 7)) == 0.0);
    // Loop integral over the unit circle encloses area pi.
    const int N = 4000;
    double loop = 0.0;
    for (int k = 0; k < N; ++k) {
        const double t = 2 * std::numbers::pi * (k + 0.5) / N;
        loop += lambda_form(v2(std::cos(t), std::sin(t)), v2(-std::sin(t), std::cos(t))) * 2 * std::numbers::pi / N;
    }
    CHECK(loop == doctest::Approx(std::numbers::pi).epsilon(1e-9));
}

TEST_CASE("conformal symplectic matrices") {
    auto c = is_conformal_symplectic(Mat::Identity(2, 2));
    CHECK(c.ok);
    CHECK(c.factor == doctest::Approx(1.0));
    c = is_conformal_symplectic(2.0 * Mat::Identity(2, 2));
    CHECK(c.ok);
    CHECK(c.factor == doctest::Approx(4.0));
    Mat D = Mat::Zero(2, 2);
    D(0, 0) = 1;
    D(1, 1) = 2;
    c = is_conformal_symplectic(D);
    CHECK(c.ok);
    CHECK(c.factor == doctest::Approx(2.0));
    Mat bad = Mat::Identity(4, 4);
    bad(0, 0) = 2;
    CHECK_FALSE(is_conformal_symplectic(bad).ok);
    CHECK_THROWS_AS(is_conformal_symplectic(Mat::Identity(3, 3)), InvalidArgument);
}

TEST_CASE("random symplectic matrices preserve volume") {
    std::mt19937_64 rng(17);
    for (int n = 1; n <= 3; ++n)
        for (int k = 0; k < 20; ++k) {
            const Mat A = random_symplectic(n, rng);
            CHECK(symplectic_defect(A) <= 1e-10);
            CHECK(std::abs(A.determinant() - 1.0) <= 1e-9);
        }
}

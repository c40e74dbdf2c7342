#include "heislab/flows.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace heis;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

const Box kCube = Box::cube(2, 0.0, 1.0);

HamiltonianField plain(const std::string& src) { return HamiltonianField::from_dsl(src, 1, Box::cube(2, 0.0, 2.0), Cutoff::None); }

FlowOptions opts(double T, double dt) {
    FlowOptions o;
    o.T = T;
    o.dt = dt;
    o.threads = 1;
    return o;
}

}  // namespace

TEST_CASE("Hamiltonian fields") {
    const HamiltonianField H = HamiltonianField::from_dsl("x1*x2", 1, kCube);
    CHECK(H(0.0, v2(0, 0)) == 0.0);
    CHECK(H(0.0, v2(1.0, 0.5)) == 0.0);  // vanishes on the support boundary
    CHECK(H(0.0, v2(2.0, 0.5)) == 0.0);
    CHECK(H(0.0, v2(0.3, 0.4)) > 0.0);
    CHECK(H.autonomous());
    CHECK_FALSE(HamiltonianField::from_dsl("t*x1", 1, kCube).autonomous());
    CHECK_THROWS_AS(HamiltonianField::from_dsl("x3", 1, kCube), dsl::ParseError);

    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    std::vector<Vec> probes;
    for (int i = 0; i < 1000; ++i) probes.push_back(v2(u(rng), u(rng)));
    const HamiltonianField T = HamiltonianField::from_dsl("(1+0.5*sin(3*t))*(x1^2+x1*x2)+x2", 1, kCube);
    CHECK(T.gradient_check(probes, 0.3) <= 1e-6);
    CHECK(H.gradient_check(probes) <= 1e-6);

    const HamiltonianField P = plain("0.5*(x1^2+x2^2)");
    CHECK(P.velocity(0.0, v2(1, 0))(1) == doctest::Approx(1.0));
    CHECK(P.scaled(-2.0)(0.0, v2(1, 0)) == doctest::Approx(-1.0));
}

TEST_CASE("integrate_hamiltonian examples") {
    const double dt = 1e-3;
    Trajectory tr = integrate_hamiltonian(plain("0.5*(x1^2+x2^2)"), v2(1, 0), std::numbers::pi / 2, dt);
    CHECK(std::abs(tr.x.back()(0)) <= 10 * dt * dt);
    CHECK(tr.x.back()(1) == doctest::Approx(1.0).epsilon(10 * dt * dt));

    tr = integrate_hamiltonian(plain("0"), v2(0.3, 0.4), 1.0, 0.1);
    for (const auto& x : tr.x) CHECK((x - v2(0.3, 0.4)).norm() == 0.0);

    tr = integrate_hamiltonian(plain("x2"), v2(0, 0), 1.0, 0.1);
    CHECK(tr.x.back()(0) == doctest::Approx(-1.0));
    CHECK(std::abs(tr.x.back()(1)) <= 1e-14);

    IntegratorOptions io;
    io.jacobian = true;
    tr = integrate_hamiltonian(HamiltonianField::from_dsl("x1^3+x1*x2^2", 1, kCube), v2(0.2, -0.3), 1.0, 0.01, io);
    for (std::size_t k = 0; k < tr.jacobian.size(); k += 10) CHECK(is_conformal_symplectic(tr.jacobian[k], 1e-8).ok);

    // Backward integration returns to the start.
    const HamiltonianField H = HamiltonianField::from_dsl("x1^2*x2", 1, kCube);
    const Trajectory fwd = integrate_hamiltonian(H, v2(0.2, 0.1), 0.7, 0.01);
    const Trajectory back = integrate_hamiltonian(H, fwd.x.back(), -0.7, 0.01, {}, 0.7);
    CHECK((back.x.back() - v2(0.2, 0.1)).norm() <= 1e-10);
}

TEST_CASE("energy conservation is second order") {
    const HamiltonianField H = HamiltonianField::from_dsl("x1^2*x2 + 0.5*x2^2", 1, kCube);
    auto drift = [&](double dt) {
        const Trajectory tr = integrate_hamiltonian(H, v2(0.3, -0.2), 1.0, dt);
        double d = 0.0;
        for (double h : tr.H_along) d = std::max(d, std::abs(h - tr.H_along.front()));
        return d;
    };
    const double a = drift(0.04), b = drift(0.02), c = drift(0.01);
    CHECK(std::log2(a / b) >= 1.8);
    CHECK(std::log2(b / c) >= 1.8);
}

TEST_CASE("zero Hamiltonian gives constant flows") {
    const auto seeds = grid_seeds(Box::cube(2, 0.0, 0.5), 3, 0.25);
    const FlowBundle b = run_flow_bundle(HamiltonianField::from_dsl("0", 1, kCube), seeds, opts(1.0, 0.05));
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t k = 0; k < b.times.size(); ++k) {
            CHECK(b.vertical[i][k] == 0.0);
            CHECK((b.lifted[i].points[k].x - seeds[i].x).norm() == 0.0);
            CHECK(b.lifted[i].points[k].xbar == 0.25);
            CHECK(b.horizontal[i].points[k].xbar == 0.25);
        }
    CHECK(vertical_velocity_residual(b) == 0.0);
    CHECK(flow_length(b, kCube) == 0.0);
}

TEST_CASE("rotation flow: lifted, horizontal and vertical parts") {
    const HamiltonianField H = plain("0.5*(x1^2+x2^2)");
    const HeisPoint seed(v2(1, 0), 0.0);
    const FlowOptions o = opts(1.0, 0.01);

    const HeisPath lifted = lifted_flow(H, seed, o);
    for (const auto& p : lifted.points) {
        CHECK(std::abs(p.xbar) <= 1e-9);
        CHECK(p.x.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
    const HeisPath horiz = horizontal_flow(H, seed, o);
    CHECK(horiz.points.back().xbar == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(horiz.horiz_residual <= 1e-10);

    const auto v = vertical_flow(H, seed, o);
    CHECK(v.front() == 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(v[k] == doctest::Approx(0.5 * lifted.times[k]).epsilon(1e-4).scale(1e-3));

    const auto vr = vertical_flow(H.scaled(-1.0), seed, o);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(vr[k] == doctest::Approx(-v[k]).scale(1e-3));

    // Right multiplication by (0, xbar) only moves the vertical slot.
    const HeisPath shifted = horizontal_flow(H, HeisPoint(v2(1, 0), 0.75), o);
    for (std::size_t k = 0; k < shifted.size(); ++k) {
        CHECK((shifted.points[k].x - horiz.points[k].x).norm() == 0.0);
        CHECK(shifted.points[k].xbar - horiz.points[k].xbar == doctest::Approx(0.75));
    }

    // The lifted curve is not horizontal although the flow moves.
    CHECK(lifted.horiz_residual > 1e-6);
}

TEST_CASE("shear flow generating function") {
    // H = x1^3 moves x2 by 3 t x1^2; F_t anchored at the origin is t x1^3 / 2.
    const HamiltonianField H = plain("x1^3");
    const HeisPoint seed(v2(0.8, -0.3), 0.1);
    const HeisPath lifted = lifted_flow(H, seed, opts(1.0, 0.01));
    for (std::size_t k = 0; k < lifted.size(); ++k) {
        const double t = lifted.times[k];
        CHECK(lifted.points[k].x(1) == doctest::Approx(-0.3 + 3 * t * 0.64).epsilon(1e-10));
        CHECK(lifted.points[k].xbar == doctest::Approx(0.1 + 0.5 * t * 0.512).epsilon(1e-8));
    }
}

TEST_CASE("bundle diagnostics") {
    const HamiltonianField H = HamiltonianField::from_dsl("(1+0.5*sin(3*t))*(x1^2+x1*x2)+x2", 1, kCube);
    const auto seeds = grid_seeds(Box::cube(2, 0.0, 0.6), 2);
    double prev = 0.0;
    for (double dt : {0.02, 0.01}) {
        const FlowBundle b = run_flow_bundle(H, seeds, opts(1.0, dt));
        CHECK(decomposition_residual(b) <= 10 * dt * dt);
        CHECK(b.stats.max_decomposition_gap <= 10 * dt * dt);
        CHECK(b.stats.max_symplectic_defect <= 1e-8);
        CHECK(b.stats.max_inverse_gap <= 1e-8);
        for (const auto& h : b.horizontal) CHECK(h.horiz_residual <= 1e-10);
        const double r = vertical_velocity_residual(b);
        if (prev > 0.0) CHECK(std::log2(prev / r) >= 1.8);
        prev = r;
        if (dt == 0.01) {
            bool some_non_horizontal = false;
            for (const auto& l : b.lifted) some_non_horizontal |= l.horiz_residual > 1e-8;
            CHECK(flow_length(b, kCube) > 0.0);
            CHECK(some_non_horizontal);

            std::ostringstream csv;
            write_trajectory_csv(csv, b);
            CHECK(csv.str().rfind("seed,t,x1,x2,xbar,H_along\n", 0) == 0);
        }
    }
}

TEST_CASE("flow length") {
    const HamiltonianField bump = HamiltonianField::from_dsl("bump(x1,x2; 0,0, 0.9)", 1, kCube);
    const FlowBundle b = run_flow_bundle(bump, grid_seeds(Box::cube(2, 0.0, 0.9), 5), opts(1.0, 0.05));
    CHECK(flow_length(b, kCube) == doctest::Approx(1.0).epsilon(1e-9));

    const HamiltonianField rot = plain("0.5*(x1^2+x2^2)");
    const auto disk = grid_seeds(Box::cube(2, 0.0, 1.0), 5, 0.0, [](const Vec& x) { return x.norm() <= 1.0 + 1e-12; });
    const FlowBundle r = run_flow_bundle(rot, disk, opts(1.0, 0.05));
    CHECK(flow_length(r, kCube) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("semidirect product of flow pairs") {
    const HamiltonianField H = HamiltonianField::from_dsl("0.5*(x1^2+x2^2)", 1, kCube);
    const FlowOptions o = opts(1.0, 0.01);
    const auto probes = grid_seeds(Box::cube(2, 0.0, 0.7), 3, 0.25);
    const HamPair a = flow_pair(H, 0.25, o);

    CHECK(pair_gap(ham_compose(HamPair::identity(), a), a, probes) <= 1e-14);
    CHECK(pair_gap(ham_compose(a, HamPair::identity()), a, probes) <= 1e-12);

    const HamPair whole = flow_pair(H, 0.5, o);
    CHECK(pair_gap(whole, ham_compose(a, a), probes) <= 10 * 0.01 * 0.01);

    const HamPair b = flow_pair(HamiltonianField::from_dsl("x1*x2", 1, kCube), 0.3, o);
    const HamPair c = flow_pair(HamiltonianField::from_dsl("x2", 1, kCube), 0.2, o);
    CHECK(pair_gap(ham_compose(ham_compose(a, b), c), ham_compose(a, ham_compose(b, c)), probes) <= 1e-9);
}

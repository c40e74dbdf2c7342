#include "heislab/hofer.hpp"

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

const Box kSupport = Box::cube(2, 0.0, 1.0);
const Box kA = Box::cube(2, 0.0, 1.2);

HoferOptions quick() {
    HoferOptions o;
    o.dt = 0.02;
    o.threads = 1;
    o.calibrate = false;
    return o;
}

double objective(const std::vector<double>& f, const std::vector<double>& w, double c) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * std::abs(f[i] - c);
    return s;
}

}  // namespace

TEST_CASE("Hofer action") {
    const GridSpec g = GridSpec::uniform(kA, 48);
    CHECK(hofer_action(HamiltonianField::from_dsl("0", 1, kSupport), kA, 1.0, g) == 0.0);
    const double bump = hofer_action(HamiltonianField::from_dsl("bump(x1,x2; 0,0, 0.9)", 1, kSupport), kA, 1.0, g);
    CHECK(bump == doctest::Approx(1.0).epsilon(1e-9));
    const double tb = hofer_action(HamiltonianField::from_dsl("t*bump(x1,x2; 0,0, 0.9)", 1, kSupport), kA, 1.0, g);
    CHECK(tb == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS_AS(hofer_action(HamiltonianField::from_dsl("x1", 1, kSupport), kA, 1.0, GridSpec::uniform(kSupport, 8)),
                    InvalidArgument);
    const GridSpec d = default_hofer_grid(kA);
    CHECK(d.cells.front() == 64);
    CHECK(default_hofer_grid(Box::cube(4, 0.0, 1.0)).cells.front() == 16);
}

TEST_CASE("v_min examples") {
    const std::vector<double> w(5, 1.0);
    VMin m = v_min(std::vector<double>(5, 0.0), w);
    CHECK(m.V == 0.0);
    CHECK(m.c_star == 0.0);
    m = v_min(std::vector<double>(5, 7.0), w);
    CHECK(m.V == 0.0);
    CHECK(m.c_star == 7.0);

    const Box disk_box = Box::cube(2, 0.0, 1.0);
    GeneratingField F;
    F.grid = GridSpec::uniform(disk_box, 400);
    for (const Vec& x : F.grid.nodes()) F.values.push_back(0.5 * x(1));
    m = v_min(F, disk_box, [](const Vec& x) { return x.norm() <= 1.0; });
    CHECK(m.V == doctest::Approx(2.0 / 3.0).epsilon(0.01));
    CHECK(std::abs(m.c_star) <= 1e-2);
}

TEST_CASE("weighted median is optimal under perturbation") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-3.0, 3.0), uw(0.1, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> f, w;
        for (int i = 0; i < 37; ++i) {
            f.push_back(u(rng));
            w.push_back(uw(rng));
        }
        const VMin m = v_min(f, w);
        CHECK(m.V == doctest::Approx(objective(f, w, m.c_star)));
        for (int k = 0; k < 10; ++k) {
            const double delta = std::abs(u(rng)) * 0.1 + 1e-6;
            CHECK(objective(f, w, m.c_star + delta) >= m.V - 1e-12);
            CHECK(objective(f, w, m.c_star - delta) >= m.V - 1e-12);
        }
    }
}

TEST_CASE("curve H2 formula") {
    const HamiltonianField rot = HamiltonianField::from_dsl("0.5*(x1^2+x2^2)", 1, Box::cube(2, 0.0, 2.0), Cutoff::None);
    CHECK(curve_h2_formula(integrate_hamiltonian(rot, v2(1, 0), 1.0, 0.01)) == doctest::Approx(0.5));
    const HamiltonianField zero = HamiltonianField::from_dsl("0", 1, kSupport);
    CHECK(curve_h2_formula(integrate_hamiltonian(zero, v2(0.2, 0.1), 1.0, 0.1)) == 0.0);

    std::vector<double> t, h;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(i / 100.0);
        h.push_back(std::sin(2 * std::numbers::pi * t.back()) + 0.2);
    }
    double signed_integral = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) signed_integral += 0.5 * (h[i] + h[i - 1]) * (t[i] - t[i - 1]);
    CHECK(curve_h2_formula(t, h) > std::abs(signed_integral) + 0.1);
}

TEST_CASE("Hofer bound on small corpora") {
    const GridSpec g = GridSpec::uniform(kA, 16);

    HoferReport r = verify_hofer_bound(HamiltonianField::from_dsl("0", 1, kSupport), kA, 1.0, g, quick());
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.identity_map);

    const HamiltonianField shear = HamiltonianField::from_dsl("x1^3", 1, kSupport);
    r = verify_hofer_bound(shear, kA, 1.0, g, quick());
    CHECK(r.lhs > 0.0);
    CHECK(r.lhs <= r.rhs);
    CHECK(r.slack == doctest::Approx(r.rhs - r.lhs));
    CHECK(r.pointwise_ok);
    CHECK(r.max_seed_h2 <= r.hofer_action + 1e-9);
    CHECK_FALSE(r.identity_map);
    CHECK(r.volume == doctest::Approx(kA.volume()));
    CHECK(r.generating_check <= 1e-4);

    const HoferReport r2 = verify_hofer_bound(shear.scaled(2.0), kA, 1.0, g, quick());
    CHECK(r2.rhs == doctest::Approx(2.0 * r.rhs));
    CHECK(r2.lhs > r.lhs);
    CHECK(r2.lhs <= r2.rhs);

    HoferOptions bad = quick();
    bad.fault_scale = 100.0;
    CHECK_THROWS_AS(verify_hofer_bound(shear, kA, 1.0, g, bad), ViolationError);

    CHECK_THROWS_AS(verify_hofer_bound(HamiltonianField::from_dsl("x1", 1, Box::cube(2, 0.0, 2.0)), kA, 1.0, g, quick()),
                    InvalidArgument);

    std::ostringstream rep, csv;
    write_hofer_report(rep, r);
    write_hofer_csv(csv, r);
    for (const char* key : {"lhs = ", "rhs = ", "slack = ", "per_seed_h2 = ["}) CHECK(rep.str().find(key) != std::string::npos);
    CHECK(csv.str().rfind("seed,x1,x2,F,h2\n", 0) == 0);
}

TEST_CASE("generating-function bound for a full rotation period") {
    const HamiltonianField rot = HamiltonianField::from_dsl("0.5*(x1^2+x2^2)", 1, Box::cube(2, 0.0, 2.0), Cutoff::None);
    const GridSpec g = GridSpec::uniform(kSupport, 8);
    HoferOptions o = quick();
    o.dt = 2 * std::numbers::pi / 400;
    o.identity_tol = 1e-3;
    const HoferReport r = generating_vs_hamiltonian_bound(rot, kSupport, 2 * std::numbers::pi, g, o);
    CHECK(r.displacement <= 1e-3);
    CHECK(r.lhs <= 1e-3);
    CHECK(r.lhs <= r.rhs);
    CHECK_FALSE(r.compact_support);
}

TEST_CASE("amplitude sweep keeps the ratio below one") {
    const GridSpec g = GridSpec::uniform(kA, 12);
    const HamiltonianField base = HamiltonianField::from_dsl("x1^3 + x2", 1, kSupport);
    double prev_lhs = 0.0;
    for (double s : {0.25, 0.5, 1.0}) {
        const HoferReport r = generating_vs_hamiltonian_bound(base.scaled(s), kA, 1.0, g, quick());
        CHECK(r.ratio <= 1.0);
        CHECK(r.lhs > prev_lhs);
        prev_lhs = r.lhs;
    }
}

#include "heislab/cc_metric.hpp"
#include "heislab/lift.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace heis;

namespace {

Vec v2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

std::vector<double> grid01(int K) {
    std::vector<double> t(K + 1);
    for (int i = 0; i <= K; ++i) t[i] = double(i) / K;
    return t;
}

HeisPath circle_lift(int K, double turns = 1.0) {
    const auto t = grid01(K);
    std::vector<Vec> c;
    for (double s : t) c.push_back(v2(std::cos(2 * std::numbers::pi * turns * s), std::sin(2 * std::numbers::pi * turns * s)));
    return lift_curve(t, c);
}

HeisPath vertical_segment(int K) {
    const auto t = grid01(K);
    std::vector<HeisPoint> p;
    for (double s : t) p.emplace_back(v2(0, 0), s);
    return {t, p};
}

HeisPath constant_path(int K) {
    const auto t = grid01(K);
    return {t, std::vector<HeisPoint>(t.size(), HeisPoint(v2(0.3, 0.2), 1.0))};
}

CCOptions quick() {
    CCOptions o;
    o.restarts = 2;
    return o;
}

}  // namespace

TEST_CASE("path length") {
    const auto t = grid01(100);
    std::vector<Vec> seg;
    for (double s : t) seg.push_back(v2(s, 0));
    CHECK(path_length(lift_curve(t, seg)) == doctest::Approx(1.0));
    CHECK(path_length(circle_lift(4000)) == doctest::Approx(2 * std::numbers::pi).epsilon(1e-6));
    CHECK(path_length(constant_path(10)) == 0.0);
    CHECK_THROWS_AS(path_length(vertical_segment(10)), PreconditionError);
}

TEST_CASE("CC distance examples") {
    const HeisPoint o = HeisPoint::identity(1);
    const CCResult h = cc_distance(o, HeisPoint(v2(1, 0), 0), 16, quick());
    CHECK(h.distance == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(h.distance >= 1.0 - 1e-9);
    CHECK(h.path.horizontal(1e-9));

    const CCResult v = cc_distance(o, HeisPoint(v2(0, 0), 1), 32, quick());
    CHECK(v.distance >= 2 * std::sqrt(std::numbers::pi) * 0.999);
    CHECK(v.distance <= 2 * std::sqrt(std::numbers::pi) * 1.01);

    const HeisPoint q(v2(0.6, -0.3), 0.4);
    const double d = cc_distance(o, q, 16, quick()).distance;
    CHECK(d >= q.x.norm() - 1e-9);
    CHECK(cc_distance(o, dilation(0.5, q), 16, quick()).distance / d == doctest::Approx(0.5).epsilon(0.02));

    const HeisPoint g(v2(-1.1, 0.4), 0.7);
    CHECK(cc_distance(group_mul(g, o), group_mul(g, q), 16, quick()).distance == doctest::Approx(d).epsilon(0.02));
}

TEST_CASE("Ball-Box bounds") {
    const auto& c = default_ball_box();
    CHECK(c.lower > 0.0);
    CHECK(c.lower <= 1.0);
    CHECK(c.upper >= 2 * std::sqrt(std::numbers::pi) * 0.999);
    auto [lo, hi] = ball_box_bounds(HeisPoint(v2(1, 0), 0));
    CHECK(lo <= 1.0);
    CHECK(hi >= 1.0);
    std::tie(lo, hi) = ball_box_bounds(HeisPoint(v2(0, 0), 1));
    CHECK(lo <= 2 * std::sqrt(std::numbers::pi));
    CHECK(hi >= 2 * std::sqrt(std::numbers::pi));
    std::tie(lo, hi) = ball_box_bounds(HeisPoint::identity(1));
    CHECK(lo == 0.0);
    CHECK(hi == 0.0);
}

TEST_CASE("covering numbers") {
    CHECK(covering_number(constant_path(50), 0.1) == 1);
    const auto t = grid01(1000);
    std::vector<Vec> seg;
    for (double s : t) seg.push_back(v2(s, 0));
    const auto n = covering_number(lift_curve(t, seg), 0.1);
    CHECK(n >= 3);
    CHECK(n <= 7);
    const HeisPath vert = vertical_segment(100);
    const double a = double(covering_number(resample_for_covering(vert, 0.05), 0.05)) * 0.05 * 0.05;
    const double b = double(covering_number(resample_for_covering(vert, 0.025), 0.025)) * 0.025 * 0.025;
    CHECK(a == doctest::Approx(b).epsilon(0.15));
}

TEST_CASE("dimension estimates") {
    const auto eps = default_eps_range();
    REQUIRE(eps.size() == 8);
    CHECK(eps.front() == doctest::Approx(0.2));
    CHECK(eps.back() == doctest::Approx(0.01));

    const CoveringEstimate circ = hausdorff_dim_estimate(circle_lift(2000), eps);
    CHECK(circ.dim_slope == doctest::Approx(1.0).epsilon(0.15));
    const CoveringEstimate vert = hausdorff_dim_estimate(vertical_segment(200), eps);
    CHECK(vert.dim_slope == doctest::Approx(2.0).epsilon(0.15));
    const CoveringEstimate cst = hausdorff_dim_estimate(constant_path(20), eps);
    CHECK(std::abs(cst.dim_slope) <= 0.15);
    CHECK(cst.degenerate);

    std::ostringstream csv;
    write_covering_csv(csv, circ);
    CHECK(csv.str().rfind("eps,count,running_slope\n", 0) == 0);
}

TEST_CASE("H2 estimates") {
    const auto eps = default_eps_range();
    const double kappa = h2_calibration_constant(eps);
    CHECK(kappa > 0.0);
    CHECK(kappa * h2_measure_estimate(vertical_segment(200), eps).value == doctest::Approx(1.0).epsilon(0.02));
    CHECK(std::abs(h2_measure_estimate(circle_lift(2000), eps).value) <= 0.05);
}

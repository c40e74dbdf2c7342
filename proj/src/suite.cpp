#include "heislab/suite.hpp"

#include "heislab/cc_metric.hpp"
#include "heislab/expr.hpp"
#include "heislab/flows.hpp"
#include "heislab/heisenberg.hpp"
#include "heislab/hofer.hpp"
#include "heislab/lift.hpp"
#include "heislab/pansu.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace heis {

namespace {

std::string format(const char* fmt, ...) {
    char buf[1024];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    return buf;
}

struct Verdict {
    bool pass = false;
    std::string detail;
};

HeisPoint random_point(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Vec x(2 * n);
    for (int i = 0; i < 2 * n; ++i) x(i) = g(rng);
    return {x, g(rng)};
}

Vec vec(std::initializer_list<double> v) {
    Vec x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double c : v) x(i++) = c;
    return x;
}

// ---------------------------------------------------------------------------

Verdict group_axioms(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed);
    double worst = 0.0;
    for (int n = 1; n <= 3; ++n) {
        const HeisPoint e = HeisPoint::identity(n);
        for (int k = 0; k < 10000; ++k) {
            const HeisPoint p = random_point(rng, n), q = random_point(rng, n), r = random_point(rng, n);
            worst = std::max(worst, coordinate_gap(group_mul(group_mul(p, q), r), group_mul(p, group_mul(q, r))));
            worst = std::max(worst, coordinate_gap(group_mul(e, p), p));
            worst = std::max(worst, coordinate_gap(group_mul(p, e), p));
            worst = std::max(worst, coordinate_gap(group_mul(p, group_inv(p)), e));
            worst = std::max(worst, coordinate_gap(group_mul(group_inv(p), p), e));
            const HeisPoint c = group_mul(group_mul(group_mul(p, q), group_inv(p)), group_inv(q));
            worst = std::max(worst, coordinate_gap(c, HeisPoint(Vec::Zero(2 * n), symplectic_form(p.x, q.x))));
        }
    }
    return {worst <= 1e-12, format("max defect %.3g over 3 x 10^4 triples (tol 1e-12)", worst)};
}

Verdict norm_axioms(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed + 1);
    std::uniform_real_distribution<double> logeps(-3.0, 3.0);
    double inv = 0.0, hom = 0.0;
    bool zero_ok = true;
    for (int n = 1; n <= 3; ++n) {
        if (hom_norm(HeisPoint::identity(n)) != 0.0) zero_ok = false;
        for (int k = 0; k < 1000; ++k) {
            const HeisPoint p = random_point(rng, n);
            const double np = hom_norm(p);
            if (!(np > 0.0)) zero_ok = false;
            inv = std::max(inv, std::abs(hom_norm(group_inv(p)) - np) / np);
            const double eps = std::pow(10.0, logeps(rng));
            hom = std::max(hom, std::abs(hom_norm(dilation(eps, p)) - eps * np) / (eps * np));
        }
    }
    double cc = 0.0;
    const HeisPoint targets[] = {{vec({0.6, 0.2}), 0.3}, {vec({0.0, 0.0}), 0.5}, {vec({0.3, -0.7}), -0.2}};
    CCOptions co;
    co.seed = o.seed;
    for (const auto& p : targets) {
        const double d1 = cc_distance(HeisPoint::identity(1), p, 32, co).distance;
        for (double eps : {0.5, 2.0}) {
            const double d2 = cc_distance(HeisPoint::identity(1), dilation(eps, p), 32, co).distance;
            cc = std::max(cc, std::abs(d2 / (eps * d1) - 1.0));
        }
    }
    const bool pass = zero_ok && inv <= 1e-12 && hom <= 1e-12 && cc <= 0.02;
    return {pass, format("zero/positivity %s, |p^-1| rel %.2g, |delta p| rel %.2g, cc homogeneity %.3g%% (tol 2%%)",
                         zero_ok ? "ok" : "FAILED", inv, hom, 100.0 * cc)};
}

Verdict cc_oracles(const SuiteOptions& o) {
    const auto t0 = std::chrono::steady_clock::now();
    CCOptions co;
    co.seed = o.seed;
    const double target = 2.0 * std::sqrt(std::numbers::pi);
    std::vector<double> d;
    for (int K : {16, 32, 64}) d.push_back(cc_distance(HeisPoint::identity(1), HeisPoint(Vec::Zero(2), 1.0), K, co).distance);
    const double unit = cc_distance(HeisPoint::identity(1), HeisPoint(vec({1.0, 0.0}), 0.0), 32, co).distance;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = std::abs(unit - 1.0) <= 1e-3 && secs <= 60.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        pass = pass && d[i] >= 0.99 * target && d[i] <= 1.05 * target && d[i] >= target * (1.0 - 1e-6);
        if (i > 0) pass = pass && d[i] <= d[i - 1] + 1e-9;
    }
    return {pass, format("d(0,(0,1))/2sqrt(pi) = %.5f, %.5f, %.5f for K = 16, 32, 64; d(0,(e1,0)) = %.6f; %.1f s",
                         d[0] / target, d[1] / target, d[2] / target, unit, secs)};
}

// Lift of the shear x2 -> x2 + 3 x1^2 (in the first q, p pair), with F = x1^3 / 2.
HeisMap shear_lift(int n) {
    return {[n](const HeisPoint& p) {
                Vec y = p.x;
                y(n) += 3.0 * p.x(0) * p.x(0);
                return HeisPoint(y, p.xbar + 0.5 * std::pow(p.x(0), 3));
            },
            MapKind::Custom};
}

Verdict pansu_criterion(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed + 3);
    double lin_res = 0.0, lin_cand = 0.0;
    const std::vector<double> coarse{0.4, 0.2, 0.1};
    for (int n = 1; n <= 2; ++n) {
        const auto probes = default_probes(n, 20, o.seed);
        for (int m = 0; m < 5; ++m) {
            const Mat A = random_symplectic(n, rng);
            const HeisMap f = HeisMap::linear({A, 1.0});
            for (int b = 0; b < 10; ++b) {
                const PansuReport r = pansu_derivative(f, random_point(rng, n), coarse, probes, 1e-12);
                lin_res = std::max(lin_res, *std::max_element(r.residuals.begin(), r.residuals.end()));
                lin_cand = std::max({lin_cand, (r.candidate.A - A).lpNorm<Eigen::Infinity>(), std::abs(r.candidate.d - 1.0)});
            }
        }
    }
    double min_slope = std::numeric_limits<double>::infinity();
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int b = 0; b < 100; ++b) {
        const int n = b < 50 ? 1 : 2;
        HeisMap f = shear_lift(n);
        if (n == 2) f = compose(HeisMap::linear({random_symplectic(n, rng), 1.0}), f);
        Vec x(2 * n);
        for (int i = 0; i < 2 * n; ++i) x(i) = u(rng);
        const PansuReport r = pansu_derivative(f, HeisPoint(x, u(rng)), default_pansu_schedule(), default_probes(n, 20, o.seed), 1.0);
        min_slope = std::min(min_slope, r.slope);
    }
    const bool pass = lin_res <= 1e-12 && lin_cand <= 1e-12 && min_slope >= 0.9;
    return {pass, format("linear lifts: residual %.2g, |candidate - (A,1)| %.2g (tol 1e-12); nonlinear min slope %.3f over 100 points (>= 0.9)",
                         lin_res, lin_cand, min_slope)};
}

SymplectoMap shear_map(double stretch) {
    SymplectoMap phi;
    phi.support = Box::cube(2, 0.0, 1.0);
    phi.descriptor = "shear";
    phi.eval = [stretch](const Vec& x) { return Vec(vec({stretch * x(0), x(1) + 3.0 * x(0) * x(0)})); };
    phi.jacobian = [stretch](const Vec& x) {
        Mat D(2, 2);
        D << stretch, 0.0, 6.0 * x(0), 1.0;
        return D;
    };
    return phi;
}

Verdict generating_criterion(const SuiteOptions&) {
    const Box box = Box::cube(2, 0.0, 1.0);
    std::vector<double> err;
    for (int cells : {8, 16, 32}) {
        const GridSpec g = GridSpec::uniform(box, cells);
        const GeneratingField F = generating_function(shear_map(1.0), g, Anchor::corner(-0.5));
        double e = 0.0;
        for (std::size_t k = 0; k < g.node_count(); ++k) e = std::max(e, std::abs(F.values[k] - 0.5 * std::pow(g.node(k)(0), 3)));
        err.push_back(e);
    }
    const double o1 = std::log2(err[0] / err[1]), o2 = std::log2(err[1] / err[2]);
    GeneratingOptions loose;
    loose.curl_tol = std::numeric_limits<double>::infinity();
    const GridSpec g = GridSpec::uniform(box, 16);
    const double ex_sym = generating_function(shear_map(1.0), g, {}, loose).exactness_residual;
    const double ex_bad = generating_function(shear_map(1.01), g, {}, loose).exactness_residual;
    const bool pass = o1 >= 1.8 && o2 >= 1.8 && ex_bad >= 10.0 * ex_sym && ex_bad > 0.0;
    return {pass, format("max error %.3g, %.3g, %.3g (orders %.2f, %.2f); exactness %.2g symplectic vs %.2g perturbed",
                         err[0], err[1], err[2], o1, o2, ex_sym, ex_bad)};
}

const std::vector<std::string>& order_corpus() {
    static const std::vector<std::string> c{"0.5*(x1^2+x2^2)", "x2", "(1+0.5*sin(3*t))*(x1^2+x1*x2)+x2"};
    return c;
}

Verdict vertical_velocity_criterion(const SuiteOptions& o) {
    const auto seeds = grid_seeds(Box::cube(2, 0.0, 0.6), 3);
    bool pass = true;
    std::string detail;
    for (const auto& src : order_corpus()) {
        const auto H = HamiltonianField::from_dsl(src, 1, Box::cube(2, 0.0, 1.0));
        std::vector<double> r;
        for (double dt : {0.02, 0.01, 0.005}) {
            FlowOptions fo;
            fo.dt = dt * o.dt_scale;
            fo.threads = o.threads;
            r.push_back(vertical_velocity_residual(run_flow_bundle(H, seeds, fo)));
        }
        const double o1 = std::log2(r[0] / r[1]), o2 = std::log2(r[1] / r[2]);
        pass = pass && o1 >= 1.8 && o2 >= 1.8;
        detail += format("%s%s: %.2e/%.2e/%.2e orders %.2f %.2f", detail.empty() ? "" : "; ", src.c_str(), r[0], r[1], r[2], o1, o2);
    }
    return {pass, detail};
}

Verdict decomposition_criterion(const SuiteOptions& o) {
    const auto seeds = grid_seeds(Box::cube(2, 0.0, 0.6), 3);
    const double dt = 0.01 * o.dt_scale;
    double worst_fwd = 0.0, worst_back = 0.0;
    for (const auto& src : order_corpus()) {
        const auto H = HamiltonianField::from_dsl(src, 1, Box::cube(2, 0.0, 1.0));
        FlowOptions fo;
        fo.dt = dt;
        fo.threads = o.threads;
        const FlowBundle b = run_flow_bundle(H, seeds, fo);
        worst_fwd = std::max(worst_fwd, decomposition_residual(b));
        worst_back = std::max(worst_back, b.stats.max_decomposition_gap);
    }
    const double bound = 10.0 * dt * dt;
    return {worst_fwd <= bound && worst_back <= bound,
            format("hom_norm gap %.2e at all samples, %.2e with the inverse by backward integration (bound 10 dt^2 = %.1e)",
                   worst_fwd, worst_back, bound)};
}

struct CurveCase {
    std::string src;
    Vec seed;
};

// Hamiltonians without cutoff whose flows fix the origin with H = 0 there, so
// anchoring F at the origin gives the canonical lift.
const std::vector<CurveCase>& curve_corpus() {
    static const std::vector<CurveCase> c{
        {"0.5*(x1^2+x2^2)", vec({1.0, 0.0})},
        {"x1^2+x1*x2+x2^2", vec({0.8, 0.0})},
        {"(1+0.5*sin(3*t))*0.5*(x1^2+x2^2)", vec({1.0, 0.5})},
        {"0.5*(x1^2+x2^2)+x1^3/6", vec({0.6, 0.4})},
        {"2*(x1^2+x2^2)", vec({0.5, 0.5})},
    };
    return c;
}

FlowBundle curve_bundle(const CurveCase& c, const SuiteOptions& o) {
    const auto H = HamiltonianField::from_dsl(c.src, 1, Box::cube(2, 0.0, 2.0), Cutoff::None);
    FlowOptions fo;
    fo.dt = 0.01 * o.dt_scale;
    fo.threads = o.threads;
    return run_flow_bundle(H, {HeisPoint(c.seed, 0.0)}, fo);
}

Verdict dimension_criterion(const SuiteOptions& o) {
    const auto eps = default_eps_range();
    bool pass = true;
    std::string flows = "flow slopes", lifts = "horizontal slopes";
    for (std::size_t i = 0; i < 3; ++i) {
        const FlowBundle b = curve_bundle(curve_corpus()[i], o);
        const double s = hausdorff_dim_estimate(b.lifted.front(), eps).dim_slope;
        pass = pass && s >= 1.85 && s <= 2.15;
        flows += format(" %.3f", s);
        const double h = hausdorff_dim_estimate(b.horizontal.front(), eps).dim_slope;
        pass = pass && h >= 0.85 && h <= 1.15;
        lifts += format(" %.3f", h);
    }
    return {pass, flows + " (in [1.85, 2.15]); " + lifts + " (in [0.85, 1.15]); eps 0.2 -> 0.01"};
}

Verdict h2_criterion(const SuiteOptions& o) {
    const auto eps = default_eps_range();
    const double kappa = h2_calibration_constant(eps);
    double worst = 0.0;
    std::string detail = format("kappa %.4f; covering/formula", kappa);
    for (const auto& c : curve_corpus()) {
        const FlowBundle b = curve_bundle(c, o);
        const double est = kappa * h2_measure_estimate(b.lifted.front(), eps).value;
        const double formula = curve_h2_formula(b.times, b.hamiltonian_along.front());
        const double rel = std::abs(est / formula - 1.0);
        worst = std::max(worst, rel);
        detail += format(" %.3f/%.3f", est, formula);
    }
    return {worst <= 0.10, detail + format("; worst deviation %.1f%% (tol 10%%)", 100.0 * worst)};
}

Verdict hofer_criterion(const SuiteOptions& o) {
    const Box S = Box::cube(2, 0.0, 1.0), A = Box::cube(2, 0.0, 1.2);
    HoferOptions ho;
    ho.dt = 0.01 * o.dt_scale;
    ho.threads = o.threads;
    bool pass = true;
    std::string detail;
    for (const char* src : {"x1", "0.5*(x1^2+x2^2)", "x1*x2", "(1+0.5*sin(3*t))*(x1^2+x1*x2)+x2", "0"}) {
        const auto H = HamiltonianField::from_dsl(src, 1, S);
        const HoferReport r = verify_hofer_bound(H, A, 1.0, default_hofer_grid(A), ho);
        const bool nondegenerate = r.identity_map || r.lhs > 0.0;
        pass = pass && r.lhs <= r.rhs + 1e-9 && nondegenerate && r.pointwise_ok;
        detail += format("%s%s: %.4g <= %.4g (slack %.3g)", detail.empty() ? "" : "; ", src, r.lhs, r.rhs, r.slack);
    }
    const VMin c = v_min(std::vector<double>(25, 7.0), std::vector<double>(25, 0.04));
    pass = pass && c.V == 0.0 && c.c_star == 7.0;

    // refinement study and the violation path
    const auto H = HamiltonianField::from_dsl("x1", 1, S);
    const double coarse = verify_hofer_bound(H, A, 1.0, GridSpec::uniform(A, 32), ho).lhs;
    const double fine = verify_hofer_bound(H, A, 1.0, GridSpec::uniform(A, 64), ho).lhs;
    bool caught = false;
    HoferOptions bad = ho;
    bad.fault_scale = 100.0;
    bad.check_seeds = 0;
    try {
        (void)verify_hofer_bound(H, A, 1.0, GridSpec::uniform(A, 32), bad);
    } catch (const ViolationError&) {
        caught = true;
    }
    pass = pass && caught;
    detail += format("; V(const) = %g; lhs 32 vs 64 cells %.4g vs %.4g; injected fault %s", c.V, coarse, fine,
                     caught ? "detected" : "MISSED");
    return {pass, detail};
}

Verdict semidirect_criterion(const SuiteOptions& o) {
    FlowOptions fo;
    fo.dt = 0.01 * o.dt_scale;
    fo.threads = o.threads;
    const double bound = 10.0 * fo.dt * fo.dt;
    std::vector<HeisPoint> probes = grid_seeds(Box::cube(2, 0.0, 0.7), 3, 0.25);
    double worst = 0.0;
    std::string detail;
    for (const char* src : {"0.5*(x1^2+x2^2)", "x2", "x1*x2"}) {
        const auto H = HamiltonianField::from_dsl(src, 1, Box::cube(2, 0.0, 1.0));
        const HamPair half = flow_pair(H, 0.5, fo), quarter = flow_pair(H, 0.25, fo);
        const double gap = pair_gap(half, ham_compose(quarter, quarter), probes);
        worst = std::max(worst, gap);
        detail += format("%s%s %.2e", detail.empty() ? "" : ", ", src, gap);
    }
    return {worst <= bound, "pair(0.5) vs pair(0.25)^2: " + detail + format(" (bound 10 dt^2 = %.1e)", bound)};
}

Verdict dsl_criterion(const SuiteOptions& o) {
    std::mt19937_64 rng(o.seed + 12);
    int mismatches = 0;
    for (int k = 0; k < 1000; ++k) {
        dsl::RandomExprOptions ro;
        ro.max_depth = 5;
        const dsl::Expr e = dsl::random_expr(rng, ro);
        try {
            if (!dsl::structurally_equal(e, dsl::parse(dsl::to_string(e)))) ++mismatches;
        } catch (const Error&) {
            ++mismatches;
        }
    }
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        dsl::RandomExprOptions ro;
        ro.smooth = true;
        const dsl::Expr e = dsl::random_expr(rng, ro);
        const auto g = dsl::grad(e, 2);
        const double t = u(rng);
        double x[2] = {u(rng), u(rng)};
        for (int j = 0; j < 2; ++j) {
            auto central = [&](double h) {
                double a[2] = {x[0], x[1]}, b[2] = {x[0], x[1]};
                a[j] += h;
                b[j] -= h;
                return (dsl::eval(e, t, a) - dsl::eval(e, t, b)) / (2.0 * h);
            };
            const double fd = (4.0 * central(5e-4) - central(1e-3)) / 3.0;
            worst = std::max(worst, std::abs(fd - dsl::eval(g[static_cast<std::size_t>(j)], t, x)));
        }
    }
    return {mismatches == 0 && worst <= 1e-6,
            format("round trip %d/1000 mismatches; max |grad - central difference| %.2g at 1000 probes (tol 1e-6)", mismatches, worst)};
}

using Runner = Verdict (*)(const SuiteOptions&);

const std::vector<Runner>& runners() {
    static const std::vector<Runner> r{group_axioms,         norm_axioms,           cc_oracles,
                                       pansu_criterion,      generating_criterion,  vertical_velocity_criterion,
                                       decomposition_criterion, dimension_criterion, h2_criterion,
                                       hofer_criterion,      semidirect_criterion,  dsl_criterion};
    return r;
}

}  // namespace

bool SuiteSummary::all_pass() const {
    return std::all_of(results.begin(), results.end(), [](const CriterionResult& r) { return r.pass; });
}

std::vector<int> SuiteSummary::failed() const {
    std::vector<int> ids;
    for (const auto& r : results)
        if (!r.pass) ids.push_back(r.id);
    return ids;
}

const std::vector<std::pair<int, std::string>>& criterion_titles() {
    static const std::vector<std::pair<int, std::string>> t{
        {1, "group axioms and commutator identity"},
        {2, "homogeneous norm axioms and CC dilation homogeneity"},
        {3, "CC distance oracles"},
        {4, "Pansu derivatives of lifted maps"},
        {5, "generating function shear oracle and exactness"},
        {6, "vertical velocity equals the Hamiltonian"},
        {7, "horizontal/vertical decomposition identity"},
        {8, "Hausdorff dimension of flow curves and lifts"},
        {9, "H^2 content of flow curves"},
        {10, "generating-function volume bounded by the Hofer action"},
        {11, "one-parameter property in the semidirect product"},
        {12, "expression language round trip and gradients"},
    };
    return t;
}

CriterionResult run_criterion(int id, const SuiteOptions& opts) {
    if (id < 1 || id > static_cast<int>(runners().size())) throw InvalidArgument("run_criterion: unknown criterion id");
    CriterionResult r;
    r.id = id;
    r.title = criterion_titles()[static_cast<std::size_t>(id - 1)].second;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const Verdict v = runners()[static_cast<std::size_t>(id - 1)](opts);
        r.pass = v.pass;
        r.detail = v.detail;
    } catch (const std::exception& e) {
        r.pass = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

SuiteSummary run_suite(const SuiteOptions& opts, const std::function<void(const CriterionResult&)>& on_result) {
    SuiteSummary s;
    for (const auto& [id, title] : criterion_titles()) {
        if (!opts.only.empty() && std::find(opts.only.begin(), opts.only.end(), id) == opts.only.end()) continue;
        s.results.push_back(run_criterion(id, opts));
        if (on_result) on_result(s.results.back());
    }
    return s;
}

std::string format_result(const CriterionResult& r) {
    return format("%s [%02d] %s :: %s (%.2f s)", r.pass ? "PASS" : "FAIL", r.id, r.title.c_str(), r.detail.c_str(), r.seconds);
}

void write_suite_json(std::ostream& out, const SuiteSummary& s, const SuiteOptions& opts) {
    nlohmann::json j;
    j["seed"] = opts.seed;
    j["dt_scale"] = opts.dt_scale;
    j["passed"] = s.all_pass();
    j["failed"] = s.failed();
    j["criteria"] = nlohmann::json::array();
    for (const auto& r : s.results)
        j["criteria"].push_back({{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"detail", r.detail}, {"seconds", r.seconds}});
    out << j.dump(2) << '\n';
}

}  // namespace heis

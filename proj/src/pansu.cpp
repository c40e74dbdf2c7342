#include "heislab/pansu.hpp"

#include "heislab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace heis {

HeisMap HeisMap::linear(const LinearHeisMap& L) {
    return {[L](const HeisPoint& p) { return L.apply(p); }, MapKind::Linear};
}

HeisMap HeisMap::identity() {
    return {[](const HeisPoint& p) { return p; }, MapKind::Linear};
}

HeisMap HeisMap::left_translation(const HeisPoint& g) {
    return {[g](const HeisPoint& p) { return group_mul(g, p); }, MapKind::Custom};
}

HeisMap compose(const HeisMap& f, const HeisMap& g) {
    const MapKind kind = f.descriptor == g.descriptor ? f.descriptor : MapKind::Custom;
    return {[f, g](const HeisPoint& p) { return f(g(p)); }, kind};
}

HeisPoint finite_difference(const HeisMap& f, const HeisPoint& p, double eps, const HeisPoint& y) {
    if (!(eps > 0.0)) throw InvalidArgument("finite_difference: eps must be positive");
    detail::require_same_dim(p.x, y.x, "finite_difference");
    const HeisPoint fp = f(p);
    const HeisPoint fq = f(group_mul(p, dilation(eps, y)));
    return dilation(1.0 / eps, group_mul(group_inv(fp), fq));
}

std::vector<HeisPoint> default_probes(int n, int random_count, std::uint64_t seed) {
    if (n <= 0) throw InvalidArgument("default_probes: n must be positive");
    const int d = 2 * n;
    std::vector<HeisPoint> probes;
    for (int i = 0; i < d; ++i) {
        for (double s : {1.0, -1.0}) {
            Vec x = Vec::Zero(d);
            x(i) = s;
            probes.emplace_back(x, 0.0);
        }
    }
    probes.emplace_back(Vec::Zero(d), 1.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 0; k < random_count; ++k) {
        Vec dir(d);
        for (int i = 0; i < d; ++i) dir(i) = normal(rng);
        dir.normalize();
        // (a, b) uniform in the triangle a, b >= 0, a + b <= 1
        double a = unif(rng), b = unif(rng);
        if (a + b > 1.0) {
            a = 1.0 - a;
            b = 1.0 - b;
        }
        const double sign = unif(rng) < 0.5 ? -1.0 : 1.0;
        probes.emplace_back(a * dir, sign * b * b);
    }
    return probes;
}

std::vector<double> default_pansu_schedule() { return geometric_range(1e-1, 1e-4, 7); }

double coordinate_gap(const HeisPoint& p, const HeisPoint& q) {
    return std::max((p.x - q.x).norm(), std::abs(p.xbar - q.xbar));
}

namespace {

void validate_schedule(const std::vector<double>& eps, const std::vector<HeisPoint>& probes) {
    if (probes.empty()) throw InvalidArgument("pansu: probe set is empty");
    if (eps.size() < 3) throw InvalidArgument("pansu: eps schedule needs at least 3 entries");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0)) throw InvalidArgument("pansu: eps values must be positive");
        if (i > 0 && !(eps[i] < eps[i - 1])) throw InvalidArgument("pansu: eps schedule must be decreasing");
    }
}

// Rescaling by delta_eps^{-1} multiplies vertical rounding by 1/eps^2, so a
// residual below this floor carries no information about convergence.
double rounding_floor(double eps) { return 1e-14 / (eps * eps); }

bool decreasing_to(const std::vector<double>& eps, const std::vector<double>& r, double tol) {
    for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i] > r[i - 1] * (1.0 + 1e-6) + rounding_floor(eps[i])) return false;
    return r.back() <= tol;
}

// The finite-difference quotient is its limit plus O(eps); eliminating the
// linear term between the two smallest scales leaves O(eps^2).
template <class T>
T richardson(const T& coarse, const T& fine, double e_coarse, double e_fine) {
    return (e_coarse * fine - e_fine * coarse) / (e_coarse - e_fine);
}

double residual_slope(const std::vector<double>& eps, const std::vector<double>& r) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (r[i] > 1e-14) {
            lx.push_back(std::log(eps[i]));
            ly.push_back(std::log(r[i]));
        }
    }
    return lx.size() >= 2 ? least_squares_slope(lx, ly) : 0.0;
}

}  // namespace

PansuReport pansu_derivative(const HeisMap& f, const HeisPoint& p, const std::vector<double>& eps_schedule,
                             const std::vector<HeisPoint>& probes, double tol) {
    validate_schedule(eps_schedule, probes);
    const Eigen::Index d = p.x.size();
    std::vector<std::vector<HeisPoint>> diffs(eps_schedule.size());
    for (std::size_t k = 0; k < eps_schedule.size(); ++k)
        for (const auto& y : probes) diffs[k].push_back(finite_difference(f, p, eps_schedule[k], y));

    // candidate at each of the two smallest eps: A by least squares over
    // horizontal parts, d from the probe with the largest vertical component
    Mat YY = Mat::Zero(d, d);
    std::size_t vert = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
        YY += probes[i].x * probes[i].x.transpose();
        if (std::abs(probes[i].xbar) > std::abs(probes[vert].xbar)) vert = i;
    }
    const auto ldlt = YY.ldlt();
    auto fit = [&](const std::vector<HeisPoint>& level) {
        Mat FY = Mat::Zero(d, d);
        for (std::size_t i = 0; i < probes.size(); ++i) FY += level[i].x * probes[i].x.transpose();
        LinearHeisMap L;
        L.A = ldlt.solve(FY.transpose()).transpose();
        L.d = probes[vert].xbar != 0.0 ? level[vert].xbar / probes[vert].xbar : 1.0;
        return L;
    };
    const std::size_t m = diffs.size();
    const LinearHeisMap fine = fit(diffs[m - 1]), coarse = fit(diffs[m - 2]);
    const double ef = eps_schedule[m - 1], ec = eps_schedule[m - 2];
    PansuReport rep;
    rep.candidate.A = richardson<Mat>(coarse.A, fine.A, ec, ef);
    rep.candidate.d = richardson(coarse.d, fine.d, ec, ef);
    rep.eps = eps_schedule;
    for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
        double r = 0.0, h = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const HeisPoint pred = rep.candidate.apply(probes[i]);
            r = std::max(r, coordinate_gap(diffs[k][i], pred));
            h = std::max(h, hom_norm(group_mul(group_inv(pred), diffs[k][i])));
        }
        rep.residuals.push_back(r);
        rep.hom_residuals.push_back(h);
    }
    rep.slope = residual_slope(rep.eps, rep.residuals);
    rep.converged = decreasing_to(rep.eps, rep.residuals, tol);
    return rep;
}

Vec classical_pansu_covector(const HeisPoint& p, const ClassicalGradient& g) {
    detail::require_same_dim(p.x, g.dx, "classical_pansu_covector");
    const int n = p.n();
    return g.dx + 0.5 * g.dxbar * (symplectic_matrix(n).transpose() * p.x);
}

ScalarPansuReport pansu_derivative_scalar(const HeisFunctional& f, const HeisPoint& p,
                                          const std::vector<double>& eps_schedule,
                                          const std::vector<HeisPoint>& probes, double tol,
                                          const ClassicalGradient* classical) {
    validate_schedule(eps_schedule, probes);
    const Eigen::Index d = p.x.size();
    const double fp = f(p);
    std::vector<std::vector<double>> q(eps_schedule.size());
    for (std::size_t k = 0; k < eps_schedule.size(); ++k)
        for (const auto& y : probes) q[k].push_back((f(group_mul(p, dilation(eps_schedule[k], y))) - fp) / eps_schedule[k]);

    Mat YY = Mat::Zero(d, d);
    for (const auto& y : probes) YY += y.x * y.x.transpose();
    const auto ldlt = YY.ldlt();
    auto fit = [&](const std::vector<double>& level) {
        Vec QY = Vec::Zero(d);
        for (std::size_t i = 0; i < probes.size(); ++i) QY += level[i] * probes[i].x;
        return Vec(ldlt.solve(QY));
    };
    const std::size_t m = q.size();
    ScalarPansuReport rep;
    rep.covector = richardson<Vec>(fit(q[m - 2]), fit(q[m - 1]), eps_schedule[m - 2], eps_schedule[m - 1]);
    rep.eps = eps_schedule;
    for (std::size_t k = 0; k < eps_schedule.size(); ++k) {
        double r = 0.0;
        for (std::size_t i = 0; i < probes.size(); ++i) r = std::max(r, std::abs(q[k][i] - rep.covector.dot(probes[i].x)));
        rep.residuals.push_back(r);
    }
    rep.converged = decreasing_to(rep.eps, rep.residuals, tol);
    rep.classical_gap = classical ? (rep.covector - classical_pansu_covector(p, *classical)).lpNorm<Eigen::Infinity>()
                                  : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

LinearityReport linearity_report(const HeisMap& F, int n, const LinearityOptions& opts) {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal;
    auto random_point = [&] {
        Vec x(2 * n);
        for (int i = 0; i < 2 * n; ++i) x(i) = normal(rng);
        return HeisPoint(x, normal(rng));
    };
    LinearityReport rep;
    for (int k = 0; k < opts.pairs; ++k) {
        const HeisPoint p = random_point(), q = random_point();
        const HeisPoint lhs = F(group_mul(p, q));
        const HeisPoint rhs = group_mul(F(p), F(q));
        rep.morphism_gap = std::max(rep.morphism_gap, hom_norm(group_mul(group_inv(lhs), rhs)));
        for (double e : opts.eps) {
            const HeisPoint a = F(dilation(e, p));
            const HeisPoint b = dilation(e, F(p));
            rep.dilation_gap = std::max(rep.dilation_gap, hom_norm(group_mul(group_inv(a), b)) / std::max(1.0, e));
        }
    }
    rep.linear = rep.morphism_gap <= opts.tol && rep.dilation_gap <= opts.tol;
    return rep;
}

bool is_linear_heis(const HeisMap& F, int n, const LinearityOptions& opts) { return linearity_report(F, n, opts).linear; }

}  // namespace heis

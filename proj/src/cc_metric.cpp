#include "heislab/cc_metric.hpp"

#include "heislab/errors.hpp"
#include "heislab/numerics.hpp"
#include "heislab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

namespace heis {

double path_length(const HeisPath& path, double tol) {
    if (!path.horizontal(tol)) {
        throw PreconditionError("path_length: path is not horizontal", path.horiz_residual);
    }
    double len = 0.0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) len += (path.points[i + 1].x - path.points[i].x).norm();
    return len;
}

namespace {

// ---------------------------------------------------------------------------
// Quasi-Newton minimizer

using Objective = std::function<double(const Vec&, Vec&)>;

Vec bfgs_minimize(const Objective& f, Vec w, int max_iter) {
    const Eigen::Index m = w.size();
    Vec g(m), g_new(m);
    double fx = f(w, g);
    Mat Hinv = Mat::Identity(m, m);
    bool scaled = false;
    for (int it = 0; it < max_iter; ++it) {
        if (g.lpNorm<Eigen::Infinity>() <= 1e-11 * (1.0 + std::abs(fx))) break;
        Vec dir = -Hinv * g;
        double slope = g.dot(dir);
        if (slope >= 0.0) {
            Hinv.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
        }
        double step = 1.0;
        Vec w_new(m);
        double f_new = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            w_new = w + step * dir;
            f_new = f(w_new, g_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const Vec s = w_new - w;
        const Vec y = g_new - g;
        const double sy = s.dot(y);
        const double progress = fx - f_new;
        w = w_new;
        g = g_new;
        fx = f_new;
        if (sy > 1e-16 * s.norm() * y.norm()) {
            if (!scaled) {
                Hinv *= sy / y.squaredNorm();
                scaled = true;
            }
            const double rho = 1.0 / sy;
            const Vec Hy = Hinv * y;
            Hinv += ((sy + y.dot(Hy)) * rho * rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
        }
        if (progress <= 1e-16 * std::abs(fx) && s.lpNorm<Eigen::Infinity>() <= 1e-15) break;
    }
    return w;
}

// ---------------------------------------------------------------------------
// Horizontal polylines from 0 to a unit-gauge target (delta, z)

Vec apply_J(const Vec& v) {
    const Eigen::Index n = v.size() / 2;
    Vec out(v.size());
    out.head(n) = v.tail(n);
    out.tail(n) = -v.head(n);
    return out;
}

struct PolylineProblem {
    Vec delta;
    double z;
    int K;
    Eigen::Index d;

    Mat increments(const Vec& w) const {
        Mat U(d, K);
        U.leftCols(K - 1) = Eigen::Map<const Mat>(w.data(), d, K - 1);
        U.col(K - 1) = delta - U.leftCols(K - 1).rowwise().sum();
        return U;
    }

    double gap(const Mat& U) const {
        Vec X = Vec::Zero(d);
        double area = 0.0;
        for (int k = 0; k < K; ++k) {
            area += 0.5 * symplectic_form(X, U.col(k));
            X += U.col(k);
        }
        return area - z;
    }

    // Augmented Lagrangian K sum|u|^2 + mu g + rho/2 g^2 and its gradient.
    double value(const Vec& w, Vec& grad, double mu, double rho) const {
        const Mat U = increments(w);
        const double g = gap(U);
        const double coef = mu + rho * g;
        Mat dU(d, K);
        Vec before = Vec::Zero(d);
        double energy = 0.0;
        for (int k = 0; k < K; ++k) {
            const Vec after = delta - before - U.col(k);
            dU.col(k) = 2.0 * K * U.col(k) + coef * 0.5 * apply_J(after - before);
            energy += U.col(k).squaredNorm();
            before += U.col(k);
        }
        grad.resize(w.size());
        Eigen::Map<Mat> G(grad.data(), d, K - 1);
        G = dU.leftCols(K - 1).colwise() - dU.col(K - 1);
        return K * energy + mu * g + 0.5 * rho * g * g;
    }
};

struct RestartOutcome {
    double length = std::numeric_limits<double>::infinity();
    double residual = std::numeric_limits<double>::infinity();
    Mat U;
};

RestartOutcome solve_from(const PolylineProblem& prob, Vec w, const CCOptions& opts) {
    double mu = 0.0, rho = 100.0;
    double prev_gap = std::numeric_limits<double>::infinity();
    RestartOutcome out;
    for (int outer = 0; outer < opts.max_outer; ++outer) {
        const Objective f = [&](const Vec& v, Vec& g) { return prob.value(v, g, mu, rho); };
        w = bfgs_minimize(f, w, opts.max_inner);
        const Mat U = prob.increments(w);
        const double g = prob.gap(U);
        if (std::abs(g) < out.residual) {
            out.residual = std::abs(g);
            out.U = U;
            out.length = U.colwise().norm().sum();
        }
        if (std::abs(g) <= opts.constraint_tol) break;
        mu += rho * g;
        if (std::abs(g) > 0.25 * prev_gap) rho *= 10.0;
        prev_gap = std::abs(g);
    }
    return out;
}

Vec initial_guess(const PolylineProblem& prob, int restart, std::uint64_t seed) {
    const Eigen::Index d = prob.d, n = d / 2;
    Mat U = (prob.delta / prob.K).replicate(1, prob.K);
    if (restart == 0) {
        // straight line plus a planar loop carrying the requested area
        const double r = std::sqrt(std::abs(prob.z) / std::numbers::pi);
        const double orient = prob.z >= 0 ? 1.0 : -1.0;
        for (int k = 0; k < prob.K; ++k) {
            const double th = 2.0 * std::numbers::pi * (k + 0.5) / prob.K;
            const double dth = 2.0 * std::numbers::pi / prob.K;
            U(0, k) += -r * std::sin(th) * dth * orient;
            U(n, k) += r * std::cos(th) * dth;
        }
    } else {
        std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(restart));
        std::normal_distribution<double> normal(0.0, 1.0);
        const double scale = 2.0 * (1.0 + std::sqrt(std::abs(prob.z))) / prob.K;
        for (int k = 0; k < prob.K; ++k)
            for (Eigen::Index i = 0; i < d; ++i) U(i, k) += scale * normal(rng);
    }
    return Eigen::Map<const Vec>(U.data(), d * (prob.K - 1));
}

}  // namespace

CCResult cc_distance(const HeisPoint& p, const HeisPoint& q, int K, const CCOptions& opts) {
    detail::require_same_dim(p.x, q.x, "cc_distance");
    if (K < 8) throw InvalidArgument("cc_distance: K must be at least 8");
    if (opts.restarts < 1) throw InvalidArgument("cc_distance: restarts must be positive");
    const HeisPoint D = group_mul(group_inv(p), q);
    const double N = hom_norm(D);
    CCResult res;
    if (N == 0.0) {
        res.path = HeisPath({0.0, 1.0}, {p, p});
        return res;
    }
    PolylineProblem prob{D.x / N, D.xbar / (N * N), K, D.x.size()};

    std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(opts.restarts));
    parallel_for(outcomes.size(), [&](std::size_t r) {
        outcomes[r] = solve_from(prob, initial_guess(prob, static_cast<int>(r), opts.seed), opts);
    });

    const RestartOutcome* best = nullptr;
    double best_residual = std::numeric_limits<double>::infinity();
    for (const auto& o : outcomes) {
        best_residual = std::min(best_residual, o.residual);
        if (o.residual <= opts.constraint_tol && (!best || o.length < best->length)) best = &o;
    }
    if (!best) throw ConstraintError("cc_distance: endpoint constraint not met", best_residual);

    res.distance = best->length * N;
    res.constraint_residual = best->residual;
    std::vector<double> times(static_cast<std::size_t>(K) + 1);
    std::vector<HeisPoint> pts;
    pts.reserve(times.size());
    HeisPoint cur = HeisPoint::identity(p.n());
    pts.push_back(p);
    for (int k = 0; k <= K; ++k) times[static_cast<std::size_t>(k)] = static_cast<double>(k) / K;
    for (int k = 0; k < K; ++k) {
        cur = group_mul(cur, HeisPoint(Vec(best->U.col(k)), 0.0));
        pts.push_back(group_mul(p, dilation(N, cur)));
    }
    res.path = HeisPath(std::move(times), std::move(pts));
    return res;
}

BallBoxConstants calibrate_ball_box(int samples, int K, double margin, const CCOptions& opts) {
    if (samples < 2) throw InvalidArgument("calibrate_ball_box: need at least 2 samples");
    std::vector<double> ratio(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        const double s = static_cast<double>(i) / (samples - 1);
        Vec x = Vec::Zero(2);
        x(0) = 1.0 - s;
        const HeisPoint target(x, s * s);
        ratio[static_cast<std::size_t>(i)] = cc_distance(HeisPoint::identity(1), target, K, opts).distance / hom_norm(target);
    }
    const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
    return {*lo * (1.0 - margin), *hi * (1.0 + margin)};
}

const BallBoxConstants& default_ball_box() {
    static const BallBoxConstants constants = calibrate_ball_box();
    return constants;
}

std::pair<double, double> ball_box_bounds(const HeisPoint& p) { return ball_box_bounds(p, default_ball_box()); }

std::pair<double, double> ball_box_bounds(const HeisPoint& p, const BallBoxConstants& c) {
    const double g = hom_norm(p);
    return {c.lower * g, c.upper * g};
}

// ---------------------------------------------------------------------------
// Covering

HeisPath resample_for_covering(const HeisPath& curve, double eps) {
    if (!(eps > 0.0)) throw InvalidArgument("resample_for_covering: eps must be positive");
    if (curve.size() == 0) throw InvalidArgument("resample_for_covering: empty curve");
    const std::size_t segs = curve.size() - 1;
    std::vector<std::size_t> sub(segs, 1);
    std::size_t total = 0;
    for (std::size_t i = 0; i < segs; ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        const Vec dx = b.x - a.x;
        const double defect = std::abs(b.xbar - a.xbar - 0.5 * symplectic_form(a.x, dx));
        const double need = std::max({1.0, std::ceil(dx.norm() / (eps / 20.0)), std::ceil(defect / (eps * eps / 20.0))});
        sub[i] = static_cast<std::size_t>(need);
        total += sub[i];
    }
    const double floor_count = std::ceil(10.0 / eps);
    if (segs > 0 && static_cast<double>(total) < floor_count) {
        const auto factor = static_cast<std::size_t>(std::ceil(floor_count / static_cast<double>(total)));
        for (auto& s : sub) s *= factor;
    }
    std::vector<double> times;
    std::vector<HeisPoint> pts;
    times.push_back(curve.times.front());
    pts.push_back(curve.points.front());
    for (std::size_t i = 0; i < segs; ++i) {
        const auto& a = curve.points[i];
        const auto& b = curve.points[i + 1];
        for (std::size_t j = 1; j <= sub[i]; ++j) {
            const double s = static_cast<double>(j) / static_cast<double>(sub[i]);
            times.push_back(curve.times[i] + s * (curve.times[i + 1] - curve.times[i]));
            pts.emplace_back(Vec(a.x + s * (b.x - a.x)), a.xbar + s * (b.xbar - a.xbar));
        }
    }
    return HeisPath(std::move(times), std::move(pts));
}

namespace {

constexpr std::size_t kBlock = 128;

struct CoverIndex {
    Eigen::Index d = 0;
    std::size_t count = 0;
    Mat X;  // d x count
    std::vector<double> Z;
    Mat lo, hi;  // d x blocks
    std::vector<double> zlo, zhi;
    std::vector<std::size_t> uncovered;  // per block

    explicit CoverIndex(const HeisPath& c) : d(c.points.front().x.size()), count(c.size()), X(d, c.size()), Z(c.size()) {
        for (std::size_t i = 0; i < count; ++i) {
            X.col(static_cast<Eigen::Index>(i)) = c.points[i].x;
            Z[i] = c.points[i].xbar;
        }
        const std::size_t blocks = (count + kBlock - 1) / kBlock;
        lo.resize(d, static_cast<Eigen::Index>(blocks));
        hi.resize(d, static_cast<Eigen::Index>(blocks));
        zlo.resize(blocks);
        zhi.resize(blocks);
        uncovered.resize(blocks);
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::size_t first = b * kBlock, len = std::min(kBlock, count - first);
            const auto cols = X.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(len));
            lo.col(static_cast<Eigen::Index>(b)) = cols.rowwise().minCoeff();
            hi.col(static_cast<Eigen::Index>(b)) = cols.rowwise().maxCoeff();
            const auto [mn, mx] = std::minmax_element(Z.begin() + static_cast<std::ptrdiff_t>(first),
                                                      Z.begin() + static_cast<std::ptrdiff_t>(first + len));
            zlo[b] = *mn;
            zhi[b] = *mx;
            uncovered[b] = len;
        }
    }

    double omega(std::size_t a, std::size_t b) const {
        const Eigen::Index n = d / 2;
        const auto xa = X.col(static_cast<Eigen::Index>(a));
        const auto xb = X.col(static_cast<Eigen::Index>(b));
        return xa.head(n).dot(xb.tail(n)) - xa.tail(n).dot(xb.head(n));
    }

    // q lies in the box centred at c: |x_q - x_c|_inf <= eps, |z_q - z_c - omega(x_c, x_q)/2| <= eps^2
    bool in_box(std::size_t c, std::size_t q, double eps) const {
        const auto dx = X.col(static_cast<Eigen::Index>(q)) - X.col(static_cast<Eigen::Index>(c));
        if (dx.lpNorm<Eigen::Infinity>() > eps) return false;
        return std::abs(Z[q] - Z[c] - 0.5 * omega(c, q)) <= eps * eps;
    }

    bool block_may_intersect(std::size_t b, std::size_t c, double eps) const {
        const auto xc = X.col(static_cast<Eigen::Index>(c));
        const auto bl = lo.col(static_cast<Eigen::Index>(b));
        const auto bh = hi.col(static_cast<Eigen::Index>(b));
        for (Eigen::Index i = 0; i < d; ++i)
            if (bl(i) > xc(i) + eps || bh(i) < xc(i) - eps) return false;
        // omega(x_c, x_q) = a . x_q with a = J^T x_c = (-x_c tail, x_c head)
        const Eigen::Index n = d / 2;
        double wmin = 0.0, wmax = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double a = i < n ? -xc(i + n) : xc(i - n);
            const double p = a * bl(i), q = a * bh(i);
            wmin += std::min(p, q);
            wmax += std::max(p, q);
        }
        const double vmin = zlo[b] - 0.5 * wmax, vmax = zhi[b] - 0.5 * wmin;
        return !(vmin > Z[c] + eps * eps || vmax < Z[c] - eps * eps);
    }
};

}  // namespace

std::size_t covering_number(const HeisPath& curve, double eps) {
    if (!(eps > 0.0)) throw InvalidArgument("covering_number: eps must be positive");
    if (curve.size() == 0) return 0;
    CoverIndex idx(curve);
    std::vector<char> covered(idx.count, 0);
    std::size_t boxes = 0, seed = 0;
    while (true) {
        while (seed < idx.count && covered[seed]) ++seed;
        if (seed == idx.count) break;
        std::size_t centre = seed;
        while (centre + 1 < idx.count && idx.in_box(centre + 1, seed, eps)) ++centre;
        ++boxes;
        for (std::size_t b = 0; b < idx.uncovered.size(); ++b) {
            if (idx.uncovered[b] == 0 || !idx.block_may_intersect(b, centre, eps)) continue;
            const std::size_t first = b * kBlock, last = std::min(first + kBlock, idx.count);
            for (std::size_t q = first; q < last; ++q) {
                if (!covered[q] && idx.in_box(centre, q, eps)) {
                    covered[q] = 1;
                    --idx.uncovered[b];
                }
            }
        }
    }
    return boxes;
}

std::vector<double> default_eps_range() { return geometric_range(0.2, 0.01, 8); }

namespace {

void validate_eps_range(const std::vector<double>& eps) {
    if (eps.size() < 5) throw InvalidArgument("eps range needs at least 5 values");
    for (std::size_t i = 0; i + 1 < eps.size(); ++i)
        if (!(eps[i + 1] < eps[i]) || !(eps[i + 1] > 0.0)) throw InvalidArgument("eps range must be positive and decreasing");
    if (std::log10(eps.front() / eps.back()) < 1.3 - 1e-9) throw InvalidArgument("eps range must span at least 1.3 decades");
}

double extrapolate_to_zero(const std::vector<double>& eps, const std::vector<double>& y) {
    const std::size_t k = std::min<std::size_t>(4, eps.size());
    const std::vector<double> e(eps.end() - static_cast<std::ptrdiff_t>(k), eps.end());
    const std::vector<double> v(y.end() - static_cast<std::ptrdiff_t>(k), y.end());
    return least_squares_line(e, v).intercept;
}

}  // namespace

CoveringEstimate hausdorff_dim_estimate(const HeisPath& curve, const std::vector<double>& eps_range) {
    validate_eps_range(eps_range);
    CoveringEstimate est;
    est.eps_values = eps_range;
    est.counts.resize(eps_range.size());
    parallel_for(eps_range.size(), [&](std::size_t i) {
        est.counts[i] = covering_number(resample_for_covering(curve, eps_range[i]), eps_range[i]);
    });
    est.running_slope.assign(eps_range.size(), std::numeric_limits<double>::quiet_NaN());
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < eps_range.size(); ++i) {
        lx.push_back(std::log(1.0 / eps_range[i]));
        ly.push_back(std::log(static_cast<double>(est.counts[i])));
        if (i > 0) est.running_slope[i] = (ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1]);
    }
    est.degenerate = std::all_of(est.counts.begin(), est.counts.end(), [&](std::size_t c) { return c == est.counts.front(); });
    est.dim_slope = est.degenerate ? 0.0 : least_squares_slope(lx, ly);
    std::vector<double> y;
    for (std::size_t i = 0; i < eps_range.size(); ++i)
        y.push_back(static_cast<double>(est.counts[i]) * std::pow(eps_range[i], est.dim_slope));
    est.measure_extrapolation = extrapolate_to_zero(eps_range, y);
    return est;
}

H2Estimate h2_measure_estimate(const HeisPath& curve, const std::vector<double>& eps_range) {
    H2Estimate out;
    out.covering = hausdorff_dim_estimate(curve, eps_range);
    std::vector<double> y;
    for (std::size_t i = 0; i < eps_range.size(); ++i) y.push_back(static_cast<double>(out.covering.counts[i]) * eps_range[i] * eps_range[i]);
    out.value = extrapolate_to_zero(eps_range, y);
    const double last = y.back();
    const double scale = *std::max_element(y.begin(), y.end());
    out.converged = std::isfinite(out.value) && out.value >= -0.05 * scale &&
                    std::abs(out.value - last) <= 0.5 * std::max(std::abs(last), 1e-300);
    return out;
}

double h2_calibration_constant(const std::vector<double>& eps_range) {
    const HeisPath segment({0.0, 1.0}, {HeisPoint::identity(1), HeisPoint(Vec::Zero(2), 1.0)});
    const H2Estimate est = h2_measure_estimate(segment, eps_range);
    if (!(est.value > 0.0)) throw ConsistencyError("h2_calibration_constant: non-positive reference estimate", est.value);
    return 1.0 / est.value;
}

void write_covering_csv(std::ostream& out, const CoveringEstimate& est) {
    out << "eps,count,running_slope\n";
    char buf[128];
    for (std::size_t i = 0; i < est.eps_values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g\n", est.eps_values[i], est.counts[i], est.running_slope[i]);
        out << buf;
    }
}

}  // namespace heis

#include "heislab/flows.hpp"

#include "heislab/numerics.hpp"
#include "heislab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace heis {

// ---------------------------------------------------------------------------
// HamiltonianField

HamiltonianField HamiltonianField::from_dsl(const std::string& src, int n, const Box& support, Cutoff cutoff) {
    return from_expr(dsl::parse(src, n), n, support, cutoff);
}

HamiltonianField HamiltonianField::from_expr(const dsl::Expr& e, int n, const Box& support, Cutoff cutoff) {
    if (n <= 0) throw InvalidArgument("HamiltonianField: n must be positive");
    if (support.dim() != 2 * n) throw InvalidArgument("HamiltonianField: support box must have dimension 2n");
    if (dsl::max_variable(e) > 2 * n) throw InvalidArgument("HamiltonianField: expression uses a variable above x" + std::to_string(2 * n));
    if (dsl::contains_abs(e)) throw dsl::UnsupportedNodeError("abs is not allowed in a Hamiltonian");

    HamiltonianField H;
    H.n_ = n;
    H.support_ = support;
    H.cutoff_ = cutoff;
    H.autonomous_ = !dsl::uses_time(e);
    H.expr_ = e;
    H.full_ = e;
    if (cutoff == Cutoff::Box) {
        for (int i = 0; i < 2 * n; ++i) {
            H.full_ = dsl::binary(dsl::Op::Mul, H.full_,
                                  dsl::bump({dsl::var(i)}, {support.center(i)}, support.half_widths(i)));
        }
    }
    H.value_ = dsl::CompiledExpr(H.full_);
    const auto g = dsl::grad(H.full_, 2 * n);
    for (int i = 0; i < 2 * n; ++i) {
        H.grad_.emplace_back(g[static_cast<std::size_t>(i)]);
        for (int j = i; j < 2 * n; ++j) H.hess_.emplace_back(dsl::derivative(g[static_cast<std::size_t>(i)], j));
    }
    return H;
}

double HamiltonianField::operator()(double t, const Vec& x) const { return value_(t, {x.data(), static_cast<std::size_t>(x.size())}); }

Vec HamiltonianField::gradient(double t, const Vec& x) const {
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    Vec g(dim());
    for (int i = 0; i < dim(); ++i) g(i) = grad_[static_cast<std::size_t>(i)](t, xs);
    return g;
}

Mat HamiltonianField::hessian(double t, const Vec& x) const {
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    const int d = dim();
    Mat M(d, d);
    std::size_t k = 0;
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) M(i, j) = M(j, i) = hess_[k++](t, xs);
    return M;
}

Vec HamiltonianField::velocity(double t, const Vec& x) const {
    const Vec g = gradient(t, x);
    Vec v(dim());
    v.head(n_) = -g.tail(n_);
    v.tail(n_) = g.head(n_);
    return v;
}

HamiltonianField HamiltonianField::scaled(double s) const {
    return from_expr(dsl::binary(dsl::Op::Mul, dsl::constant(s), expr_), n_, support_, cutoff_);
}

double HamiltonianField::gradient_check(const std::vector<Vec>& probes, double t, double h) const {
    double worst = 0.0;
    for (const auto& x : probes) {
        const Vec g = gradient(t, x);
        Vec xp = x, xm = x;
        for (int i = 0; i < dim(); ++i) {
            xp(i) = x(i) + h;
            xm(i) = x(i) - h;
            const double fd = ((*this)(t, xp) - (*this)(t, xm)) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - g(i)));
            xp(i) = xm(i) = x(i);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Integrator

namespace {

// D(-J grad H) = -J Hess
Mat velocity_jacobian(const HamiltonianField& H, double t, const Vec& x) {
    const Mat M = H.hessian(t, x);
    const int n = H.n();
    Mat A(2 * n, 2 * n);
    A.topRows(n) = -M.bottomRows(n);
    A.bottomRows(n) = M.topRows(n);
    return A;
}

std::size_t step_count(double T, double dt) {
    if (!(dt > 0.0)) throw InvalidArgument("integrate_hamiltonian: dt must be positive");
    if (!std::isfinite(T)) throw InvalidArgument("integrate_hamiltonian: T must be finite");
    if (T == 0.0) return 0;
    return static_cast<std::size_t>(std::ceil(std::abs(T) / dt - 1e-9));
}

}  // namespace

Vec midpoint_step(const HamiltonianField& H, double t, const Vec& x, double h, const IntegratorOptions& opts,
                  std::size_t step_index, int* iterations, Mat* step_jacobian) {
    const Eigen::Index d = x.size();
    const double tm = t + 0.5 * h;
    Vec y = x + h * H.velocity(t, x);
    Mat A;
    int it = 0;
    for (;; ++it) {
        if (it >= opts.max_newton) throw IntegrationError("implicit midpoint: Newton iteration did not converge", step_index);
        const Vec mid = 0.5 * (x + y);
        const Vec G = y - x - h * H.velocity(tm, mid);
        A = velocity_jacobian(H, tm, mid);
        const Mat DG = Mat::Identity(d, d) - 0.5 * h * A;
        const Vec delta = DG.partialPivLu().solve(G);
        y -= delta;
        if (!y.allFinite()) throw IntegrationError("implicit midpoint: non-finite iterate", step_index);
        if (delta.lpNorm<Eigen::Infinity>() <= opts.newton_tol * (1.0 + y.lpNorm<Eigen::Infinity>())) break;
    }
    if (iterations) *iterations = it + 1;
    if (step_jacobian) {
        A = velocity_jacobian(H, tm, 0.5 * (x + y));
        const Mat I = Mat::Identity(d, d);
        *step_jacobian = (I - 0.5 * h * A).partialPivLu().solve(I + 0.5 * h * A);
    }
    return y;
}

Trajectory integrate_hamiltonian(const HamiltonianField& H, const Vec& x0, double T, double dt, const IntegratorOptions& opts,
                                 double t0) {
    if (x0.size() != H.dim()) throw InvalidArgument("integrate_hamiltonian: x0 has the wrong dimension");
    if (!x0.allFinite()) throw InvalidArgument("integrate_hamiltonian: x0 must be finite");
    const std::size_t K = step_count(T, dt);
    const double h = K ? T / static_cast<double>(K) : 0.0;
    Trajectory tr;
    tr.times.reserve(K + 1);
    tr.x.reserve(K + 1);
    Vec x = x0;
    Mat M = Mat::Identity(x0.size(), x0.size());
    tr.times.push_back(t0);
    tr.x.push_back(x);
    tr.H_along.push_back(H(t0, x));
    if (opts.jacobian) tr.jacobian.push_back(M);
    for (std::size_t k = 0; k < K; ++k) {
        const double t = t0 + static_cast<double>(k) * h;
        int iters = 0;
        Mat S;
        x = midpoint_step(H, t, x, h, opts, k, &iters, opts.jacobian ? &S : nullptr);
        tr.max_newton_iterations = std::max(tr.max_newton_iterations, iters);
        const double tn = t0 + static_cast<double>(k + 1) * h;
        tr.times.push_back(tn);
        tr.x.push_back(x);
        tr.H_along.push_back(H(tn, x));
        if (opts.jacobian) {
            M = S * M;
            tr.jacobian.push_back(M);
        }
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Flow bundle

Vec default_anchor(const HamiltonianField& H) {
    if (H.cutoff() == Cutoff::None) return Vec::Zero(H.dim());
    return H.support().center - 1.5 * H.support().half_widths;
}

namespace {

struct SeedRun {
    std::vector<double> times;
    std::vector<Vec> x;
    std::vector<double> H_along;
    std::vector<double> F;
    std::vector<double> area;  // polyline lift increments accumulated from 0
    int max_newton = 0;
    double symplectic_defect = 0.0;
    double inverse_gap = 0.0;
    double decomposition_gap = 0.0;
};

// Parameter interval of the segment a + s v, s in [0, 1], inside the closed box.
std::pair<double, double> clip_segment(const Vec& a, const Vec& v, const Box& box) {
    double s0 = 0.0, s1 = 1.0;
    const Vec lo = box.lower(), hi = box.upper();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (v(i) == 0.0) {
            if (a(i) < lo(i) || a(i) > hi(i)) return {1.0, 0.0};
            continue;
        }
        double p = (lo(i) - a(i)) / v(i), q = (hi(i) - a(i)) / v(i);
        if (p > q) std::swap(p, q);
        s0 = std::max(s0, p);
        s1 = std::min(s1, q);
    }
    return {s0, s1};
}

SeedRun run_seed(const HamiltonianField& H, const Vec& x0, const Vec& anchor, const FlowOptions& opts, bool checks) {
    const Eigen::Index d = x0.size();
    const std::size_t K = step_count(opts.T, opts.dt);
    const double h = K ? opts.T / static_cast<double>(K) : 0.0;

    SeedRun run;
    Vec x = x0;
    Mat M = Mat::Identity(d, d);
    std::vector<Mat> seed_jac;
    run.times.push_back(0.0);
    run.x.push_back(x);
    run.H_along.push_back(H(0.0, x));
    run.area.push_back(0.0);
    seed_jac.push_back(M);
    for (std::size_t k = 0; k < K; ++k) {
        const double t = static_cast<double>(k) * h;
        int it = 0;
        Mat S;
        const Vec xn = midpoint_step(H, t, x, h, opts.integrator, k, &it, &S);
        run.max_newton = std::max(run.max_newton, it);
        M = S * M;
        const double tn = static_cast<double>(k + 1) * h;
        run.area.push_back(run.area.back() + 0.5 * symplectic_form(x, xn - x));
        x = xn;
        run.times.push_back(tn);
        run.x.push_back(x);
        run.H_along.push_back(H(tn, x));
        seed_jac.push_back(M);
        if ((k + 1) % 10 == 0) run.symplectic_defect = std::max(run.symplectic_defect, symplectic_defect(M));
    }

    // F_k(x0) = sum over quadrature nodes s of w alpha_k(a + s v) . v
    const Vec v = x0 - anchor;
    auto node_series = [&](double s) {
        std::vector<double> series(K + 1);
        const Vec y0 = anchor + s * v;
        Vec y = y0;
        Mat Mj = Mat::Identity(d, d);
        series[0] = lift_form(y0, y, Mj).dot(v);
        for (std::size_t k = 0; k < K; ++k) {
            int it = 0;
            Mat Sj;
            y = midpoint_step(H, static_cast<double>(k) * h, y, h, opts.integrator, k, &it, &Sj);
            run.max_newton = std::max(run.max_newton, it);
            Mj = Sj * Mj;
            series[k + 1] = lift_form(y0, y, Mj).dot(v);
        }
        return series;
    };
    run.F.assign(K + 1, 0.0);
    const auto [s0, s1] = H.cutoff() == Cutoff::Box ? clip_segment(anchor, v, H.support()) : std::pair<double, double>{0.0, 1.0};
    if (s1 > s0 && v.squaredNorm() > 0.0) {
        std::vector<std::pair<double, double>> pending;
        const int initial = std::max(1, opts.quad_panels);
        for (int p = initial; p-- > 0;)
            pending.emplace_back(s0 + (s1 - s0) * p / initial, s0 + (s1 - s0) * (p + 1) / initial);
        int used = 0;
        std::vector<double> kron(K + 1), gauss(K + 1);
        while (!pending.empty()) {
            const auto [a, b] = pending.back();
            pending.pop_back();
            ++used;
            const KronrodPanel panel = gauss_kronrod_15(a, b);
            std::fill(kron.begin(), kron.end(), 0.0);
            std::fill(gauss.begin(), gauss.end(), 0.0);
            for (std::size_t j = 0; j < panel.nodes.size(); ++j) {
                const auto series = node_series(panel.nodes[j]);
                for (std::size_t k = 0; k <= K; ++k) {
                    kron[k] += panel.kronrod_weights[j] * series[k];
                    gauss[k] += panel.gauss_weights[j] * series[k];
                }
            }
            double err = 0.0;
            for (std::size_t k = 0; k <= K; ++k) err = std::max(err, std::abs(kron[k] - gauss[k]));
            const double budget = opts.quad_tol * (b - a) / (s1 - s0);
            if (err <= budget || used + static_cast<int>(pending.size()) + 2 > opts.quad_max_panels) {
                for (std::size_t k = 0; k <= K; ++k) run.F[k] += kron[k];
            } else {
                const double m = 0.5 * (a + b);
                pending.emplace_back(m, b);
                pending.emplace_back(a, m);
            }
        }
    }

    if (checks && K > 0 && opts.inverse_checks > 0) {
        const std::size_t stride = std::max<std::size_t>(1, K / static_cast<std::size_t>(opts.inverse_checks));
        for (std::size_t k = stride; k <= K; k += stride) {
            // phi^v_t(x0, 0) = (phi_t^{-1}(phi_t(x0)), area - F): horizontal part by backward integration
            Vec y = run.x[k];
            for (std::size_t j = k; j-- > 0;) y = midpoint_step(H, static_cast<double>(j + 1) * h, y, -h, opts.integrator, j);
            const Vec back = y;
            const double gap = (back - x0).lpNorm<Eigen::Infinity>();
            run.inverse_gap = std::max(run.inverse_gap, gap);
            if (gap > opts.consistency_tol)
                throw ConsistencyError("vertical flow: horizontal part is not the identity", gap);
            const double vk = run.area[k] - run.F[k];
            // phi~_t at back, to first order around x0 (|back - x0| is at round-off level)
            const Vec dx = back - x0;
            const Vec alpha = lift_form(x0, run.x[k], seed_jac[k]);
            const HeisPoint lifted(Vec(run.x[k] + seed_jac[k] * dx), vk + run.F[k] + alpha.dot(dx));
            const HeisPoint horiz(run.x[k], run.area[k]);
            run.decomposition_gap = std::max(run.decomposition_gap, hom_norm(group_mul(group_inv(horiz), lifted)));
        }
    }
    return run;
}

}  // namespace

FlowBundle run_flow_bundle(const HamiltonianField& H, const std::vector<HeisPoint>& seeds, const FlowOptions& opts) {
    if (!(opts.dt > 0.0)) throw InvalidArgument("run_flow_bundle: dt must be positive");
    if (!(opts.T >= 0.0)) throw InvalidArgument("run_flow_bundle: T must be non-negative");
    FlowBundle b;
    b.seeds = seeds;
    b.anchor = opts.anchor.size() ? opts.anchor : default_anchor(H);
    if (b.anchor.size() != H.dim()) throw InvalidArgument("run_flow_bundle: anchor has the wrong dimension");
    std::vector<SeedRun> runs(seeds.size());
    parallel_for(
        seeds.size(),
        [&](std::size_t i) {
            if (seeds[i].x.size() != H.dim()) throw InvalidArgument("run_flow_bundle: seed has the wrong dimension");
            runs[i] = run_seed(H, seeds[i].x, b.anchor, opts, true);
        },
        opts.threads);
    const std::size_t K = step_count(opts.T, opts.dt);
    b.dt = K ? opts.T / static_cast<double>(K) : opts.dt;
    b.stats.steps = K;
    if (!runs.empty()) b.times = runs.front().times;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const SeedRun& r = runs[i];
        const double z0 = seeds[i].xbar;
        std::vector<HeisPoint> lifted, horiz;
        std::vector<double> vert;
        for (std::size_t k = 0; k < r.x.size(); ++k) {
            lifted.emplace_back(r.x[k], z0 + r.F[k]);
            horiz.emplace_back(r.x[k], z0 + r.area[k]);
            vert.push_back(r.area[k] - r.F[k]);
        }
        b.lifted.emplace_back(r.times, std::move(lifted));
        b.horizontal.emplace_back(r.times, std::move(horiz));
        b.vertical.push_back(std::move(vert));
        b.hamiltonian_along.push_back(r.H_along);
        b.generating.push_back(r.F);
        b.stats.max_newton_iterations = std::max(b.stats.max_newton_iterations, r.max_newton);
        b.stats.max_symplectic_defect = std::max(b.stats.max_symplectic_defect, r.symplectic_defect);
        b.stats.max_inverse_gap = std::max(b.stats.max_inverse_gap, r.inverse_gap);
        b.stats.max_decomposition_gap = std::max(b.stats.max_decomposition_gap, r.decomposition_gap);
    }
    return b;
}

std::vector<HeisPoint> grid_seeds(const Box& box, int per_axis, double xbar, const std::function<bool(const Vec&)>& keep) {
    if (per_axis < 1) throw InvalidArgument("grid_seeds: per_axis must be positive");
    std::vector<HeisPoint> out;
    if (per_axis == 1) {
        if (!keep || keep(box.center)) out.emplace_back(box.center, xbar);
        return out;
    }
    const GridSpec grid = GridSpec::uniform(box, per_axis - 1);
    for (const auto& x : grid.nodes())
        if (!keep || keep(x)) out.emplace_back(x, xbar);
    return out;
}

HeisPath lifted_flow(const HamiltonianField& H, const HeisPoint& seed, const FlowOptions& opts) {
    return run_flow_bundle(H, {seed}, opts).lifted.front();
}

HeisPath horizontal_flow(const HamiltonianField& H, const HeisPoint& seed, const FlowOptions& opts) {
    return run_flow_bundle(H, {seed}, opts).horizontal.front();
}

std::vector<double> vertical_flow(const HamiltonianField& H, const HeisPoint& seed, const FlowOptions& opts) {
    return run_flow_bundle(H, {seed}, opts).vertical.front();
}

double vertical_velocity_residual(const FlowBundle& bundle) {
    double r = 0.0;
    for (std::size_t i = 0; i < bundle.vertical.size(); ++i) {
        const auto& v = bundle.vertical[i];
        const auto& Ha = bundle.hamiltonian_along[i];
        for (std::size_t k = 1; k + 1 < v.size(); ++k) {
            const double dv = (v[k + 1] - v[k - 1]) / (bundle.times[k + 1] - bundle.times[k - 1]);
            r = std::max(r, std::abs(dv - Ha[k]));
        }
    }
    return r;
}

double decomposition_residual(const FlowBundle& bundle) {
    double r = bundle.stats.max_decomposition_gap;
    for (std::size_t i = 0; i < bundle.seeds.size(); ++i) {
        for (std::size_t k = 0; k < bundle.times.size(); ++k) {
            const HeisPoint& h = bundle.horizontal[i].points[k];
            const HeisPoint& l = bundle.lifted[i].points[k];
            // phi~_t(x, xbar + v) = (phi_t(x), xbar + v + F_t(x)) with the stored lifted sample
            const HeisPoint composed(l.x, l.xbar + bundle.vertical[i][k]);
            r = std::max(r, hom_norm(group_mul(group_inv(h), composed)));
        }
    }
    return r;
}

double flow_length(const FlowBundle& bundle, const Box& A) {
    const std::size_t K = bundle.times.size();
    if (K < 2) return 0.0;
    std::vector<double> sup(K, 0.0);
    for (std::size_t i = 0; i < bundle.seeds.size(); ++i) {
        if (!A.contains(bundle.seeds[i].x, 1e-12)) continue;
        for (std::size_t k = 0; k < K; ++k) sup[k] = std::max(sup[k], std::abs(bundle.hamiltonian_along[i][k]));
    }
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < K; ++k) acc += 0.5 * (sup[k] + sup[k + 1]) * (bundle.times[k + 1] - bundle.times[k]);
    return acc;
}

double energy_drift(const FlowBundle& bundle) {
    double r = 0.0;
    for (const auto& Ha : bundle.hamiltonian_along)
        for (double h : Ha) r = std::max(r, std::abs(h - Ha.front()));
    return r;
}

void write_trajectory_csv(std::ostream& out, const FlowBundle& bundle) {
    if (bundle.seeds.empty()) return;
    const Eigen::Index d = bundle.seeds.front().x.size();
    out << "seed,t";
    for (Eigen::Index a = 0; a < d; ++a) out << ",x" << (a + 1);
    out << ",xbar,H_along\n";
    char buf[64];
    for (std::size_t i = 0; i < bundle.seeds.size(); ++i) {
        for (std::size_t k = 0; k < bundle.times.size(); ++k) {
            const HeisPoint& p = bundle.lifted[i].points[k];
            out << i;
            std::snprintf(buf, sizeof buf, ",%.17g", bundle.times[k]);
            out << buf;
            for (Eigen::Index a = 0; a < d; ++a) {
                std::snprintf(buf, sizeof buf, ",%.17g", p.x(a));
                out << buf;
            }
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", p.xbar, bundle.hamiltonian_along[i][k]);
            out << buf;
        }
    }
}

// ---------------------------------------------------------------------------
// HAM pairs

HeisPoint HamPair::lifted(const HeisPoint& p) const { return {phi(p.x), p.xbar + F(p.x)}; }

HeisPoint HamPair::vertical(const HeisPoint& p) const { return {p.x, p.xbar + G(p.x)}; }

HamPair HamPair::identity() {
    auto id = [](const Vec& x) { return x; };
    auto zero = [](const Vec&) { return 0.0; };
    return {id, id, zero, zero};
}

HamPair ham_compose(const HamPair& a, const HamPair& b) {
    HamPair c;
    c.phi = [a, b](const Vec& x) { return a.phi(b.phi(x)); };
    c.phi_inv = [a, b](const Vec& x) { return b.phi_inv(a.phi_inv(x)); };
    // lift(phi_a) o lift(phi_b): xbar + F_b(x) + F_a(phi_b(x))
    c.F = [a, b](const Vec& x) { return b.F(x) + a.F(b.phi(x)); };
    // phi^v_a o phi~_a o psi^v_b o phi~_a^{-1}: the F_a terms cancel
    c.G = [a, b](const Vec& x) { return a.G(x) + b.G(a.phi_inv(x)); };
    return c;
}

HamPair flow_pair(const HamiltonianField& H, double t, const FlowOptions& opts) {
    FlowOptions o = opts;
    o.T = t;
    o.inverse_checks = 0;
    const Vec anchor = opts.anchor.size() ? opts.anchor : default_anchor(H);
    HamPair p;
    p.phi = [H, o](const Vec& x) { return Vec(integrate_hamiltonian(H, x, o.T, o.dt, o.integrator).x.back()); };
    p.phi_inv = [H, o](const Vec& x) { return Vec(integrate_hamiltonian(H, x, -o.T, o.dt, o.integrator, o.T).x.back()); };
    p.F = [H, o, anchor](const Vec& x) { return run_seed(H, x, anchor, o, false).F.back(); };
    p.G = [H, o, anchor](const Vec& x) {
        const SeedRun r = run_seed(H, x, anchor, o, false);
        return r.area.back() - r.F.back();
    };
    return p;
}

double pair_gap(const HamPair& a, const HamPair& b, const std::vector<HeisPoint>& probes) {
    double g = 0.0;
    for (const auto& p : probes) {
        g = std::max(g, coordinate_gap(a.lifted(p), b.lifted(p)));
        g = std::max(g, coordinate_gap(a.vertical(p), b.vertical(p)));
    }
    return g;
}

}  // namespace heis

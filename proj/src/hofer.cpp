#include "heislab/hofer.hpp"

#include "heislab/cc_metric.hpp"
#include "heislab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>

namespace heis {

GridSpec default_hofer_grid(const Box& A) {
    const Eigen::Index n = A.dim() / 2;
    return GridSpec::uniform(A, n == 1 ? 64 : n == 2 ? 16 : 8);
}

namespace {

void require_covers(const GridSpec& grid, const Box& A, const char* who) {
    if (grid.dim() != A.dim()) throw InvalidArgument(std::string(who) + ": grid and A differ in dimension");
    const double slack = 1e-12 * (1.0 + A.half_widths.maxCoeff());
    if (((grid.box.lower() - A.lower()).array() > slack).any() || ((A.upper() - grid.box.upper()).array() > slack).any())
        throw InvalidArgument(std::string(who) + ": grid does not cover A");
}

double trapezoid(const std::vector<double>& y, double h) {
    if (y.size() < 2) return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t k = 1; k + 1 < y.size(); ++k) s += y[k];
    return s * h;
}

// Nodes of the grid inside A, with the trapezoid volume each one carries in A.
struct NodeSet {
    std::vector<Vec> x;
    std::vector<double> w;
};

NodeSet nodes_in(const GridSpec& grid, const Box& A, const std::function<bool(const Vec&)>& mask = {}) {
    NodeSet s;
    const Vec lo = A.lower(), hi = A.upper();
    for (std::size_t f = 0; f < grid.node_count(); ++f) {
        const Vec x = grid.node(f);
        const double pitch_tol = 1e-9 * grid.pitch(0);
        if (!A.contains(x, pitch_tol)) continue;
        if (mask && !mask(x)) continue;
        double w = 1.0;
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double p = grid.pitch(i);
            const bool edge = std::abs(x(i) - lo(i)) < 1e-9 * p || std::abs(x(i) - hi(i)) < 1e-9 * p;
            w *= edge ? 0.5 * p : p;
        }
        s.x.push_back(x);
        s.w.push_back(w);
    }
    return s;
}

double shared_calibration() {
    static std::once_flag once;
    static double kappa = 0.0;
    std::call_once(once, [] { kappa = h2_calibration_constant(default_eps_range()); });
    return kappa;
}

HoferReport evaluate_bound(const HamiltonianField& H, const Box& A, double T, const GridSpec& grid,
                           const HoferOptions& opts, const char* who) {
    if (!std::isfinite(T) || T < 0.0) throw InvalidArgument(std::string(who) + ": T must be finite and non-negative");
    if (!(opts.dt > 0.0)) throw InvalidArgument(std::string(who) + ": dt must be positive");
    if (A.dim() != H.dim()) throw InvalidArgument(std::string(who) + ": A has the wrong dimension");
    require_covers(grid, A, who);

    HoferReport r;
    r.T = T;
    r.grid = grid;
    r.fault_scale = opts.fault_scale;
    r.volume = A.volume();
    r.compact_support = H.cutoff() == Cutoff::Box && A.contains(H.support().lower(), 1e-12) &&
                        A.contains(H.support().upper(), 1e-12);

    const NodeSet nodes = nodes_in(grid, A);
    const std::size_t N = nodes.x.size();
    r.seeds = nodes.x;
    r.images.resize(N);
    r.F.resize(N);
    r.per_seed_h2.resize(N);
    std::vector<std::vector<double>> along(N);
    std::vector<double> moved(N, 0.0);
    parallel_for(
        N,
        [&](std::size_t i) {
            const Trajectory tr = integrate_hamiltonian(H, nodes.x[i], T, opts.dt, opts.integrator);
            double area = 0.0;
            for (std::size_t k = 0; k + 1 < tr.x.size(); ++k) area += 0.5 * symplectic_form(tr.x[k], tr.x[k + 1] - tr.x[k]);
            const double h = tr.times.size() > 1 ? tr.times[1] - tr.times[0] : 0.0;
            r.F[i] = area - trapezoid(tr.H_along, h);
            r.per_seed_h2[i] = curve_h2_formula(tr);
            r.images[i] = tr.x.back();
            moved[i] = (tr.x.back() - nodes.x[i]).lpNorm<Eigen::Infinity>();
            along[i] = tr.H_along;
        },
        opts.threads);

    const std::size_t steps = along.empty() ? 1 : along.front().size();
    const double h = steps > 1 ? T / static_cast<double>(steps - 1) : 0.0;
    r.dt = h;

    // sup over the grid and over the flowed seeds at every sample time
    std::vector<double> sup(steps, 0.0);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * h;
        if (k == 0 || !H.autonomous()) {
            double s = 0.0;
            for (const auto& x : nodes.x) s = std::max(s, std::abs(H(t, x)));
            sup[k] = s;
        } else {
            sup[k] = sup[0];
        }
        for (std::size_t i = 0; i < N; ++i) sup[k] = std::max(sup[k], std::abs(along[i][k]));
    }
    r.hofer_action = trapezoid(sup, h);
    r.rhs = r.volume * r.hofer_action;

    std::vector<double> Fs = r.F;
    for (double& f : Fs) f *= opts.fault_scale;
    const VMin vm = v_min(Fs, nodes.w);
    r.lhs = vm.V;
    r.c_star = vm.c_star;
    r.slack = r.rhs - r.lhs;
    r.ratio = r.rhs > 0.0 ? r.lhs / r.rhs : 0.0;

    for (double v : r.per_seed_h2) {
        r.max_seed_h2 = std::max(r.max_seed_h2, v);
        if (v > r.hofer_action + 1e-9) r.pointwise_ok = false;
    }
    r.displacement = moved.empty() ? 0.0 : *std::max_element(moved.begin(), moved.end());
    r.identity_map = r.displacement <= opts.identity_tol;
    r.calibration_constant = opts.calibrate ? shared_calibration() : std::numeric_limits<double>::quiet_NaN();

    if (opts.check_seeds > 0 && N > 0 && T > 0.0) {
        // the first node plus a fixed pseudo-random sample of nodes the flow actually moves
        std::vector<std::size_t> pick{0}, active;
        for (std::size_t i = 0; i < N; ++i)
            if (moved[i] > opts.identity_tol) active.push_back(i);
        std::mt19937 rng(12345);
        std::shuffle(active.begin(), active.end(), rng);
        for (std::size_t j = 0; j < active.size() && j < static_cast<std::size_t>(opts.check_seeds); ++j)
            pick.push_back(active[j]);
        std::vector<HeisPoint> seeds;
        for (std::size_t i : pick) seeds.emplace_back(nodes.x[i], 0.0);
        FlowOptions fo;
        fo.T = T;
        fo.dt = opts.dt;
        fo.integrator = opts.integrator;
        fo.threads = opts.threads;
        const FlowBundle b = run_flow_bundle(H, seeds, fo);
        const double offset = b.generating[0].back() - r.F[pick[0]];
        for (std::size_t j = 0; j < pick.size(); ++j)
            r.generating_check = std::max(r.generating_check, std::abs(b.generating[j].back() - r.F[pick[j]] - offset));
    }

    if (r.compact_support) {
        const double excess = r.lhs - r.rhs;
        if (excess > opts.tol + 1e-6 * r.rhs)
            throw ViolationError("generating-function volume exceeds vol(A) times the Hofer action", excess);
    }
    return r;
}

}  // namespace

double hofer_action(const HamiltonianField& H, const Box& A, double T, const GridSpec& grid, int time_steps) {
    if (A.dim() != H.dim()) throw InvalidArgument("hofer_action: A has the wrong dimension");
    if (time_steps < 1) throw InvalidArgument("hofer_action: time_steps must be positive");
    if (!std::isfinite(T) || T < 0.0) throw InvalidArgument("hofer_action: T must be finite and non-negative");
    require_covers(grid, A, "hofer_action");
    const NodeSet nodes = nodes_in(grid, A);
    const double h = T / time_steps;
    std::vector<double> sup(static_cast<std::size_t>(time_steps) + 1, 0.0);
    for (std::size_t k = 0; k < sup.size(); ++k) {
        if (k > 0 && H.autonomous()) {
            sup[k] = sup[0];
            continue;
        }
        const double t = static_cast<double>(k) * h;
        for (const auto& x : nodes.x) sup[k] = std::max(sup[k], std::abs(H(t, x)));
    }
    return trapezoid(sup, h);
}

VMin v_min(const std::vector<double>& values, const std::vector<double>& weights) {
    if (values.size() != weights.size()) throw InvalidArgument("v_min: values and weights differ in length");
    VMin out;
    if (values.empty()) return out;
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double acc = 0.0;
    out.c_star = values[order.back()];
    for (std::size_t i : order) {
        acc += weights[i];
        if (acc >= 0.5 * total) {
            out.c_star = values[i];
            break;
        }
    }
    for (std::size_t i = 0; i < values.size(); ++i) out.V += weights[i] * std::abs(values[i] - out.c_star);
    return out;
}

VMin v_min(const GeneratingField& F, const Box& A, const std::function<bool(const Vec&)>& mask) {
    require_covers(F.grid, A, "v_min");
    const NodeSet nodes = nodes_in(F.grid, A, mask);
    std::vector<double> values;
    values.reserve(nodes.x.size());
    for (const auto& x : nodes.x) values.push_back(F(x));
    return v_min(values, nodes.w);
}

double curve_h2_formula(const std::vector<double>& times, const std::vector<double>& H_along) {
    if (times.size() != H_along.size()) throw InvalidArgument("curve_h2_formula: times and H_along differ in length");
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k)
        s += 0.5 * (std::abs(H_along[k]) + std::abs(H_along[k + 1])) * std::abs(times[k + 1] - times[k]);
    return s;
}

double curve_h2_formula(const Trajectory& tr) { return curve_h2_formula(tr.times, tr.H_along); }

HoferReport verify_hofer_bound(const HamiltonianField& H, const Box& A, double T, const GridSpec& grid,
                               const HoferOptions& opts) {
    if (H.cutoff() != Cutoff::Box) throw InvalidArgument("verify_hofer_bound: H must carry a box cutoff");
    if (!A.contains(H.support().lower(), 1e-12) || !A.contains(H.support().upper(), 1e-12))
        throw InvalidArgument("verify_hofer_bound: the support of H must lie inside A");
    return evaluate_bound(H, A, T, grid, opts, "verify_hofer_bound");
}

HoferReport generating_vs_hamiltonian_bound(const HamiltonianField& H, const Box& A, double T, const GridSpec& grid,
                                            const HoferOptions& opts) {
    return evaluate_bound(H, A, T, grid, opts, "generating_vs_hamiltonian_bound");
}

void write_hofer_report(std::ostream& out, const HoferReport& r) {
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "# inf_c int_A |F_T - c| <= vol(A) * int_0^T sup_A |H_t| dt\n"
        << "# the right-hand side is the action of this flow, an upper bound for the Hofer distance (not computed)\n";
    out << "T = " << num(r.T) << '\n'
        << "dt = " << num(r.dt) << '\n'
        << "grid_nodes = " << r.seeds.size() << '\n'
        << "lhs = " << num(r.lhs) << '\n'
        << "rhs = " << num(r.rhs) << '\n'
        << "slack = " << num(r.slack) << '\n'
        << "ratio = " << num(r.ratio) << '\n'
        << "holds = " << (r.lhs <= r.rhs + 1e-9 + 1e-6 * r.rhs ? "true" : "false") << '\n'
        << "hofer_action = " << num(r.hofer_action) << '\n'
        << "volume = " << num(r.volume) << '\n'
        << "c_star = " << num(r.c_star) << '\n'
        << "max_seed_h2 = " << num(r.max_seed_h2) << '\n'
        << "pointwise_ok = " << (r.pointwise_ok ? "true" : "false") << '\n'
        << "calibration_constant = " << num(r.calibration_constant) << '\n'
        << "displacement = " << num(r.displacement) << '\n'
        << "identity_map = " << (r.identity_map ? "true" : "false") << '\n'
        << "compact_support = " << (r.compact_support ? "true" : "false") << '\n'
        << "generating_check = " << num(r.generating_check) << '\n'
        << "fault_scale = " << num(r.fault_scale) << '\n'
        << "per_seed_h2 = [";
    for (std::size_t i = 0; i < r.per_seed_h2.size(); ++i) out << (i ? ", " : "") << num(r.per_seed_h2[i]);
    out << "]\n";
}

void write_hofer_csv(std::ostream& out, const HoferReport& r) {
    const Eigen::Index d = r.seeds.empty() ? 0 : r.seeds.front().size();
    out << "seed";
    for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i + 1;
    out << ",F,h2\n";
    char buf[64];
    for (std::size_t s = 0; s < r.seeds.size(); ++s) {
        out << s;
        for (Eigen::Index i = 0; i < d; ++i) {
            std::snprintf(buf, sizeof buf, ",%.17g", r.seeds[s](i));
            out << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", r.F[s] * r.fault_scale, r.per_seed_h2[s]);
        out << buf;
    }
}

}  // namespace heis

#include "heislab/commands.hpp"

#include "heislab/cc_metric.hpp"
#include "heislab/expr.hpp"
#include "heislab/flows.hpp"
#include "heislab/hofer.hpp"
#include "heislab/suite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace heis {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

// Files are assembled in memory and written together once all computation is done.
struct Outputs {
    std::ostringstream& add(const std::string& name) {
        streams.emplace_back();
        names.push_back(name);
        return streams.back();
    }
    void flush(const std::string& dir, std::ostream& log) {
        fs::create_directories(dir);
        for (std::size_t i = 0; i < names.size(); ++i) {
            const fs::path p = fs::path(dir) / names[i];
            std::ofstream out(p, std::ios::binary);
            if (!out) throw Error("cannot write " + p.string());
            out << streams[i].str();
            log << "wrote " << p.string() << '\n';
        }
    }

    std::vector<std::string> names;
    std::deque<std::ostringstream> streams;
};

FlowOptions flow_options(const RunConfig& cfg, double dt) {
    FlowOptions fo;
    fo.T = cfg.T;
    fo.dt = dt;
    fo.threads = cfg.threads;
    return fo;
}

FlowBundle single_seed(const FlowBundle& b, std::size_t i) {
    FlowBundle s;
    s.seeds = {b.seeds[i]};
    s.dt = b.dt;
    s.times = b.times;
    s.lifted = {b.lifted[i]};
    s.horizontal = {b.horizontal[i]};
    s.vertical = {b.vertical[i]};
    s.hamiltonian_along = {b.hamiltonian_along[i]};
    s.generating = {b.generating[i]};
    s.anchor = b.anchor;
    s.stats = b.stats;
    return s;
}

}  // namespace

int cmd_flow(const RunConfig& cfg, std::ostream& log) {
    const HamiltonianField H = cfg.field();
    const auto seeds = cfg.seeds();
    const double dt0 = cfg.dt * cfg.dt_scale;
    const double floor = 1e-11;

    std::vector<FlowBundle> bundles;
    std::vector<double> dts, vvr, dec, back;
    for (int k = 0; k < cfg.dt_levels; ++k) {
        const double dt = dt0 / std::pow(2.0, k);
        bundles.push_back(run_flow_bundle(H, seeds, flow_options(cfg, dt)));
        dts.push_back(bundles.back().dt);
        vvr.push_back(vertical_velocity_residual(bundles.back()));
        dec.push_back(decomposition_residual(bundles.back()));
        back.push_back(bundles.back().stats.max_inverse_gap);
    }
    bool ok = true;
    Outputs out;
    auto& rep = out.add("flow_report.txt");
    rep << "hamiltonian = \"" << cfg.hamiltonian << "\"\n"
        << "seeds = " << seeds.size() << "\nT = " << num(cfg.T) << "\n\n"
        << "# dt, max |dv/dt - H(t, phi_t(x))|, observed order, decomposition gap (hom_norm), bound 10 dt^2, inverse gap\n";
    for (std::size_t k = 0; k < dts.size(); ++k) {
        double order = std::numeric_limits<double>::quiet_NaN();
        if (k > 0 && vvr[k - 1] > floor && vvr[k] > 0.0) order = std::log2(vvr[k - 1] / vvr[k]);
        const double bound = 10.0 * dts[k] * dts[k];
        if (!std::isnan(order) && order < 1.8) ok = false;
        if (dec[k] > bound) ok = false;
        rep << "level " << k << ": dt = " << num(dts[k]) << ", residual = " << num(vvr[k]) << ", order = " << num(order)
            << ", decomposition = " << num(dec[k]) << ", bound = " << num(bound) << ", inverse_gap = " << num(back[k]) << '\n';
    }
    const FlowBundle& b = bundles.front();
    rep << "\nenergy_drift = " << num(energy_drift(b)) << (H.autonomous() ? "" : "  # time-dependent H, not conserved")
        << "\nflow_length = " << num(flow_length(b, H.support())) << "\nmax_newton_iterations = " << b.stats.max_newton_iterations
        << "\nmax_symplectic_defect = " << num(b.stats.max_symplectic_defect) << "\nverdict = " << (ok ? "pass" : "fail") << '\n';

    char name[64];
    for (std::size_t i = 0; i < b.seeds.size(); ++i) {
        std::snprintf(name, sizeof name, "trajectory_%03zu.csv", i);
        write_trajectory_csv(out.add(name), single_seed(b, i));
    }
    auto& vert = out.add("vertical.csv");
    vert << "seed,t,v,H_along\n";
    for (std::size_t i = 0; i < b.seeds.size(); ++i)
        for (std::size_t k = 0; k < b.times.size(); ++k)
            vert << i << ',' << num(b.times[k]) << ',' << num(b.vertical[i][k]) << ',' << num(b.hamiltonian_along[i][k]) << '\n';
    write_config(out.add("config.ini"), cfg);
    out.flush(cfg.output_dir, log);

    log << "vertical-velocity residual " << short_num(vvr.front());
    if (vvr.size() > 1) log << " -> " << short_num(vvr.back());
    log << ", decomposition " << short_num(*std::max_element(dec.begin(), dec.end())) << ": " << (ok ? "pass" : "FAIL") << '\n';
    return ok ? kExitOk : kExitCriterion;
}

int cmd_hofer_verify(const RunConfig& cfg, std::ostream& log) {
    if (cfg.cutoff != Cutoff::Box) throw ConfigError("hamiltonian.cutoff", "hofer-verify needs a compactly supported Hamiltonian (cutoff = box)");
    const HamiltonianField H = cfg.field();
    HoferOptions ho;
    ho.dt = cfg.dt * cfg.dt_scale;
    ho.fault_scale = cfg.fault_scale;
    ho.threads = cfg.threads;
    ho.tol = std::numeric_limits<double>::infinity();  // judged below, after the report is written
    const HoferReport r = verify_hofer_bound(H, cfg.hofer_box(), cfg.T, cfg.hofer_grid(), ho);
    const bool holds = r.lhs <= r.rhs + 1e-9 + 1e-6 * r.rhs;

    Outputs out;
    write_hofer_report(out.add("hofer_report.txt"), r);
    write_hofer_csv(out.add("hofer.csv"), r);
    write_config(out.add("config.ini"), cfg);
    out.flush(cfg.output_dir, log);

    log << "lhs = " << short_num(r.lhs) << ", rhs = " << short_num(r.rhs) << ", slack = " << short_num(r.slack) << '\n';
    if (!holds) {
        log << "VIOLATION: generating-function volume exceeds vol(A) times the Hofer action by " << short_num(r.lhs - r.rhs)
            << " (this signals a bug or an injected fault)\n";
        return kExitViolation;
    }
    return kExitOk;
}

int cmd_measure(const RunConfig& cfg, std::ostream& log) {
    const HamiltonianField H = cfg.field();
    const Vec point = cfg.measure_point.size() ? cfg.measure_point : cfg.seeds().front().x;
    const auto eps = cfg.eps_range();
    const FlowBundle b = run_flow_bundle(H, {HeisPoint(point, cfg.seeds_xbar)}, flow_options(cfg, cfg.dt * cfg.dt_scale));
    const HeisPath& curve = cfg.measure_curve == "horizontal" ? b.horizontal.front() : b.lifted.front();
    const H2Estimate est = h2_measure_estimate(curve, eps);
    const double kappa = h2_calibration_constant(eps);
    const double formula = curve_h2_formula(b.times, b.hamiltonian_along.front());

    Outputs out;
    write_covering_csv(out.add("covering.csv"), est.covering);
    auto& rep = out.add("measure_report.txt");
    rep << "hamiltonian = \"" << cfg.hamiltonian << "\"\ncurve = " << cfg.measure_curve << "\npoint = ";
    for (Eigen::Index i = 0; i < point.size(); ++i) rep << (i ? ", " : "") << num(point(i));
    rep << "\ndim_slope = " << num(est.covering.dim_slope) << "\ndegenerate = " << (est.covering.degenerate ? "true" : "false")
        << "\nh2_covering = " << num(est.value) << "\ncalibration_constant = " << num(kappa)
        << "\nh2_calibrated = " << num(kappa * est.value) << "\nh2_formula = " << num(formula)
        << "\nrelative_gap = " << num(formula > 0.0 ? kappa * est.value / formula - 1.0 : std::numeric_limits<double>::quiet_NaN())
        << "\nconverged = " << (est.converged ? "true" : "false") << '\n';
    write_config(out.add("config.ini"), cfg);
    out.flush(cfg.output_dir, log);

    log << "dimension slope " << short_num(est.covering.dim_slope) << ", H^2 covering x kappa " << short_num(kappa * est.value)
        << " vs integral of |H| " << short_num(formula) << '\n';
    return kExitOk;
}

int cmd_suite(const RunConfig& cfg, std::ostream& log) {
    SuiteOptions so;
    so.seed = cfg.seed;
    so.threads = cfg.threads;
    so.dt_scale = cfg.dt_scale;
    std::ostringstream text;
    const SuiteSummary s = run_suite(so, [&](const CriterionResult& r) {
        log << format_result(r) << '\n' << std::flush;
        text << format_result(r) << '\n';
    });
    Outputs out;
    out.add("suite.txt") << text.str();
    write_suite_json(out.add("suite_summary.json"), s, so);
    out.flush(cfg.output_dir, log);
    if (s.all_pass()) {
        log << "all " << s.results.size() << " criteria passed\n";
        return kExitOk;
    }
    log << "failed criteria:";
    for (int id : s.failed()) log << ' ' << id;
    log << '\n';
    return kExitCriterion;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& log, std::ostream& err) {
    try {
        if (name == "flow") return cmd_flow(cfg, log);
        if (name == "hofer-verify") return cmd_hofer_verify(cfg, log);
        if (name == "measure") return cmd_measure(cfg, log);
        if (name == "suite") return cmd_suite(cfg, log);
        err << "unknown command '" << name << "'\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const dsl::ParseError& e) {
        err << "ParseError: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ViolationError& e) {
        err << "violation: " << e.what() << " (excess " << e.excess << ")\n";
        return kExitViolation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitCriterion;
    }
}

}  // namespace heis

#include "heislab/config.hpp"

#include "heislab/numerics.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

namespace heis {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"group", {"n"}},
        {"hamiltonian", {"expr", "cutoff"}},
        {"support", {"center", "half_widths"}},
        {"flow", {"T", "dt", "levels"}},
        {"seeds", {"per_axis", "scale", "xbar", "points"}},
        {"measure", {"eps_max", "eps_min", "eps_count", "curve", "point"}},
        {"hofer", {"a_scale", "cells", "fault_scale"}},
        {"output", {"dir"}},
        {"run", {"seed", "threads", "dt_scale"}},
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string unquote(std::string s) {
    s = trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

double to_double(const std::string& field, const std::string& raw) {
    const std::string s = unquote(raw);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ConfigError(field, "expected a number, got '" + s + "'");
    }
    if (trim(s.substr(used)).size()) throw ConfigError(field, "expected a number, got '" + s + "'");
    if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
    return v;
}

long long to_int(const std::string& field, const std::string& raw) {
    const double v = to_double(field, raw);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(field, "expected an integer, got '" + unquote(raw) + "'");
    return static_cast<long long>(v);
}

std::vector<double> to_list(const std::string& field, const std::string& raw) {
    std::vector<double> out;
    std::stringstream ss(unquote(raw));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(field, item));
    return out;
}

Vec to_vec(const std::vector<double>& v) {
    Vec x(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i)) = v[i];
    return x;
}

void apply_overrides(pt::ptree& tree, const Overrides& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError(o, "override must look like section.key=value");
        const std::string key = trim(o.substr(0, eq));
        if (key.find('.') == std::string::npos) throw ConfigError(key, "override key must be section.key");
        tree.put(key, trim(o.substr(eq + 1)));
    }
}

RunConfig from_tree(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        const auto it = known_keys().find(section);
        if (it == known_keys().end()) throw ConfigError(section, "unknown section");
        if (!body.data().empty() && body.empty()) throw ConfigError(section, "keys must live inside a section");
        for (const auto& [key, value] : body)
            if (!it->second.count(key)) throw ConfigError(section + "." + key, "unknown key");
    }
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        const auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!v) return std::nullopt;
        return *v;
    };

    RunConfig c;
    if (auto v = get("group.n")) c.n = static_cast<int>(to_int("group.n", *v));
    if (c.n < 1 || c.n > 8) throw ConfigError("group.n", "must be between 1 and 8");
    const int d = 2 * c.n;

    if (auto v = get("hamiltonian.expr")) c.hamiltonian = unquote(*v);
    if (auto v = get("hamiltonian.cutoff")) {
        const std::string s = unquote(*v);
        if (s == "box") c.cutoff = Cutoff::Box;
        else if (s == "none") c.cutoff = Cutoff::None;
        else throw ConfigError("hamiltonian.cutoff", "expected box or none, got '" + s + "'");
    }

    Vec center = Vec::Zero(d), half = Vec::Ones(d);
    if (auto v = get("support.center")) {
        const auto l = to_list("support.center", *v);
        if (static_cast<int>(l.size()) != d) throw ConfigError("support.center", "needs 2n = " + std::to_string(d) + " entries");
        center = to_vec(l);
    }
    if (auto v = get("support.half_widths")) {
        const auto l = to_list("support.half_widths", *v);
        if (l.size() == 1) half = Vec::Constant(d, l[0]);
        else if (static_cast<int>(l.size()) == d) half = to_vec(l);
        else throw ConfigError("support.half_widths", "needs 1 or 2n = " + std::to_string(d) + " entries");
    }
    if ((half.array() <= 0.0).any()) throw ConfigError("support.half_widths", "must be positive");
    c.support = Box(center, half);

    if (auto v = get("flow.T")) c.T = to_double("flow.T", *v);
    if (auto v = get("flow.dt")) c.dt = to_double("flow.dt", *v);
    if (auto v = get("flow.levels")) c.dt_levels = static_cast<int>(to_int("flow.levels", *v));

    if (auto v = get("seeds.per_axis")) c.seeds_per_axis = static_cast<int>(to_int("seeds.per_axis", *v));
    if (auto v = get("seeds.scale")) c.seeds_scale = to_double("seeds.scale", *v);
    if (auto v = get("seeds.xbar")) c.seeds_xbar = to_double("seeds.xbar", *v);
    if (auto v = get("seeds.points")) {
        std::stringstream ss(unquote(*v));
        std::string item;
        while (std::getline(ss, item, ';')) {
            if (trim(item).empty()) continue;
            const auto l = to_list("seeds.points", item);
            if (static_cast<int>(l.size()) != d) throw ConfigError("seeds.points", "every point needs 2n = " + std::to_string(d) + " entries");
            c.seed_points.push_back(to_vec(l));
        }
    }

    if (auto v = get("measure.eps_max")) c.eps_max = to_double("measure.eps_max", *v);
    if (auto v = get("measure.eps_min")) c.eps_min = to_double("measure.eps_min", *v);
    if (auto v = get("measure.eps_count")) c.eps_count = static_cast<int>(to_int("measure.eps_count", *v));
    if (auto v = get("measure.curve")) c.measure_curve = unquote(*v);
    if (auto v = get("measure.point")) {
        const auto l = to_list("measure.point", *v);
        if (static_cast<int>(l.size()) != d) throw ConfigError("measure.point", "needs 2n = " + std::to_string(d) + " entries");
        c.measure_point = to_vec(l);
    }

    if (auto v = get("hofer.a_scale")) c.a_scale = to_double("hofer.a_scale", *v);
    if (auto v = get("hofer.cells")) c.hofer_cells = static_cast<int>(to_int("hofer.cells", *v));
    if (auto v = get("hofer.fault_scale")) c.fault_scale = to_double("hofer.fault_scale", *v);

    if (auto v = get("output.dir")) c.output_dir = unquote(*v);
    if (auto v = get("run.seed")) {
        const long long s = to_int("run.seed", *v);
        if (s < 0) throw ConfigError("run.seed", "must be non-negative");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (auto v = get("run.threads")) c.threads = static_cast<int>(to_int("run.threads", *v));
    if (auto v = get("run.dt_scale")) c.dt_scale = to_double("run.dt_scale", *v);
    validate(c);
    return c;
}

}  // namespace

std::vector<double> RunConfig::eps_range() const { return geometric_range(eps_max, eps_min, eps_count); }

std::vector<HeisPoint> RunConfig::seeds() const {
    if (!seed_points.empty()) {
        std::vector<HeisPoint> out;
        for (const auto& p : seed_points) out.emplace_back(p, seeds_xbar);
        return out;
    }
    return grid_seeds(support.scaled(seeds_scale), seeds_per_axis, seeds_xbar);
}

Box RunConfig::hofer_box() const { return support.scaled(a_scale); }

GridSpec RunConfig::hofer_grid() const {
    const Box A = hofer_box();
    return hofer_cells > 0 ? GridSpec::uniform(A, hofer_cells) : GridSpec::uniform(A, n == 1 ? 64 : n == 2 ? 16 : 8);
}

HamiltonianField RunConfig::field() const { return HamiltonianField::from_dsl(hamiltonian, n, support, cutoff); }

void validate(const RunConfig& c) {
    const int d = 2 * c.n;
    if (c.n < 1) throw ConfigError("group.n", "must be positive");
    if (c.support.dim() != d) throw ConfigError("support.center", "dimension must be 2n");
    if ((c.support.half_widths.array() <= 0.0).any()) throw ConfigError("support.half_widths", "must be positive");
    if (!(c.T >= 0.0) || !std::isfinite(c.T)) throw ConfigError("flow.T", "must be finite and non-negative");
    if (!(c.dt > 0.0)) throw ConfigError("flow.dt", "must be positive");
    if (c.dt_levels < 1 || c.dt_levels > 8) throw ConfigError("flow.levels", "must be between 1 and 8");
    if (c.seeds_per_axis < 1) throw ConfigError("seeds.per_axis", "must be positive");
    if (!(c.seeds_scale > 0.0)) throw ConfigError("seeds.scale", "must be positive");
    for (const auto& p : c.seed_points)
        if (p.size() != d) throw ConfigError("seeds.points", "every point needs 2n entries");
    if (!(c.eps_max > 0.0) || !(c.eps_min > 0.0)) throw ConfigError("measure.eps_max", "eps values must be positive");
    if (!(c.eps_min < c.eps_max)) throw ConfigError("measure.eps_min", "eps range must be decreasing (eps_min < eps_max)");
    if (c.eps_count < 2) throw ConfigError("measure.eps_count", "needs at least 2 values");
    if (c.measure_curve != "lifted" && c.measure_curve != "horizontal")
        throw ConfigError("measure.curve", "expected lifted or horizontal, got '" + c.measure_curve + "'");
    if (c.measure_point.size() && c.measure_point.size() != d) throw ConfigError("measure.point", "needs 2n entries");
    if (!(c.a_scale >= 1.0)) throw ConfigError("hofer.a_scale", "must be at least 1 so that A contains the support");
    if (c.hofer_cells < 0) throw ConfigError("hofer.cells", "must be non-negative");
    if (!std::isfinite(c.fault_scale)) throw ConfigError("hofer.fault_scale", "must be finite");
    if (c.output_dir.empty()) throw ConfigError("output.dir", "must not be empty");
    if (c.threads < 0) throw ConfigError("run.threads", "must be non-negative");
    if (!(c.dt_scale > 0.0)) throw ConfigError("run.dt_scale", "must be positive");
    try {
        (void)c.field();
    } catch (const dsl::ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError("hamiltonian.expr", e.what());
    }
}

RunConfig parse_config(std::istream& in, const Overrides& overrides) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("line " + std::to_string(e.line()), e.message());
    }
    apply_overrides(tree, overrides);
    return from_tree(tree);
}

RunConfig load_config(const std::string& path, const Overrides& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    return parse_config(in, overrides);
}

RunConfig default_config(const Overrides& overrides) {
    pt::ptree tree;
    apply_overrides(tree, overrides);
    return from_tree(tree);
}

void write_config(std::ostream& out, const RunConfig& c) {
    auto list = [](const Vec& v) {
        std::ostringstream s;
        s.precision(17);
        for (Eigen::Index i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v(i);
        return s.str();
    };
    std::ostringstream o;
    o.precision(17);
    o << "[group]\nn = " << c.n << "\n\n"
      << "[hamiltonian]\nexpr = \"" << c.hamiltonian << "\"\ncutoff = " << (c.cutoff == Cutoff::Box ? "box" : "none") << "\n\n"
      << "[support]\ncenter = " << list(c.support.center) << "\nhalf_widths = " << list(c.support.half_widths) << "\n\n"
      << "[flow]\nT = " << c.T << "\ndt = " << c.dt << "\nlevels = " << c.dt_levels << "\n\n"
      << "[seeds]\nper_axis = " << c.seeds_per_axis << "\nscale = " << c.seeds_scale << "\nxbar = " << c.seeds_xbar << '\n';
    if (!c.seed_points.empty()) {
        o << "points = \"";
        for (std::size_t i = 0; i < c.seed_points.size(); ++i) o << (i ? "; " : "") << list(c.seed_points[i]);
        o << "\"\n";
    }
    o << "\n[measure]\neps_max = " << c.eps_max << "\neps_min = " << c.eps_min << "\neps_count = " << c.eps_count
      << "\ncurve = " << c.measure_curve << '\n';
    if (c.measure_point.size()) o << "point = " << list(c.measure_point) << '\n';
    o << "\n[hofer]\na_scale = " << c.a_scale << "\ncells = " << c.hofer_cells << "\nfault_scale = " << c.fault_scale << "\n\n"
      << "[output]\ndir = \"" << c.output_dir << "\"\n\n"
      << "[run]\nseed = " << c.seed << "\nthreads = " << c.threads << "\ndt_scale = " << c.dt_scale << '\n';
    out << o.str();
}

}  // namespace heis

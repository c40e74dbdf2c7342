#include "heislab/commands.hpp"
#include "heislab/config.hpp"
#include "heislab/expr.hpp"
#include "heislab/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"heislab: Heisenberg-group lifts of Hamiltonian flows, covering measures and the Hofer bound"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int threads = 0;
    double fault = 0.0;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "run configuration (INI)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides run.seed)");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads; HEISLAB_THREADS is used when absent")
                            ->check(CLI::NonNegativeNumber);
    app.add_option("--override", overrides, "section.key=value, repeatable")->allow_extra_args(false);

    app.add_subcommand("flow", "integrate the flow, write trajectories and the vertical-velocity report");
    auto* hofer = app.add_subcommand("hofer-verify", "check inf_c int_A |F - c| <= vol(A) * Hofer action");
    hofer->add_option("--inject-fault", fault, "debug: multiply F_T by this factor before the check");
    app.add_subcommand("measure", "covering numbers, dimension slope and H^2 comparison for one flow curve");
    app.add_subcommand("suite", "run the acceptance criteria");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : heis::kExitConfig;
    }

    if (!out_dir.empty()) overrides.push_back("output.dir=" + out_dir);
    if (*seed_opt) overrides.push_back("run.seed=" + std::to_string(seed));
    if (*threads_opt) {
        overrides.push_back("run.threads=" + std::to_string(threads));
        if (threads > 0) heis::set_default_threads(threads);
    }
    if (fault != 0.0) {
        std::ostringstream v;
        v.precision(17);
        v << fault;
        overrides.push_back("hofer.fault_scale=" + v.str());
    }

    heis::RunConfig cfg;
    try {
        cfg = config_path.empty() ? heis::default_config(overrides) : heis::load_config(config_path, overrides);
    } catch (const heis::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return heis::kExitConfig;
    } catch (const heis::dsl::ParseError& e) {
        std::cerr << "ParseError: " << e.what() << '\n';
        return heis::kExitConfig;
    }
    const std::string name = app.get_subcommands().front()->get_name();
    return heis::run_command(name, cfg, std::cout, std::cerr);
}

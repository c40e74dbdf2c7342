#include "heislab/commands.hpp"
#include "heislab/suite.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace heis;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("heislab_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run(const std::string& cmd, const Overrides& o, std::string* err_text = nullptr) {
    std::ostringstream log, err;
    int code;
    try {
        code = run_command(cmd, default_config(o), log, err);
    } catch (const ConfigError& e) {
        err << e.what();
        code = kExitConfig;
    } catch (const dsl::ParseError& e) {
        err << "ParseError: " << e.what();
        code = kExitConfig;
    }
    if (err_text) *err_text = err.str();
    return code;
}

int shell(const std::string& args) {
    const int status = std::system((std::string(HEISLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("flow with H = 0 writes all-zero vertical series") {
    const fs::path dir = scratch("flow_zero");
    CHECK(run("flow", {"output.dir=" + dir.string(), "seeds.per_axis=2", "flow.levels=2", "flow.dt=0.05"}) == kExitOk);
    std::ifstream in(dir / "vertical.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "seed,t,v,H_along");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream s(line);
        std::string seed, t, v, h;
        std::getline(s, seed, ',');
        std::getline(s, t, ',');
        std::getline(s, v, ',');
        std::getline(s, h, ',');
        CHECK(std::stod(v) == 0.0);
    }
    CHECK(rows == 4 * 21);
    CHECK(fs::exists(dir / "trajectory_003.csv"));
    CHECK(fs::exists(dir / "flow_report.txt"));
    CHECK(fs::exists(dir / "config.ini"));
}

TEST_CASE("flow reports second order for a cut-off rotation") {
    const fs::path dir = scratch("flow_rot");
    CHECK(run("flow", {"output.dir=" + dir.string(), "hamiltonian.expr=0.5*(x1^2+x2^2)", "seeds.per_axis=2",
                       "flow.dt=0.02"}) == kExitOk);
    const std::string rep = slurp(dir / "flow_report.txt");
    CHECK(rep.find("verdict = pass") != std::string::npos);
}

TEST_CASE("malformed expression is a config error and writes nothing") {
    const fs::path dir = scratch("bad_expr");
    std::string err;
    CHECK(run("flow", {"output.dir=" + dir.string(), "hamiltonian.expr=x1 + "}, &err) == kExitConfig);
    CHECK(err.find("ParseError") != std::string::npos);
    CHECK_FALSE(fs::exists(dir));
    CHECK(run("flow", {"output.dir=" + dir.string(), "flow.dt=-1"}) == kExitConfig);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("hofer-verify: pass, zero and injected fault") {
    const fs::path dir = scratch("hofer");
    const Overrides base = {"output.dir=" + dir.string(), "hamiltonian.expr=x1^3", "hofer.cells=16", "flow.dt=0.02"};
    CHECK(run("hofer-verify", base) == kExitOk);
    const std::string rep = slurp(dir / "hofer_report.txt");
    CHECK(rep.find("lhs = ") != std::string::npos);
    CHECK(rep.find("slack = ") != std::string::npos);

    Overrides zero = base;
    zero[1] = "hamiltonian.expr=0";
    CHECK(run("hofer-verify", zero) == kExitOk);

    Overrides fault = base;
    fault.push_back("hofer.fault_scale=100");
    CHECK(run("hofer-verify", fault) == kExitViolation);
    CHECK(fs::exists(dir / "hofer_report.txt"));

    Overrides open = base;
    open.push_back("hamiltonian.cutoff=none");
    CHECK(run("hofer-verify", open) == kExitConfig);
}

TEST_CASE("measure on the rotation flow") {
    const fs::path dir = scratch("measure");
    CHECK(run("measure", {"output.dir=" + dir.string(), "hamiltonian.expr=0.5*(x1^2+x2^2)", "hamiltonian.cutoff=none",
                          "support.half_widths=2", "measure.point=1,0"}) == kExitOk);
    const std::string rep = slurp(dir / "measure_report.txt");
    const auto pos = rep.find("dim_slope = ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(rep.substr(pos + 12)) == doctest::Approx(2.0).epsilon(0.075));
    CHECK(slurp(dir / "covering.csv").rfind("eps,count,running_slope\n", 0) == 0);

    const fs::path hdir = scratch("measure_h");
    CHECK(run("measure", {"output.dir=" + hdir.string(), "hamiltonian.expr=0.5*(x1^2+x2^2)", "hamiltonian.cutoff=none",
                          "support.half_widths=2", "measure.point=1,0", "measure.curve=horizontal"}) == kExitOk);
    const std::string hrep = slurp(hdir / "measure_report.txt");
    CHECK(std::stod(hrep.substr(hrep.find("dim_slope = ") + 12)) == doctest::Approx(1.0).epsilon(0.15));

    const fs::path zdir = scratch("measure_zero");
    CHECK(run("measure", {"output.dir=" + zdir.string(), "measure.point=0.3,0.2"}) == kExitOk);
    const std::string zrep = slurp(zdir / "measure_report.txt");
    CHECK(std::abs(std::stod(zrep.substr(zrep.find("dim_slope = ") + 12))) <= 0.15);
}

TEST_CASE("identical runs give byte-identical CSVs") {
    const Overrides base = {"hamiltonian.expr=(1+0.5*sin(3*t))*(x1^2+x1*x2)+x2", "seeds.per_axis=2", "flow.levels=1",
                            "flow.dt=0.02"};
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    Overrides oa = base, ob = base;
    oa.push_back("output.dir=" + a.string());
    ob.push_back("output.dir=" + b.string());
    ob.push_back("run.threads=3");
    REQUIRE(run("flow", oa) == kExitOk);
    REQUIRE(run("flow", ob) == kExitOk);
    for (const char* f : {"trajectory_000.csv", "trajectory_003.csv", "vertical.csv"}) CHECK(slurp(a / f) == slurp(b / f));
}

TEST_CASE("suite command writes a summary for a subset") {
    const SuiteSummary s = run_suite([] {
        SuiteOptions o;
        o.only = {1, 2};
        o.threads = 1;
        return o;
    }());
    REQUIRE(s.results.size() == 2);
    CHECK(s.all_pass());
    std::ostringstream json;
    write_suite_json(json, s, {});
    CHECK(json.str().find("\"criteria\"") != std::string::npos);
    CHECK(format_result(s.results.front()).rfind("PASS [01]", 0) == 0);
}

TEST_CASE("executable exit codes") {
    const fs::path dir = scratch("cli");
    CHECK(shell("flow --out " + dir.string() + " --override seeds.per_axis=1 --override flow.levels=1") == kExitOk);
    CHECK(shell("flow --out " + dir.string() + " --override 'hamiltonian.expr=x1 + '") == kExitConfig);
    CHECK(shell("flow --override flow.dt=0") == kExitConfig);
    CHECK(shell("bogus") == kExitConfig);
    CHECK(shell("flow --config /nonexistent/file.ini") == kExitConfig);
    CHECK(shell("hofer-verify --out " + dir.string() +
                " --override hamiltonian.expr=x1^3 --override hofer.cells=12 --override flow.dt=0.05 --inject-fault 100") ==
          kExitViolation);
    CHECK(shell("hofer-verify --out " + dir.string() +
                " --override hamiltonian.expr=x1^3 --override hofer.cells=12 --override flow.dt=0.05") == kExitOk);

    const fs::path cfg = dir / "run.ini";
    std::ofstream(cfg) << "[hamiltonian]\nexpr = \"0\"\n[seeds]\nper_axis = 1\n[flow]\nlevels = 1\n";
    CHECK(shell("--config " + cfg.string() + " --threads 1 --seed 5 flow --out " + dir.string()) == kExitOk);
    CHECK(slurp(dir / "config.ini").find("seed = 5") != std::string::npos);
}

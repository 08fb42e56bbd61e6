#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "levydiv/cli.hpp"
#include "levydiv/errors.hpp"

using namespace levydiv;
namespace fs = std::filesystem;

namespace {

const char* kBase = R"(# two-sided compound Poisson with drift
[model]
gamma = 1.0
sigma = 0

[jump.up]
rate = 0.5
sign = up
dist = exponential
mean = 1

[jump.down]
rate = 0.5
sign = down
dist = exponential
mean = 1

[params]
q = 0.05
r = 1
beta = 1.5

[sim]
horizon = 30
gridstep = 0.01
n_paths = 200
master_seed = 12345

[task]
a = 1
x = 0.5
x_grid = 0, 0.5, 1
eps = 0.3
n_pairs = 50
)";

std::string with(const std::string& from, const std::string& to) {
    std::string s = kBase;
    const auto p = s.find(from);
    REQUIRE(p != std::string::npos);
    return s.replace(p, from.size(), to);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("levydiv_unit_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("parse_config: full configuration") {
    const RunConfig c = parse_config(kBase);
    CHECK(c.triple.gamma == 1.0);
    CHECK(c.triple.jumps.components.size() == 2);
    CHECK(c.params.beta == 1.5);
    CHECK(c.sim.horizon == 30.0);
    CHECK(c.sim.bridge);
    CHECK(c.n_paths == 200);
    CHECK(c.master_seed == 12345);
    CHECK(c.task.x_grid == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(c.task.eps == doctest::Approx(0.3));
    CHECK(c.task.n_vprime == 200);
}

TEST_CASE("parse_config: errors carry field and line") {
    try {
        parse_config(with("n_paths = 200", "n_paths = 0"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "sim.n_paths");
        CHECK(e.line() == 26);
    }
    CHECK_THROWS_AS(parse_config(with("master_seed = 12345\n", "")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("beta = 1.5", "beta = 1.0")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("q = 0.05", "q = abc")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("[task]", "[tusk]")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("sign = up", "sign = sideways")), ConfigError);
    CHECK_THROWS_AS(parse_config(with("gamma = 1.0", "gamma = 1.0\ndelta = 1.0")), ConfigError);
    // A driftless compound Poisson model is a config error at the model section.
    try {
        parse_config(with("gamma = 1.0", "delta = 0"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "model");
    }
}

TEST_CASE("parse_config: unknown and inapplicable keys are rejected") {
    try {
        parse_config(with("gridstep = 0.01", "gridstpe = 0.01"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "sim.gridstpe");
        CHECK(e.line() == 25);
    }
    try {
        parse_config(with("dist = exponential\nmean = 1", "dist = deterministic\nsize = 1\nmean = 1"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "jump.up.mean");
    }
}

TEST_CASE("parse_config: delta sets the bounded-variation drift") {
    const RunConfig c = parse_config(with("gamma = 1.0", "delta = 0.7"));
    CHECK(*validate_model(c.triple).effective_drift() == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("parse_config: infinite activity needs a truncation level") {
    const std::string sj = "[small_jump]\nc_up = 1\nc_down = 1\nalpha = 1.5\n";
    CHECK_THROWS_AS(parse_config(with("[params]", sj + "\n[params]")), ConfigError);
    const RunConfig c = parse_config(with("[params]", sj + "truncation = 0.01\n\n[params]"));
    const LevyTriple t = simulated_triple(c);
    CHECK(t.sigma > 0.0);
    CHECK(validate_model(t).finite_activity());
}

TEST_CASE("config hash ignores the thread count only") {
    const auto h0 = parse_config(kBase).hash;
    CHECK(parse_config(with("[sim]", "[sim]\nthreads = 8")).hash == h0);
    CHECK(parse_config(with("master_seed = 12345", "master_seed = 12346")).hash != h0);
}

TEST_CASE("run couple with eps = 0: zero violations") {
    const auto dir = scratch("couple0");
    std::ostringstream log, err;
    const RunConfig c = parse_config(with("eps = 0.3", "eps = 0"));
    CHECK(run("couple", c, RunOptions{std::nullopt, dir.string(), std::nullopt}, log, err) == kOk);
    const std::string s = slurp(dir / "coupling_summary.csv");
    CHECK(s.rfind("# levydiv couple config_hash=", 0) == 0);
    std::istringstream is(s);
    std::string meta, header, row;
    std::getline(is, meta);
    std::getline(is, header);
    std::getline(is, row);
    CHECK(header.rfind("n_pairs,tolerance,violation_count,max_violation", 0) == 0);
    CHECK(row.rfind("50,1.0000000000000001e-09,0,0,", 0) == 0);
}

TEST_CASE("run simulate writes the three dumps with metadata") {
    const auto dir = scratch("simulate");
    std::ostringstream log, err;
    const RunConfig c = parse_config(kBase);
    REQUIRE(run("simulate", c, RunOptions{99, dir.string(), std::nullopt}, log, err) == kOk);
    for (const char* f : {"path.csv", "trajectory.csv", "exits.csv"}) {
        const std::string s = slurp(dir / f);
        CAPTURE(f);
        CHECK(s.find("master_seed=99\n") != std::string::npos);
    }
    CHECK(slurp(dir / "path.csv").find("\ntime,kind,X,jumpsize\n") != std::string::npos);
    CHECK(slurp(dir / "trajectory.csv").find("\ntime,U,L,R,event_kind\n") != std::string::npos);
}

TEST_CASE("run value: output schema and thread independence") {
    const RunConfig c = parse_config(kBase);
    std::string first;
    for (unsigned threads : {1u, 3u}) {
        const auto dir = scratch("value" + std::to_string(threads));
        std::ostringstream log, err;
        REQUIRE(run("value", c, RunOptions{std::nullopt, dir.string(), threads}, log, err) == kOk);
        const std::string s = slurp(dir / "value.csv") + slurp(dir / "derivatives.csv");
        CHECK(s.find("\nx,a,mean,stderr,n,truncation_bound\n") != std::string::npos);
        if (first.empty())
            first = s;
        else
            CHECK(s == first);
    }
}

TEST_CASE("run: output directory from the environment, unknown command") {
    const auto dir = scratch("env");
    ::setenv("LEVYDIV_OUT_DIR", dir.string().c_str(), 1);
    std::ostringstream log, err;
    CHECK(run("simulate", parse_config(kBase), RunOptions{}, log, err) == kOk);
    ::unsetenv("LEVYDIV_OUT_DIR");
    CHECK(fs::exists(dir / "path.csv"));
    CHECK(run("frobnicate", parse_config(kBase), RunOptions{std::nullopt, dir.string(), std::nullopt}, log, err) ==
          kFailure);
}

TEST_CASE("run_file: config errors map to exit status 2") {
    const auto dir = scratch("badcfg");
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "bad.ini");
        out << with("n_paths = 200", "n_paths = 0");
    }
    std::ostringstream log, err;
    CHECK(run_file("value", (dir / "bad.ini").string(), RunOptions{}, log, err) == kConfigError);
    CHECK(err.str().find("sim.n_paths") != std::string::npos);
    CHECK(run_file("value", (dir / "missing.ini").string(), RunOptions{}, log, err) == kConfigError);
}

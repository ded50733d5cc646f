#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mfa/run_config.hpp"

namespace fs = std::filesystem;

namespace {

const char* kCli = MFA_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("mfa_cli_test_" + std::to_string(std::rand()) + std::to_string(std::rand()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run(const std::string& args) {
    const std::string cmd = std::string(kCli) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

const char* kDoublingSpectrum = R"({
  "schema_version": 1,
  "map": {"family": "doubling"},
  "potential": {"kind": "digit_indicator", "digit": 1, "depth": 1},
  "solver": {"k": 1, "tol": 1e-6},
  "spectrum": {"alphas": [0.25, 0.5, 0.75]}
})";

const char* kMoranConfig = R"({
  "schema_version": 1,
  "map": {"family": "doubling"},
  "potential": {"kind": "digit_indicator", "digit": 1, "depth": 1},
  "moran": {
    "mode": "block",
    "alpha": [0.25],
    "delta": 0.1,
    "stages": 2,
    "seeds": 4,
    "n_max": 1024,
    "base_measure": {"kind": "bernoulli", "p": [0.25, 0.75]}
  }
})";

}  // namespace

TEST_CASE("config round-trips through serialize/parse") {
    using mfa::RunConfig;
    const RunConfig a = RunConfig::parse(kDoublingSpectrum);
    const RunConfig b = RunConfig::parse(a.serialize());
    CHECK(a.serialize() == b.serialize());
    CHECK_NOTHROW(a.validate());
}

TEST_CASE("config validation failures") {
    using mfa::ConfigError;
    using mfa::RunConfig;
    CHECK_THROWS_AS((void)RunConfig::parse("not json"), ConfigError);
    CHECK_THROWS_AS((void)RunConfig::parse("{\"schema_version\": 2}"), ConfigError);
    const RunConfig bad = RunConfig::parse(
        R"({"schema_version":1,"map":{"family":"nope"},"potential":{"kind":"constant","values":[0]}})");
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("spectrum command writes the documented outputs") {
    TempDir tmp;
    write(tmp.path / "cfg.json", kDoublingSpectrum);
    const int rc = run("spectrum --config " + (tmp.path / "cfg.json").string() + " --out " +
                       (tmp.path / "out").string());
    CHECK(rc == 0);
    const std::string csv = slurp(tmp.path / "out" / "spectrum.csv");
    CHECK(csv.rfind("alpha_1,D,status,s_star,q_1,h,lambda\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // header + 3 rows
    // D(1/2) = 1 for the balanced frequency.
    CHECK(csv.find("0.5,1,interior_solved") != std::string::npos);
    CHECK(fs::exists(tmp.path / "out" / "spectrum.json"));
    CHECK(fs::exists(tmp.path / "out" / "spectrum.plt"));
    CHECK(slurp(tmp.path / "out" / "spectrum.json").find("\"schema_version\": 1") !=
          std::string::npos);
}

TEST_CASE("spectrum runs are byte-identical") {
    TempDir tmp;
    write(tmp.path / "cfg.json", kDoublingSpectrum);
    const std::string base = (tmp.path / "cfg.json").string();
    REQUIRE(run("spectrum --config " + base + " --out " + (tmp.path / "a").string()) == 0);
    REQUIRE(run("spectrum --config " + base + " --out " + (tmp.path / "b").string()) == 0);
    for (const char* name : {"spectrum.csv", "spectrum.json", "spectrum.plt"}) {
        CHECK(slurp(tmp.path / "a" / name) == slurp(tmp.path / "b" / name));
        CHECK_FALSE(slurp(tmp.path / "a" / name).empty());
    }
}

TEST_CASE("moran runs are byte-identical and certify the dimension") {
    TempDir tmp;
    write(tmp.path / "cfg.json", kMoranConfig);
    const std::string base = (tmp.path / "cfg.json").string();
    REQUIRE(run("moran --config " + base + " --out " + (tmp.path / "a").string()) == 0);
    REQUIRE(run("moran --config " + base + " --out " + (tmp.path / "b").string()) == 0);
    for (const char* name : {"schedule.json", "prefixes.txt", "report.csv", "certificate.json"}) {
        CHECK(slurp(tmp.path / "a" / name) == slurp(tmp.path / "b" / name));
        CHECK_FALSE(slurp(tmp.path / "a" / name).empty());
    }
    const std::string cert = slurp(tmp.path / "a" / "certificate.json");
    CHECK(cert.find("\"pass\": true") != std::string::npos);
    const std::string sched = slurp(tmp.path / "a" / "schedule.json");
    CHECK(sched.find("\"validation_ok\": true") != std::string::npos);
}

TEST_CASE("a different seed changes the sampled prefixes") {
    TempDir tmp;
    write(tmp.path / "cfg.json", kMoranConfig);
    const std::string base = (tmp.path / "cfg.json").string();
    REQUIRE(run("moran --config " + base + " --out " + (tmp.path / "a").string()) == 0);
    REQUIRE(run("moran --config " + base + " --seed 99 --out " + (tmp.path / "c").string()) == 0);
    CHECK(slurp(tmp.path / "a" / "prefixes.txt") != slurp(tmp.path / "c" / "prefixes.txt"));
}

TEST_CASE("hull command reports rotation sets and inclusion") {
    TempDir tmp;
    write(tmp.path / "cfg.json", kDoublingSpectrum);
    REQUIRE(run("hull --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "out").string()) == 0);
    const std::string hull = slurp(tmp.path / "out" / "hull.json");
    CHECK(hull.find("\"inclusion\": true") != std::string::npos);
    CHECK(hull.find("\"parabolic_hull\": null") != std::string::npos);
}

TEST_CASE("check command passes on the reference families") {
    TempDir tmp;
    write(tmp.path / "cfg.json", kDoublingSpectrum);
    CHECK(run("check --config " + (tmp.path / "cfg.json").string() + " --out " +
              (tmp.path / "out").string()) == 0);
    CHECK(fs::exists(tmp.path / "out" / "check.csv"));
}

TEST_CASE("exit codes: config and usage errors give 1") {
    TempDir tmp;
    CHECK(run("spectrum --config " + (tmp.path / "missing.json").string()) == 1);
    write(tmp.path / "corrupt.json", "{not json");
    CHECK(run("spectrum --config " + (tmp.path / "corrupt.json").string()) == 1);
    write(tmp.path / "nogrid.json", R"({
      "schema_version": 1,
      "map": {"family": "doubling"},
      "potential": {"kind": "digit_indicator", "digit": 1, "depth": 1},
      "spectrum": {}
    })");
    CHECK(run("spectrum --config " + (tmp.path / "nogrid.json").string() + " --out " +
              (tmp.path / "o1").string()) == 1);
    write(tmp.path / "noseeds.json", R"({
      "schema_version": 1,
      "map": {"family": "doubling"},
      "potential": {"kind": "digit_indicator", "digit": 1, "depth": 1},
      "moran": {"mode": "block", "alpha": [0.25], "stages": 1, "seeds": 0,
                "base_measure": {"kind": "bernoulli", "p": [0.25, 0.75]}}
    })");
    CHECK(run("moran --config " + (tmp.path / "noseeds.json").string() + " --out " +
              (tmp.path / "o2").string()) == 1);
    CHECK(run("bogus-subcommand") == 1);
}

TEST_CASE("exit code 2 for grids with no feasible point") {
    TempDir tmp;
    write(tmp.path / "cfg.json", R"({
      "schema_version": 1,
      "map": {"family": "doubling"},
      "potential": {"kind": "digit_indicator", "digit": 1, "depth": 1},
      "spectrum": {"alphas": [1.5, 2.0]}
    })");
    CHECK(run("spectrum --config " + (tmp.path / "cfg.json").string() + " --out " +
              (tmp.path / "out").string()) == 2);
    const std::string csv = slurp(tmp.path / "out" / "spectrum.csv");
    CHECK(csv.find("infeasible") != std::string::npos);
}

TEST_CASE("grid specification expands linearly") {
    TempDir tmp;
    write(tmp.path / "cfg.json", R"({
      "schema_version": 1,
      "map": {"family": "doubling"},
      "potential": {"kind": "digit_indicator", "digit": 1, "depth": 1},
      "solver": {"k": 1},
      "spectrum": {"grid": {"from": [0.2], "to": [0.8], "count": 5}}
    })");
    REQUIRE(run("spectrum --config " + (tmp.path / "cfg.json").string() + " --out " +
                (tmp.path / "out").string()) == 0);
    const std::string csv = slurp(tmp.path / "out" / "spectrum.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);  // header + 5 rows
    CHECK(csv.find("0.2,") != std::string::npos);
    CHECK(csv.find("0.8,") != std::string::npos);
}

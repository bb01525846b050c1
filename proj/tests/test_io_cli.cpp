#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "snlab/field_io.hpp"
#include "snlab/grid_ops.hpp"

using namespace snlab;
namespace fs = std::filesystem;

namespace {

#ifndef SNLAB_CLI_PATH
#define SNLAB_CLI_PATH ""
#endif

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SNLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path scratch_dir() {
    fs::path dir = fs::temp_directory_path() / "snlab_cli_test";
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("binary field round trip is bit exact") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> gauss(0.0, 2.0);
    GridSpec g(3, 1.7, 8, Boundary::zero_padded);

    RealField rf(g);
    for (auto& v : rf.values) v = gauss(rng);
    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    write_field(buf, rf);
    RealField rf2 = read_real_field(buf);
    CHECK(rf2.grid == g);
    for (std::size_t i = 0; i < rf.size(); ++i) CHECK(rf2.values[i] == rf.values[i]);

    ComplexField cf(g);
    for (auto& v : cf.values) v = complex(gauss(rng), gauss(rng));
    std::stringstream buf2(std::ios::in | std::ios::out | std::ios::binary);
    write_field(buf2, cf);
    ComplexField cf2 = read_complex_field(buf2);
    for (std::size_t i = 0; i < cf.size(); ++i) CHECK(cf2.values[i] == cf.values[i]);

    // kind mismatch is rejected
    std::stringstream buf3(std::ios::in | std::ios::out | std::ios::binary);
    write_field(buf3, rf);
    CHECK_THROWS_AS(read_complex_field(buf3), Error);
}

TEST_CASE("csv export carries the versioned header") {
    GridSpec g(2, 1.0, 4, Boundary::periodic);
    RealField f(g);
    for (std::size_t i = 0; i < f.size(); ++i) f.values[i] = static_cast<double>(i);
    std::ostringstream os;
    write_field_csv(os, f);
    const std::string out = os.str();
    CHECK(out.find("# snlab-field v1, dim=2, n=4, L=1, boundary=periodic") == 0);
    CHECK(out.find("i1,i2,x1,x2,value") != std::string::npos);
    CHECK(out.find("\n3,3,") != std::string::npos);
}

TEST_CASE("cli config validation and exit codes") {
    if (std::string(SNLAB_CLI_PATH).empty()) return;
    const fs::path dir = scratch_dir();

    SUBCASE("missing mass is a config error with exit 2") {
        const fs::path cfgp = dir / "bad.json";
        std::ofstream(cfgp) << R"({
            "grid": {"dim": 3, "extent": 4.0, "points": 8},
            "constants": {"hbar": 1.0, "G": 1.0},
            "scheme": {"dt": 0.01, "steps": 2},
            "initial": {"sigma": 1.0}
        })";
        CHECK(run_cli("solve --config " + cfgp.string() + " --out " + (dir / "o1").string()) == 2);
    }

    SUBCASE("unparseable json is a config error") {
        const fs::path cfgp = dir / "broken.json";
        std::ofstream(cfgp) << "{ not json";
        CHECK(run_cli("solve --config " + cfgp.string() + " --out " + (dir / "o2").string()) == 2);
    }

    SUBCASE("small solve runs, writes artifacts, and is deterministic") {
        const fs::path cfgp = dir / "ok.json";
        std::ofstream(cfgp) << R"({
            "grid": {"dim": 3, "extent": 6.0, "points": 8},
            "constants": {"hbar": 1.0, "G": 2.0, "mass": 1.0},
            "scheme": {"dt": 0.01, "steps": 3},
            "initial": {"sigma": 1.4}
        })";
        const fs::path o1 = dir / "run1", o2 = dir / "run2";
        CHECK(run_cli("solve --config " + cfgp.string() + " --out " + o1.string()) == 0);
        CHECK(run_cli("solve --config " + cfgp.string() + " --out " + o2.string()) == 0);
        for (const char* name : {"summary.json", "trajectory.csv", "psi_final.snf", "U_final.snf"}) {
            CHECK(fs::exists(o1 / name));
            CHECK(slurp(o1 / name) == slurp(o2 / name));
        }
    }

    SUBCASE("group command reports the dynamical exponent") {
        const fs::path cfgp = dir / "group.json";
        std::ofstream(cfgp) << R"({"group": {"dim": 3, "trials": 40}})";
        const fs::path o = dir / "grp";
        CHECK(run_cli("group --config " + cfgp.string() + " --out " + o.string() + " --seed 5") == 0);
        const std::string rep = slurp(o / "group_report.json");
        CHECK(rep.find("\"5/3\"") != std::string::npos);
    }

    SUBCASE("symmetry rejects an element with f != 0 away from dim 4 but continues") {
        const fs::path cfgp = dir / "sym.json";
        std::ofstream(cfgp) << R"({
            "grid": {"dim": 3, "extent": 6.0, "points": 8},
            "constants": {"hbar": 1.0, "G": 2.0, "mass": 1.0},
            "scheme": {"dt": 0.01, "steps": 4},
            "initial": {"sigma": 1.4},
            "elements": [
                {"type": "identity"},
                {"type": "raw", "A": [[1,0,0],[0,1,0],[0,0,1]], "b": [0,0,0], "c": [0,0,0],
                 "d": 1.0, "e": 0.0, "f": 0.1, "g": 1.0, "nu": 1.0}
            ]
        })";
        const fs::path o = dir / "sym";
        CHECK(run_cli("symmetry --config " + cfgp.string() + " --out " + o.string()) == 4);
        const std::string rep = slurp(o / "symmetry_report.json");
        CHECK(rep.find("rejected") != std::string::npos);
        CHECK(rep.find("\"pass\": true") != std::string::npos);   // the identity row
    }
}

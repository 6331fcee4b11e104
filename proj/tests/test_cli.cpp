// test_cli.cpp — End-to-end runs of the simulate binary.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "specdiff/csv.hpp"

using namespace specdiff;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(SIMULATE_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path tmp(const std::string& name) { return fs::temp_directory_path() / name; }

// Numeric payload: every non-metadata line.
std::string payload(const fs::path& path) {
    std::ifstream file(path);
    std::ostringstream out;
    std::string line;
    while (std::getline(file, line))
        if (line.empty() || line[0] != '#') out << line << "\n";
    return out.str();
}

}  // namespace

TEST_CASE("timeseries: noise-free resonance intensity approaches Gamma/3") {
    const fs::path out = tmp("cli_timeseries.csv");
    const int code = run("--mode timeseries --out " + out.string() +
                         " 'run.times=[0.0,25.0,50.0]'");
    REQUIRE(code == 0);
    const Table table = read_csv(out.string());
    REQUIRE(table.rows.size() == 3);
    const auto intensity_col =
        std::distance(table.columns.begin(),
                      std::find(table.columns.begin(), table.columns.end(), "intensity"));
    CHECK(table.rows[2][static_cast<std::size_t>(intensity_col)] ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-3));
    bool has_config_meta = false;
    for (const auto& m : table.meta)
        if (m.rfind("config: ", 0) == 0) has_config_meta = true;
    CHECK(has_config_meta);
    fs::remove(out);
}

TEST_CASE("sweep payload is byte-identical across worker counts") {
    const fs::path out1 = tmp("cli_sweep_w1.csv");
    const fs::path out3 = tmp("cli_sweep_w3.csv");
    const std::string common =
        "--mode sweep --preset rtn-slow-intermediate 'noise.a=0.5' "
        "'run.times=[0.0,10.0]' 'run.detunings={\"min\":-2.0,\"max\":2.0,\"num\":9}' ";
    REQUIRE(run(common + "run.workers=1 --out " + out1.string()) == 0);
    REQUIRE(run(common + "run.workers=3 --out " + out3.string()) == 0);
    CHECK(payload(out1) == payload(out3));
    CHECK(!payload(out1).empty());
    fs::remove(out1);
    fs::remove(out3);
}

TEST_CASE("pmf mode emits a normalized distribution table") {
    const fs::path out = tmp("cli_pmf.csv");
    REQUIRE(run("--mode pmf --out " + out.string() +
                " 'run.times=[0.0,1.0]' run.pmf_n_max=4 system.omega0=0.0") == 0);
    const Table table = read_csv(out.string());
    REQUIRE(table.rows.size() == 2);
    CHECK(table.columns.front() == "time");
    CHECK(table.columns.back() == "sum");
    CHECK(table.rows[0][1] == doctest::Approx(1.0).epsilon(1e-9));   // p0(0) = 1
    CHECK(table.rows[1].back() == doctest::Approx(1.0).epsilon(1e-8));
    fs::remove(out);
}

TEST_CASE("tau mode reproduces the pure-decay waiting time") {
    const fs::path out = tmp("cli_tau.csv");
    REQUIRE(run("--mode tau --out " + out.string() + " system.omega0=0.0 run.tau_t_max=40.0") == 0);
    const Table table = read_csv(out.string());
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0][0] == doctest::Approx(1.0).epsilon(1e-6));
    fs::remove(out);
}

TEST_CASE("validate mode passes on an intermediate telegraph regime") {
    const fs::path out = tmp("cli_validate.json");
    const int code = run("--mode validate --out " + out.string() +
                         " 'noise.kind=\"rtn\"' noise.lambda=1.0 noise.nu=1.0 noise.a=0.5 "
                         "system.delta0=1.0 'run.times=[0.0,1.0,5.0]' run.n_traj=2000 "
                         "run.seed=42");
    CHECK(code == 0);
    std::ifstream file(out);
    std::stringstream buf;
    buf << file.rdbuf();
    CHECK(buf.str().find("\"pass\": true") != std::string::npos);
    fs::remove(out);
}

TEST_CASE("configuration errors exit with status 1") {
    CHECK(run("--mode timeseries noise.kind=\\\"oun\\\" noise.a=2.0") == 1);
    CHECK(run("--mode juggle") == 1);
}

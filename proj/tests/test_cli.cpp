#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string& args)
{
    const std::string cmd = std::string(VMK_CLI_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string config(const std::string& name) { return std::string(VMK_CONFIG_DIR) + "/" + name; }

fs::path scratch(const std::string& name)
{
    fs::path p = fs::temp_directory_path() / ("vmk_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_config(const std::string& name, const std::string& text)
{
    fs::path p = fs::temp_directory_path() / ("vmk_cli_cfg_" + name + ".json");
    std::ofstream(p) << text;
    return p;
}

long count_lines(const std::string& s) { return static_cast<long>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("baseline run writes a strategy profile")
{
    auto out = scratch("baseline");
    auto r = run("quadratic-solve --config " + config("stein_stein_baseline.json") + " --out " + out.string());
    CHECK(r.code == 0);
    const std::string csv = slurp(out / "strategy.csv");
    CHECK(csv.rfind("t,alpha_1,alpha_2,pi_1,pi_2\n", 0) == 0);
    CHECK(count_lines(csv) == 1 + 200);
    CHECK(fs::exists(out / "riccati.csv"));
}

TEST_CASE("malformed config leaves no output")
{
    auto out = scratch("malformed");
    auto r = run("frontier --config " + config("malformed.json") + " --out " + out.string());
    CHECK(r.code == 2);
    CHECK(r.out.find(":6:") != std::string::npos);
    CHECK_FALSE(fs::exists(out));

    auto missing = write_config("missing", R"({"grid": {"T": 1}, "quadratic": {"N": 1, "d": 1, "kernel": {"type": "unit"}}})");
    r = run("quadratic-solve --config " + missing.string() + " --out " + out.string());
    CHECK(r.code == 2);
    CHECK(r.out.find("quadratic.eta") != std::string::npos);
    CHECK_FALSE(fs::exists(out));
}

TEST_CASE("model errors map to exit codes")
{
    auto out = scratch("errors");
    auto leverage = write_config("leverage", R"({"grid": {"T": 1, "n": 20},
        "quadratic": {"N": 1, "d": 1, "kernel": {"type": "unit"}, "eta": 1, "C": [[1.2]], "Theta": [[1]], "g0": 1}})");
    auto r = run("quadratic-solve --config " + leverage.string() + " --out " + out.string());
    CHECK(r.code == 3);
    CHECK_FALSE(fs::exists(out));

    auto blow = write_config("blow", R"({"grid": {"T": 3, "n": 200},
        "quadratic": {"N": 1, "d": 1, "kernel": {"type": "unit"}, "eta": 1, "C": [[-0.9]], "Theta": [[1]], "g0": 1,
                      "allow_indefinite": true}})");
    r = run("quadratic-solve --config " + blow.string() + " --out " + out.string());
    CHECK(r.code == 4);
    CHECK_FALSE(fs::exists(out));

    auto sweep = write_config("sweep", R"({"grid": {"T": 0.5, "n": 20},
        "quadratic": {"preset": "stein_stein"}, "sweep": {"param": "quadratic.nope", "values": [1]}})");
    r = run("sweep --config " + sweep.string() + " --out " + out.string());
    CHECK(r.code == 2);
}

TEST_CASE("reruns are byte-identical")
{
    auto a = scratch("rerun_a"), b = scratch("rerun_b");
    const std::string args = "simulate --config " + config("markov_scalar.json") + " --paths 300 --seed 99 --grid-n 50 --out ";
    REQUIRE(run(args + a.string()).code == 0);
    REQUIRE(run(args + b.string()).code == 0);
    for (const auto* f : {"wealth.csv", "paths.csv"}) {
        CHECK_FALSE(slurp(a / f).empty());
        CHECK(slurp(a / f) == slurp(b / f));
    }
    auto c = scratch("rerun_c");
    REQUIRE(run("simulate --config " + config("markov_scalar.json") + " --paths 300 --seed 100 --grid-n 50 --out " + c.string()).code == 0);
    CHECK(slurp(a / "wealth.csv") != slurp(c / "wealth.csv"));
}

TEST_CASE("sweep row count")
{
    auto out = scratch("sweep");
    auto r = run("sweep --config " + config("eta_sweep.json") + " --grid-n 40 --out " + out.string());
    REQUIRE(r.code == 0);
    CHECK(count_lines(slurp(out / "sweep.csv")) == 1 + 4 * 2 * 40);
    CHECK(count_lines(slurp(out / "sweep_summary.csv")) == 1 + 4);
}

TEST_CASE("sweep over the horizon records blow-ups as NaN rows")
{
    auto cfg = write_config("tsweep", R"({"grid": {"T": 1, "n": 30},
        "quadratic": {"N": 1, "d": 1, "kernel": {"type": "unit"}, "eta": 1, "C": [[-0.9]], "Theta": [[1]], "g0": 1,
                      "allow_indefinite": true},
        "sweep": {"param": "grid.T", "values": [0.2, 3.0]}})");
    auto out = scratch("tsweep");
    auto r = run("sweep --config " + cfg.string() + " --out " + out.string());
    REQUIRE(r.code == 0);
    const std::string csv = slurp(out / "sweep.csv");
    CHECK(count_lines(csv) == 1 + 2 * 1 * 30);
    CHECK(csv.find("grid.T,3.0,1,0,nan,nan") != std::string::npos);
}

TEST_CASE("check on a zero market price of risk")
{
    auto r = run("check --config " + config("theta0_check.json"));
    CHECK(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    int h2 = 0;
    while (std::getline(in, line))
        if (line.rfind("H2", 0) == 0) {
            ++h2;
            CHECK(line.find("PASS") != std::string::npos);
        }
    CHECK(h2 == 2);
    CHECK(r.out.find("degenerate market") != std::string::npos);
}

TEST_CASE("frontier on the scalar Markovian case")
{
    auto out = scratch("frontier");
    auto r = run("frontier --config " + config("markov_scalar.json") + " --out " + out.string());
    REQUIRE(r.code == 0);
    std::istringstream in(slurp(out / "frontier.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "m,std,variance,xi_star,gamma0");
    bool found = false;
    while (std::getline(in, line)) {
        double m, sd, v, xi, g0;
        REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &m, &sd, &v, &xi, &g0) == 5);
        CHECK(sd * sd == doctest::Approx(v));
        if (std::abs(m - 1.1) < 1e-12) {
            found = true;
            CHECK(v == doctest::Approx(g0 * 0.01 / (1 - g0)).epsilon(1e-10));
            CHECK(g0 == doctest::Approx(0.5802).epsilon(1e-3));
        }
    }
    CHECK(found);
}

TEST_CASE("affine pipeline")
{
    auto out = scratch("affine");
    auto r = run("affine-solve --config " + config("affine_heston.json") + " --out " + out.string());
    REQUIRE(r.code == 0);
    CHECK(count_lines(slurp(out / "psi.csv")) == 1 + 201);
    CHECK(count_lines(slurp(out / "strategy.csv")) == 1 + 200);
    r = run("check --config " + config("affine_heston.json"));
    CHECK(r.code == 0);
    CHECK(r.out.find("H1") != std::string::npos);
}

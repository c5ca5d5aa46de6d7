#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "heis/config.hpp"
#include "heis/experiments.hpp"
#include "heis/rng.hpp"
#include "heis/util.hpp"

using namespace heis;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::string& args) {
    const char* bin = std::getenv("HEISMC_BIN");
    REQUIRE(bin != nullptr);
    std::string cmd = std::string(bin) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("config parsing: defaults, kinds, arrays") {
    ExperimentConfig c = parse_config_text(
        "[experiment]\n"
        "kind = \"om-ratio\"\n"
        "seed = 7\n"
        "n_steps = 128\n"
        "n_samples = 1000\n"
        "epsilons = [0.8, 1.0]\n"
        "[curves]\n"
        "phi = \"line 1 0\"\n"
        "psi = \"constant\"\n");
    CHECK(c.kind == ExperimentKind::OmRatio);
    CHECK(c.seed == 7);
    CHECK(c.n_steps == 128);
    CHECK(c.epsilons.size() == 2);
    CHECK(c.phi == "line 1 0");
}

TEST_CASE("config parsing: strictness") {
    SUBCASE("unknown key rejected") {
        CHECK_THROWS_AS(parse_config_text("[experiment]\nkind = \"tube\"\nbogus = 1\n"),
                        ConfigError);
    }
    SUBCASE("unknown section rejected") {
        CHECK_THROWS_AS(parse_config_text("[experiment]\nkind = \"tube\"\n[junk]\na = 1\n"),
                        ConfigError);
    }
    SUBCASE("missing kind rejected") {
        CHECK_THROWS_AS(parse_config_text("[experiment]\nseed = 1\n"), ConfigError);
    }
    SUBCASE("bad kind rejected") {
        CHECK_THROWS_AS(parse_config_text("[experiment]\nkind = \"nope\"\n"), ConfigError);
    }
    SUBCASE("out-of-range values rejected") {
        CHECK_THROWS_AS(
            parse_config_text("[experiment]\nkind = \"tube\"\nn_samples = 0\n"),
            ConfigError);
        CHECK_THROWS_AS(
            parse_config_text("[experiment]\nkind = \"tube\"\n[tube]\nepsilon = -1\n"),
            ConfigError);
        CHECK_THROWS_AS(parse_config_text("[experiment]\nkind = \"om-ratio\"\n"
                                          "epsilons = [0.5, -0.25]\n"),
                        ConfigError);
    }
    SUBCASE("om-ratio requires an epsilon ladder") {
        CHECK_THROWS_AS(parse_config_text("[experiment]\nkind = \"om-ratio\"\n"),
                        ConfigError);
    }
    SUBCASE("duplicate keys rejected") {
        CHECK_THROWS_AS(
            parse_config_text("[experiment]\nkind = \"tube\"\nseed = 1\nseed = 2\n"),
            ConfigError);
    }
    SUBCASE("non-integer integer rejected") {
        CHECK_THROWS_AS(
            parse_config_text("[experiment]\nkind = \"tube\"\nn_steps = 12.5\n"),
            ConfigError);
    }
}

TEST_CASE("curve specs") {
    TimeGrid grid(64);
    HorizontalControl c = parse_curve_spec("line 2 -3", grid);
    CHECK(c.samples[0].x == 2.0);
    CHECK(c.samples[0].y == -3.0);
    CHECK_THROWS_AS(parse_curve_spec("line 1", grid), ConfigError);
    CHECK_THROWS_AS(parse_curve_spec("circle", grid), ConfigError);
    CHECK_THROWS_AS(parse_curve_spec("spiral 1", grid), ConfigError);
    CHECK_THROWS_AS(parse_curve_spec("constant 1", grid), ConfigError);
    HorizontalControl circ = parse_curve_spec("circle 0.5", grid);
    CHECK(energy(circ) == doctest::Approx(M_PI * M_PI).epsilon(1e-12));
}

TEST_CASE("run_experiment: om-ratio writes results, csv, and manifest") {
    fs::path dir = fresh_dir("heis_run_omratio");
    ExperimentConfig c = parse_config_text(
        "[experiment]\n"
        "kind = \"om-ratio\"\n"
        "seed = 5\n"
        "n_steps = 128\n"
        "n_samples = 20000\n"
        "epsilons = [1.0, 1.5]\n"
        "[curves]\n"
        "phi = \"line 1 0\"\n"
        "psi = \"constant\"\n");
    c.output_dir = dir.string();
    RunManifest m = run_experiment(c);
    CHECK(!m.numerical_failure);
    CHECK(fs::exists(dir / "results.json"));
    CHECK(fs::exists(dir / "om_ratio.csv"));
    CHECK(fs::exists(dir / "manifest.json"));

    std::string csv = slurp(dir / "om_ratio.csv");
    CHECK(csv.rfind("epsilon,log_ratio_hat,std_err,theory_log_ratio,", 0) == 0);
    // theory column is -1/2 for the line (1,0) against the constant curve
    CHECK(csv.find("-0.5") != std::string::npos);

    SUBCASE("rerun with the same config and different workers is bitwise identical") {
        fs::path dir2 = fresh_dir("heis_run_omratio2");
        ExperimentConfig c2 = c;
        c2.output_dir = dir2.string();
        c2.workers = 1;
        run_experiment(c2);
        CHECK(sha256_file((dir / "results.json").string()) ==
              sha256_file((dir2 / "results.json").string()));
        CHECK(sha256_file((dir / "om_ratio.csv").string()) ==
              sha256_file((dir2 / "om_ratio.csv").string()));
    }
}

TEST_CASE("run_experiment: geodesic and report") {
    fs::path dir = fresh_dir("heis_run_geo");
    ExperimentConfig c = parse_config_text(
        "[experiment]\n"
        "kind = \"geodesic\"\n"
        "seed = 3\n"
        "[geodesic]\n"
        "target = [3.0, 4.0, 0.0]\n"
        "grid_steps = 96\n"
        "multistarts = 3\n"
        "max_iters = 300\n");
    c.output_dir = dir.string();
    RunManifest m = run_experiment(c);
    CHECK(!m.numerical_failure);
    CHECK(fs::exists(dir / "geodesic_path.csv"));
    std::string rep = emit_report((dir / "manifest.json").string());
    CHECK(rep.find("distance=") != std::string::npos);
    CHECK(rep.find("converged=yes") != std::string::npos);
}

TEST_CASE("run_experiment: zero-hit tube flags a numerical failure") {
    fs::path dir = fresh_dir("heis_run_tube0");
    ExperimentConfig c = parse_config_text(
        "[experiment]\n"
        "kind = \"tube\"\n"
        "seed = 1\n"
        "n_steps = 128\n"
        "n_samples = 500\n"
        "[curves]\n"
        "phi = \"constant\"\n"
        "[tube]\n"
        "epsilon = 0.01\n"
        "method = \"naive\"\n");
    c.output_dir = dir.string();
    RunManifest m = run_experiment(c);
    CHECK(m.numerical_failure);
    CHECK(m.failure_note.find("zero hits") != std::string::npos);
}

TEST_CASE("validate_suite: fast level passes on a fresh build") {
    ValidationReport rep = validate_suite("fast", 12345, 0);
    for (const auto& c : rep.checks) {
        INFO(c.name, " observed=", c.observed, " tol=", c.tolerance);
        CHECK(c.pass);
    }
    CHECK(rep.passed);
    // per-check seeds are recorded so failures can replay in isolation
    for (const auto& c : rep.checks) CHECK(c.seed_root == 12345);
}

TEST_CASE("mutation canary: dropping the 1/2 in omega still associates but breaks "
          "the Maurer-Cartan relation") {
    // a deliberately wrong group law: z-term omega instead of omega/2
    auto bad_multiply = [](const GroupElement& a, const GroupElement& b) {
        return GroupElement{a.x + b.x, a.y + b.y,
                            a.z + b.z + omega(a.planar(), b.planar())};
    };
    Rng rng({777, 0});
    double assoc = 0.0, mclr = 0.0;
    for (int i = 0; i < 2000; ++i) {
        GroupElement g1{rng.uniform_sym(), rng.uniform_sym(), rng.uniform_sym()};
        GroupElement g2{rng.uniform_sym(), rng.uniform_sym(), rng.uniform_sym()};
        GroupElement g3{rng.uniform_sym(), rng.uniform_sym(), rng.uniform_sym()};
        GroupElement l = bad_multiply(bad_multiply(g1, g2), g3);
        GroupElement r = bad_multiply(g1, bad_multiply(g2, g3));
        assoc = std::max({assoc, std::fabs(l.x - r.x), std::fabs(l.y - r.y),
                          std::fabs(l.z - r.z)});
        // the relation theta^r = Ad_{k^{-1}} theta^l written with the mutated
        // adjoint Ad_k(h) = (a, b, c + 2 omega(a, k)) no longer matches the
        // true right form
        TangentVector v{g1, 1.0, 0.5, 0.25};
        AlgebraVector right = maurer_cartan(Side::Right, g2, v);
        AlgebraVector lft = maurer_cartan(Side::Left, g2, v);
        AlgebraVector mutated{lft.a, lft.b,
                              lft.c + 2.0 * omega(lft.a, lft.b, -g2.x, -g2.y)};
        mclr = std::max(mclr, std::fabs(mutated.c - right.c));
    }
    CHECK(assoc <= 1e-12);  // associativity alone cannot catch the mutation
    CHECK(mclr > 1e-3);     // the Maurer-Cartan relation does
}

TEST_CASE("cli binary: exit codes and reproducibility") {
    const char* bin = std::getenv("HEISMC_BIN");
    if (!bin) return;  // only meaningful under ctest

    fs::path dir = fresh_dir("heis_cli");
    fs::path cfg = dir / "exp.toml";
    {
        std::ofstream out(cfg);
        out << "[experiment]\nkind = \"tube\"\nseed = 9\nn_steps = 128\n"
               "n_samples = 5000\n[curves]\nphi = \"constant\"\n"
               "[tube]\nepsilon = 1.0\nmethod = \"importance\"\ndump_path = true\n";
    }
    fs::path out1 = dir / "o1";
    fs::path out2 = dir / "o2";
    CHECK(run_cli("run " + cfg.string() + " --out " + out1.string()) == 0);
    CHECK(run_cli("run " + cfg.string() + " --out " + out2.string()) == 0);
    CHECK(slurp(out1 / "results.json") == slurp(out2 / "results.json"));
    CHECK(slurp(out1 / "tube.csv") == slurp(out2 / "tube.csv"));
    CHECK(fs::exists(out1 / "sample_path.csv"));
    std::string dump = slurp(out1 / "sample_path.csv");
    CHECK(dump.rfind("t,W1,W2,x,y,z", 0) == 0);

    SUBCASE("config errors exit 2") {
        fs::path bad = dir / "bad.toml";
        std::ofstream(bad) << "[experiment]\nkind = \"tube\"\nznork = 3\n";
        CHECK(run_cli("run " + bad.string()) == 2);
        CHECK(run_cli("run " + (dir / "missing.toml").string()) == 2);
    }
    SUBCASE("numerical failures exit 1") {
        fs::path zh = dir / "zerohit.toml";
        std::ofstream(zh) << "[experiment]\nkind = \"tube\"\nseed = 1\nn_steps = 64\n"
                             "n_samples = 200\n[tube]\nepsilon = 0.01\n";
        CHECK(run_cli("run " + zh.string() + " --out " + (dir / "o3").string()) == 1);
    }
    SUBCASE("report subcommand reads a manifest") {
        CHECK(run_cli("report " + (out1 / "manifest.json").string()) == 0);
    }
}

TEST_SUITE_END();

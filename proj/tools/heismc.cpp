// heismc: reproducible experiment runner for the Heisenberg-group Monte
// Carlo toolkit. Subcommands: run <config>, validate [--full], report
// <manifest>. Exit codes: 0 success, 1 numerical failure, 2 config error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "heis/config.hpp"
#include "heis/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo and variational tools for the sub-Riemannian Heisenberg group"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", config_path, "TOML-style config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides config and $HEISMC_OUT)");

    bool full = false;
    std::uint64_t vseed = 0;
    int vworkers = 0;
    auto* validate = app.add_subcommand("validate", "run the invariant suite");
    validate->add_flag("--full", full, "include the statistical oracles (slow)");
    validate->add_option("--seed", vseed, "root seed for randomized checks");
    validate->add_option("--workers", vworkers, "worker threads (0 = hardware)");

    std::string manifest_path;
    auto* report = app.add_subcommand("report", "summarize a completed run");
    report->add_option("manifest", manifest_path, "manifest.json of a run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) {
            heis::ExperimentConfig cfg = heis::parse_config_file(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            heis::RunManifest m = heis::run_experiment(cfg);
            std::cout << heis::emit_report(m.manifest_path);
            std::cout << "manifest: " << m.manifest_path << "\n";
            if (m.numerical_failure) {
                std::cerr << "numerical failure: " << m.failure_note << "\n";
                return 1;
            }
            return 0;
        }
        if (validate->parsed()) {
            heis::ValidationReport rep =
                heis::validate_suite(full ? "full" : "fast", vseed, vworkers);
            for (const auto& c : rep.checks) {
                std::printf("%-38s observed %12.4e  tol %10.4e  %s\n", c.name.c_str(),
                            std::fabs(c.observed - c.expected), c.tolerance,
                            c.pass ? "PASS" : "FAIL");
            }
            std::printf("%s\n", rep.passed ? "all checks passed" : "FAILURES present");
            return rep.passed ? 0 : 1;
        }
        if (report->parsed()) {
            std::cout << heis::emit_report(manifest_path);
            return 0;
        }
    } catch (const heis::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

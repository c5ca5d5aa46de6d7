#pragma once

// Reproducible experiment runner: dispatches a parsed config, writes JSON
// results plus CSV plot data, and records a manifest with content hashes.
// Result files are a pure function of (config, seed); wall-clock time lives
// only in the manifest so reruns stay bitwise identical.

#include <string>
#include <vector>

#include "heis/config.hpp"

namespace heis {

inline constexpr const char* kArtifactVersion = "heismc 0.1.0";

struct ManifestFile {
    std::string name;
    std::string sha256;
    std::uint64_t bytes = 0;
};

struct RunManifest {
    std::string artifact = kArtifactVersion;
    std::string kind;
    double wall_clock_sec = 0.0;
    std::vector<ManifestFile> files;
    std::string manifest_path;
    bool numerical_failure = false;  // zero hits, non-convergence, failed checks
    std::string failure_note;
};

struct CheckResult {
    std::string name;
    double observed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::uint64_t seed_root = 0;
    std::uint64_t seed_stream = 0;
};

struct ValidationReport {
    std::string level;
    std::vector<CheckResult> checks;
    bool passed = false;
};

// level: "fast" (algebraic + round-trip + gradient, well under a minute) or
// "full" (adds the statistical oracles at acceptance-scale sample sizes)
ValidationReport validate_suite(const std::string& level, std::uint64_t seed,
                                int workers);

RunManifest run_experiment(const ExperimentConfig& config);

// human-readable tables for a completed run; throws on missing files
std::string emit_report(const std::string& manifest_path);

}  // namespace heis

#pragma once

// Experiment configuration: a small strict TOML-style file (sections,
// key = value, numbers / quoted strings / numeric arrays / booleans).
// Unknown sections or keys are errors, never warnings, and out-of-range
// values are rejected at parse time.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "heis/grid.hpp"
#include "heis/group.hpp"
#include "heis/paths.hpp"

namespace heis {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { Validate, Tube, OmRatio, Conditional, Geodesic, Equivalence };

std::string to_string(ExperimentKind k);

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Validate;

    // [experiment]
    std::uint64_t seed = 0;
    int n_steps = 1024;
    std::int64_t n_samples = 100000;
    std::vector<double> epsilons;  // ladder for om-ratio / conditional
    int workers = 0;               // 0 = hardware concurrency
    std::string output_dir;        // empty: $HEISMC_OUT or "./out"

    // [curves]  presets: "constant" | "line a b" | "circle r" | "csv <file>"
    std::string phi = "constant";
    std::string psi = "constant";
    std::string gamma = "constant";

    // [tube]
    double tube_epsilon = 0.5;
    std::string tube_method = "importance";  // "naive" | "importance"
    bool tube_dump = false;  // audit dump of the first sampled path

    // [validate]
    std::string validate_level = "fast";  // "fast" | "full"

    // [geodesic]
    GroupElement target{0.0, 0.0, 0.0};
    int geo_grid = 256;
    int multistarts = 8;
    double mu0 = 100.0;
    int mu_stages = 4;
    int max_iters = 600;
    double geo_tolerance = 1e-3;

    // [equivalence]
    int eq_points = 200;
    double eq_box = 2.0;

    std::string raw;  // original file text, echoed into the manifest
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// named curve presets / CSV controls on a given grid
HorizontalControl parse_curve_spec(const std::string& spec, TimeGrid grid);

}  // namespace heis

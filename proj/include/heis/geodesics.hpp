#pragma once

// Variational Carnot-Caratheodory solver: minimize the discrete energy
// sum |c_i|^2 dt over controls with a quadratic endpoint penalty
//   F(c) = energy(c) + mu * |lift(c)(1) - target|^2   (componentwise square),
// mu raised on a x10 ladder. No closed-form geodesics are wired in; analytic
// values appear only in tests as oracles.

#include <cstdint>
#include <optional>
#include <vector>

#include "heis/grid.hpp"
#include "heis/group.hpp"
#include "heis/paths.hpp"
#include "heis/rng.hpp"

namespace heis {

struct GeodesicOptions {
    TimeGrid grid{256};
    double mu0 = 100.0;       // initial penalty weight
    double mu_factor = 10.0;  // ladder ratio
    int mu_stages = 4;
    int max_iters = 600;      // per stage
    double grad_tol = 1e-10;  // scaled gradient infinity-norm stop
    double tolerance = 1e-3;  // endpoint error (homogeneous distance) for success
    int multistarts = 8;
    Seed seed{0x9e3779b9ULL, 0};
    int workers = 0;
};

struct GeodesicResult {
    HorizontalPath path;
    double energy = 0.0;
    double length = 0.0;          // sqrt(energy) of the constant-speed minimizer
    double endpoint_error = 0.0;  // homogeneous distance from endpoint to target
    bool converged = false;
    std::int64_t iterations = 0;  // over all stages of the winning start
    double om_integral = 0.0;     // -energy/2
    std::vector<double> objective_trace;  // winning start, all stages
    std::vector<int> stage_offsets;       // index into the trace per mu stage
};

struct EquivalenceEstimate {
    double c_hat = 0.0;  // min over pairs of d_cc / rho
    double big_c_hat = 0.0;  // max
    int n_used = 0;
    int n_failed = 0;     // non-converged geodesics, excluded
    int n_degenerate = 0; // coincident pairs, skipped
    std::vector<double> ratios;  // per usable pair, for plotting
};

// penalized objective and its analytic gradient; controls packed (c1,c2) per cell
double cc_objective(const std::vector<double>& control, const GroupElement& target,
                    double mu, const TimeGrid& grid);
std::vector<double> cc_objective_gradient(const std::vector<double>& control,
                                          const GroupElement& target, double mu,
                                          const TimeGrid& grid);

GeodesicResult cc_distance(const GroupElement& g1, const GroupElement& g2,
                           const GeodesicOptions& opts = {});

// same minimizer, exposed as the maximizer of the integrated Lagrangian
// -|v|^2/2; no target means the free problem whose optimum is rest at e
GeodesicResult most_probable_path(const std::optional<GroupElement>& target,
                                  const GeodesicOptions& opts = {});

// empirical d_cc / rho over random pairs in the box |x|,|y| <= box,
// |z| <= box^2; pairs are dilation-normalized to N = 1 before solving
EquivalenceEstimate equivalence_constants(int n_points, double box, Seed seed,
                                          const GeodesicOptions& opts = {});

}  // namespace heis

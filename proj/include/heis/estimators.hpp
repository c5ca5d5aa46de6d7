#pragma once

// Monte Carlo estimation of small-tube probabilities around horizontal
// curves, their ratios, and conditional stochastic-exponential limits.
//
// The tube event for a curve phi is
//   { max over grid nodes of rho(u^phi_i, e) < epsilon },
// with u^phi = phi^{-1} g the diffusion seen from the moving frame of phi.
// By left-invariance this equals the epsilon-tube event around phi itself.
//
// Two estimators:
//   naive       sample the driving noise directly, count hits
//   importance  shift the noise by phi (Cameron-Martin) and reweight;
//               unbiased for the same discrete-grid probability
//
// Sampling is chunked on fixed-size blocks with one RNG substream per chunk,
// and chunk statistics merge in index order, so results are bitwise
// reproducible for a given (seed, grid, n_samples) no matter how many
// workers run.

#include <cstdint>
#include <string>
#include <vector>

#include "heis/paths.hpp"
#include "heis/rng.hpp"
#include "heis/stochastics.hpp"

namespace heis {

enum class TubeMethod { Naive, Importance };

struct TubeQuery {
    HorizontalPath curve;
    double epsilon = 1.0;
    std::int64_t n_samples = 1;
    Seed seed;
    TubeMethod method = TubeMethod::Importance;
    int workers = 0;  // <= 0: hardware concurrency
};

struct TubeEstimate {
    double p_hat = 0.0;
    double std_err = 0.0;
    std::int64_t hits = 0;
    double ess = 0.0;  // Kish effective sample size; equals n for naive
    // query echo
    double epsilon = 0.0;
    std::int64_t n_samples = 0;
    int n_steps = 0;
    Seed seed;
    TubeMethod method = TubeMethod::Naive;
};

struct RatioEstimate {
    double epsilon = 0.0;
    double log_ratio_hat = 0.0;
    double std_err = 0.0;          // delta method with shared-sample covariance
    double theory_log_ratio = 0.0; // -energy(phi)/2 + energy(psi)/2
    TubeEstimate phi_estimate;
    TubeEstimate psi_estimate;
    bool failed = false;           // zero hits on either side
    std::string failure;
};

struct ConditionalEstimate {
    double epsilon = 0.0;
    double estimate = 0.0;
    double std_err = 0.0;   // delta method for the ratio estimator
    double theory = 0.0;    // exp(<gamma,phi> - |gamma|^2/2)
    std::int64_t hits = 0;
    std::int64_t n_samples = 0;
    Seed seed;
    bool failed = false;
    std::string failure;
};

struct Lemma44Result {
    std::int64_t requested = 0;
    std::int64_t conditioned_u = 0;  // paths with sup rho(u^psi, e) < eps
    std::int64_t conditioned_z = 0;  // paths with sup rho(z, e)     < eps
    std::int64_t violations_u_to_z = 0;
    std::int64_t violations_z_to_u = 0;
    std::int64_t attempts = 0;
    double c_gamma = 0.0;
    double bound = 0.0;  // 3 eps^2 + eps C_gamma
};

TubeEstimate tube_probability(const TubeQuery& q);

// shared-sample ladder: one pass over the noise serves every epsilon, so
// estimates are monotone in epsilon path by path
std::vector<TubeEstimate> tube_probability_ladder(const HorizontalPath& curve,
                                                  TubeMethod method,
                                                  const std::vector<double>& epsilons,
                                                  std::int64_t n_samples, Seed seed,
                                                  int workers = 0);

// log p_phi(eps) - log p_psi(eps) with importance sampling on both sides and
// common random numbers; theory value recomputed from energies
std::vector<RatioEstimate> om_ratio(const HorizontalPath& phi,
                                    const HorizontalPath& psi,
                                    const std::vector<double>& epsilons,
                                    std::int64_t n_samples, Seed seed,
                                    int workers = 0);

// E[ E^gamma_1 | sup rho(u^phi, e) < eps ] via the importance-sampled ratio
// estimator; epsilon may be infinity (unconditional martingale mean)
ConditionalEstimate conditional_exponential(const HorizontalPath& gamma,
                                            const HorizontalPath& phi,
                                            double epsilon, std::int64_t n_samples,
                                            Seed seed, int workers = 0);

std::vector<ConditionalEstimate> conditional_exponential_ladder(
    const HorizontalPath& gamma, const HorizontalPath& phi,
    const std::vector<double>& epsilons, std::int64_t n_samples, Seed seed,
    int workers = 0);

// Pathwise check of the two-sided bound rho^2 < 3 eps^2 + eps C_gamma on
// ensembles conditioned to the sup-tube event. Direct sampling cannot reach
// the conditioning event at small eps (its probability decays like
// exp(-j_{0,1}^2 / (2 eps^2))), so conditioned paths are generated
// constructively: the driving noise is psi_planar plus a Brownian path
// dilated into the epsilon-ball, then rejection handles the area component.
// The bound is a deterministic implication, so any ensemble inside the
// conditioning event exercises it.
Lemma44Result lemma44_check(const HorizontalPath& psi, const HorizontalPath& phi,
                            double epsilon, std::int64_t n_conditioned, Seed seed,
                            int workers = 0);

}  // namespace heis

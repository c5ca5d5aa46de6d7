#pragma once

// Driving noise, the hypoelliptic Brownian motion g_t = (W_t, Levy area),
// the shifted processes u^xi and z, stochastic exponentials and the
// Cameron-Martin-Girsanov change of measure.
//
// All stochastic integrals are left-point (Ito) sums on the uniform grid;
// for the area term Ito and Stratonovich coincide because omega is
// skew-symmetric.

#include <cstdint>
#include <vector>

#include "heis/grid.hpp"
#include "heis/group.hpp"
#include "heis/paths.hpp"
#include "heis/rng.hpp"

namespace heis {

// increments of a 2-d Brownian motion plus their running sums
struct NoisePath {
    TimeGrid grid;
    std::vector<Vec2> increments;  // n, each N(0, dt I) under the root measure
    std::vector<Vec2> cumulative;  // n+1, W_0 = 0, exact prefix sums
    Seed seed;                     // provenance (zeroed for derived paths)

    NoisePath() : grid(1), increments(1), cumulative(2) {}
};

// Heisenberg-valued diffusion g_i = (W_i, A_i)
struct DiffusionPath {
    TimeGrid grid;
    std::vector<GroupElement> points;  // n+1, g_0 = e
    NoisePath driving;

    DiffusionPath() : grid(1) {}
};

// X and its Doleans-Dade exponential exp(X - <X>/2)
struct StochasticExponential {
    double integral = 0.0;     // X = sum <c_gamma, dW>
    double exponential = 1.0;  // exp(X - energy(gamma)/2)
};

// shifted noise W + gamma_planar and the Radon-Nikodym factor that maps
// weighted averages over shifted paths back to root-measure expectations
struct ShiftedNoise {
    NoisePath shifted;
    double weight = 1.0;  // exp(-sum <c_gamma, dW> - energy(gamma)/2)
};

// deterministic given (grid, seed); increments i.i.d. N(0, dt) per component
NoisePath sample_noise(TimeGrid grid, Seed seed);

// rebuild a NoisePath from given increments (sums recomputed exactly)
NoisePath noise_from_increments(TimeGrid grid, std::vector<Vec2> increments);

// left-point Ito sum (1/2) sum_{j<upto} omega(W_j, dW_j)
double levy_area(const NoisePath& noise, int upto);
// all nodes at once, O(n)
std::vector<double> levy_area_path(const NoisePath& noise);

// g_i = (W_i, levy_area(i)); horizontal components equal W bitwise
DiffusionPath heis_bm(const NoisePath& noise);

// u_i = xi_i^{-1} g_i by exact group operations; xi_0 must be e
GroupPath u_process(const GroupPath& xi, const DiffusionPath& g);
GroupPath u_process(const HorizontalPath& xi, const DiffusionPath& g);

// z has the planar part of u^psi and
//   z_3(t_i) = u3^psi(t_i) + sum_{j<i} omega(u^psi_j, c_gamma(j)) dt
// with gamma = correction_curve(phi, psi)
GroupPath z_process(const HorizontalPath& psi, const HorizontalPath& phi,
                    const NoisePath& noise);

StochasticExponential stochastic_exponential(const HorizontalPath& gamma,
                                             const NoisePath& noise);

ShiftedNoise cameron_martin_shift(const HorizontalPath& gamma,
                                  const NoisePath& noise);

}  // namespace heis

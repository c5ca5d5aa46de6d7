#include "heis/stochastics.hpp"

#include <cmath>
#include <stdexcept>

namespace heis {

namespace {

void rebuild_cumulative(NoisePath& n) {
    n.cumulative.resize(n.grid.n_nodes());
    n.cumulative[0] = {0.0, 0.0};
    for (int i = 0; i < n.grid.n_steps; ++i)
        n.cumulative[i + 1] = n.cumulative[i] + n.increments[i];
}

}  // namespace

NoisePath sample_noise(TimeGrid grid, Seed seed) {
    NoisePath out;
    out.grid = grid;
    out.seed = seed;
    out.increments.resize(grid.n_steps);
    Rng rng(seed);
    const double s = std::sqrt(grid.dt());
    for (int i = 0; i < grid.n_steps; ++i) {
        double g1 = rng.gaussian();
        double g2 = rng.gaussian();
        out.increments[i] = {s * g1, s * g2};
    }
    rebuild_cumulative(out);
    return out;
}

NoisePath noise_from_increments(TimeGrid grid, std::vector<Vec2> increments) {
    if (static_cast<int>(increments.size()) != grid.n_steps)
        throw std::invalid_argument("noise_from_increments: need one increment per cell");
    NoisePath out;
    out.grid = grid;
    out.seed = Seed{0, 0};
    out.increments = std::move(increments);
    rebuild_cumulative(out);
    return out;
}

double levy_area(const NoisePath& noise, int upto) {
    if (upto < 0 || upto > noise.grid.n_steps)
        throw std::invalid_argument("levy_area: node index out of range");
    double a = 0.0;
    for (int j = 0; j < upto; ++j)
        a += 0.5 * omega(noise.cumulative[j], noise.increments[j]);
    return a;
}

std::vector<double> levy_area_path(const NoisePath& noise) {
    std::vector<double> a(noise.grid.n_nodes());
    a[0] = 0.0;
    for (int j = 0; j < noise.grid.n_steps; ++j)
        a[j + 1] = a[j] + 0.5 * omega(noise.cumulative[j], noise.increments[j]);
    return a;
}

DiffusionPath heis_bm(const NoisePath& noise) {
    DiffusionPath g;
    g.grid = noise.grid;
    g.driving = noise;
    g.points.resize(noise.grid.n_nodes());
    std::vector<double> area = levy_area_path(noise);
    for (int i = 0; i < noise.grid.n_nodes(); ++i)
        g.points[i] = {noise.cumulative[i].x, noise.cumulative[i].y, area[i]};
    return g;
}

GroupPath u_process(const GroupPath& xi, const DiffusionPath& g) {
    require_same_grid(xi.grid, g.grid, "u_process");
    if (homogeneous_norm(xi.points.front()) != 0.0)
        throw std::invalid_argument("u_process: xi must start at the identity");
    GroupPath u;
    u.grid = xi.grid;
    u.points.resize(xi.grid.n_nodes());
    for (int i = 0; i < xi.grid.n_nodes(); ++i)
        u.points[i] = multiply(inverse(xi.points[i]), g.points[i]);
    return u;
}

GroupPath u_process(const HorizontalPath& xi, const DiffusionPath& g) {
    return u_process(xi.as_group_path(), g);
}

GroupPath z_process(const HorizontalPath& psi, const HorizontalPath& phi,
                    const NoisePath& noise) {
    require_same_grid(psi.grid, phi.grid, "z_process");
    require_same_grid(psi.grid, noise.grid, "z_process");
    GroupPath u = u_process(psi, heis_bm(noise));
    HorizontalPath gamma = correction_curve(phi, psi);
    const double dt = noise.grid.dt();
    GroupPath z;
    z.grid = noise.grid;
    z.points.resize(noise.grid.n_nodes());
    double corr = 0.0;
    z.points[0] = u.points[0];
    for (int i = 0; i < noise.grid.n_steps; ++i) {
        corr += omega(u.points[i].planar(), gamma.control.samples[i]) * dt;
        const GroupElement& ui = u.points[i + 1];
        z.points[i + 1] = {ui.x, ui.y, ui.z + corr};
    }
    return z;
}

StochasticExponential stochastic_exponential(const HorizontalPath& gamma,
                                             const NoisePath& noise) {
    require_same_grid(gamma.grid, noise.grid, "stochastic_exponential");
    double x = 0.0;
    for (int j = 0; j < noise.grid.n_steps; ++j)
        x += dot(gamma.control.samples[j], noise.increments[j]);
    StochasticExponential out;
    out.integral = x;
    out.exponential = std::exp(x - 0.5 * energy(gamma));
    return out;
}

ShiftedNoise cameron_martin_shift(const HorizontalPath& gamma,
                                  const NoisePath& noise) {
    require_same_grid(gamma.grid, noise.grid, "cameron_martin_shift");
    const double dt = noise.grid.dt();
    ShiftedNoise out;
    out.shifted.grid = noise.grid;
    out.shifted.seed = noise.seed;
    out.shifted.increments.resize(noise.grid.n_steps);
    double x = 0.0;
    for (int j = 0; j < noise.grid.n_steps; ++j) {
        const Vec2& c = gamma.control.samples[j];
        x += dot(c, noise.increments[j]);
        out.shifted.increments[j] = noise.increments[j] + dt * c;
    }
    out.weight = std::exp(-x - 0.5 * energy(gamma));
    out.shifted.cumulative.resize(noise.grid.n_nodes());
    out.shifted.cumulative[0] = {0.0, 0.0};
    for (int i = 0; i < noise.grid.n_steps; ++i)
        out.shifted.cumulative[i + 1] =
            out.shifted.cumulative[i] + out.shifted.increments[i];
    return out;
}

}  // namespace heis

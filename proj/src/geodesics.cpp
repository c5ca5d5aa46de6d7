#include "heis/geodesics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "heis/util.hpp"

namespace heis {

namespace {

struct Endpoint {
    double x, y, z;
};

// forward pass: endpoint of the lift of the packed control
Endpoint lift_endpoint(const std::vector<double>& c, const TimeGrid& grid,
                       std::vector<Vec2>* nodes_out = nullptr) {
    const int n = grid.n_steps;
    const double dt = grid.dt();
    double x = 0.0, y = 0.0, z = 0.0;
    if (nodes_out) {
        nodes_out->resize(n + 1);
        (*nodes_out)[0] = {0.0, 0.0};
    }
    for (int j = 0; j < n; ++j) {
        double c1 = c[2 * j], c2 = c[2 * j + 1];
        z += 0.5 * (x * c2 - c1 * y) * dt;
        x += c1 * dt;
        y += c2 * dt;
        if (nodes_out) (*nodes_out)[j + 1] = {x, y};
    }
    return {x, y, z};
}

double control_energy(const std::vector<double>& c, double dt) {
    double e = 0.0;
    for (double v : c) e += v * v;
    return e * dt;
}

}  // namespace

double cc_objective(const std::vector<double>& control, const GroupElement& target,
                    double mu, const TimeGrid& grid) {
    Endpoint p = lift_endpoint(control, grid);
    double gx = p.x - target.x, gy = p.y - target.y, gz = p.z - target.z;
    return control_energy(control, grid.dt()) + mu * (gx * gx + gy * gy + gz * gz);
}

std::vector<double> cc_objective_gradient(const std::vector<double>& control,
                                          const GroupElement& target, double mu,
                                          const TimeGrid& grid) {
    const int n = grid.n_steps;
    const double dt = grid.dt();
    std::vector<Vec2> nodes;
    Endpoint p = lift_endpoint(control, grid, &nodes);
    double gx = p.x - target.x, gy = p.y - target.y, gz = p.z - target.z;
    std::vector<double> grad(2 * n);
    for (int j = 0; j < n; ++j) {
        // d z_N / d c_j = (dt/2) * (omega(x_j, e_a) + omega(e_a, x_N - x_{j+1}))
        double sx = nodes[n].x - nodes[j + 1].x;
        double sy = nodes[n].y - nodes[j + 1].y;
        double dz1 = 0.5 * dt * (-nodes[j].y + sy);
        double dz2 = 0.5 * dt * (nodes[j].x - sx);
        grad[2 * j] = 2.0 * dt * control[2 * j] + mu * (2.0 * gx * dt + 2.0 * gz * dz1);
        grad[2 * j + 1] =
            2.0 * dt * control[2 * j + 1] + mu * (2.0 * gy * dt + 2.0 * gz * dz2);
    }
    return grad;
}

namespace {

struct StageTrace {
    std::vector<double> values;
    std::vector<int> offsets;
    std::int64_t iterations = 0;
};

// gradient descent with a Barzilai-Borwein trial step and Armijo backtracking;
// the recorded objective is non-increasing within each stage by construction
void minimize_stage(std::vector<double>& c, const GroupElement& target, double mu,
                    const TimeGrid& grid, int max_iters, double grad_tol,
                    StageTrace& trace) {
    const std::size_t dim = c.size();
    double f = cc_objective(c, target, mu, grid);
    std::vector<double> g = cc_objective_gradient(c, target, mu, grid);
    trace.offsets.push_back(static_cast<int>(trace.values.size()));
    trace.values.push_back(f);
    std::vector<double> c_prev, g_prev, trial(dim);
    double t_last = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        double gmax = 0.0;
        for (double v : g) gmax = std::max(gmax, std::fabs(v));
        if (gmax <= grad_tol * (1.0 + std::fabs(f))) break;

        // Barzilai-Borwein trial step, safeguarded by the last accepted step
        double step = 0.0;
        if (!c_prev.empty()) {
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < dim; ++i) {
                double dc = c[i] - c_prev[i];
                double dg = g[i] - g_prev[i];
                num += dc * dc;
                den += dc * dg;
            }
            if (den > 0.0) step = num / den;
        }
        if (step <= 0.0) step = t_last > 0.0 ? 2.0 * t_last : 0.0;
        if (step <= 0.0) {
            double gnorm2 = 0.0;
            for (double v : g) gnorm2 += v * v;
            step = 0.1 * (1.0 + std::sqrt(control_energy(c, grid.dt()))) /
                   (std::sqrt(gnorm2) + 1e-30);
        }
        if (t_last > 0.0) step = std::clamp(step, 1e-6 * t_last, 64.0 * t_last);

        double gnorm2 = 0.0;
        for (double v : g) gnorm2 += v * v;
        double t = step;
        double f_new = f;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < dim; ++i) trial[i] = c[i] - t * g[i];
            f_new = cc_objective(trial, target, mu, grid);
            if (f_new <= f - 1e-4 * t * gnorm2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        t_last = t;
        bool stalled = f - f_new <= 1e-15 * (1.0 + std::fabs(f));
        c_prev = c;
        g_prev = g;
        c.swap(trial);
        f = f_new;
        g = cc_objective_gradient(c, target, mu, grid);
        trace.values.push_back(f);
        ++trace.iterations;
        if (stalled) break;
    }
}

std::vector<double> straight_seed(const GroupElement& target, const TimeGrid& grid) {
    std::vector<double> c(2 * grid.n_steps);
    for (int j = 0; j < grid.n_steps; ++j) {
        c[2 * j] = target.x;
        c[2 * j + 1] = target.y;
    }
    return c;
}

std::vector<double> circle_seed(const GroupElement& target, const TimeGrid& grid) {
    // loop enclosing signed area target.z, superposed with the straight reach
    double r = std::sqrt(std::fabs(target.z) / M_PI);
    double sgn = target.z >= 0.0 ? 1.0 : -1.0;
    std::vector<double> c(2 * grid.n_steps);
    const double w = 2.0 * M_PI;
    for (int j = 0; j < grid.n_steps; ++j) {
        double t = grid.node(j);
        c[2 * j] = target.x - sgn * w * r * std::sin(w * t);
        c[2 * j + 1] = target.y + w * r * std::cos(w * t);
    }
    return c;
}

std::vector<double> random_smooth_seed(const GroupElement& target,
                                       const TimeGrid& grid, Rng& rng) {
    double scale = 1.5 * std::max(1.0, homogeneous_norm(target));
    double a0x = scale * rng.gaussian(), a0y = scale * rng.gaussian();
    double ax[3], bx[3], ay[3], by[3];
    for (int m = 0; m < 3; ++m) {
        ax[m] = scale * rng.gaussian();
        bx[m] = scale * rng.gaussian();
        ay[m] = scale * rng.gaussian();
        by[m] = scale * rng.gaussian();
    }
    std::vector<double> c(2 * grid.n_steps);
    for (int j = 0; j < grid.n_steps; ++j) {
        double t = grid.node(j);
        double vx = a0x, vy = a0y;
        for (int m = 0; m < 3; ++m) {
            double w = 2.0 * M_PI * (m + 1) * t;
            vx += ax[m] * std::cos(w) + bx[m] * std::sin(w);
            vy += ay[m] * std::cos(w) + by[m] * std::sin(w);
        }
        c[2 * j] = vx;
        c[2 * j + 1] = vy;
    }
    return c;
}

struct StartResult {
    std::vector<double> control;
    double energy = 0.0;
    double endpoint_error = 0.0;
    bool converged = false;
    StageTrace trace;
};

StartResult solve_from(std::vector<double> c, const GroupElement& target,
                       const GeodesicOptions& o) {
    StartResult r;
    double mu = o.mu0;
    for (int stage = 0; stage < o.mu_stages; ++stage) {
        minimize_stage(c, target, mu, o.grid, o.max_iters, o.grad_tol, r.trace);
        mu *= o.mu_factor;
    }
    Endpoint p = lift_endpoint(c, o.grid);
    GroupElement end{p.x, p.y, p.z};
    r.endpoint_error = homogeneous_distance(end, target);
    r.energy = control_energy(c, o.grid.dt());
    r.converged = r.endpoint_error <= o.tolerance;
    r.control = std::move(c);
    return r;
}

GeodesicResult pack_result(const StartResult& best, const TimeGrid& grid) {
    GeodesicResult out;
    std::vector<Vec2> samples(grid.n_steps);
    for (int j = 0; j < grid.n_steps; ++j)
        samples[j] = {best.control[2 * j], best.control[2 * j + 1]};
    out.path = lift_control(HorizontalControl(grid, std::move(samples)));
    out.energy = best.energy;
    out.length = std::sqrt(std::max(best.energy, 0.0));
    out.endpoint_error = best.endpoint_error;
    out.converged = best.converged;
    out.iterations = best.trace.iterations;
    out.om_integral = -0.5 * best.energy;
    out.objective_trace = best.trace.values;
    out.stage_offsets = best.trace.offsets;
    return out;
}

}  // namespace

GeodesicResult cc_distance(const GroupElement& g1, const GroupElement& g2,
                           const GeodesicOptions& opts) {
    if (!g1.finite() || !g2.finite())
        throw std::invalid_argument("cc_distance: endpoints must be finite");
    GroupElement target = multiply(inverse(g1), g2);
    if (homogeneous_norm(target) < 1e-14) {
        StartResult rest;
        rest.control.assign(2 * opts.grid.n_steps, 0.0);
        rest.converged = true;
        rest.trace.offsets.push_back(0);
        rest.trace.values.push_back(0.0);
        return pack_result(rest, opts.grid);
    }

    int k = std::max(1, opts.multistarts);
    std::vector<std::vector<double>> seeds;
    seeds.push_back(straight_seed(target, opts.grid));
    if (std::fabs(target.z) > 1e-12 && k > 1)
        seeds.push_back(circle_seed(target, opts.grid));
    {
        Rng rng(opts.seed);
        while (static_cast<int>(seeds.size()) < k)
            seeds.push_back(random_smooth_seed(target, opts.grid, rng));
    }

    std::vector<StartResult> results(seeds.size());
    run_chunks(static_cast<std::int64_t>(seeds.size()), opts.workers,
               [&](std::int64_t i) { results[i] = solve_from(seeds[i], target, opts); });

    // converged starts win on energy; otherwise the closest endpoint wins,
    // ties keeping the lowest start index
    int best = -1;
    for (int i = 0; i < static_cast<int>(results.size()); ++i) {
        if (best < 0) {
            best = i;
            continue;
        }
        const StartResult& a = results[i];
        const StartResult& b = results[best];
        bool better;
        if (a.converged != b.converged) {
            better = a.converged;
        } else if (a.converged) {
            better = a.energy < b.energy;
        } else {
            better = a.endpoint_error < b.endpoint_error;
        }
        if (better) best = i;
    }
    return pack_result(results[best], opts.grid);
}

GeodesicResult most_probable_path(const std::optional<GroupElement>& target,
                                  const GeodesicOptions& opts) {
    if (!target) {
        StartResult rest;
        rest.control.assign(2 * opts.grid.n_steps, 0.0);
        rest.converged = true;
        rest.trace.offsets.push_back(0);
        rest.trace.values.push_back(0.0);
        return pack_result(rest, opts.grid);
    }
    return cc_distance(identity(), *target, opts);
}

EquivalenceEstimate equivalence_constants(int n_points, double box, Seed seed,
                                          const GeodesicOptions& opts) {
    if (n_points < 1)
        throw std::invalid_argument("equivalence_constants: n_points >= 1");
    if (!(box > 0.0))
        throw std::invalid_argument("equivalence_constants: box must be > 0");
    EquivalenceEstimate est;
    est.c_hat = std::numeric_limits<double>::infinity();
    est.big_c_hat = 0.0;
    for (int i = 0; i < n_points; ++i) {
        Rng rng(seed.substream(static_cast<std::uint64_t>(i)));
        auto draw = [&]() -> GroupElement {
            return {box * rng.uniform_sym(), box * rng.uniform_sym(),
                    box * box * rng.uniform_sym()};
        };
        GroupElement g1 = draw(), g2 = draw();
        GroupElement t = multiply(inverse(g1), g2);
        double rho = homogeneous_norm(t);
        if (rho < 1e-9) {
            ++est.n_degenerate;
            continue;
        }
        // dilation-normalize to N = 1; by homogeneity d_cc(t)/rho = d_cc(t')
        GroupElement tn = dilate(1.0 / rho, t);
        GeodesicOptions o = opts;
        o.seed = seed.substream(0x10000000ULL + static_cast<std::uint64_t>(i));
        GeodesicResult r = cc_distance(identity(), tn, o);
        if (!r.converged) {
            ++est.n_failed;
            continue;
        }
        est.c_hat = std::min(est.c_hat, r.length);
        est.big_c_hat = std::max(est.big_c_hat, r.length);
        est.ratios.push_back(r.length);
        ++est.n_used;
    }
    if (est.n_used == 0) est.c_hat = 0.0;
    return est;
}

}  // namespace heis

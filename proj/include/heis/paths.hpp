#pragma once

// Discretized horizontal curves on [0,1] and their Cameron-Martin calculus.
//
// Convention: controls are piecewise constant on cells [t_i, t_{i+1}) with the
// left-endpoint value, so lift_control and mc_velocity are exact inverses of
// each other. A discrete path is horizontal when every step satisfies
//   z_{i+1} - z_i = omega(x_i, x_{i+1} - x_i) / 2,
// the discrete form of the horizontality constraint z' = omega(x, x')/2.

#include <string>
#include <vector>

#include "heis/grid.hpp"
#include "heis/group.hpp"

namespace heis {

// velocity samples c_i in R^2 on grid cells (units 1/time)
struct HorizontalControl {
    TimeGrid grid;
    std::vector<Vec2> samples;  // size grid.n_steps

    HorizontalControl() : grid(1), samples(1) {}
    HorizontalControl(TimeGrid g, std::vector<Vec2> s);
};

// generic group-valued discrete path (not necessarily horizontal)
struct GroupPath {
    TimeGrid grid;
    std::vector<GroupElement> points;  // size grid.n_nodes()

    GroupPath() : grid(1), points(2) {}
    GroupPath(TimeGrid g, std::vector<GroupElement> p);
};

// horizontal path: the lift of a control, carrying both samples and points
struct HorizontalPath {
    TimeGrid grid;
    std::vector<GroupElement> points;  // size grid.n_nodes(), points[0] = e
    HorizontalControl control;

    HorizontalPath() : grid(1) {}
    const GroupElement& endpoint() const { return points.back(); }
    GroupPath as_group_path() const { return GroupPath(grid, points); }
};

// result of reading intrinsic velocities off a discrete path
struct VelocityDecomposition {
    HorizontalControl control;
    std::vector<double> vertical_residual;  // per cell, velocity scale
    double tolerance = 0.0;                 // tau_h used for the verdict
    bool horizontal = false;
};

// horizontal lift: x_{i+1} = x_i + c_i dt, z_{i+1} = z_i + omega(x_i, c_i) dt/2
HorizontalPath lift_control(const HorizontalControl& c);

// per-cell tolerance tau_h = 1e-8 * (1 + path diameter); the diameter is the
// largest Euclidean coordinate norm over nodes (paths start at e)
double horizontality_tolerance(const GroupPath& path);

// intrinsic velocity: c_i = dx_i/dt, residual_i = (dz_i - omega(x_i, dx_i)/2)/dt
VelocityDecomposition mc_velocity(const GroupPath& path);

double energy(const HorizontalControl& c);
double energy(const HorizontalPath& path);
// validates horizontality first; throws std::invalid_argument on residuals > tau_h
double energy(const GroupPath& path);

double inner_product(const HorizontalControl& a, const HorizontalControl& b);
double inner_product(const HorizontalPath& a, const HorizontalPath& b);

// horizontal lift of the planar difference phi - psi; control c_phi - c_psi
HorizontalPath correction_curve(const HorizontalPath& phi, const HorizontalPath& psi);

// integral of |c_1| + |c_2| dt
double l1_control_norm(const HorizontalPath& path);

// Lagrangian on the horizontal bundle: pointwise -|c(s)|^2/2 per cell and
// its integral -energy/2
std::vector<double> om_lagrangian_pointwise(const HorizontalPath& path);
double om_lagrangian(const HorizontalPath& path);
double om_lagrangian(const GroupPath& path);  // validates horizontality

// --- named control presets -------------------------------------------------

HorizontalControl constant_control(TimeGrid grid);             // stays at e
HorizontalControl line_control(TimeGrid grid, double a, double b);
// circle of radius r: c(t) = 2 pi r (-sin 2 pi t, cos 2 pi t)
HorizontalControl circle_control(TimeGrid grid, double r);

// --- CSV I/O (strict headers) ----------------------------------------------
// controls: "t,c1,c2" with one row per cell (t = left endpoint)
// paths:    "t,x,y,z" with one row per node

void write_control_csv(const std::string& file, const HorizontalControl& c);
HorizontalControl read_control_csv(const std::string& file);
void write_path_csv(const std::string& file, const GroupPath& path);
GroupPath read_path_csv(const std::string& file);

}  // namespace heis

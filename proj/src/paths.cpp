#include "heis/paths.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace heis {

HorizontalControl::HorizontalControl(TimeGrid g, std::vector<Vec2> s)
    : grid(g), samples(std::move(s)) {
    if (static_cast<int>(samples.size()) != grid.n_steps)
        throw std::invalid_argument("HorizontalControl: need one sample per cell");
}

GroupPath::GroupPath(TimeGrid g, std::vector<GroupElement> p)
    : grid(g), points(std::move(p)) {
    if (static_cast<int>(points.size()) != grid.n_nodes())
        throw std::invalid_argument("GroupPath: need one point per node");
}

HorizontalPath lift_control(const HorizontalControl& c) {
    const int n = c.grid.n_steps;
    const double dt = c.grid.dt();
    HorizontalPath path;
    path.grid = c.grid;
    path.control = c;
    path.points.resize(n + 1);
    path.points[0] = identity();
    for (int i = 0; i < n; ++i) {
        const GroupElement& g = path.points[i];
        const Vec2& ci = c.samples[i];
        path.points[i + 1] = {g.x + ci.x * dt, g.y + ci.y * dt,
                              g.z + 0.5 * omega(g.planar(), ci) * dt};
    }
    return path;
}

double horizontality_tolerance(const GroupPath& path) {
    double diam = 0.0;
    for (const auto& g : path.points) {
        double r = std::sqrt(g.x * g.x + g.y * g.y + g.z * g.z);
        if (r > diam) diam = r;
    }
    return 1e-8 * (1.0 + diam);
}

VelocityDecomposition mc_velocity(const GroupPath& path) {
    if (homogeneous_norm(path.points.front()) != 0.0)
        throw std::invalid_argument("mc_velocity: path must start at the identity");
    const int n = path.grid.n_steps;
    const double dt = path.grid.dt();
    VelocityDecomposition out;
    out.control.grid = path.grid;
    out.control.samples.resize(n);
    out.vertical_residual.resize(n);
    out.tolerance = horizontality_tolerance(path);
    bool ok = true;
    for (int i = 0; i < n; ++i) {
        const GroupElement& g0 = path.points[i];
        const GroupElement& g1 = path.points[i + 1];
        Vec2 dx{g1.x - g0.x, g1.y - g0.y};
        out.control.samples[i] = {dx.x / dt, dx.y / dt};
        double res = (g1.z - g0.z - 0.5 * omega(g0.planar(), dx)) / dt;
        out.vertical_residual[i] = res;
        if (std::fabs(res) > out.tolerance) ok = false;
    }
    out.horizontal = ok;
    return out;
}

double energy(const HorizontalControl& c) {
    const double dt = c.grid.dt();
    double e = 0.0;
    for (const Vec2& s : c.samples) e += dot(s, s) * dt;
    return e;
}

double energy(const HorizontalPath& path) { return energy(path.control); }

double energy(const GroupPath& path) {
    VelocityDecomposition v = mc_velocity(path);
    if (!v.horizontal)
        throw std::invalid_argument("energy: path is not horizontal");
    return energy(v.control);
}

double inner_product(const HorizontalControl& a, const HorizontalControl& b) {
    require_same_grid(a.grid, b.grid, "inner_product");
    const double dt = a.grid.dt();
    double s = 0.0;
    for (int i = 0; i < a.grid.n_steps; ++i) s += dot(a.samples[i], b.samples[i]) * dt;
    return s;
}

double inner_product(const HorizontalPath& a, const HorizontalPath& b) {
    return inner_product(a.control, b.control);
}

HorizontalPath correction_curve(const HorizontalPath& phi, const HorizontalPath& psi) {
    require_same_grid(phi.grid, psi.grid, "correction_curve");
    HorizontalControl diff;
    diff.grid = phi.grid;
    diff.samples.resize(phi.grid.n_steps);
    for (int i = 0; i < phi.grid.n_steps; ++i)
        diff.samples[i] = phi.control.samples[i] - psi.control.samples[i];
    return lift_control(diff);
}

double l1_control_norm(const HorizontalPath& path) {
    const double dt = path.grid.dt();
    double s = 0.0;
    for (const Vec2& c : path.control.samples)
        s += (std::fabs(c.x) + std::fabs(c.y)) * dt;
    return s;
}

std::vector<double> om_lagrangian_pointwise(const HorizontalPath& path) {
    std::vector<double> vals(path.grid.n_steps);
    for (int i = 0; i < path.grid.n_steps; ++i) {
        const Vec2& c = path.control.samples[i];
        vals[i] = -0.5 * dot(c, c);
    }
    return vals;
}

double om_lagrangian(const HorizontalPath& path) { return -0.5 * energy(path); }

double om_lagrangian(const GroupPath& path) {
    VelocityDecomposition v = mc_velocity(path);
    if (!v.horizontal)
        throw std::invalid_argument("om_lagrangian: path is not horizontal");
    return -0.5 * energy(v.control);
}

HorizontalControl constant_control(TimeGrid grid) {
    return HorizontalControl(grid, std::vector<Vec2>(grid.n_steps, Vec2{0.0, 0.0}));
}

HorizontalControl line_control(TimeGrid grid, double a, double b) {
    return HorizontalControl(grid, std::vector<Vec2>(grid.n_steps, Vec2{a, b}));
}

HorizontalControl circle_control(TimeGrid grid, double r) {
    std::vector<Vec2> s(grid.n_steps);
    const double w = 2.0 * M_PI;
    for (int i = 0; i < grid.n_steps; ++i) {
        double t = grid.node(i);
        s[i] = {-w * r * std::sin(w * t), w * r * std::cos(w * t)};
    }
    return HorizontalControl(grid, std::move(s));
}

// --- CSV -------------------------------------------------------------------

namespace {

// shortest representation that round-trips doubles exactly
std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& file) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(file + ": bad numeric field '" + s + "'");
    }
}

std::vector<std::vector<double>> read_csv(const std::string& file,
                                          const std::string& header, int cols) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(file + ": empty file");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != header)
        throw std::runtime_error(file + ": expected header '" + header + "', got '" +
                                 line + "'");
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (static_cast<int>(fields.size()) != cols)
            throw std::runtime_error(file + ": expected " + std::to_string(cols) +
                                     " fields per row");
        std::vector<double> row(cols);
        for (int j = 0; j < cols; ++j) row[j] = parse_double(fields[j], file);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error(file + ": no data rows");
    return rows;
}

void check_uniform_times(const std::vector<std::vector<double>>& rows, int n_steps,
                         const std::string& file) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double expect = static_cast<double>(i) / n_steps;
        if (std::fabs(rows[i][0] - expect) > 1e-12)
            throw std::runtime_error(file + ": time column is not the uniform grid");
    }
}

}  // namespace

void write_control_csv(const std::string& file, const HorizontalControl& c) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << "t,c1,c2\n";
    for (int i = 0; i < c.grid.n_steps; ++i)
        out << fmt(c.grid.node(i)) << ',' << fmt(c.samples[i].x) << ','
            << fmt(c.samples[i].y) << '\n';
}

HorizontalControl read_control_csv(const std::string& file) {
    auto rows = read_csv(file, "t,c1,c2", 3);
    int n = static_cast<int>(rows.size());
    check_uniform_times(rows, n, file);
    std::vector<Vec2> samples(n);
    for (int i = 0; i < n; ++i) samples[i] = {rows[i][1], rows[i][2]};
    return HorizontalControl(TimeGrid(n), std::move(samples));
}

void write_path_csv(const std::string& file, const GroupPath& path) {
    std::ofstream out(file);
    if (!out) throw std::runtime_error("cannot write " + file);
    out << "t,x,y,z\n";
    for (int i = 0; i < path.grid.n_nodes(); ++i) {
        const GroupElement& g = path.points[i];
        out << fmt(path.grid.node(i)) << ',' << fmt(g.x) << ',' << fmt(g.y) << ','
            << fmt(g.z) << '\n';
    }
}

GroupPath read_path_csv(const std::string& file) {
    auto rows = read_csv(file, "t,x,y,z", 4);
    int n = static_cast<int>(rows.size()) - 1;
    if (n < 1) throw std::runtime_error(file + ": need at least two nodes");
    check_uniform_times(rows, n, file);
    std::vector<GroupElement> pts(n + 1);
    for (int i = 0; i <= n; ++i) pts[i] = {rows[i][1], rows[i][2], rows[i][3]};
    return GroupPath(TimeGrid(n), std::move(pts));
}

}  // namespace heis

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "heis/paths.hpp"
#include "heis/rng.hpp"

using namespace heis;

namespace {

HorizontalControl random_control(TimeGrid grid, Seed seed, double scale = 1.0) {
    Rng rng(seed);
    std::vector<Vec2> s(grid.n_steps);
    for (auto& v : s) v = {scale * rng.gaussian(), scale * rng.gaussian()};
    return HorizontalControl(grid, std::move(s));
}

// controls on a coarse binary lattice: every intermediate of lift/velocity
// stays exactly representable, so round trips must be bitwise
HorizontalControl dyadic_control(TimeGrid grid, Seed seed) {
    Rng rng(seed);
    std::vector<Vec2> s(grid.n_steps);
    for (auto& v : s)
        v = {std::floor(512.0 * rng.uniform_sym()) / 512.0,
             std::floor(512.0 * rng.uniform_sym()) / 512.0};
    return HorizontalControl(grid, std::move(s));
}

}  // namespace

TEST_SUITE_BEGIN("paths");

TEST_CASE("lift_control: constant, line, circle area") {
    TimeGrid grid(256);
    SUBCASE("zero control stays at e") {
        HorizontalPath p = lift_control(constant_control(grid));
        for (const auto& g : p.points) {
            CHECK(g.x == 0.0);
            CHECK(g.y == 0.0);
            CHECK(g.z == 0.0);
        }
    }
    SUBCASE("constant control is a straight ray with zero vertical part") {
        HorizontalPath p = lift_control(line_control(grid, 2.0, -1.0));
        for (int i = 0; i <= grid.n_steps; ++i) {
            double t = grid.node(i);
            CHECK(p.points[i].x == doctest::Approx(2.0 * t).epsilon(1e-14));
            CHECK(p.points[i].y == doctest::Approx(-1.0 * t).epsilon(1e-14));
            CHECK(p.points[i].z == 0.0);  // omega(x, c) = 0 along a ray
        }
    }
    SUBCASE("circle of radius r encloses area pi r^2 at n = 4096") {
        TimeGrid fine(4096);
        double r = 0.5;
        HorizontalPath p = lift_control(circle_control(fine, r));
        double target = M_PI * r * r;
        CHECK(std::fabs(p.endpoint().z - target) / target <= 1e-3);
        CHECK(std::fabs(p.endpoint().x) <= 1e-2);
        CHECK(std::fabs(p.endpoint().y) <= 1e-2);
    }
}

TEST_CASE("mc_velocity: round trip, vertical line, ray") {
    TimeGrid grid(512);
    SUBCASE("round trip is bitwise on dyadic controls with zero residual") {
        HorizontalControl c = dyadic_control(grid, {101, 0});
        VelocityDecomposition v = mc_velocity(lift_control(c).as_group_path());
        CHECK(v.horizontal);
        for (int i = 0; i < grid.n_steps; ++i) {
            CHECK(v.control.samples[i].x == c.samples[i].x);
            CHECK(v.control.samples[i].y == c.samples[i].y);
            CHECK(v.vertical_residual[i] == 0.0);
        }
    }
    SUBCASE("round trip on generic controls is exact to accumulated rounding") {
        HorizontalControl c = random_control(grid, {102, 0});
        VelocityDecomposition v = mc_velocity(lift_control(c).as_group_path());
        CHECK(v.horizontal);
        for (int i = 0; i < grid.n_steps; ++i) {
            CHECK(std::fabs(v.control.samples[i].x - c.samples[i].x) <= 1e-10);
            CHECK(std::fabs(v.control.samples[i].y - c.samples[i].y) <= 1e-10);
        }
    }
    SUBCASE("vertical line has zero control and unit residual") {
        std::vector<GroupElement> pts(grid.n_nodes());
        for (int i = 0; i < grid.n_nodes(); ++i) pts[i] = {0, 0, grid.node(i)};
        VelocityDecomposition v = mc_velocity(GroupPath(grid, pts));
        CHECK(!v.horizontal);
        for (int i = 0; i < grid.n_steps; ++i) {
            CHECK(v.control.samples[i].x == 0.0);
            CHECK(v.control.samples[i].y == 0.0);
            CHECK(v.vertical_residual[i] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("straight ray recovers its constant control with zero residual") {
        HorizontalPath p = lift_control(line_control(grid, 0.75, -0.25));
        VelocityDecomposition v = mc_velocity(p.as_group_path());
        CHECK(v.horizontal);
        for (int i = 0; i < grid.n_steps; ++i) {
            CHECK(std::fabs(v.control.samples[i].x - 0.75) <= 1e-12);
            CHECK(std::fabs(v.control.samples[i].y + 0.25) <= 1e-12);
        }
    }
    SUBCASE("rejects paths not based at the identity") {
        std::vector<GroupElement> pts(grid.n_nodes(), GroupElement{1, 0, 0});
        CHECK_THROWS_AS(mc_velocity(GroupPath(grid, pts)), std::invalid_argument);
    }
}

TEST_CASE("energy and inner product") {
    TimeGrid grid(512);
    SUBCASE("constant path has zero energy") {
        CHECK(energy(lift_control(constant_control(grid))) == 0.0);
    }
    SUBCASE("line control (a,b) has energy a^2 + b^2") {
        CHECK(energy(lift_control(line_control(grid, 3, -4))) ==
              doctest::Approx(25.0).epsilon(1e-13));
    }
    SUBCASE("circle control of magnitude 2 pi r has energy (2 pi r)^2") {
        TimeGrid fine(4096);
        double r = 0.3;
        double w = 2 * M_PI * r;
        CHECK(energy(lift_control(circle_control(fine, r))) ==
              doctest::Approx(w * w).epsilon(1e-12));
    }
    SUBCASE("orthogonal sine/cosine controls have inner product ~0 at n = 4096") {
        TimeGrid fine(4096);
        std::vector<Vec2> a(fine.n_steps), b(fine.n_steps);
        for (int i = 0; i < fine.n_steps; ++i) {
            double t = fine.node(i);
            a[i] = {std::cos(2 * M_PI * t), 0.0};
            b[i] = {std::sin(2 * M_PI * t), 0.0};
        }
        double ip = inner_product(HorizontalControl(fine, a), HorizontalControl(fine, b));
        CHECK(std::fabs(ip) <= 1e-6);
    }
    SUBCASE("Cauchy-Schwarz and parallelogram law on random pairs") {
        for (int trial = 0; trial < 20; ++trial) {
            HorizontalControl a = random_control(grid, {200 + (unsigned)trial, 0});
            HorizontalControl b = random_control(grid, {300 + (unsigned)trial, 0});
            double ip = inner_product(a, b);
            double ea = energy(a), eb = energy(b);
            CHECK(ip * ip <= ea * eb * (1 + 1e-12));
            HorizontalPath pa = lift_control(a), pb = lift_control(b);
            // |a+b|^2 + |a-b|^2 = 2|a|^2 + 2|b|^2
            std::vector<Vec2> sum(grid.n_steps);
            for (int i = 0; i < grid.n_steps; ++i) sum[i] = a.samples[i] + b.samples[i];
            double ep = energy(HorizontalControl(grid, sum));
            double em = energy(correction_curve(pa, pb));
            CHECK(std::fabs(ep + em - 2 * ea - 2 * eb) <= 1e-10 * (1 + ea + eb));
        }
    }
    SUBCASE("energy of a non-horizontal path is rejected") {
        std::vector<GroupElement> pts(grid.n_nodes());
        for (int i = 0; i < grid.n_nodes(); ++i) pts[i] = {0, 0, grid.node(i)};
        CHECK_THROWS_AS(energy(GroupPath(grid, pts)), std::invalid_argument);
    }
    SUBCASE("grid mismatch is an error") {
        HorizontalControl a = random_control(TimeGrid(64), {1, 0});
        HorizontalControl b = random_control(TimeGrid(128), {2, 0});
        CHECK_THROWS_AS(inner_product(a, b), std::invalid_argument);
    }
}

TEST_CASE("energy grid refinement converges at first order") {
    // left-point quadrature of an analytic control: error ~ C/n
    auto exact = [](double t) { return Vec2{t, std::exp(t)}; };
    // integral of t^2 + e^{2t} over [0,1]
    double exact_energy = 1.0 / 3.0 + 0.5 * (std::exp(2.0) - 1.0);
    std::vector<double> errs;
    for (int n : {256, 512, 1024, 2048, 4096, 8192}) {
        TimeGrid grid(n);
        std::vector<Vec2> s(n);
        for (int i = 0; i < n; ++i) s[i] = exact(grid.node(i));
        errs.push_back(std::fabs(energy(HorizontalControl(grid, s)) - exact_energy));
    }
    for (std::size_t i = 1; i < errs.size(); ++i) {
        double slope = std::log2(errs[i - 1] / errs[i]);
        CHECK(slope >= 0.8);
        CHECK(slope <= 1.2);
    }
}

TEST_CASE("correction_curve") {
    TimeGrid grid(256);
    HorizontalPath phi = lift_control(random_control(grid, {401, 0}));
    HorizontalPath psi = lift_control(random_control(grid, {402, 0}));
    SUBCASE("phi = psi gives the constant path at e") {
        HorizontalPath g = correction_curve(phi, phi);
        for (const auto& p : g.points) {
            CHECK(p.x == 0.0);
            CHECK(p.y == 0.0);
            CHECK(p.z == 0.0);
        }
    }
    SUBCASE("psi = e reproduces phi's control and planar part") {
        HorizontalPath g = correction_curve(phi, lift_control(constant_control(grid)));
        for (int i = 0; i < grid.n_steps; ++i) {
            CHECK(g.control.samples[i].x == phi.control.samples[i].x);
            CHECK(g.control.samples[i].y == phi.control.samples[i].y);
        }
        for (int i = 0; i <= grid.n_steps; ++i) {
            CHECK(g.points[i].x == phi.points[i].x);
            CHECK(g.points[i].y == phi.points[i].y);
        }
    }
    SUBCASE("control is the difference of controls") {
        HorizontalPath g = correction_curve(phi, psi);
        for (int i = 0; i < grid.n_steps; ++i) {
            CHECK(g.control.samples[i].x ==
                  phi.control.samples[i].x - psi.control.samples[i].x);
            CHECK(g.control.samples[i].y ==
                  phi.control.samples[i].y - psi.control.samples[i].y);
        }
    }
    SUBCASE("bilinearity of the energy") {
        double lhs = energy(correction_curve(phi, psi));
        double rhs = energy(phi) - 2 * inner_product(phi, psi) + energy(psi);
        CHECK(std::fabs(lhs - rhs) <= 1e-8 * (1 + std::fabs(rhs)));
    }
    SUBCASE("horizontal by construction") {
        VelocityDecomposition v = mc_velocity(correction_curve(phi, psi).as_group_path());
        CHECK(v.horizontal);
    }
    SUBCASE("grid mismatch rejected") {
        HorizontalPath q = lift_control(random_control(TimeGrid(128), {5, 0}));
        CHECK_THROWS_AS(correction_curve(phi, q), std::invalid_argument);
    }
}

TEST_CASE("l1_control_norm") {
    TimeGrid grid(512);
    CHECK(l1_control_norm(lift_control(constant_control(grid))) == 0.0);
    CHECK(l1_control_norm(lift_control(line_control(grid, 3, -4))) ==
          doctest::Approx(7.0).epsilon(1e-13));
    // norm equivalence against the L2 control integral
    for (int trial = 0; trial < 20; ++trial) {
        HorizontalControl c = random_control(grid, {500 + (unsigned)trial, 0});
        double l1 = l1_control_norm(lift_control(c));
        double l2int = 0.0;
        for (const auto& v : c.samples) l2int += norm2(v) * grid.dt();
        CHECK(l1 >= l2int * (1.0 - 1e-12));
        CHECK(l1 <= std::sqrt(2.0) * l2int * (1.0 + 1e-12));
    }
}

TEST_CASE("om_lagrangian") {
    TimeGrid grid(512);
    CHECK(om_lagrangian(lift_control(constant_control(grid))) == 0.0);
    CHECK(om_lagrangian(lift_control(line_control(grid, 2, 1))) ==
          doctest::Approx(-2.5).epsilon(1e-13));
    HorizontalPath p = lift_control(random_control(grid, {600, 0}));
    CHECK(std::fabs(om_lagrangian(p) + 0.5 * energy(p)) <= 1e-12 * (1 + energy(p)));
    auto pw = om_lagrangian_pointwise(p);
    double total = 0.0;
    for (double v : pw) total += v * grid.dt();
    CHECK(std::fabs(total - om_lagrangian(p)) <= 1e-12 * (1 + std::fabs(total)));
    // non-horizontal input rejected
    std::vector<GroupElement> pts(grid.n_nodes());
    for (int i = 0; i < grid.n_nodes(); ++i) pts[i] = {0, 0, grid.node(i)};
    CHECK_THROWS_AS(om_lagrangian(GroupPath(grid, pts)), std::invalid_argument);
}

TEST_CASE("csv round trips and strict headers") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "heis_csv_test";
    fs::create_directories(dir);
    TimeGrid grid(64);
    HorizontalControl c = random_control(grid, {700, 0});

    std::string cfile = (dir / "control.csv").string();
    write_control_csv(cfile, c);
    HorizontalControl back = read_control_csv(cfile);
    REQUIRE(back.grid == grid);
    for (int i = 0; i < grid.n_steps; ++i) {
        CHECK(back.samples[i].x == c.samples[i].x);  // %.17g round trips exactly
        CHECK(back.samples[i].y == c.samples[i].y);
    }

    HorizontalPath p = lift_control(c);
    std::string pfile = (dir / "path.csv").string();
    write_path_csv(pfile, p.as_group_path());
    GroupPath gp = read_path_csv(pfile);
    REQUIRE(gp.grid == grid);
    for (int i = 0; i <= grid.n_steps; ++i) {
        CHECK(gp.points[i].x == p.points[i].x);
        CHECK(gp.points[i].z == p.points[i].z);
    }

    SUBCASE("wrong header is rejected") {
        std::string bad = (dir / "bad.csv").string();
        FILE* f = std::fopen(bad.c_str(), "w");
        std::fputs("time,c1,c2\n0,1,1\n", f);
        std::fclose(f);
        CHECK_THROWS(read_control_csv(bad));
    }
    SUBCASE("non-uniform time column is rejected") {
        std::string bad = (dir / "bad2.csv").string();
        FILE* f = std::fopen(bad.c_str(), "w");
        std::fputs("t,c1,c2\n0,1,1\n0.7,1,1\n", f);
        std::fclose(f);
        CHECK_THROWS(read_control_csv(bad));
    }
}

TEST_SUITE_END();

#include "heis/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "heis/estimators.hpp"
#include "heis/geodesics.hpp"
#include "heis/util.hpp"

namespace heis {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// validation checks
// ---------------------------------------------------------------------------

CheckResult make_check(const std::string& name, double observed, double expected,
                       double tol, Seed seed) {
    CheckResult c;
    c.name = name;
    c.observed = observed;
    c.expected = expected;
    c.tolerance = tol;
    c.pass = std::fabs(observed - expected) <= tol;
    c.seed_root = seed.root;
    c.seed_stream = seed.stream;
    return c;
}

GroupElement random_element(Rng& rng, double box) {
    return {box * rng.uniform_sym(), box * rng.uniform_sym(), box * rng.uniform_sym()};
}

AlgebraVector random_algebra(Rng& rng, double box) {
    return {box * rng.uniform_sym(), box * rng.uniform_sym(), box * rng.uniform_sym()};
}

double residual3(const GroupElement& a, const GroupElement& b) {
    return std::max({std::fabs(a.x - b.x), std::fabs(a.y - b.y), std::fabs(a.z - b.z)});
}

void algebra_checks(std::uint64_t root, std::vector<CheckResult>& out) {
    const int n = 10000;
    Seed seed{root, 1};
    Rng rng(seed);
    double assoc = 0.0, ident = 0.0, leftinv = 0.0, mclr = 0.0, brac = 0.0,
           flow = 0.0, frame = 0.0, expid = 0.0, adjinv = 0.0;
    for (int i = 0; i < n; ++i) {
        GroupElement g1 = random_element(rng, 10.0);
        GroupElement g2 = random_element(rng, 10.0);
        GroupElement g3 = random_element(rng, 10.0);
        assoc = std::max(assoc, residual3(multiply(multiply(g1, g2), g3),
                                          multiply(g1, multiply(g2, g3))));
        ident = std::max(ident, residual3(multiply(g1, inverse(g1)), identity()));
        ident = std::max(ident, residual3(multiply(identity(), g1), g1));
        leftinv = std::max(leftinv,
                           std::fabs(homogeneous_distance(multiply(g3, g1), multiply(g3, g2)) -
                                     homogeneous_distance(g1, g2)));

        AlgebraVector h1 = random_algebra(rng, 10.0);
        AlgebraVector h2 = random_algebra(rng, 10.0);
        AlgebraVector h3 = random_algebra(rng, 10.0);
        AlgebraVector s = bracket(h1, h2);
        AlgebraVector t = bracket(h2, h1);
        brac = std::max(brac, std::max({std::fabs(s.a + t.a), std::fabs(s.b + t.b),
                                        std::fabs(s.c + t.c)}));
        AlgebraVector dbl = bracket(bracket(h1, h2), h3);
        brac = std::max(brac, std::max({std::fabs(dbl.a), std::fabs(dbl.b), std::fabs(dbl.c)}));

        // theta^r_k(v) = Ad_{k^-1}(theta^l_k(v))
        TangentVector v{g1, h1.a, h1.b, h1.c};
        AlgebraVector r = maurer_cartan(Side::Right, g2, v);
        AlgebraVector lr = adjoint(inverse(g2), maurer_cartan(Side::Left, g2, v));
        mclr = std::max(mclr, std::max({std::fabs(r.a - lr.a), std::fabs(r.b - lr.b),
                                        std::fabs(r.c - lr.c)}));
        AlgebraVector round = adjoint(g2, adjoint(inverse(g2), h1));
        adjinv = std::max(adjinv, std::max({std::fabs(round.a - h1.a),
                                            std::fabs(round.b - h1.b),
                                            std::fabs(round.c - h1.c)}));

        double tt = 2.0 * rng.uniform_sym();
        double ss = 2.0 * rng.uniform_sym();
        GroupElement c1 = integral_curve(h1, g1, tt + ss);
        GroupElement c2 = integral_curve(h1, integral_curve(h1, g1, tt), ss);
        flow = std::max(flow, residual3(c1, c2));

        expid = std::max(expid, residual3(exp_map(h1), integral_curve(h1, identity(), 1.0)));

        // frame at g: X = (1,0,-y/2), Y = (0,1,x/2), Z = (0,0,1)
        TangentVector X = left_invariant_field({1, 0, 0}, g1);
        TangentVector Y = left_invariant_field({0, 1, 0}, g1);
        TangentVector Z = left_invariant_field({0, 0, 1}, g1);
        frame = std::max(frame, std::fabs(X.v3 + 0.5 * g1.y));
        frame = std::max(frame, std::fabs(Y.v3 - 0.5 * g1.x));
        frame = std::max(frame,
                         std::max({std::fabs(X.v1 - 1), std::fabs(X.v2), std::fabs(Y.v1),
                                   std::fabs(Y.v2 - 1), std::fabs(Z.v1), std::fabs(Z.v2),
                                   std::fabs(Z.v3 - 1)}));
    }
    out.push_back(make_check("group.associativity", assoc, 0.0, 1e-12, seed));
    out.push_back(make_check("group.identity_inverse", ident, 0.0, 1e-12, seed));
    out.push_back(make_check("group.distance_left_invariance", leftinv, 0.0, 1e-10, seed));
    out.push_back(make_check("group.bracket_antisym_nilpotent", brac, 0.0, 1e-15, seed));
    out.push_back(make_check("group.maurer_cartan_lr", mclr, 0.0, 1e-12, seed));
    out.push_back(make_check("group.adjoint_inverse", adjinv, 0.0, 1e-12, seed));
    out.push_back(make_check("group.flow_property", flow, 0.0, 1e-12, seed));
    out.push_back(make_check("group.exp_vs_integral_curve", expid, 0.0, 0.0, seed));
    out.push_back(make_check("group.frame_xyz", frame, 0.0, 0.0, seed));

    // dilation homogeneity of the quasi-norm
    Seed dseed{root, 2};
    Rng drng(dseed);
    double dil = 0.0;
    for (int i = 0; i < n; ++i) {
        GroupElement g = random_element(drng, 10.0);
        for (double lam : {0.5, 2.0, 10.0})
            dil = std::max(dil, std::fabs(homogeneous_norm(dilate(lam, g)) -
                                          lam * homogeneous_norm(g)));
    }
    out.push_back(make_check("group.dilation_homogeneity", dil, 0.0, 1e-10, dseed));

    // centered difference of the flow matches the left-invariant field
    Seed fseed{root, 3};
    Rng frng(fseed);
    double fd = 0.0;
    const double h = 1e-5;
    for (int i = 0; i < 200; ++i) {
        GroupElement g = random_element(frng, 5.0);
        AlgebraVector a = random_algebra(frng, 5.0);
        double t = frng.uniform();
        GroupElement p = integral_curve(a, g, t + h);
        GroupElement m = integral_curve(a, g, t - h);
        TangentVector f = left_invariant_field(a, integral_curve(a, g, t));
        fd = std::max(fd, std::fabs((p.x - m.x) / (2 * h) - f.v1));
        fd = std::max(fd, std::fabs((p.y - m.y) / (2 * h) - f.v2));
        fd = std::max(fd, std::fabs((p.z - m.z) / (2 * h) - f.v3));
    }
    out.push_back(make_check("group.integral_curve_derivative", fd, 0.0, 1e-6, fseed));
}

void path_checks(std::uint64_t root, std::vector<CheckResult>& out) {
    Seed seed{root, 4};
    Rng rng(seed);
    TimeGrid grid(512);

    // dyadic controls keep every intermediate in an exact binary lattice, so
    // the lift / velocity round trip must be bitwise
    std::vector<Vec2> dy(grid.n_steps);
    for (auto& v : dy)
        v = {std::floor(1024.0 * rng.uniform_sym()) / 1024.0,
             std::floor(1024.0 * rng.uniform_sym()) / 1024.0};
    HorizontalControl cdy(grid, dy);
    VelocityDecomposition vd = mc_velocity(lift_control(cdy).as_group_path());
    double rt = 0.0, res = 0.0;
    for (int i = 0; i < grid.n_steps; ++i) {
        if (vd.control.samples[i].x != cdy.samples[i].x ||
            vd.control.samples[i].y != cdy.samples[i].y)
            rt = 1.0;
        res = std::max(res, std::fabs(vd.vertical_residual[i]));
    }
    out.push_back(make_check("paths.roundtrip_bitwise_dyadic", rt, 0.0, 0.0, seed));
    out.push_back(make_check("paths.roundtrip_residual_dyadic", res, 0.0, 0.0, seed));

    // generic controls: round trip to near machine precision
    std::vector<Vec2> gc(grid.n_steps);
    for (auto& v : gc) v = {rng.gaussian(), rng.gaussian()};
    HorizontalControl cgen(grid, gc);
    VelocityDecomposition vg = mc_velocity(lift_control(cgen).as_group_path());
    double rel = 0.0;
    for (int i = 0; i < grid.n_steps; ++i) {
        rel = std::max(rel, std::fabs(vg.control.samples[i].x - cgen.samples[i].x));
        rel = std::max(rel, std::fabs(vg.control.samples[i].y - cgen.samples[i].y));
    }
    out.push_back(make_check("paths.roundtrip_generic", rel, 0.0, 1e-9, seed));
    out.push_back(
        make_check("paths.roundtrip_horizontal_flag", vg.horizontal ? 0.0 : 1.0, 0.0, 0.0, seed));

    // energy bilinearity through correction_curve
    HorizontalPath p1 = lift_control(cgen);
    HorizontalPath p2 = lift_control(HorizontalControl(grid, dy));
    double lhs = energy(correction_curve(p1, p2));
    double rhs = energy(p1) - 2.0 * inner_product(p1, p2) + energy(p2);
    out.push_back(make_check("paths.correction_energy_identity", lhs, rhs,
                             1e-8 * (1.0 + std::fabs(rhs)), seed));

    // om integral identity
    out.push_back(make_check("paths.om_integral", om_lagrangian(p1), -0.5 * energy(p1),
                             1e-12 * (1.0 + energy(p1)), seed));

    // circle lift encloses pi r^2 at n = 4096 within 1e-3 relative
    TimeGrid fine(4096);
    HorizontalPath circ = lift_control(circle_control(fine, 0.8));
    double target = M_PI * 0.8 * 0.8;
    out.push_back(make_check("paths.circle_area", circ.endpoint().z, target,
                             1e-3 * target, seed));
}

void geodesic_fast_checks(std::uint64_t root, std::vector<CheckResult>& out) {
    Seed seed{root, 5};
    Rng rng(seed);
    TimeGrid grid(32);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> c(2 * grid.n_steps);
        for (auto& v : c) v = 2.0 * rng.uniform_sym();
        GroupElement target = random_element(rng, 2.0);
        double mu = 50.0;
        std::vector<double> g = cc_objective_gradient(c, target, mu, grid);
        double gn = 0.0;
        for (double v : g) gn = std::max(gn, std::fabs(v));
        double h = 1e-6;
        double err = 0.0;
        for (std::size_t i = 0; i < c.size(); i += 7) {
            std::vector<double> cp = c, cm = c;
            cp[i] += h;
            cm[i] -= h;
            double fd = (cc_objective(cp, target, mu, grid) -
                         cc_objective(cm, target, mu, grid)) /
                        (2 * h);
            err = std::max(err, std::fabs(fd - g[i]));
        }
        worst = std::max(worst, err / (1e-12 + gn));
    }
    out.push_back(make_check("geodesic.gradient_vs_fd", worst, 0.0, 1e-5, seed));
}

void statistical_checks(std::uint64_t root, int workers, std::vector<CheckResult>& out) {
    // endpoint variance / covariance of the driving noise
    {
        Seed seed{root, 10};
        TimeGrid grid(64);
        StatAcc v1, v2, cov;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            NoisePath w = sample_noise(grid, seed.substream(static_cast<std::uint64_t>(i)));
            Vec2 e = w.cumulative.back();
            v1.add(e.x * e.x);
            v2.add(e.y * e.y);
            cov.add(e.x * e.y);
        }
        out.push_back(make_check("noise.var_w1", v1.mean(), 1.0, 3 * v1.stderr_of_mean(), seed));
        out.push_back(make_check("noise.var_w2", v2.mean(), 1.0, 3 * v2.stderr_of_mean(), seed));
        out.push_back(make_check("noise.cov_w1w2", cov.mean(), 0.0, 3 * cov.stderr_of_mean(), seed));
    }

    // Levy area moments at acceptance scale
    {
        Seed seed{root, 11};
        TimeGrid grid(1024);
        const std::int64_t n = 1000000;
        const std::int64_t chunk = 4096;
        const std::int64_t nc = (n + chunk - 1) / chunk;
        struct Acc { StatAcc a2, a4, cosa; };
        std::vector<Acc> accs(nc);
        run_chunks(nc, workers, [&](std::int64_t c) {
            Rng rng(seed.substream(static_cast<std::uint64_t>(c)));
            const double sdt = std::sqrt(grid.dt());
            std::int64_t m = std::min(chunk, n - c * chunk);
            for (std::int64_t s = 0; s < m; ++s) {
                double wx = 0, wy = 0, area = 0;
                for (int j = 0; j < grid.n_steps; ++j) {
                    double dx = sdt * rng.gaussian(), dy = sdt * rng.gaussian();
                    area += 0.5 * (wx * dy - wy * dx);
                    wx += dx;
                    wy += dy;
                }
                accs[c].a2.add(area * area);
                accs[c].a4.add(area * area * area * area);
                accs[c].cosa.add(std::cos(2.0 * area));
            }
        });
        StatAcc a2, a4, cosa;
        for (auto& a : accs) {
            a2.merge(a.a2);
            a4.merge(a.a4);
            cosa.merge(a.cosa);
        }
        double var = a2.mean();
        double se_var = std::sqrt(std::max(a4.mean() - var * var, 0.0) / a2.n);
        out.push_back(make_check("levy.var", var, 0.25, 3 * se_var, seed));
        out.push_back(make_check("levy.cos2a", cosa.mean(), 1.0 / std::cosh(1.0),
                                 3 * cosa.stderr_of_mean(), seed));
    }

    // stochastic exponential martingale and Gaussianity at acceptance scale
    {
        TimeGrid grid(256);
        struct Case { const char* name; HorizontalControl c; };
        Case cases[] = {{"line10", line_control(grid, 1, 0)},
                        {"line11", line_control(grid, 1, 1)},
                        {"circle05", circle_control(grid, 0.5)}};
        int idx = 0;
        for (auto& cs : cases) {
            Seed seed{root, 12 + static_cast<std::uint64_t>(idx++)};
            HorizontalPath gam = lift_control(cs.c);
            const double eg = energy(gam);
            const std::int64_t n = 1000000;
            const std::int64_t chunk = 4096;
            const std::int64_t nc = (n + chunk - 1) / chunk;
            struct Acc { StatAcc e, x2, x4; };
            std::vector<Acc> accs(nc);
            const std::vector<Vec2>& ctrl = gam.control.samples;
            run_chunks(nc, workers, [&](std::int64_t c) {
                Rng rng(seed.substream(static_cast<std::uint64_t>(c)));
                const double sdt = std::sqrt(grid.dt());
                std::int64_t m = std::min(chunk, n - c * chunk);
                for (std::int64_t s = 0; s < m; ++s) {
                    double x = 0.0;
                    for (int j = 0; j < grid.n_steps; ++j) {
                        double dx = sdt * rng.gaussian(), dy = sdt * rng.gaussian();
                        x += ctrl[j].x * dx + ctrl[j].y * dy;
                    }
                    accs[c].e.add(std::exp(x - 0.5 * eg));
                    accs[c].x2.add(x * x);
                    accs[c].x4.add(x * x * x * x);
                }
            });
            StatAcc e, x2, x4;
            for (auto& a : accs) {
                e.merge(a.e);
                x2.merge(a.x2);
                x4.merge(a.x4);
            }
            out.push_back(make_check(std::string("stochexp.mean_") + cs.name, e.mean(), 1.0,
                                     3 * e.stderr_of_mean(), seed));
            double var = x2.mean();
            double se_var = std::sqrt(std::max(x4.mean() - var * var, 0.0) / x2.n);
            out.push_back(make_check(std::string("stochexp.var_") + cs.name, var, eg,
                                     3 * se_var, seed));
        }
    }

    // Girsanov: naive and importance tube estimates agree (feasible radius)
    {
        Seed seed{root, 20};
        TimeGrid grid(512);
        HorizontalPath phi = lift_control(line_control(grid, 1, 0));
        const std::int64_t n = 400000;
        auto nv = tube_probability_ladder(phi, TubeMethod::Naive, {0.8}, n, seed, workers)[0];
        auto is = tube_probability_ladder(phi, TubeMethod::Importance, {0.8}, n, seed, workers)[0];
        double comb = std::sqrt(nv.std_err * nv.std_err + is.std_err * is.std_err);
        out.push_back(make_check("girsanov.tube_agreement", nv.p_hat - is.p_hat, 0.0,
                                 3 * comb, seed));
    }

    // change of measure: mean weight is one, shift undone by reweighting
    {
        Seed seed{root, 21};
        TimeGrid grid(256);
        HorizontalPath gam = lift_control(line_control(grid, 2, 0));
        StatAcc w, wx;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            NoisePath b = sample_noise(grid, seed.substream(static_cast<std::uint64_t>(i)));
            ShiftedNoise sn = cameron_martin_shift(gam, b);
            w.add(sn.weight);
            wx.add(sn.weight * sn.shifted.cumulative.back().x);
        }
        out.push_back(make_check("girsanov.mean_weight", w.mean(), 1.0,
                                 3 * w.stderr_of_mean(), seed));
        out.push_back(make_check("girsanov.weighted_shifted_mean", wx.mean(), 0.0,
                                 3 * wx.stderr_of_mean(), seed));
    }

    // pathwise monotonicity of the tube estimate under common random numbers
    {
        Seed seed{root, 22};
        TimeGrid grid(256);
        HorizontalPath e = lift_control(constant_control(grid));
        auto ladder = tube_probability_ladder(e, TubeMethod::Naive,
                                              {0.6, 0.8, 1.0, 1.4, 2.0}, 20000, seed, workers);
        double viol = 0.0;
        for (std::size_t i = 1; i < ladder.size(); ++i)
            if (ladder[i].hits < ladder[i - 1].hits) viol = 1.0;
        out.push_back(make_check("estimator.monotone_in_epsilon", viol, 0.0, 0.0, seed));
    }

    // reproducibility under different worker counts
    {
        Seed seed{root, 23};
        TimeGrid grid(128);
        HorizontalPath e = lift_control(constant_control(grid));
        auto a = tube_probability_ladder(e, TubeMethod::Importance, {1.0}, 50000, seed, 1)[0];
        auto b = tube_probability_ladder(e, TubeMethod::Importance, {1.0}, 50000, seed, 4)[0];
        double diff = (a.p_hat == b.p_hat && a.std_err == b.std_err &&
                       a.hits == b.hits) ? 0.0 : 1.0;
        out.push_back(make_check("estimator.worker_invariance", diff, 0.0, 0.0, seed));
    }
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

json seed_json(const Seed& s) {
    return json{{"root", s.root}, {"stream", s.stream}};
}

json tube_json(const TubeEstimate& t) {
    return json{{"p_hat", t.p_hat},
                {"std_err", t.std_err},
                {"hits", t.hits},
                {"ess", t.ess},
                {"epsilon", t.epsilon},
                {"n_samples", t.n_samples},
                {"n_steps", t.n_steps},
                {"method", t.method == TubeMethod::Naive ? "naive" : "importance"},
                {"seed", seed_json(t.seed)}};
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text(const std::string& path, const std::string& content) {
    atomic_write_file(path, content);
}

struct OutputSet {
    fs::path dir;
    std::vector<std::string> names;

    void write(const std::string& name, const std::string& content) {
        write_text((dir / name).string(), content);
        names.push_back(name);
    }
};

std::string resolve_output_dir(const ExperimentConfig& c) {
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv("HEISMC_OUT"); env && *env) return env;
    return "out";
}

json validation_json(const ValidationReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back(json{{"name", c.name},
                              {"observed", c.observed},
                              {"expected", c.expected},
                              {"tolerance", c.tolerance},
                              {"pass", c.pass},
                              {"seed", json{{"root", c.seed_root}, {"stream", c.seed_stream}}}});
    return json{{"level", rep.level}, {"passed", rep.passed}, {"checks", checks}};
}

}  // namespace

ValidationReport validate_suite(const std::string& level, std::uint64_t seed,
                                int workers) {
    if (level != "fast" && level != "full")
        throw ConfigError("validate: level must be \"fast\" or \"full\"");
    ValidationReport rep;
    rep.level = level;
    algebra_checks(seed, rep.checks);
    path_checks(seed, rep.checks);
    geodesic_fast_checks(seed, rep.checks);
    if (level == "full") statistical_checks(seed, workers, rep.checks);
    rep.passed = true;
    for (const auto& c : rep.checks)
        if (!c.pass) rep.passed = false;
    return rep;
}

RunManifest run_experiment(const ExperimentConfig& config) {
    auto t0 = std::chrono::steady_clock::now();
    RunManifest manifest;
    manifest.kind = to_string(config.kind);

    OutputSet out;
    out.dir = resolve_output_dir(config);
    fs::create_directories(out.dir);

    TimeGrid grid(config.n_steps);
    Seed seed{config.seed, 0};

    json results;
    results["artifact"] = kArtifactVersion;
    results["kind"] = to_string(config.kind);
    results["seed"] = seed_json(seed);
    results["n_steps"] = config.n_steps;
    results["n_samples"] = config.n_samples;

    switch (config.kind) {
        case ExperimentKind::Validate: {
            ValidationReport rep = validate_suite(config.validate_level, config.seed,
                                                  config.workers);
            results["validate"] = validation_json(rep);
            std::ostringstream csv;
            csv << "name,observed,expected,tolerance,pass,seed_root,seed_stream\n";
            for (const auto& c : rep.checks)
                csv << c.name << ',' << fmt_double(c.observed) << ','
                    << fmt_double(c.expected) << ',' << fmt_double(c.tolerance) << ','
                    << (c.pass ? 1 : 0) << ',' << c.seed_root << ',' << c.seed_stream
                    << '\n';
            out.write("validate.csv", csv.str());
            if (!rep.passed) {
                manifest.numerical_failure = true;
                manifest.failure_note = "validation checks failed";
            }
            break;
        }
        case ExperimentKind::Tube: {
            TubeQuery q;
            q.curve = lift_control(parse_curve_spec(config.phi, grid));
            q.epsilon = config.tube_epsilon;
            q.n_samples = config.n_samples;
            q.seed = seed;
            q.method = config.tube_method == "naive" ? TubeMethod::Naive
                                                     : TubeMethod::Importance;
            q.workers = config.workers;
            TubeEstimate est = tube_probability(q);
            results["tube"] = tube_json(est);
            std::ostringstream csv;
            csv << "epsilon,method,p_hat,std_err,hits,ess\n";
            csv << fmt_double(est.epsilon) << ',' << config.tube_method << ','
                << fmt_double(est.p_hat) << ',' << fmt_double(est.std_err) << ','
                << est.hits << ',' << fmt_double(est.ess) << '\n';
            out.write("tube.csv", csv.str());
            if (config.tube_dump) {
                // audit dump of the first sampled path (chunk 0, draw 0)
                NoisePath noise = sample_noise(grid, seed.substream(0));
                if (q.method == TubeMethod::Importance)
                    noise = cameron_martin_shift(q.curve, noise).shifted;
                DiffusionPath g = heis_bm(noise);
                std::ostringstream dump;
                dump << "t,W1,W2,x,y,z\n";
                for (int i = 0; i < grid.n_nodes(); ++i)
                    dump << fmt_double(grid.node(i)) << ','
                         << fmt_double(noise.cumulative[i].x) << ','
                         << fmt_double(noise.cumulative[i].y) << ','
                         << fmt_double(g.points[i].x) << ',' << fmt_double(g.points[i].y)
                         << ',' << fmt_double(g.points[i].z) << '\n';
                out.write("sample_path.csv", dump.str());
            }
            if (est.hits == 0) {
                manifest.numerical_failure = true;
                manifest.failure_note =
                    "zero hits: the tube radius is too small for this sample size";
            }
            break;
        }
        case ExperimentKind::OmRatio: {
            HorizontalPath phi = lift_control(parse_curve_spec(config.phi, grid));
            HorizontalPath psi = lift_control(parse_curve_spec(config.psi, grid));
            auto rows = om_ratio(phi, psi, config.epsilons, config.n_samples, seed,
                                 config.workers);
            json arr = json::array();
            std::ostringstream csv;
            csv << "epsilon,log_ratio_hat,std_err,theory_log_ratio,phi_p_hat,phi_hits,"
                   "psi_p_hat,psi_hits,failed\n";
            for (const auto& r : rows) {
                arr.push_back(json{{"epsilon", r.epsilon},
                                   {"log_ratio_hat", r.log_ratio_hat},
                                   {"std_err", r.std_err},
                                   {"theory_log_ratio", r.theory_log_ratio},
                                   {"phi", tube_json(r.phi_estimate)},
                                   {"psi", tube_json(r.psi_estimate)},
                                   {"failed", r.failed},
                                   {"failure", r.failure}});
                csv << fmt_double(r.epsilon) << ',' << fmt_double(r.log_ratio_hat) << ','
                    << fmt_double(r.std_err) << ',' << fmt_double(r.theory_log_ratio)
                    << ',' << fmt_double(r.phi_estimate.p_hat) << ','
                    << r.phi_estimate.hits << ',' << fmt_double(r.psi_estimate.p_hat)
                    << ',' << r.psi_estimate.hits << ',' << (r.failed ? 1 : 0) << '\n';
                if (r.failed) {
                    manifest.numerical_failure = true;
                    manifest.failure_note = r.failure;
                }
            }
            results["om_ratio"] = arr;
            out.write("om_ratio.csv", csv.str());
            break;
        }
        case ExperimentKind::Conditional: {
            HorizontalPath gam = lift_control(parse_curve_spec(config.gamma, grid));
            HorizontalPath phi = lift_control(parse_curve_spec(config.phi, grid));
            auto rows = conditional_exponential_ladder(gam, phi, config.epsilons,
                                                       config.n_samples, seed,
                                                       config.workers);
            json arr = json::array();
            std::ostringstream csv;
            csv << "epsilon,estimate,std_err,theory,hits,failed\n";
            for (const auto& r : rows) {
                arr.push_back(json{{"epsilon", r.epsilon},
                                   {"estimate", r.estimate},
                                   {"std_err", r.std_err},
                                   {"theory", r.theory},
                                   {"hits", r.hits},
                                   {"failed", r.failed},
                                   {"failure", r.failure}});
                csv << fmt_double(r.epsilon) << ',' << fmt_double(r.estimate) << ','
                    << fmt_double(r.std_err) << ',' << fmt_double(r.theory) << ','
                    << r.hits << ',' << (r.failed ? 1 : 0) << '\n';
                if (r.failed) {
                    manifest.numerical_failure = true;
                    manifest.failure_note = r.failure;
                }
            }
            results["conditional"] = arr;
            out.write("conditional.csv", csv.str());
            break;
        }
        case ExperimentKind::Geodesic: {
            GeodesicOptions opts;
            opts.grid = TimeGrid(config.geo_grid);
            opts.multistarts = config.multistarts;
            opts.mu0 = config.mu0;
            opts.mu_stages = config.mu_stages;
            opts.max_iters = config.max_iters;
            opts.tolerance = config.geo_tolerance;
            opts.seed = seed;
            opts.workers = config.workers;
            GeodesicResult res = cc_distance(identity(), config.target, opts);
            results["geodesic"] =
                json{{"target", {config.target.x, config.target.y, config.target.z}},
                     {"distance", res.length},
                     {"energy", res.energy},
                     {"endpoint_error", res.endpoint_error},
                     {"converged", res.converged},
                     {"iterations", res.iterations},
                     {"om_integral", res.om_integral},
                     {"seed", seed_json(seed)}};
            {
                std::ostringstream csv;
                csv << "t,x,y,z\n";
                for (int i = 0; i < res.path.grid.n_nodes(); ++i) {
                    const GroupElement& g = res.path.points[i];
                    csv << fmt_double(res.path.grid.node(i)) << ',' << fmt_double(g.x)
                        << ',' << fmt_double(g.y) << ',' << fmt_double(g.z) << '\n';
                }
                out.write("geodesic_path.csv", csv.str());
            }
            if (!res.converged) {
                manifest.numerical_failure = true;
                manifest.failure_note = "geodesic did not reach the endpoint tolerance";
            }
            break;
        }
        case ExperimentKind::Equivalence: {
            GeodesicOptions opts;
            opts.grid = TimeGrid(config.geo_grid);
            opts.multistarts = config.multistarts;
            opts.mu0 = config.mu0;
            opts.mu_stages = config.mu_stages;
            opts.max_iters = config.max_iters;
            opts.tolerance = config.geo_tolerance;
            opts.workers = config.workers;
            EquivalenceEstimate est =
                equivalence_constants(config.eq_points, config.eq_box, seed, opts);
            results["equivalence"] = json{{"c_hat", est.c_hat},
                                          {"C_hat", est.big_c_hat},
                                          {"n_used", est.n_used},
                                          {"n_failed", est.n_failed},
                                          {"n_degenerate", est.n_degenerate},
                                          {"n_points", config.eq_points},
                                          {"box", config.eq_box},
                                          {"seed", seed_json(seed)}};
            std::ostringstream csv;
            csv << "index,ratio\n";
            for (std::size_t i = 0; i < est.ratios.size(); ++i)
                csv << i << ',' << fmt_double(est.ratios[i]) << '\n';
            out.write("equivalence.csv", csv.str());
            if (est.n_used == 0 || !(est.c_hat > 0.0)) {
                manifest.numerical_failure = true;
                manifest.failure_note = "equivalence scan produced no usable ratios";
            }
            break;
        }
    }

    out.write("results.json", results.dump(2) + "\n");

    auto t1 = std::chrono::steady_clock::now();
    manifest.wall_clock_sec = std::chrono::duration<double>(t1 - t0).count();

    json mj;
    mj["artifact"] = kArtifactVersion;
    mj["kind"] = to_string(config.kind);
    mj["wall_clock_sec"] = manifest.wall_clock_sec;
    mj["numerical_failure"] = manifest.numerical_failure;
    mj["failure_note"] = manifest.failure_note;
    mj["config"] = config.raw;
    json files = json::array();
    for (const std::string& name : out.names) {
        fs::path p = out.dir / name;
        ManifestFile mf;
        mf.name = name;
        mf.sha256 = sha256_file(p.string());
        mf.bytes = static_cast<std::uint64_t>(fs::file_size(p));
        manifest.files.push_back(mf);
        files.push_back(json{{"file", mf.name}, {"sha256", mf.sha256}, {"bytes", mf.bytes}});
    }
    mj["files"] = files;
    fs::path mpath = out.dir / "manifest.json";
    atomic_write_file(mpath.string(), mj.dump(2) + "\n");
    manifest.manifest_path = mpath.string();
    return manifest;
}

std::string emit_report(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("report: cannot open " + manifest_path);
    json mj = json::parse(in);
    fs::path dir = fs::path(manifest_path).parent_path();
    fs::path results_path = dir / "results.json";
    std::ifstream rin(results_path);
    if (!rin) throw std::runtime_error("report: missing " + results_path.string());
    json res = json::parse(rin);

    std::ostringstream os;
    std::string kind = res.value("kind", "?");
    os << "experiment: " << kind << "   (" << mj.value("artifact", "?") << ")\n";
    os << "wall clock: " << mj.value("wall_clock_sec", 0.0) << " s\n\n";

    auto zline = [](double est, double se, double theory) {
        double z = se > 0.0 ? (est - theory) / se : 0.0;
        return z;
    };

    if (kind == "om-ratio") {
        os << "  epsilon   log_ratio    stderr     theory         z\n";
        for (const auto& r : res["om_ratio"]) {
            if (r.value("failed", false)) {
                os << "  " << r["epsilon"].get<double>() << "  FAILED: "
                   << r.value("failure", "") << "\n";
                continue;
            }
            double est = r["log_ratio_hat"], se = r["std_err"], th = r["theory_log_ratio"];
            char line[160];
            std::snprintf(line, sizeof(line), "  %7.4f  %10.4f  %8.4f  %9.4f  %8.2f\n",
                          r["epsilon"].get<double>(), est, se, th, zline(est, se, th));
            os << line;
        }
    } else if (kind == "conditional") {
        os << "  epsilon   estimate    stderr     theory         z     hits\n";
        for (const auto& r : res["conditional"]) {
            if (r.value("failed", false)) {
                os << "  " << r["epsilon"].get<double>() << "  FAILED: "
                   << r.value("failure", "") << "\n";
                continue;
            }
            double est = r["estimate"], se = r["std_err"], th = r["theory"];
            char line[160];
            std::snprintf(line, sizeof(line), "  %7.4f  %9.4f  %8.4f  %9.4f  %8.2f  %lld\n",
                          r["epsilon"].get<double>(), est, se, th, zline(est, se, th),
                          static_cast<long long>(r["hits"].get<std::int64_t>()));
            os << line;
        }
    } else if (kind == "tube") {
        const auto& t = res["tube"];
        os << "  epsilon=" << t["epsilon"].get<double>() << " method="
           << t["method"].get<std::string>() << "\n  p_hat=" << t["p_hat"].get<double>()
           << " stderr=" << t["std_err"].get<double>() << " hits="
           << t["hits"].get<std::int64_t>() << " ess=" << t["ess"].get<double>() << "\n";
    } else if (kind == "geodesic") {
        const auto& g = res["geodesic"];
        os << "  target=(" << g["target"][0].get<double>() << ", "
           << g["target"][1].get<double>() << ", " << g["target"][2].get<double>() << ")\n"
           << "  distance=" << g["distance"].get<double>()
           << " energy=" << g["energy"].get<double>()
           << " endpoint_error=" << g["endpoint_error"].get<double>()
           << " converged=" << (g["converged"].get<bool>() ? "yes" : "no")
           << " iterations=" << g["iterations"].get<std::int64_t>() << "\n";
    } else if (kind == "equivalence") {
        const auto& e = res["equivalence"];
        os << "  c_hat=" << e["c_hat"].get<double>() << " C_hat="
           << e["C_hat"].get<double>() << " used=" << e["n_used"].get<int>()
           << " failed=" << e["n_failed"].get<int>() << "\n";
    } else if (kind == "validate") {
        const auto& v = res["validate"];
        os << "  level: " << v["level"].get<std::string>() << "\n";
        for (const auto& c : v["checks"]) {
            char line[220];
            std::snprintf(line, sizeof(line), "  %-38s %12.4e  tol %10.4e  %s\n",
                          c["name"].get<std::string>().c_str(),
                          std::fabs(c["observed"].get<double>() - c["expected"].get<double>()),
                          c["tolerance"].get<double>(),
                          c["pass"].get<bool>() ? "PASS" : "FAIL");
            os << line;
        }
        os << (v["passed"].get<bool>() ? "  all checks passed\n" : "  FAILURES present\n");
    }
    return os.str();
}

}  // namespace heis

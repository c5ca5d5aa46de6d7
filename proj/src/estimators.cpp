#include "heis/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "heis/util.hpp"

namespace heis {

namespace {

// fixed sampling block: one RNG substream per block, independent of the
// worker count, so estimates are bitwise reproducible under any scheduling
constexpr std::int64_t kChunk = 4096;

struct CurveCache {
    int n = 0;
    double dt = 0.0;
    std::vector<Vec2> xy;   // planar nodes, size n+1
    std::vector<double> z;  // vertical nodes, size n+1
    std::vector<Vec2> c;    // control on cells, size n
    double energy = 0.0;

    static CurveCache build(const HorizontalPath& p) {
        CurveCache k;
        k.n = p.grid.n_steps;
        k.dt = p.grid.dt();
        k.xy.resize(k.n + 1);
        k.z.resize(k.n + 1);
        for (int i = 0; i <= k.n; ++i) {
            k.xy[i] = p.points[i].planar();
            k.z[i] = p.points[i].z;
        }
        k.c = p.control.samples;
        k.energy = heis::energy(p.control);
        return k;
    }
};

struct EvalOut {
    double max_rho2 = 0.0;  // max over nodes of rho^2(u^curve_i, e)
    double weight = 1.0;    // Radon-Nikodym factor (1 when not shifted)
    double x_gamma = 0.0;   // sum <c_gamma, dW> over the evaluated noise
};

// Single pass over one sample. dB are root-measure increments; when `shift`
// is set the evaluated noise is dW_j = dB_j + c_j dt (Cameron-Martin shift by
// the curve itself) and the weight exp(-sum<c,dB> - E/2) maps weighted
// averages back to root-measure expectations. u is phi^{-1} g evaluated with
// the exact group operations, fused into the recursion for W and the area.
EvalOut eval_curve(const CurveCache& k, bool shift, const Vec2* dB,
                   const CurveCache* gamma) {
    double wx = 0.0, wy = 0.0, area = 0.0;
    double x_db = 0.0, x_g = 0.0, m = 0.0;
    const double dt = k.dt;
    for (int j = 0; j < k.n; ++j) {
        Vec2 d = dB[j];
        if (shift) {
            x_db += dot(k.c[j], d);
            d = d + dt * k.c[j];
        }
        if (gamma) x_g += dot(gamma->c[j], d);
        area += 0.5 * (wx * d.y - wy * d.x);
        wx += d.x;
        wy += d.y;
        const Vec2& px = k.xy[j + 1];
        double ux = wx - px.x;
        double uy = wy - px.y;
        double u3 = area - k.z[j + 1] - 0.5 * (px.x * wy - px.y * wx);
        double r2 = ux * ux + uy * uy + std::fabs(u3);
        if (r2 > m) m = r2;
    }
    EvalOut out;
    out.max_rho2 = m;
    out.weight = shift ? std::exp(-x_db - 0.5 * k.energy) : 1.0;
    out.x_gamma = x_g;
    return out;
}

void draw_increments(Rng& rng, double sqrt_dt, std::vector<Vec2>& dB) {
    for (auto& d : dB) d = {sqrt_dt * rng.gaussian(), sqrt_dt * rng.gaussian()};
}

struct CellAcc {
    std::int64_t hits = 0;
    double sw = 0.0;
    double sw2 = 0.0;
    void merge(const CellAcc& o) {
        hits += o.hits;
        sw += o.sw;
        sw2 += o.sw2;
    }
};

std::int64_t chunk_count(std::int64_t n) { return (n + kChunk - 1) / kChunk; }

std::int64_t chunk_size(std::int64_t chunk, std::int64_t n) {
    std::int64_t lo = chunk * kChunk;
    return std::min<std::int64_t>(kChunk, n - lo);
}

void validate_epsilons(const std::vector<double>& eps) {
    if (eps.empty()) throw std::invalid_argument("estimator: empty epsilon list");
    for (double e : eps)
        if (!(e > 0.0)) throw std::invalid_argument("estimator: epsilon must be > 0");
}

TubeEstimate finalize_tube(const CellAcc& cell, std::int64_t n, double sw_all,
                           double sw2_all, TubeMethod method, double eps,
                           int n_steps, Seed seed) {
    TubeEstimate est;
    est.epsilon = eps;
    est.n_samples = n;
    est.n_steps = n_steps;
    est.seed = seed;
    est.method = method;
    est.hits = cell.hits;
    est.p_hat = cell.sw / static_cast<double>(n);
    if (method == TubeMethod::Naive) {
        est.std_err = std::sqrt(std::max(est.p_hat * (1.0 - est.p_hat), 0.0) /
                                static_cast<double>(n));
        est.ess = static_cast<double>(n);
    } else {
        double var = n > 1 ? std::max(0.0, (cell.sw2 - n * est.p_hat * est.p_hat) /
                                               static_cast<double>(n - 1))
                           : 0.0;
        est.std_err = std::sqrt(var / static_cast<double>(n));
        est.ess = sw2_all > 0.0 ? sw_all * sw_all / sw2_all : 0.0;
    }
    return est;
}

}  // namespace

std::vector<TubeEstimate> tube_probability_ladder(const HorizontalPath& curve,
                                                  TubeMethod method,
                                                  const std::vector<double>& epsilons,
                                                  std::int64_t n_samples, Seed seed,
                                                  int workers) {
    validate_epsilons(epsilons);
    if (n_samples < 1) throw std::invalid_argument("tube_probability: n_samples >= 1");
    const CurveCache k = CurveCache::build(curve);
    const bool shift = (method == TubeMethod::Importance);
    const double sqrt_dt = std::sqrt(k.dt);
    const std::size_t ne = epsilons.size();

    struct ChunkOut {
        std::vector<CellAcc> cells;
        double sw_all = 0.0, sw2_all = 0.0;
    };
    const std::int64_t nc = chunk_count(n_samples);
    std::vector<ChunkOut> outs(nc);

    run_chunks(nc, workers, [&](std::int64_t c) {
        ChunkOut acc;
        acc.cells.resize(ne);
        Rng rng(seed.substream(static_cast<std::uint64_t>(c)));
        std::vector<Vec2> dB(k.n);
        const std::int64_t m = chunk_size(c, n_samples);
        for (std::int64_t s = 0; s < m; ++s) {
            draw_increments(rng, sqrt_dt, dB);
            EvalOut ev = eval_curve(k, shift, dB.data(), nullptr);
            acc.sw_all += ev.weight;
            acc.sw2_all += ev.weight * ev.weight;
            for (std::size_t i = 0; i < ne; ++i) {
                if (ev.max_rho2 < epsilons[i] * epsilons[i]) {
                    acc.cells[i].hits += 1;
                    acc.cells[i].sw += ev.weight;
                    acc.cells[i].sw2 += ev.weight * ev.weight;
                }
            }
        }
        outs[c] = std::move(acc);
    });

    std::vector<CellAcc> cells(ne);
    double sw_all = 0.0, sw2_all = 0.0;
    for (const auto& o : outs) {
        for (std::size_t i = 0; i < ne; ++i) cells[i].merge(o.cells[i]);
        sw_all += o.sw_all;
        sw2_all += o.sw2_all;
    }

    std::vector<TubeEstimate> result;
    result.reserve(ne);
    for (std::size_t i = 0; i < ne; ++i)
        result.push_back(finalize_tube(cells[i], n_samples, sw_all, sw2_all, method,
                                       epsilons[i], k.n, seed));
    return result;
}

TubeEstimate tube_probability(const TubeQuery& q) {
    return tube_probability_ladder(q.curve, q.method, {q.epsilon}, q.n_samples,
                                   q.seed, q.workers)[0];
}

std::vector<RatioEstimate> om_ratio(const HorizontalPath& phi,
                                    const HorizontalPath& psi,
                                    const std::vector<double>& epsilons,
                                    std::int64_t n_samples, Seed seed, int workers) {
    validate_epsilons(epsilons);
    if (n_samples < 1) throw std::invalid_argument("om_ratio: n_samples >= 1");
    require_same_grid(phi.grid, psi.grid, "om_ratio");
    const CurveCache kp = CurveCache::build(phi);
    const CurveCache kq = CurveCache::build(psi);
    const double sqrt_dt = std::sqrt(kp.dt);
    const std::size_t ne = epsilons.size();

    struct PairAcc {
        CellAcc phi, psi;
        double cross = 0.0;
        void merge(const PairAcc& o) {
            phi.merge(o.phi);
            psi.merge(o.psi);
            cross += o.cross;
        }
    };
    struct ChunkOut {
        std::vector<PairAcc> cells;
        double swp = 0.0, swp2 = 0.0, swq = 0.0, swq2 = 0.0;
    };
    const std::int64_t nc = chunk_count(n_samples);
    std::vector<ChunkOut> outs(nc);

    run_chunks(nc, workers, [&](std::int64_t c) {
        ChunkOut acc;
        acc.cells.resize(ne);
        Rng rng(seed.substream(static_cast<std::uint64_t>(c)));
        std::vector<Vec2> dB(kp.n);
        const std::int64_t m = chunk_size(c, n_samples);
        for (std::int64_t s = 0; s < m; ++s) {
            draw_increments(rng, sqrt_dt, dB);
            EvalOut ep = eval_curve(kp, true, dB.data(), nullptr);
            EvalOut eq = eval_curve(kq, true, dB.data(), nullptr);
            acc.swp += ep.weight;
            acc.swp2 += ep.weight * ep.weight;
            acc.swq += eq.weight;
            acc.swq2 += eq.weight * eq.weight;
            for (std::size_t i = 0; i < ne; ++i) {
                const double e2 = epsilons[i] * epsilons[i];
                double wp = 0.0, wq = 0.0;
                if (ep.max_rho2 < e2) {
                    wp = ep.weight;
                    acc.cells[i].phi.hits += 1;
                    acc.cells[i].phi.sw += wp;
                    acc.cells[i].phi.sw2 += wp * wp;
                }
                if (eq.max_rho2 < e2) {
                    wq = eq.weight;
                    acc.cells[i].psi.hits += 1;
                    acc.cells[i].psi.sw += wq;
                    acc.cells[i].psi.sw2 += wq * wq;
                }
                acc.cells[i].cross += wp * wq;
            }
        }
        outs[c] = std::move(acc);
    });

    std::vector<PairAcc> cells(ne);
    double swp = 0.0, swp2 = 0.0, swq = 0.0, swq2 = 0.0;
    for (const auto& o : outs) {
        for (std::size_t i = 0; i < ne; ++i) cells[i].merge(o.cells[i]);
        swp += o.swp;
        swp2 += o.swp2;
        swq += o.swq;
        swq2 += o.swq2;
    }

    const double theory = -0.5 * kp.energy + 0.5 * kq.energy;
    const double nd = static_cast<double>(n_samples);
    std::vector<RatioEstimate> result;
    result.reserve(ne);
    for (std::size_t i = 0; i < ne; ++i) {
        RatioEstimate r;
        r.epsilon = epsilons[i];
        r.theory_log_ratio = theory;
        r.phi_estimate = finalize_tube(cells[i].phi, n_samples, swp, swp2,
                                       TubeMethod::Importance, epsilons[i], kp.n, seed);
        r.psi_estimate = finalize_tube(cells[i].psi, n_samples, swq, swq2,
                                       TubeMethod::Importance, epsilons[i], kq.n, seed);
        if (cells[i].phi.hits == 0 || cells[i].psi.hits == 0) {
            r.failed = true;
            r.failure = "zero hits at epsilon=" + std::to_string(epsilons[i]) +
                        " (phi hits=" + std::to_string(cells[i].phi.hits) +
                        ", psi hits=" + std::to_string(cells[i].psi.hits) + ")";
            result.push_back(std::move(r));
            continue;
        }
        double pp = r.phi_estimate.p_hat;
        double pq = r.psi_estimate.p_hat;
        r.log_ratio_hat = std::log(pp) - std::log(pq);
        double vp = (cells[i].phi.sw2 - nd * pp * pp) / (nd - 1.0);
        double vq = (cells[i].psi.sw2 - nd * pq * pq) / (nd - 1.0);
        double cov = (cells[i].cross - nd * pp * pq) / (nd - 1.0);
        double var_log =
            vp / (nd * pp * pp) + vq / (nd * pq * pq) - 2.0 * cov / (nd * pp * pq);
        r.std_err = std::sqrt(std::max(var_log, 0.0));
        result.push_back(std::move(r));
    }
    return result;
}

std::vector<ConditionalEstimate> conditional_exponential_ladder(
    const HorizontalPath& gamma, const HorizontalPath& phi,
    const std::vector<double>& epsilons, std::int64_t n_samples, Seed seed,
    int workers) {
    if (epsilons.empty())
        throw std::invalid_argument("conditional_exponential: empty epsilon list");
    for (double e : epsilons)
        if (!(e > 0.0))
            throw std::invalid_argument("conditional_exponential: epsilon must be > 0");
    if (n_samples < 1)
        throw std::invalid_argument("conditional_exponential: n_samples >= 1");
    require_same_grid(gamma.grid, phi.grid, "conditional_exponential");
    const CurveCache kp = CurveCache::build(phi);
    const CurveCache kg = CurveCache::build(gamma);
    const double sqrt_dt = std::sqrt(kp.dt);
    const std::size_t ne = epsilons.size();

    struct CondCell {
        std::int64_t hits = 0;
        double sd = 0.0, sd2 = 0.0;  // w 1_A
        double sn = 0.0, sn2 = 0.0;  // w E^gamma 1_A
        double cross = 0.0;
        void merge(const CondCell& o) {
            hits += o.hits;
            sd += o.sd;
            sd2 += o.sd2;
            sn += o.sn;
            sn2 += o.sn2;
            cross += o.cross;
        }
    };
    const std::int64_t nc = chunk_count(n_samples);
    std::vector<std::vector<CondCell>> outs(nc);

    run_chunks(nc, workers, [&](std::int64_t c) {
        std::vector<CondCell> acc(ne);
        Rng rng(seed.substream(static_cast<std::uint64_t>(c)));
        std::vector<Vec2> dB(kp.n);
        const std::int64_t m = chunk_size(c, n_samples);
        for (std::int64_t s = 0; s < m; ++s) {
            draw_increments(rng, sqrt_dt, dB);
            EvalOut ev = eval_curve(kp, true, dB.data(), &kg);
            // E^gamma evaluated on the shifted noise, which plays the role of
            // the root Brownian motion in the conditioned expectation
            double eg = std::exp(ev.x_gamma - 0.5 * kg.energy);
            for (std::size_t i = 0; i < ne; ++i) {
                bool hit = std::isinf(epsilons[i]) ||
                           ev.max_rho2 < epsilons[i] * epsilons[i];
                if (!hit) continue;
                double d = ev.weight;
                double nmr = ev.weight * eg;
                acc[i].hits += 1;
                acc[i].sd += d;
                acc[i].sd2 += d * d;
                acc[i].sn += nmr;
                acc[i].sn2 += nmr * nmr;
                acc[i].cross += d * nmr;
            }
        }
        outs[c] = std::move(acc);
    });

    std::vector<CondCell> cells(ne);
    for (const auto& o : outs)
        for (std::size_t i = 0; i < ne; ++i) cells[i].merge(o[i]);

    const double theory =
        std::exp(inner_product(gamma, phi) - 0.5 * kg.energy);
    const double nd = static_cast<double>(n_samples);
    std::vector<ConditionalEstimate> result;
    result.reserve(ne);
    for (std::size_t i = 0; i < ne; ++i) {
        ConditionalEstimate ce;
        ce.epsilon = epsilons[i];
        ce.theory = theory;
        ce.hits = cells[i].hits;
        ce.n_samples = n_samples;
        ce.seed = seed;
        if (cells[i].hits == 0) {
            ce.failed = true;
            ce.failure = "zero hits at epsilon=" + std::to_string(epsilons[i]);
            result.push_back(std::move(ce));
            continue;
        }
        double dbar = cells[i].sd / nd;
        double nbar = cells[i].sn / nd;
        double r = nbar / dbar;
        ce.estimate = r;
        if (n_samples > 1) {
            double vd = (cells[i].sd2 - nd * dbar * dbar) / (nd - 1.0);
            double vn = (cells[i].sn2 - nd * nbar * nbar) / (nd - 1.0);
            double cnd = (cells[i].cross - nd * nbar * dbar) / (nd - 1.0);
            double var_r = (vn - 2.0 * r * cnd + r * r * vd) / (nd * dbar * dbar);
            ce.std_err = std::sqrt(std::max(var_r, 0.0));
        }
        result.push_back(std::move(ce));
    }
    return result;
}

ConditionalEstimate conditional_exponential(const HorizontalPath& gamma,
                                            const HorizontalPath& phi,
                                            double epsilon, std::int64_t n_samples,
                                            Seed seed, int workers) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("conditional_exponential: epsilon must be > 0");
    return conditional_exponential_ladder(gamma, phi, {epsilon}, n_samples, seed,
                                          workers)[0];
}

Lemma44Result lemma44_check(const HorizontalPath& psi, const HorizontalPath& phi,
                            double epsilon, std::int64_t n_conditioned, Seed seed,
                            int workers) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("lemma44_check: epsilon must be > 0");
    if (n_conditioned < 1)
        throw std::invalid_argument("lemma44_check: n_conditioned >= 1");
    require_same_grid(psi.grid, phi.grid, "lemma44_check");

    const CurveCache kp = CurveCache::build(psi);
    HorizontalPath gamma = correction_curve(phi, psi);
    const double c_gamma = l1_control_norm(gamma);
    const double bound = 3.0 * epsilon * epsilon + epsilon * c_gamma;
    const std::vector<Vec2>& cg = gamma.control.samples;

    const int n = kp.n;
    const double dt = kp.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double e2 = epsilon * epsilon;

    struct WaveOut {
        std::int64_t cond_u = 0, cond_z = 0, viol_uz = 0, viol_zu = 0,
                     attempts = 0;
        void merge(const WaveOut& o) {
            cond_u += o.cond_u;
            cond_z += o.cond_z;
            viol_uz += o.viol_uz;
            viol_zu += o.viol_zu;
            attempts += o.attempts;
        }
    };

    // Conditioned paths are built, not rescued from the tails: the noise is
    // psi_planar plus a Brownian path dilated to sup radius s*eps (s < 1), so
    // the planar part of u^psi lands inside the ball by construction and only
    // the area coordinate is left to rejection.
    auto run_wave_chunk = [&](std::uint64_t stream, WaveOut& w) {
        Rng rng(Seed{seed.root, stream});
        std::vector<Vec2> dB(n);
        std::vector<Vec2> u_planar(n + 1);
        std::vector<double> u3(n + 1), z3(n + 1);
        for (int attempt = 0; attempt < kChunk; ++attempt) {
            ++w.attempts;
            draw_increments(rng, sqrt_dt, dB);
            // sup planar radius of the raw Brownian path
            double bx = 0.0, by = 0.0, rmax = 0.0;
            for (int j = 0; j < n; ++j) {
                bx += dB[j].x;
                by += dB[j].y;
                double r = std::sqrt(bx * bx + by * by);
                if (r > rmax) rmax = r;
            }
            double s = 0.05 + 0.45 * rng.uniform();
            double lambda = rmax > 1e-300 ? s * epsilon / rmax : 0.0;
            // noise = psi' dt + lambda dB; u^psi via exact group operations
            double wx = 0.0, wy = 0.0, area = 0.0, corr = 0.0;
            u_planar[0] = {0.0, 0.0};
            u3[0] = 0.0;
            z3[0] = 0.0;
            bool cond_u = true, cond_z = true;
            for (int j = 0; j < n; ++j) {
                Vec2 d{lambda * dB[j].x + dt * kp.c[j].x,
                       lambda * dB[j].y + dt * kp.c[j].y};
                corr += omega(u_planar[j], cg[j]) * dt;
                area += 0.5 * (wx * d.y - wy * d.x);
                wx += d.x;
                wy += d.y;
                const Vec2& px = kp.xy[j + 1];
                double ux = wx - px.x;
                double uy = wy - px.y;
                double uz = area - kp.z[j + 1] - 0.5 * (px.x * wy - px.y * wx);
                u_planar[j + 1] = {ux, uy};
                u3[j + 1] = uz;
                z3[j + 1] = uz + corr;
                double planar2 = ux * ux + uy * uy;
                if (planar2 + std::fabs(uz) >= e2) cond_u = false;
                if (planar2 + std::fabs(z3[j + 1]) >= e2) cond_z = false;
            }
            if (cond_u) {
                ++w.cond_u;
                for (int i = 0; i <= n; ++i) {
                    double r2 = dot(u_planar[i], u_planar[i]) + std::fabs(z3[i]);
                    if (!(r2 < bound)) ++w.viol_uz;
                }
            }
            if (cond_z) {
                ++w.cond_z;
                for (int i = 0; i <= n; ++i) {
                    double r2 = dot(u_planar[i], u_planar[i]) + std::fabs(u3[i]);
                    if (!(r2 < bound)) ++w.viol_zu;
                }
            }
        }
    };

    Lemma44Result res;
    res.requested = n_conditioned;
    res.c_gamma = c_gamma;
    res.bound = bound;

    constexpr int kWave = 16;  // chunks per wave, fixed for determinism
    const std::int64_t max_attempts =
        std::max<std::int64_t>(200 * n_conditioned, 1 << 20);
    std::uint64_t next_stream = seed.stream;
    while ((res.conditioned_u < n_conditioned || res.conditioned_z < n_conditioned) &&
           res.attempts < max_attempts) {
        std::vector<WaveOut> outs(kWave);
        run_chunks(kWave, workers, [&](std::int64_t c) {
            run_wave_chunk(next_stream + static_cast<std::uint64_t>(c), outs[c]);
        });
        next_stream += kWave;
        for (const auto& o : outs) {
            res.conditioned_u += o.cond_u;
            res.conditioned_z += o.cond_z;
            res.violations_u_to_z += o.viol_uz;
            res.violations_z_to_u += o.viol_zu;
            res.attempts += o.attempts;
        }
    }
    return res;
}

}  // namespace heis

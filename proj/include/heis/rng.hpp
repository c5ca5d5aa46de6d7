#pragma once

// Deterministic random streams. A (root, stream) pair fully determines every
// draw; substreams are decorrelated by splitmix64 before seeding the engine.
// Gaussians come from the Marsaglia polar method so the sampling algorithm is
// pinned by this code, not by the standard library.

#include <cstdint>
#include <random>

namespace heis {

struct Seed {
    std::uint64_t root = 0;
    std::uint64_t stream = 0;

    Seed substream(std::uint64_t k) const { return {root, stream + k}; }
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(Seed seed) {
        std::uint64_t s = seed.root;
        std::uint64_t a = splitmix64(s);
        s ^= 0x632be59bd9b4e019ULL + seed.stream * 0x9e3779b97f4a7c15ULL;
        std::uint64_t b = splitmix64(s);
        std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                          static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
        engine_.seed(seq);
    }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // uniform in (-1, 1)
    double uniform_sym() { return 2.0 * uniform() - 1.0; }

    // standard normal, polar method
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform_sym();
            v = uniform_sym();
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace heis

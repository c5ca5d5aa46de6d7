#pragma once

#include <stdexcept>

namespace heis {

// uniform grid on [0,1] with nodes t_i = i/n_steps, i = 0..n_steps
struct TimeGrid {
    int n_steps = 1;

    explicit TimeGrid(int n = 1) : n_steps(n) {
        if (n < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
    }

    double dt() const { return 1.0 / n_steps; }
    int n_nodes() const { return n_steps + 1; }
    double node(int i) const { return static_cast<double>(i) / n_steps; }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
        return a.n_steps == b.n_steps;
    }
    friend bool operator!=(const TimeGrid& a, const TimeGrid& b) {
        return !(a == b);
    }
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b,
                              const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

}  // namespace heis

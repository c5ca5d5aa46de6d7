#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace heis {

// streaming mean / variance accumulator with associative merge
struct StatAcc {
    std::int64_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double x) {
        ++n;
        sum += x;
        sumsq += x * x;
    }
    void merge(const StatAcc& o) {
        n += o.n;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    double mean() const { return n ? sum / n : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        double m = mean();
        double v = (sumsq - n * m * m) / (n - 1);
        return v > 0.0 ? v : 0.0;
    }
    double stderr_of_mean() const;
};

// Runs chunks 0..n_chunks-1 on a small worker pool and returns the per-chunk
// results ordered by chunk index, so any later reduction is independent of
// scheduling. workers <= 0 picks hardware concurrency.
void run_chunks(std::int64_t n_chunks, int workers,
                const std::function<void(std::int64_t)>& fn);

int resolve_workers(int workers);

// hex SHA-256 of a file's bytes
std::string sha256_file(const std::string& path);
std::string sha256_bytes(const void* data, std::size_t len);

// write-then-rename so readers never observe partial content
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace heis

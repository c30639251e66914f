#pragma once

// Wall-clock scaling of nll_lowrank in N at fixed rank.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "mgd/gaussian.hpp"
#include "mgd/rng.hpp"

namespace mgd {

struct BenchRow {
    Index n = 0;
    Index m = 0;
    double nanos = 0.0;  ///< median time of one nll_lowrank call
};

struct BenchOptions {
    int repetitions = 5;
    /// Each repetition evaluates roughly this many N-entries in total, so that
    /// small N still produce a measurable interval.
    std::uint64_t work_per_repetition = std::uint64_t{1} << 21;
    std::uint64_t seed = 42;
};

/**
 * Median of `repetitions` timed runs per N after one discarded warm-up pass.
 * Repetitions are interleaved across sizes (one pass times every N once), so
 * a burst of background load lands on all sizes instead of skewing one.
 */
inline std::vector<BenchRow> bench_nll_scaling(Index m, const std::vector<Index>& sizes,
                                               BenchOptions options = {}) {
    if (m < 0) throw DomainError("bench: rank must be >= 0");
    if (options.repetitions < 1) throw DomainError("bench: repetitions must be >= 1");
    struct Case {
        LowRankGaussian g;
        Vector z;
        std::uint64_t calls;
        std::vector<double> times;
    };
    std::vector<Case> cases;
    Rng rng(options.seed);
    for (Index n : sizes) {
        if (n < 1) throw DomainError("bench: N must be >= 1");
        LowRankGaussian g(rng.normal_vector(n), rng.normal_matrix(n, m), 1.0);
        Vector z = g.mu() + rng.normal_vector(n);
        const auto calls = std::max<std::uint64_t>(1, options.work_per_repetition / static_cast<std::uint64_t>(n));
        cases.push_back({std::move(g), std::move(z), calls, {}});
    }

    volatile double sink = 0.0;
    auto time_one = [&sink](const Case& c) {
        const auto start = std::chrono::steady_clock::now();
        for (std::uint64_t k = 0; k < c.calls; ++k) sink = sink + nll_lowrank(c.g, c.z);
        const auto stop = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::nano>(stop - start).count() / static_cast<double>(c.calls);
    };
    for (const Case& c : cases) time_one(c);
    for (int r = 0; r < options.repetitions; ++r) {
        for (Case& c : cases) c.times.push_back(time_one(c));
    }

    std::vector<BenchRow> rows;
    for (Case& c : cases) {
        auto mid = c.times.begin() + static_cast<std::ptrdiff_t>(c.times.size() / 2);
        std::nth_element(c.times.begin(), mid, c.times.end());
        rows.push_back({c.g.n(), m, *mid});
    }
    return rows;
}

/// Doubling sweep lo, 2 lo, ..., up to and including hi.
inline std::vector<Index> doubling_sweep(Index lo, Index hi) {
    if (lo < 1 || hi < lo) throw DomainError("bench: invalid sweep bounds");
    std::vector<Index> sizes;
    for (Index n = lo; n <= hi; n *= 2) sizes.push_back(n);
    return sizes;
}

/// time(row k+1) / time(row k) for consecutive rows.
inline std::vector<double> scaling_ratios(const std::vector<BenchRow>& rows) {
    std::vector<double> ratios;
    for (std::size_t k = 1; k < rows.size(); ++k) ratios.push_back(rows[k].nanos / rows[k - 1].nanos);
    return ratios;
}

}  // namespace mgd

#pragma once

// Seeded instances shared by the fit tests and the acceptance runner.

#include "mgd/fit.hpp"
#include "mgd/gaussian.hpp"
#include "mgd/rng.hpp"

namespace mgd::fixture {

struct Synthetic {
    LowRankGaussian truth;
    Matrix samples;  // N x K
};

/// N=16, M=2 ground truth with sigma 0.1 and `count` draws from it.
inline Synthetic synthetic_correlated(Index count = 10000, std::uint64_t seed = 2024) {
    Rng rng(seed);
    const Index n = 16;
    LowRankGaussian truth(rng.normal_vector(n), 0.5 * rng.normal_matrix(n, 2), 0.1);
    Matrix samples = stack_samples(sample(truth, rng, count));
    return {std::move(truth), std::move(samples)};
}

inline double relative_covariance_error(const LowRankGaussian& fitted, const LowRankGaussian& truth) {
    const Matrix a = dense_covariance(fitted).sigma_full();
    const Matrix b = dense_covariance(truth).sigma_full();
    return (a - b).norm() / b.norm();
}

}  // namespace mgd::fixture

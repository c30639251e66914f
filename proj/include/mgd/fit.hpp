#pragma once

// Direct maximum-likelihood fit of (mu, psi, sigma) to a set of depth samples
// by gradient descent with step halving.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mgd/calculus.hpp"
#include "mgd/gaussian.hpp"
#include "mgd/rng.hpp"

namespace mgd {

struct FitConfig {
    double step_size = 1e-2;
    Index iterations = 500;
    bool fit_sigma = false;
    std::uint64_t seed = 42;
    Index m = kDefaultRank;
    /// Fixed (or, with fit_sigma, initial) noise level. Unset: pooled sample std.
    std::optional<double> sigma;
    Index checkpoint_every = 10;
    /// Scale the mean and factor gradients by Sigma before stepping.
    bool precondition = true;
    /// Halvings tried before an iteration is declared stalled.
    int max_halvings = 60;

    void validate() const {
        if (!(step_size > 0.0) || step_size > 1.0) throw DomainError("FitConfig: step_size must be in (0, 1]");
        if (iterations < 1) throw DomainError("FitConfig: iterations must be >= 1");
        if (m < 0) throw DomainError("FitConfig: rank must be >= 0");
        if (checkpoint_every < 1) throw DomainError("FitConfig: checkpoint_every must be >= 1");
        if (sigma && (!(*sigma > 0.0) || !std::isfinite(*sigma))) {
            throw DomainError("FitConfig: sigma must be finite and > 0");
        }
    }
};

struct FitCheckpoint {
    Index iteration = 0;
    double mean_nll = 0.0;
    double step = 0.0;
};

struct FitResult {
    LowRankGaussian model;
    std::vector<FitCheckpoint> checkpoints;
    double final_nll = 0.0;
    Index iterations_run = 0;
    bool stalled = false;
};

/// Packs samples into an N x K matrix, one sample per column.
inline Matrix stack_samples(const std::vector<Vector>& samples) {
    if (samples.empty()) throw DomainError("stack_samples: no samples");
    const Index n = samples.front().size();
    if (n == 0) throw DimensionError("stack_samples: zero-length sample");
    Matrix out(n, static_cast<Index>(samples.size()));
    for (std::size_t k = 0; k < samples.size(); ++k) {
        if (samples[k].size() != n) {
            throw DimensionError("stack_samples: sample " + std::to_string(k) + " has length " +
                                 std::to_string(samples[k].size()) + ", expected " + std::to_string(n));
        }
        out.col(static_cast<Index>(k)) = samples[k];
    }
    return out;
}

/// Sigma X = psi (psi^T X) + sigma^2 X, O(NM * cols).
inline Matrix covariance_times(const LowRankGaussian& g, const Eigen::Ref<const Matrix>& x) {
    return g.psi() * (g.psi().transpose() * x) + (g.sigma() * g.sigma()) * x;
}

inline FitResult fit_mle(const Eigen::Ref<const Matrix>& samples, const FitConfig& config) {
    config.validate();
    if (samples.cols() < 2) throw DomainError("fit_mle: need at least 2 samples");
    if (!samples.allFinite()) throw NumericError("fit_mle: non-finite sample values");

    const Index n = samples.rows();
    const Vector mean = samples.rowwise().mean();
    double sigma = 0.0;
    if (config.sigma) {
        sigma = *config.sigma;
    } else {
        const Matrix centered = samples.colwise() - mean;
        sigma = std::sqrt(centered.squaredNorm() /
                          (static_cast<double>(n) * static_cast<double>(samples.cols() - 1)));
        if (!(sigma > 0.0)) sigma = kDefaultSigma;
    }

    // Psi = 0 is a stationary point; start from small noise instead.
    Rng rng(config.seed);
    LowRankGaussian current(mean, 1e-2 * rng.normal_matrix(n, config.m), sigma);
    double current_nll = batch_nll(current, samples);

    FitResult result{current, {}, current_nll, 0, false};
    result.checkpoints.push_back({0, current_nll, config.step_size});

    constexpr double kArmijo = 1e-4;
    constexpr double kMaxStep = 1e6;
    double next_step = config.step_size;
    for (Index it = 1; it <= config.iterations; ++it) {
        NllGradient grad = batch_gradients(current, samples);
        double grad_sq = 0.0;
        if (config.precondition) {
            const Vector raw_mu = grad.d_mu;
            const Matrix raw_psi = grad.d_psi;
            grad.d_mu = covariance_times(current, raw_mu);
            grad.d_psi = covariance_times(current, raw_psi);
            grad_sq = raw_mu.dot(grad.d_mu) + (raw_psi.array() * grad.d_psi.array()).sum();
        } else {
            grad_sq = grad.d_mu.squaredNorm() + grad.d_psi.squaredNorm();
        }
        if (config.fit_sigma) grad_sq += std::pow(current.sigma() * grad.d_sigma, 2);
        double step = next_step;
        bool accepted = false;
        for (int attempt = 0; attempt <= config.max_halvings; ++attempt, step *= 0.5) {
            try {
                const double sigma_next =
                    config.fit_sigma ? std::exp(std::log(current.sigma()) - step * current.sigma() * grad.d_sigma)
                                     : current.sigma();
                LowRankGaussian trial(current.mu() - step * grad.d_mu, current.psi() - step * grad.d_psi, sigma_next);
                const double trial_nll = batch_nll(trial, samples);
                if (trial_nll <= current_nll - kArmijo * step * grad_sq) {
                    current = std::move(trial);
                    current_nll = trial_nll;
                    accepted = true;
                    next_step = std::min(2.0 * step, kMaxStep);
                    break;
                }
            } catch (const std::exception&) {
                // Overshoot into a non-finite or invalid region: treat as an increase.
            }
        }
        result.iterations_run = it;
        if (it % config.checkpoint_every == 0 || it == config.iterations || !accepted) {
            result.checkpoints.push_back({it, current_nll, accepted ? step : 0.0});
        }
        if (!accepted) {
            result.stalled = true;
            break;
        }
    }
    result.model = current;
    result.final_nll = current_nll;
    return result;
}

inline FitResult fit_mle(const std::vector<Vector>& samples, const FitConfig& config) {
    if (samples.size() < 2) throw DomainError("fit_mle: need at least 2 samples");
    return fit_mle(stack_samples(samples), config);
}

}  // namespace mgd

#pragma once

/**
 * @file fusion.hpp
 * @brief Equal-weight mixtures of low-rank Gaussians and their moment-matched fusion.
 *
 * An ensemble of S components (mu_s, psi_s, sigma) stands for the Monte Carlo
 * estimate of the parameter-marginalized predictive density. Its exact NLL is
 * a log-mean-exp over components. The single Gaussian with the same first two
 * moments has mean mean_s(mu_s) and covariance psi_bar psi_bar^T + sigma^2 I where
 *
 *     psi_bar = concat(psi_1, ..., psi_S, mu_1 - mu_bar, ..., mu_S - mu_bar) / sqrt(S).
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "mgd/gaussian.hpp"
#include "mgd/parallel.hpp"

namespace mgd {

class GaussianEnsemble {
public:
    explicit GaussianEnsemble(std::vector<LowRankGaussian> components)
        : components_(std::move(components)) {
        if (components_.empty()) throw DomainError("GaussianEnsemble: need at least one component");
        const LowRankGaussian& first = components_.front();
        for (std::size_t s = 1; s < components_.size(); ++s) {
            const LowRankGaussian& g = components_[s];
            if (g.n() != first.n() || g.m() != first.m()) {
                throw DimensionError("GaussianEnsemble: component " + std::to_string(s) +
                                     " has a different shape");
            }
            if (g.sigma() != first.sigma()) {
                throw DomainError("GaussianEnsemble: components must share sigma");
            }
        }
    }

    const std::vector<LowRankGaussian>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }
    Index n() const { return components_.front().n(); }
    Index m() const { return components_.front().m(); }
    double sigma() const { return components_.front().sigma(); }

    Vector mean() const {
        Vector mu = Vector::Zero(n());
        for (const auto& g : components_) mu += g.mu();
        return mu / static_cast<double>(size());
    }

private:
    std::vector<LowRankGaussian> components_;
};

/// -log((1/S) sum_s exp(-nll_s)), stabilized by the smallest component NLL.
inline double ensemble_nll(const GaussianEnsemble& e, const Eigen::Ref<const Vector>& z,
                           std::size_t threads = 1) {
    detail::require_same_length(e.n(), z.size(), "ensemble_nll");
    std::vector<double> nll(e.size());
    parallel_for(e.size(), threads, [&](std::size_t s) { nll[s] = nll_lowrank(e.components()[s], z); });
    const double best = *std::min_element(nll.begin(), nll.end());
    double acc = 0.0;
    for (double v : nll) acc += std::exp(best - v);
    return best - std::log(acc / static_cast<double>(e.size()));
}

/// Moment-matched single Gaussian; factor width S*M + S.
inline LowRankGaussian fuse(const GaussianEnsemble& e) {
    const auto s_count = static_cast<Index>(e.size());
    const Index n = e.n();
    const Index m = e.m();
    const Vector mu_bar = e.mean();
    const double scale = 1.0 / std::sqrt(static_cast<double>(s_count));
    Matrix psi_bar(n, s_count * m + s_count);
    for (Index s = 0; s < s_count; ++s) {
        const LowRankGaussian& g = e.components()[static_cast<std::size_t>(s)];
        psi_bar.middleCols(s * m, m) = scale * g.psi();
        psi_bar.col(s_count * m + s) = scale * (g.mu() - mu_bar);
    }
    return LowRankGaussian(mu_bar, std::move(psi_bar), e.sigma());
}

/// Keeps the `width` leading singular directions of the factor (U_k S_k), which
/// is the best rank-`width` approximation of psi psi^T. Widths >= current are a no-op.
inline LowRankGaussian truncate_rank(const LowRankGaussian& g, Index width) {
    if (width < 0) throw DomainError("truncate_rank: width must be >= 0");
    if (width >= g.m()) return g;
    if (width == 0) return LowRankGaussian::diagonal(g.mu(), g.sigma());
    Eigen::BDCSVD<Matrix> svd(g.psi(), Eigen::ComputeThinU);
    const Index keep = std::min(width, static_cast<Index>(svd.singularValues().size()));
    Matrix psi = svd.matrixU().leftCols(keep) * svd.singularValues().head(keep).asDiagonal();
    return LowRankGaussian(g.mu(), std::move(psi), g.sigma());
}

/// -log of an independent Gaussian with per-pixel standard deviations.
inline double diagonal_nll(const Eigen::Ref<const Vector>& mu, const Eigen::Ref<const Vector>& std_dev,
                           const Eigen::Ref<const Vector>& z) {
    detail::require_same_length(mu.size(), z.size(), "diagonal_nll");
    detail::require_same_length(mu.size(), std_dev.size(), "diagonal_nll");
    if (!(std_dev.array() > 0.0).all()) throw DomainError("diagonal_nll: std must be > 0");
    const Eigen::ArrayXd r = (z - mu).array() / std_dev.array();
    return 0.5 * static_cast<double>(mu.size()) * kLog2Pi + std_dev.array().log().sum() +
           0.5 * r.square().sum();
}

struct NllComparison {
    double fused = 0.0;     ///< NLL under fuse(e)
    double diagonal = 0.0;  ///< NLL under the independent baseline centered on the ensemble mean
    Index n = 0;

    double fused_per_pixel() const { return fused / static_cast<double>(n); }
    double diagonal_per_pixel() const { return diagonal / static_cast<double>(n); }
};

inline NllComparison nll_comparison(const GaussianEnsemble& e, const Eigen::Ref<const Vector>& z,
                                    const Eigen::Ref<const Vector>& baseline_std) {
    detail::require_same_length(e.n(), z.size(), "nll_comparison");
    detail::require_same_length(e.n(), baseline_std.size(), "nll_comparison");
    const LowRankGaussian fused = fuse(e);
    return {nll_lowrank(fused, z), diagonal_nll(fused.mu(), baseline_std, z), e.n()};
}

}  // namespace mgd

#pragma once

/**
 * @file calculus.hpp
 * @brief Exact NLL gradients, a central-difference checker and the multi-scale training loss.
 *
 * With r = z - mu, w = Sigma^-1 r and A the capacitance matrix:
 *
 *   dNLL/dmu    = -w
 *   dNLL/dpsi   = Sigma^-1 psi - w (w^T psi),   Sigma^-1 psi = sigma^-2 psi A^-1
 *   dNLL/dsigma = sigma (tr Sigma^-1 - w^T w),  tr Sigma^-1 = sigma^-2 (N - M + tr A^-1)
 *
 * The batched forms average these over the columns of a sample matrix.
 */

#include <algorithm>
#include <array>
#include <cmath>

#include "mgd/gaussian.hpp"

namespace mgd {

struct NllGradient {
    Vector d_mu;
    Matrix d_psi;
    double d_sigma = 0.0;
};

/// Mean NLL of the columns of `samples` (N x K).
inline double batch_nll(const LowRankGaussian& g, const Eigen::Ref<const Matrix>& samples) {
    if (samples.rows() != g.n()) throw DimensionError("batch_nll: sample length mismatch");
    if (samples.cols() == 0) throw DomainError("batch_nll: no samples");
    const double var = g.sigma() * g.sigma();
    const Matrix r = samples.colwise() - g.mu();
    const CholeskyWorkspace ws = CholeskyWorkspace::factor(g);
    const Matrix q = ws.forward(g.psi().transpose() * r);
    const auto k = static_cast<double>(samples.cols());
    const double n = static_cast<double>(g.n());
    const double quad = (r.squaredNorm() / var - q.squaredNorm() / (var * var)) / k;
    const double value = 0.5 * (n * (kLog2Pi + std::log(var)) + ws.log_det() + quad);
    if (!std::isfinite(value)) throw NumericError("batch_nll: non-finite result");
    return value;
}

/// Gradient of batch_nll with respect to (mu, psi, sigma); O(NMK + M^3).
inline NllGradient batch_gradients(const LowRankGaussian& g, const Eigen::Ref<const Matrix>& samples) {
    if (samples.rows() != g.n()) throw DimensionError("batch_gradients: sample length mismatch");
    if (samples.cols() == 0) throw DomainError("batch_gradients: no samples");
    const double var = g.sigma() * g.sigma();
    const double inv_var = 1.0 / var;
    const auto k = static_cast<double>(samples.cols());
    const Matrix r = samples.colwise() - g.mu();

    const CholeskyWorkspace ws = CholeskyWorkspace::factor(g);
    // A^-1 psi^T, M x N
    const Matrix a_inv_psi_t = ws.solve(g.psi().transpose());
    const Matrix w = inv_var * r - (inv_var * inv_var) * (g.psi() * (a_inv_psi_t * r));

    NllGradient grad;
    grad.d_mu = -w.rowwise().sum() / k;
    grad.d_psi = inv_var * a_inv_psi_t.transpose() - (w * (w.transpose() * g.psi())) / k;
    const double trace_a_inv =
        g.m() == 0 ? 0.0 : ws.solve(Matrix::Identity(g.m(), g.m())).trace();
    const double trace_sigma_inv =
        inv_var * (static_cast<double>(g.n() - g.m()) + trace_a_inv);
    grad.d_sigma = g.sigma() * (trace_sigma_inv - w.squaredNorm() / k);
    return grad;
}

inline NllGradient nll_gradients(const LowRankGaussian& g, const Eigen::Ref<const Vector>& z) {
    detail::require_same_length(g.n(), z.size(), "nll_gradients");
    return batch_gradients(g, z);
}

/**
 * Largest disagreement between nll_gradients and central differences of
 * nll_lowrank over every entry of mu, psi and sigma. Each entry contributes
 * |analytic - numeric| / max(1, |analytic|, |numeric|), so large partials are
 * compared relatively and near-zero ones absolutely.
 */
inline double finite_diff_check(const LowRankGaussian& g, const Eigen::Ref<const Vector>& z,
                                double eps = 1e-5) {
    if (!(eps > 0.0) || eps > 1e-2) throw DomainError("finite_diff_check: eps must be in (0, 1e-2]");
    const NllGradient analytic = nll_gradients(g, z);
    double worst = 0.0;
    auto record = [&worst](double a, double numeric) {
        const double scale = std::max({1.0, std::abs(a), std::abs(numeric)});
        worst = std::max(worst, std::abs(a - numeric) / scale);
    };

    for (Index i = 0; i < g.n(); ++i) {
        Vector up = g.mu(), down = g.mu();
        up[i] += eps;
        down[i] -= eps;
        const double numeric = (nll_lowrank(LowRankGaussian(up, g.psi(), g.sigma()), z) -
                                nll_lowrank(LowRankGaussian(down, g.psi(), g.sigma()), z)) /
                               (2.0 * eps);
        record(analytic.d_mu[i], numeric);
    }
    for (Index j = 0; j < g.m(); ++j) {
        for (Index i = 0; i < g.n(); ++i) {
            Matrix up = g.psi(), down = g.psi();
            up(i, j) += eps;
            down(i, j) -= eps;
            const double numeric = (nll_lowrank(LowRankGaussian(g.mu(), up, g.sigma()), z) -
                                    nll_lowrank(LowRankGaussian(g.mu(), down, g.sigma()), z)) /
                                   (2.0 * eps);
            record(analytic.d_psi(i, j), numeric);
        }
    }
    const double h = std::min(eps, 0.5 * g.sigma());
    const double numeric = (nll_lowrank(LowRankGaussian(g.mu(), g.psi(), g.sigma() + h), z) -
                            nll_lowrank(LowRankGaussian(g.mu(), g.psi(), g.sigma() - h), z)) /
                           (2.0 * h);
    record(analytic.d_sigma, numeric);
    return worst;
}

inline constexpr std::size_t kScaleCount = 4;

/// Sum of the NLL of z_gt under each scale's mean (shared psi and sigma), plus
/// the mean squared error of the finest-scale mean when `include_mse` is set.
inline double total_loss(const std::array<Vector, kScaleCount>& mu_scales,
                         const Eigen::Ref<const Matrix>& psi, double sigma,
                         const Eigen::Ref<const Vector>& z_gt, bool include_mse = true) {
    double total = 0.0;
    for (const Vector& mu : mu_scales) {
        detail::require_same_length(z_gt.size(), mu.size(), "total_loss");
        total += nll_lowrank(LowRankGaussian(mu, psi, sigma), z_gt);
    }
    if (include_mse) {
        total += (mu_scales[0] - z_gt).squaredNorm() / static_cast<double>(z_gt.size());
    }
    return total;
}

}  // namespace mgd

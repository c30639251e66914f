#pragma once

/**
 * @file special_losses.hpp
 * @brief Classical depth losses and the factor choices that turn the low-rank NLL into them.
 *
 * With r = z - mu:
 *   - psi = 0 (one zero column)   -> NLL is affine in r^T r               (L2)
 *   - psi = 1_N                   -> NLL is affine in r^T r - a/N (r^T 1)^2 (scale invariant)
 *   - psi = sqrt(lambda) U of J   -> NLL approximates r^T (D^T D) r      (gradient)
 *
 * where D is the Dirichlet-boundary first-difference operator and
 * J = (D^T D)^-1 has entries min(i,j) - ij/(N+1) for 1-based i, j.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mgd/gaussian.hpp"

namespace mgd {

/// Border handling of the 1-D first-difference operator.
enum class Boundary {
    /// (N-1) x N operator; rows (..., -1, 1, ...). Constant residuals cost nothing.
    Forward,
    /// (N+1) x N operator with implicit zeros outside the signal, so
    /// D^T D = tridiag(-1, 2, -1) and is invertible.
    Dirichlet,
};

enum class ReductionKind { L2, SI, Gradient };

inline const char* to_string(ReductionKind kind) {
    switch (kind) {
        case ReductionKind::L2: return "L2";
        case ReductionKind::SI: return "SI";
        case ReductionKind::Gradient: return "GRADIENT";
    }
    return "?";
}

inline const char* to_string(Boundary b) {
    return b == Boundary::Forward ? "forward" : "dirichlet";
}

inline double l2_loss(const Eigen::Ref<const Vector>& mu, const Eigen::Ref<const Vector>& z) {
    detail::require_same_length(mu.size(), z.size(), "l2_loss");
    return (z - mu).squaredNorm();
}

/// alpha = (sigma^-2 N) / (sigma^-2 N + 1)
inline double si_alpha(Index n, double sigma) {
    const double t = static_cast<double>(n) / (sigma * sigma);
    return t / (t + 1.0);
}

/// r^T r - (alpha / N) (r^T 1)^2
inline double si_loss(const Eigen::Ref<const Vector>& mu, const Eigen::Ref<const Vector>& z,
                      double sigma) {
    detail::require_same_length(mu.size(), z.size(), "si_loss");
    if (!(sigma > 0.0)) throw DomainError("si_loss: sigma must be > 0");
    const Vector r = z - mu;
    const double n = static_cast<double>(r.size());
    const double total = r.sum();
    return r.squaredNorm() - si_alpha(r.size(), sigma) / n * total * total;
}

/// r^T (D^T D) r as a sum of squared differences, O(N).
inline double gradient_loss(const Eigen::Ref<const Vector>& mu, const Eigen::Ref<const Vector>& z,
                            Boundary boundary = Boundary::Dirichlet) {
    detail::require_same_length(mu.size(), z.size(), "gradient_loss");
    if (mu.size() < 2) throw DomainError("gradient_loss: need N >= 2");
    const Vector r = z - mu;
    const Index n = r.size();
    double acc = 0.0;
    for (Index i = 0; i + 1 < n; ++i) {
        const double d = r[i + 1] - r[i];
        acc += d * d;
    }
    if (boundary == Boundary::Dirichlet) acc += r[0] * r[0] + r[n - 1] * r[n - 1];
    return acc;
}

/// J_{ij} = min(i, j) - i j / (n + 1), 1-based; the inverse of tridiag(-1, 2, -1).
inline Matrix j_matrix(Index n) {
    if (n < 1) throw DomainError("j_matrix: n must be >= 1");
    Matrix j(n, n);
    const double np1 = static_cast<double>(n + 1);
    for (Index c = 0; c < n; ++c) {
        for (Index r = 0; r < n; ++r) {
            const double i = static_cast<double>(r + 1);
            const double k = static_cast<double>(c + 1);
            j(r, c) = std::min(i, k) - i * k / np1;
        }
    }
    return j;
}

/// l-th largest eigenvalue of j_matrix(n), l in [1, n].
inline double j_eigenvalue(Index n, Index l) {
    if (l < 1 || l > n) throw DomainError("j_eigenvalue: l out of [1, n]");
    // 2 - 2 cos(x) written as 4 sin^2(x/2) to keep precision for small x.
    const double half = 0.5 * static_cast<double>(l) * std::numbers::pi / static_cast<double>(n + 1);
    const double s = std::sin(half);
    return 1.0 / (4.0 * s * s);
}

/// Unit-norm eigenvector of j_matrix(n) paired with j_eigenvalue(n, l):
/// U_k = sqrt(2/(n+1)) sin(k l pi / (n+1)), k = 1..n.
inline Vector j_eigenvector(Index n, Index l) {
    if (l < 1 || l > n) throw DomainError("j_eigenvector: l out of [1, n]");
    const double np1 = static_cast<double>(n + 1);
    const double scale = std::sqrt(2.0 / np1);
    Vector u(n);
    for (Index k = 1; k <= n; ++k) {
        u[k - 1] = scale * std::sin(static_cast<double>(k * l) * std::numbers::pi / np1);
    }
    return u;
}

/// N x M factor whose columns are sqrt(lambda_l) u_l for the M largest eigenvalues of J.
inline Matrix gradient_psi(Index n, Index m) {
    if (n < 1) throw DomainError("gradient_psi: n must be >= 1");
    if (m < 1 || m > n) {
        throw DomainError("gradient_psi: rank " + std::to_string(m) + " outside [1, " +
                          std::to_string(n) + "]");
    }
    Matrix psi(n, m);
    for (Index l = 1; l <= m; ++l) psi.col(l - 1) = std::sqrt(j_eigenvalue(n, l)) * j_eigenvector(n, l);
    return psi;
}

struct ReductionReport {
    double nll_value = 0.0;        ///< mean NLL over the probes
    double classical_value = 0.0;  ///< mean classical loss over the probes
    double affine_gap = 0.0;       ///< RMS residual of the best fit nll ~ slope * classical + intercept
    double relative_gap = 0.0;     ///< affine_gap / mean |nll|
    double slope = 0.0;
    double intercept = 0.0;
};

struct ReductionOptions {
    Index rank = 0;  ///< gradient case only; 0 means full rank n
    Boundary boundary = Boundary::Dirichlet;
};

/// The factor that makes the NLL collapse onto `kind`.
inline Matrix reduction_psi(ReductionKind kind, Index n, Index rank) {
    switch (kind) {
        case ReductionKind::L2: return Matrix::Zero(n, 1);
        case ReductionKind::SI: return Matrix::Ones(n, 1);
        case ReductionKind::Gradient: return gradient_psi(n, rank == 0 ? n : rank);
    }
    throw DomainError("reduction_psi: unknown kind");
}

/**
 * Measures how well the NLL under the case's prescribed factor tracks the
 * classical loss. Probe residuals are r = e + c 1_N with e and c standard
 * normal; for each probe the NLL of z = r under mean 0 and the classical loss
 * of r are recorded, and a least-squares line is fitted through the pairs.
 * An exact reduction leaves a gap at rounding level.
 */
inline ReductionReport check_reduction(ReductionKind kind, Index n, double sigma, Index probe_count,
                                       Rng& rng, ReductionOptions options = {}) {
    if (n < 2) throw DomainError("check_reduction: n must be >= 2");
    if (probe_count < 8) throw DomainError("check_reduction: need at least 8 probes");
    const LowRankGaussian g(Vector::Zero(n), reduction_psi(kind, n, options.rank), sigma);
    const Vector zero = Vector::Zero(n);

    std::vector<double> nll(static_cast<std::size_t>(probe_count));
    std::vector<double> classical(nll.size());
    for (std::size_t k = 0; k < nll.size(); ++k) {
        Vector r = rng.normal_vector(n);
        r.array() += rng.normal();
        nll[k] = nll_lowrank(g, r);
        switch (kind) {
            case ReductionKind::L2: classical[k] = l2_loss(zero, r); break;
            case ReductionKind::SI: classical[k] = si_loss(zero, r, sigma); break;
            case ReductionKind::Gradient: classical[k] = gradient_loss(zero, r, options.boundary); break;
        }
    }

    const auto count = static_cast<double>(nll.size());
    double mean_x = 0.0, mean_y = 0.0, mean_abs_y = 0.0;
    for (std::size_t k = 0; k < nll.size(); ++k) {
        mean_x += classical[k];
        mean_y += nll[k];
        mean_abs_y += std::abs(nll[k]);
    }
    mean_x /= count;
    mean_y /= count;
    mean_abs_y /= count;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < nll.size(); ++k) {
        sxx += (classical[k] - mean_x) * (classical[k] - mean_x);
        sxy += (classical[k] - mean_x) * (nll[k] - mean_y);
    }
    ReductionReport report;
    report.nll_value = mean_y;
    report.classical_value = mean_x;
    report.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    report.intercept = mean_y - report.slope * mean_x;
    double sse = 0.0;
    for (std::size_t k = 0; k < nll.size(); ++k) {
        const double e = nll[k] - (report.slope * classical[k] + report.intercept);
        sse += e * e;
    }
    report.affine_gap = std::sqrt(sse / count);
    report.relative_gap = mean_abs_y > 0.0 ? report.affine_gap / mean_abs_y : report.affine_gap;
    return report;
}

}  // namespace mgd

#pragma once

/**
 * @file gaussian.hpp
 * @brief Low-rank multivariate Gaussian over a flattened depth map.
 *
 * A distribution over N pixel depths is stored as a mean vector mu, an N x M
 * factor psi and an isotropic noise level sigma, with covariance
 *
 *     Sigma = psi * psi^T + sigma^2 * I.
 *
 * Every query (density, determinant, solve, covariance rows) is evaluated
 * through the M x M capacitance matrix A = sigma^-2 psi^T psi + I_M and its
 * Cholesky factor, so nothing of size N x N is ever formed. DenseGaussian
 * holds the explicit (mu, Sigma) pair and serves as the brute-force oracle.
 *
 * Pixels are flattened row-major; index i of every vector is pixel
 * (i / cols, i % cols).
 */

#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mgd/error.hpp"
#include "mgd/rng.hpp"

namespace mgd {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kDefaultSigma = 0.1;
inline constexpr Index kDefaultRank = 128;
inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

namespace detail {

inline void require_same_length(Index expected, Index got, const char* what) {
    if (expected != got) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(expected) +
                             ", got " + std::to_string(got));
    }
}

}  // namespace detail

/// Lower Cholesky factor of a symmetric positive-definite matrix.
/// Only the lower triangle of `a` is read.
inline Matrix cholesky_lower(const Matrix& a) {
    const Index m = a.rows();
    if (a.cols() != m) throw DimensionError("cholesky: matrix is not square");
    Matrix l = Matrix::Zero(m, m);
    for (Index j = 0; j < m; ++j) {
        double diag = a(j, j);
        for (Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0) || !std::isfinite(diag)) {
            throw NumericError("cholesky: non-positive pivot at column " + std::to_string(j));
        }
        const double ljj = std::sqrt(diag);
        l(j, j) = ljj;
        for (Index i = j + 1; i < m; ++i) {
            double s = a(i, j);
            for (Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / ljj;
        }
    }
    return l;
}

class LowRankGaussian {
public:
    /// Throws DimensionError if psi.rows() != mu.size() or mu is empty, and
    /// DomainError if sigma is not a finite positive number or entries are
    /// non-finite.
    LowRankGaussian(Vector mu, Matrix psi, double sigma)
        : mu_(std::move(mu)), psi_(std::move(psi)), sigma_(sigma) {
        if (mu_.size() == 0) throw DimensionError("LowRankGaussian: N must be positive");
        if (psi_.rows() != mu_.size()) {
            throw DimensionError("LowRankGaussian: psi has " + std::to_string(psi_.rows()) +
                                 " rows, mean has " + std::to_string(mu_.size()));
        }
        if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) {
            throw DomainError("LowRankGaussian: sigma must be finite and > 0");
        }
        if (!mu_.allFinite() || !psi_.allFinite()) {
            throw DomainError("LowRankGaussian: non-finite mean or factor");
        }
    }

    /// Independent pixels: M = 0.
    static LowRankGaussian diagonal(Vector mu, double sigma) {
        const Index n = mu.size();
        return LowRankGaussian(std::move(mu), Matrix(n, 0), sigma);
    }

    const Vector& mu() const { return mu_; }
    const Matrix& psi() const { return psi_; }
    double sigma() const { return sigma_; }
    Index n() const { return mu_.size(); }
    Index m() const { return psi_.cols(); }

private:
    Vector mu_;
    Matrix psi_;
    double sigma_;
};

class DenseGaussian {
public:
    DenseGaussian(Vector mu, Matrix sigma_full) : mu_(std::move(mu)), cov_(std::move(sigma_full)) {
        if (mu_.size() == 0) throw DimensionError("DenseGaussian: N must be positive");
        if (cov_.rows() != mu_.size() || cov_.cols() != mu_.size()) {
            throw DimensionError("DenseGaussian: covariance must be N x N");
        }
        if (!mu_.allFinite() || !cov_.allFinite()) {
            throw NumericError("DenseGaussian: non-finite entries");
        }
        const double scale = cov_.cwiseAbs().maxCoeff();
        if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw NumericError("DenseGaussian: covariance is not symmetric");
        }
        if (Eigen::LLT<Matrix>(cov_).info() != Eigen::Success) {
            throw NumericError("DenseGaussian: covariance is not positive definite");
        }
    }

    const Vector& mu() const { return mu_; }
    const Matrix& sigma_full() const { return cov_; }
    Index n() const { return mu_.size(); }

private:
    Vector mu_;
    Matrix cov_;
};

/// Capacitance A = sigma^-2 psi^T psi + I_M together with its lower Cholesky factor.
struct CholeskyWorkspace {
    Matrix a;
    Matrix l;

    static CholeskyWorkspace factor(const LowRankGaussian& g) {
        const double inv_var = 1.0 / (g.sigma() * g.sigma());
        Matrix a = inv_var * (g.psi().transpose() * g.psi());
        a.diagonal().array() += 1.0;
        Matrix l = cholesky_lower(a);
        return {std::move(a), std::move(l)};
    }

    /// L \ rhs
    Matrix forward(const Matrix& rhs) const {
        return l.triangularView<Eigen::Lower>().solve(rhs);
    }

    /// A^-1 rhs
    Matrix solve(const Matrix& rhs) const {
        return l.transpose().triangularView<Eigen::Upper>().solve(forward(rhs));
    }

    /// log det A
    double log_det() const { return 2.0 * l.diagonal().array().log().sum(); }
};

/// -log N(z | mu, psi psi^T + sigma^2 I), evaluated in O(NM^2 + M^3).
inline double nll_lowrank(const LowRankGaussian& g, const Eigen::Ref<const Vector>& z) {
    detail::require_same_length(g.n(), z.size(), "nll_lowrank");
    const double var = g.sigma() * g.sigma();
    const Vector r = z - g.mu();
    const Vector p = g.psi().transpose() * r;
    const CholeskyWorkspace ws = CholeskyWorkspace::factor(g);
    const Vector q = ws.forward(p);
    const double n = static_cast<double>(g.n());
    const double log_prob = -0.5 * n * (kLog2Pi + std::log(var)) -
                            ws.l.diagonal().array().log().sum() - 0.5 * r.squaredNorm() / var +
                            0.5 * q.squaredNorm() / (var * var);
    if (!std::isfinite(log_prob)) throw NumericError("nll_lowrank: non-finite result");
    return -log_prob;
}

/// log det(psi psi^T + sigma^2 I) by the matrix determinant lemma.
inline double lowrank_logdet(const LowRankGaussian& g) {
    const CholeskyWorkspace ws = CholeskyWorkspace::factor(g);
    return 2.0 * static_cast<double>(g.n()) * std::log(g.sigma()) + ws.log_det();
}

/// Sigma^-1 V for a block of right-hand sides (one per column), never forming Sigma.
inline Matrix woodbury_solve_many(const LowRankGaussian& g, const Eigen::Ref<const Matrix>& v) {
    if (v.rows() != g.n()) {
        throw DimensionError("woodbury_solve: expected " + std::to_string(g.n()) + " rows, got " +
                             std::to_string(v.rows()));
    }
    const double inv_var = 1.0 / (g.sigma() * g.sigma());
    if (g.m() == 0) return inv_var * v;
    const CholeskyWorkspace ws = CholeskyWorkspace::factor(g);
    const Matrix inner = ws.solve(g.psi().transpose() * v);
    return inv_var * v - (inv_var * inv_var) * (g.psi() * inner);
}

/// Sigma^-1 v = sigma^-2 v - sigma^-4 psi A^-1 psi^T v, O(NM + M^3) given A.
inline Vector woodbury_solve(const LowRankGaussian& g, const Eigen::Ref<const Vector>& v) {
    return woodbury_solve_many(g, v).col(0);
}

inline DenseGaussian dense_covariance(const LowRankGaussian& g) {
    Matrix cov = g.psi() * g.psi().transpose();
    cov.diagonal().array() += g.sigma() * g.sigma();
    // Round-off can leave the product a hair off symmetric.
    cov = 0.5 * (cov + cov.transpose()).eval();
    return DenseGaussian(g.mu(), std::move(cov));
}

/// log det Sigma from an explicit N x N factorization.
inline double dense_logdet(const DenseGaussian& d) {
    Eigen::LLT<Matrix> llt(d.sigma_full());
    if (llt.info() != Eigen::Success) throw NumericError("dense_logdet: factorization failed");
    return 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
}

/// -log N(z | mu, Sigma) straight from the dense density. O(N^3); oracle only.
inline double nll_dense(const DenseGaussian& d, const Eigen::Ref<const Vector>& z) {
    detail::require_same_length(d.n(), z.size(), "nll_dense");
    Eigen::LLT<Matrix> llt(d.sigma_full());
    if (llt.info() != Eigen::Success) throw NumericError("nll_dense: covariance not SPD");
    const Vector r = z - d.mu();
    const Vector w = llt.matrixL().solve(r);
    const double logdet = 2.0 * Matrix(llt.matrixL()).diagonal().array().log().sum();
    return 0.5 * (static_cast<double>(d.n()) * kLog2Pi + logdet + w.squaredNorm());
}

/// `count` draws z = mu + psi e_M + sigma e_N, in draw order.
inline std::vector<Vector> sample(const LowRankGaussian& g, Rng& rng, Index count) {
    if (count < 1) throw DomainError("sample: count must be >= 1");
    std::vector<Vector> draws;
    draws.reserve(static_cast<std::size_t>(count));
    for (Index s = 0; s < count; ++s) {
        const Vector latent = rng.normal_vector(g.m());
        const Vector noise = rng.normal_vector(g.n());
        draws.push_back(g.mu() + g.psi() * latent + g.sigma() * noise);
    }
    return draws;
}

/// Row i of Sigma in O(NM).
inline Vector covariance_row(const LowRankGaussian& g, Index i) {
    if (i < 0 || i >= g.n()) {
        throw DimensionError("covariance_row: pixel " + std::to_string(i) + " out of range [0, " +
                             std::to_string(g.n()) + ")");
    }
    Vector row = g.psi() * g.psi().row(i).transpose();
    row[i] += g.sigma() * g.sigma();
    return row;
}

/// Exact two-pixel marginal (mu_a, mu_b) with the corresponding 2 x 2 covariance block.
inline DenseGaussian marginal_pair(const LowRankGaussian& g, Index a, Index b) {
    if (a < 0 || a >= g.n() || b < 0 || b >= g.n()) {
        throw DimensionError("marginal_pair: pixel index out of range");
    }
    if (a == b) throw DomainError("marginal_pair: pixels must differ");
    const double var = g.sigma() * g.sigma();
    const double cab = g.psi().row(a).dot(g.psi().row(b));
    Matrix cov(2, 2);
    cov << g.psi().row(a).squaredNorm() + var, cab, cab, g.psi().row(b).squaredNorm() + var;
    Vector mu(2);
    mu << g.mu()[a], g.mu()[b];
    return DenseGaussian(std::move(mu), std::move(cov));
}

}  // namespace mgd

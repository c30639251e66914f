#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "mgd/special_losses.hpp"
#include "oracles.hpp"

using namespace mgd;

TEST(L2Loss, Examples) {
    EXPECT_EQ(l2_loss(Vector::Ones(3), Vector::Ones(3)), 0.0);
    EXPECT_EQ(l2_loss(Vector::Zero(2), (Vector(2) << 3.0, 4.0).finished()), 25.0);
    EXPECT_THROW(l2_loss(Vector::Zero(2), Vector::Zero(3)), DimensionError);
}

TEST(L2Loss, ZeroFactorNllIdentity) {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        const double sigma = 0.2 + rng.uniform();
        const LowRankGaussian g(rng.normal_vector(10), Matrix::Zero(10, 1), sigma);
        const Vector z = g.mu() + rng.normal_vector(10);
        const double lhs = 2.0 * sigma * sigma * (nll_lowrank(g, z) - nll_lowrank(g, g.mu()));
        EXPECT_NEAR(lhs, l2_loss(g.mu(), z), 1e-10);
    }
}

TEST(SiLoss, AlphaValue) { EXPECT_NEAR(si_alpha(100, 0.1), 10000.0 / 10001.0, 1e-15); }

TEST(SiLoss, NearlyInvariantToConstantOffset) {
    const Index n = 64;
    const double c = 5.0, sigma = 0.01;
    const double value = si_loss(Vector::Zero(n), Vector::Constant(n, c), sigma);
    const double bound = static_cast<double>(n) * c * c * (1.0 - si_alpha(n, sigma));
    EXPECT_LE(value, bound * (1.0 + 1e-9));
    EXPECT_LE(value, 1e-2);
}

TEST(SiLoss, OnesFactorNllIdentity) {
    Rng rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const double sigma = 0.05 + rng.uniform();
        const LowRankGaussian g(rng.normal_vector(12), Matrix::Ones(12, 1), sigma);
        Vector z = g.mu() + rng.normal_vector(12);
        z.array() += 3.0 * rng.normal();
        const double lhs = 2.0 * sigma * sigma * (nll_lowrank(g, z) - nll_lowrank(g, g.mu()));
        EXPECT_NEAR(lhs, si_loss(g.mu(), z, sigma), 1e-9);
    }
}

TEST(SiLoss, OffsetChangeBound) {
    Rng rng(23);
    const Index n = 20;
    const double sigma = 0.3;
    const double alpha = si_alpha(n, sigma);
    for (int trial = 0; trial < 50; ++trial) {
        const Vector z = rng.normal_vector(n);
        const double c = 2.0 * rng.normal();
        const double change = si_loss(Vector::Zero(n), (z.array() + c).matrix(), sigma) -
                              si_loss(Vector::Zero(n), z, sigma);
        const double bound = (1.0 - alpha) * static_cast<double>(n) *
                             (2.0 * std::abs(c) * z.cwiseAbs().maxCoeff() + c * c);
        EXPECT_LE(std::abs(change), bound + 1e-12);
    }
}

TEST(GradientLoss, Examples) {
    EXPECT_EQ(gradient_loss(Vector::Zero(5), Vector::Constant(5, 3.0), Boundary::Forward), 0.0);
    EXPECT_EQ(gradient_loss(Vector::Zero(3), (Vector(3) << 0.0, 1.0, 0.0).finished(), Boundary::Dirichlet), 2.0);
    EXPECT_THROW(gradient_loss(Vector::Zero(1), Vector::Zero(1)), DomainError);
}

TEST(GradientLoss, MatchesExplicitQuadraticForm) {
    Rng rng(24);
    for (Index n = 2; n <= 16; ++n) {
        for (Boundary b : {Boundary::Forward, Boundary::Dirichlet}) {
            const Vector mu = rng.normal_vector(n);
            const Vector z = rng.normal_vector(n);
            const Matrix d = oracle::difference_operator(n, b);
            const Vector r = z - mu;
            const double dense = r.dot(d.transpose() * d * r);
            EXPECT_NEAR(gradient_loss(mu, z, b), dense, 1e-12 * std::max(1.0, dense));
        }
    }
}

TEST(GradientLoss, DirichletOperatorIsSecondDifference) {
    for (Index n = 1; n <= 6; ++n) {
        const Matrix d = oracle::difference_operator(n, Boundary::Dirichlet);
        EXPECT_TRUE((d.transpose() * d).isApprox(oracle::second_difference(n)));
    }
}

TEST(JMatrix, ThreeByThree) {
    Matrix expected(3, 3);
    expected << 0.75, 0.5, 0.25, 0.5, 1.0, 0.5, 0.25, 0.5, 0.75;
    EXPECT_LE((j_matrix(3) - expected).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_TRUE(j_matrix(3).isApprox(oracle::second_difference(3).inverse()));
}

TEST(JMatrix, SymmetricAndInverseOfSecondDifference) {
    for (Index n = 1; n <= 32; ++n) {
        const Matrix j = j_matrix(n);
        EXPECT_EQ(j, j.transpose());
        EXPECT_LE((j * oracle::second_difference(n) - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(JMatrix, PositiveDefiniteWithClosedFormSmallestEigenvalue) {
    for (Index n = 1; n <= 32; ++n) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(j_matrix(n));
        const double smallest = es.eigenvalues().minCoeff();
        EXPECT_GT(smallest, 0.0);
        EXPECT_NEAR(smallest, 1.0 / (2.0 - 2.0 * std::cos(n * M_PI / (n + 1.0))), 1e-10);
    }
}

TEST(JEigen, LargestEigenvalueForThree) {
    EXPECT_NEAR(j_eigenvalue(3, 1), 1.0 / (2.0 - std::sqrt(2.0)), 1e-12);
    EXPECT_NEAR(j_eigenvalue(3, 1), 1.7071067812, 1e-10);
}

TEST(JEigen, StrictlyDecreasing) {
    for (Index n = 1; n <= 32; ++n)
        for (Index l = 1; l < n; ++l) EXPECT_GT(j_eigenvalue(n, l), j_eigenvalue(n, l + 1));
}

TEST(JEigen, ClosedFormMatchesNumericalDecomposition) {
    for (Index n = 1; n <= 32; ++n) {
        const Matrix j = j_matrix(n);
        Eigen::SelfAdjointEigenSolver<Matrix> es(j);
        for (Index l = 1; l <= n; ++l) {
            // Solver sorts ascending; closed form is indexed largest first.
            EXPECT_NEAR(j_eigenvalue(n, l), es.eigenvalues()[n - l], 1e-8 * es.eigenvalues()[n - l]);
            const Vector u = j_eigenvector(n, l);
            EXPECT_LE((j * u - j_eigenvalue(n, l) * u).cwiseAbs().maxCoeff(), 1e-8);
        }
    }
}

TEST(JEigen, AlternatingSignVectorBelongsToMirroredEigenvalue) {
    // Flipping the sign of every other entry of the l-th sine vector yields the
    // (n + 1 - l)-th one, so it must not be paired with lambda_l.
    const Index n = 9;
    const Matrix j = j_matrix(n);
    for (Index l = 1; l <= n; ++l) {
        Vector flipped = j_eigenvector(n, l);
        for (Index k = 1; k < n; k += 2) flipped[k] = -flipped[k];
        EXPECT_LE((j * flipped - j_eigenvalue(n, n + 1 - l) * flipped).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(GradientPsi, OrthonormalColumns) {
    for (Index n = 1; n <= 32; ++n) {
        Matrix u(n, n);
        for (Index l = 1; l <= n; ++l) u.col(l - 1) = j_eigenvector(n, l);
        EXPECT_LE((u.transpose() * u - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(GradientPsi, FullRankReconstructsJ) {
    for (Index n = 1; n <= 16; ++n) {
        const Matrix psi = gradient_psi(n, n);
        EXPECT_LE((psi * psi.transpose() - j_matrix(n)).norm(), 1e-8);
    }
}

TEST(GradientPsi, RankErrors) {
    EXPECT_THROW(gradient_psi(4, 5), DomainError);
    EXPECT_THROW(gradient_psi(4, 0), DomainError);
    EXPECT_NO_THROW(gradient_psi(4, 4));
}

TEST(CheckReduction, L2IsExact) {
    Rng rng(25);
    for (Index n : {2, 7, 40}) {
        const ReductionReport rep = check_reduction(ReductionKind::L2, n, 0.3, 32, rng);
        EXPECT_LE(rep.affine_gap, 1e-9);
        EXPECT_GE(rep.affine_gap, 0.0);
        EXPECT_NEAR(rep.slope, 1.0 / (2.0 * 0.09), 1e-9);
    }
}

TEST(CheckReduction, SiRelativeGap) {
    Rng rng(26);
    const ReductionReport rep = check_reduction(ReductionKind::SI, 64, 0.01, 64, rng);
    EXPECT_LE(rep.relative_gap, 1e-4);
    EXPECT_NEAR(rep.slope, 1.0 / (2.0 * 1e-4), 1e-3 / 2e-4);
}

TEST(CheckReduction, GradientGapShrinksWithRank) {
    for (std::uint64_t seed : {27u, 28u, 29u, 30u, 31u}) {
        double previous = INFINITY;
        for (Index m : {4, 8, 16}) {
            Rng rng(seed);
            ReductionOptions options;
            options.rank = m;
            const ReductionReport rep = check_reduction(ReductionKind::Gradient, 16, 0.05, 64, rng, options);
            EXPECT_LT(rep.affine_gap, previous) << "seed=" << seed << " m=" << m;
            previous = rep.affine_gap;
            if (m == 16) EXPECT_LE(rep.relative_gap, 1e-2);
        }
    }
}

TEST(CheckReduction, SlopeMatchesInverseNoiseAtFullRank) {
    // With m = n the NLL quadratic is r^T (J + sigma^2 I)^-1 r / 2, close to r^T T r / 2.
    Rng rng(32);
    ReductionOptions options;
    options.rank = 16;
    const ReductionReport rep = check_reduction(ReductionKind::Gradient, 16, 0.05, 64, rng, options);
    EXPECT_NEAR(rep.slope, 0.5, 0.05);
}

TEST(CheckReduction, PreconditionErrors) {
    Rng rng(1);
    EXPECT_THROW(check_reduction(ReductionKind::L2, 1, 0.1, 16, rng), DomainError);
    EXPECT_THROW(check_reduction(ReductionKind::L2, 4, 0.1, 7, rng), DomainError);
}

#include <gtest/gtest.h>

#include <random>

#include "etc/matrix_kernel.hpp"
#include "oracles.hpp"

using namespace etc;

TEST(SymMat, SymmetrizesOnConstruction) {
    Mat a(2, 2);
    a << 1, 2, 4, 3;
    const SymMat s(a);
    EXPECT_DOUBLE_EQ(s(0, 1), 3.0);
    EXPECT_DOUBLE_EQ(s(1, 0), 3.0);
    EXPECT_EQ(s.matrix(), s.matrix().transpose());
}

TEST(SymMat, RejectsNonSquareAndNonFinite) {
    EXPECT_THROW(SymMat(Mat::Zero(2, 3)), DimensionMismatch);
    Mat a = Mat::Identity(2, 2);
    a(0, 1) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(SymMat{a}, InvalidInput);
}

TEST(SymEig, DiagonalMatrix) {
    Mat a = Mat::Zero(3, 3);
    a.diagonal() << 3, -1, 2;
    const auto e = sym_eig(SymMat(a));
    EXPECT_DOUBLE_EQ(e.values(0), -1.0);
    EXPECT_DOUBLE_EQ(e.values(1), 2.0);
    EXPECT_DOUBLE_EQ(e.values(2), 3.0);
}

TEST(SymEig, MatchesReferenceSolverOnRandomMatrices) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 1 + trial % 12;
        const Mat a = oracle::random_symmetric(rng, n, trial % 3 == 0 ? 1e4 : 1.0);
        const auto e = sym_eig(SymMat(a));
        const Vec ref = Eigen::SelfAdjointEigenSolver<Mat>(a).eigenvalues();
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        EXPECT_LT((e.values - ref).cwiseAbs().maxCoeff(), 1e-12 * scale * static_cast<double>(n));
        // A V = V diag(lambda) and V orthogonal.
        EXPECT_LT((a * e.vectors - e.vectors * e.values.asDiagonal()).cwiseAbs().maxCoeff(), 1e-11 * scale);
        EXPECT_LT((e.vectors.transpose() * e.vectors - Mat::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SymEig, EigenvalueSumEqualsTrace) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const Mat a = oracle::random_symmetric(rng, 2 + trial % 9, 10.0);
        const double tr = a.trace();
        const double sum = sym_eig(SymMat(a)).values.sum();
        EXPECT_LE(std::abs(sum - tr), 1e-9 * std::max(1.0, a.cwiseAbs().sum()));
    }
}

TEST(SymEig, WorksForOtherScalarTypes) {
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> a(2, 2);
    a << 2, 1, 1, 2;
    const auto e = sym_eig(BasicSymMat<long double>(a));
    EXPECT_NEAR(static_cast<double>(e.values(0)), 1.0, 1e-15);
    EXPECT_NEAR(static_cast<double>(e.values(1)), 3.0, 1e-15);

    Eigen::MatrixXf f(2, 2);
    f << 4, 0, 0, 1;
    EXPECT_FLOAT_EQ(lambda_max(BasicSymMat<float>(f)), 4.0f);
}

TEST(Cholesky, ReconstructsPositiveDefiniteMatrix) {
    std::mt19937_64 rng(13);
    const Mat g = oracle::random_matrix(rng, 5, 5);
    const Mat a = g * g.transpose() + 0.1 * Mat::Identity(5, 5);
    const Mat l = cholesky(SymMat(a));
    EXPECT_TRUE(l.isLowerTriangular());
    EXPECT_LT((l * l.transpose() - a).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Cholesky, ReportsFailingPivot) {
    Mat a = Mat::Identity(3, 3);
    a(2, 2) = -1.0;
    try {
        (void)cholesky(SymMat(a));
        FAIL() << "expected NotPositiveDefinite";
    } catch (const NotPositiveDefinite& e) {
        EXPECT_EQ(e.pivot(), 2u);
    }
    std::size_t pivot = 99;
    EXPECT_FALSE(try_cholesky(SymMat(a), &pivot).has_value());
    EXPECT_EQ(pivot, 2u);
}

TEST(Cholesky, SucceedsExactlyWhenSmallestEigenvalueIsPositive) {
    std::mt19937_64 rng(14);
    int positive = 0, rejected = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index n = 1 + trial % 6;
        Mat a = oracle::random_symmetric(rng, n);
        // Shift so the spectrum straddles zero in about half the cases.
        a += (oracle::max_eig(a) - oracle::min_eig(a)) * (0.5 - (trial % 2)) * 0.6 * Mat::Identity(n, n);
        const double lmin = sym_eig(SymMat(a)).values(0);
        const double tol = 1e-10 * a.cwiseAbs().maxCoeff();
        if (std::abs(lmin) <= tol) continue;
        const bool ok = try_cholesky(SymMat(a)).has_value();
        EXPECT_EQ(ok, lmin > 0.0) << "lambda_min = " << lmin;
        (ok ? positive : rejected)++;
    }
    EXPECT_GT(positive, 50);
    EXPECT_GT(rejected, 50);
}

TEST(SpectralNorm, KnownValueAndTransposeInvariance) {
    Mat a(2, 3);
    a << 3, 0, 0, 0, 4, 0;
    EXPECT_DOUBLE_EQ(spectral_norm(a), 4.0);
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 100; ++trial) {
        const Mat m = oracle::random_matrix(rng, 1 + trial % 5, 1 + (trial / 5) % 5, 3.0);
        EXPECT_NEAR(spectral_norm(m), spectral_norm(Mat(m.transpose())), 1e-10);
        const double ref = Eigen::JacobiSVD<Mat>(m).singularValues()(0);
        EXPECT_NEAR(spectral_norm(m), ref, 1e-12 * std::max(1.0, ref));
    }
}

TEST(SolveLinear, SolvesRandomSystems) {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 1 + trial % 8;
        const Mat a = oracle::random_matrix(rng, n, n) + 2.0 * Mat::Identity(n, n);
        const Mat b = oracle::random_matrix(rng, n, 3);
        const Mat x = solve_linear(a, b);
        EXPECT_LT((a * x - b).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(SolveLinear, NeedsPivoting) {
    Mat a(2, 2);
    a << 0, 1, 1, 0;
    Mat b(2, 1);
    b << 2, 3;
    const Mat x = solve_linear(a, b);
    EXPECT_DOUBLE_EQ(x(0), 3.0);
    EXPECT_DOUBLE_EQ(x(1), 2.0);
}

TEST(SolveLinear, DetectsSingularity) {
    Mat a(2, 2);
    a << 1, 2, 2, 4;
    EXPECT_THROW((void)solve_linear(a, Mat::Identity(2, 2)), SingularMatrix);
    EXPECT_THROW((void)inverse(a), NumericalFailure);
    EXPECT_THROW((void)solve_linear(Mat::Identity(2, 2), Mat::Identity(3, 3)), DimensionMismatch);
}

TEST(Inverse, BadlyScaledMatrix) {
    Mat a(2, 2);
    a << 1e4, 2.0, 3.0, 1e-3;
    const Mat ai = inverse(a);
    EXPECT_LT((a * ai - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
}

#include <gtest/gtest.h>

#include <random>

#include "etc/sdp.hpp"
#include "oracles.hpp"

using namespace etc;

namespace {

// min t subject to t I - A > 0.
SdpProblem lambda_max_problem(const Mat& a) {
    SdpProblem p;
    p.layout.add_scalar("t");
    const Eigen::Index n = a.rows();
    p.constraints.emplace_back("upper", Sense::PositiveDefinite, SymMat(Mat(-a)), std::vector<SymMat>{SymMat(Mat::Identity(n, n))});
    p.objective = Vec::Ones(1);
    return p;
}

// Two unknowns in the open box (-1, 1)^2 plus F0 + v1 F1 + v2 F2 > 0.
SdpProblem box_problem(const Mat& f0, const Mat& f1, const Mat& f2, double c1, double c2) {
    SdpProblem p;
    p.layout.add_scalar("v1").add_scalar("v2");
    Mat b1 = Mat::Zero(4, 4), b2 = Mat::Zero(4, 4);
    b1.diagonal() << -1, 1, 0, 0;
    b2.diagonal() << 0, 0, -1, 1;
    p.constraints.emplace_back("box", Sense::PositiveDefinite, SymMat(Mat::Identity(4, 4)),
                               std::vector<SymMat>{SymMat(b1), SymMat(b2)});
    p.constraints.emplace_back("lmi", Sense::PositiveDefinite, SymMat(f0), std::vector<SymMat>{SymMat(f1), SymMat(f2)});
    p.objective = (Vec(2) << c1, c2).finished();
    return p;
}

} // namespace

TEST(Sdp, LargestEigenvalueAgainstReference) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 1 + trial % 7;
        const Mat a = oracle::random_symmetric(rng, n, trial % 5 == 0 ? 100.0 : 1.0);
        const SdpSolution s = solve(lambda_max_problem(a));
        ASSERT_EQ(s.status, SdpStatus::Optimal) << s.message;
        const double ref = oracle::max_eig(a);
        const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
        EXPECT_NEAR(s.values(0), ref, 1e-6 * scale);
        EXPECT_GT(s.values(0), ref);  // strict inequality holds at the returned point
        EXPECT_GT(s.worst_margin, 0.0);
    }
}

TEST(Sdp, TwoUnknownProgramsAgainstGridAndBoundaryOracles) {
    std::mt19937_64 rng(32);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat f0 = Mat::Identity(3, 3);
        const Mat f1 = oracle::random_symmetric(rng, 3, 1.5);
        const Mat f2 = oracle::random_symmetric(rng, 3, 1.5);
        const double c1 = u(rng), c2 = u(rng);
        const SdpProblem p = box_problem(f0, f1, f2, c1, c2);
        const SdpSolution s = solve(p);
        ASSERT_EQ(s.status, SdpStatus::Optimal) << s.message;
        EXPECT_NEAR(s.objective_value, oracle::grid_minimize(f0, f1, f2, c1, c2).value, 1e-4) << "trial " << trial;
        EXPECT_NEAR(s.objective_value, oracle::boundary_minimize(f0, f1, f2, c1, c2).value, 1e-4) << "trial " << trial;
        for (double m : check_assignment(p, s.values)) EXPECT_GT(m, 0.0);
    }
}

TEST(Sdp, DetectsInfeasibility) {
    // v > 1 and v < 0.
    SdpProblem p;
    p.layout.add_scalar("v");
    const SymMat one(Mat::Identity(1, 1));
    p.constraints.emplace_back("lower", Sense::PositiveDefinite, SymMat(Mat(-Mat::Identity(1, 1))), std::vector<SymMat>{one});
    p.constraints.emplace_back("upper", Sense::NegativeDefinite, SymMat(Mat::Zero(1, 1)), std::vector<SymMat>{one});
    p.objective = Vec::Zero(1);
    const SdpSolution s = solve(p);
    EXPECT_EQ(s.status, SdpStatus::Infeasible);
    EXPECT_LT(s.certificate_residual, 1e-6);
}

TEST(Sdp, MatrixInfeasibility) {
    // [[v, 1], [1, -v]] > 0 has no solution.
    SdpProblem p;
    p.layout.add_scalar("v");
    Mat f0(2, 2), f1(2, 2);
    f0 << 0, 1, 1, 0;
    f1 << 1, 0, 0, -1;
    p.constraints.emplace_back("saddle", Sense::PositiveDefinite, SymMat(f0), std::vector<SymMat>{SymMat(f1)});
    p.objective = Vec::Ones(1);
    EXPECT_EQ(solve(p).status, SdpStatus::Infeasible);
}

TEST(Sdp, FeasibilityProblemReturnsStrictlyFeasiblePoint) {
    std::mt19937_64 rng(33);
    const Mat f1 = oracle::random_symmetric(rng, 3), f2 = oracle::random_symmetric(rng, 3);
    SdpProblem p = box_problem(Mat::Identity(3, 3), f1, f2, 0.0, 0.0);
    const SdpSolution s = solve(p);
    EXPECT_EQ(s.status, SdpStatus::Feasible);
    for (double m : check_assignment(p, s.values)) EXPECT_GT(m, 0.0);
}

TEST(Sdp, InvariantUnderConstraintScaling) {
    std::mt19937_64 rng(34);
    const Mat f1 = oracle::random_symmetric(rng, 3, 1.5), f2 = oracle::random_symmetric(rng, 3, 1.5);
    const SdpProblem base = box_problem(Mat::Identity(3, 3), f1, f2, 0.3, -0.7);
    const SdpSolution ref = solve(base);
    ASSERT_EQ(ref.status, SdpStatus::Optimal);
    for (double c : {1e-3, 1e3}) {
        SdpProblem p = base;
        for (auto& lmi : p.constraints) lmi = lmi.scaled(c);
        const SdpSolution s = solve(p);
        ASSERT_EQ(s.status, SdpStatus::Optimal) << "scale " << c;
        EXPECT_NEAR(s.objective_value, ref.objective_value, 1e-5);
    }
}

TEST(Sdp, InvariantUnderUnknownScaling) {
    // Substituting v = 1e4 w leaves the optimum unchanged up to the factor.
    std::mt19937_64 rng(35);
    const Mat a = oracle::random_symmetric(rng, 4);
    SdpProblem p = lambda_max_problem(a);
    p.constraints[0] = AffineLmi("upper", Sense::PositiveDefinite, SymMat(Mat(-a)),
                                 std::vector<SymMat>{SymMat(Mat(1e-4 * Mat::Identity(4, 4)))});
    const SdpSolution s = solve(p);
    ASSERT_EQ(s.status, SdpStatus::Optimal) << s.message;
    EXPECT_NEAR(1e-4 * s.values(0), oracle::max_eig(a), 1e-6);
}

TEST(Sdp, AddingConstraintsNeverImprovesTheOptimum) {
    std::mt19937_64 rng(36);
    for (int trial = 0; trial < 10; ++trial) {
        const Mat f1 = oracle::random_symmetric(rng, 3, 1.5), f2 = oracle::random_symmetric(rng, 3, 1.5);
        SdpProblem p = box_problem(Mat::Identity(3, 3), f1, f2, 1.0, 0.5);
        const SdpSolution loose = solve(p);
        p.constraints.emplace_back("extra", Sense::PositiveDefinite, SymMat(Mat::Identity(2, 2)),
                                   std::vector<SymMat>{SymMat(oracle::random_symmetric(rng, 2, 2.0)),
                                                       SymMat(oracle::random_symmetric(rng, 2, 2.0))});
        const SdpSolution tight = solve(p);
        ASSERT_EQ(loose.status, SdpStatus::Optimal);
        ASSERT_EQ(tight.status, SdpStatus::Optimal);
        EXPECT_GE(tight.objective_value, loose.objective_value - 1e-6);
    }
}

TEST(Sdp, FeasibilityBoundaryFoundByBisection) {
    // [[1, v], [v, b]] > 0 with v > 1 is feasible iff b > 1.
    auto feasible = [](double b) {
        SdpProblem p;
        p.layout.add_scalar("v");
        Mat f0(2, 2), f1(2, 2);
        f0 << 1, 0, 0, b;
        f1 << 0, 1, 1, 0;
        p.constraints.emplace_back("psd", Sense::PositiveDefinite, SymMat(f0), std::vector<SymMat>{SymMat(f1)});
        p.constraints.emplace_back("v_gt_1", Sense::PositiveDefinite, SymMat(Mat(-Mat::Identity(1, 1))),
                                   std::vector<SymMat>{SymMat(Mat::Identity(1, 1))});
        p.objective = Vec::Zero(1);
        return solve(p).status == SdpStatus::Feasible;
    };
    double lo = 0.5, hi = 2.0;
    ASSERT_FALSE(feasible(lo));
    ASSERT_TRUE(feasible(hi));
    for (int i = 0; i < 20; ++i) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    EXPECT_NEAR(hi, 1.0, 1e-3);
}

TEST(Sdp, RejectsMalformedProblems) {
    SdpProblem p;
    p.layout.add_scalar("t").add_scalar("unused");
    p.constraints.emplace_back("c", Sense::PositiveDefinite, SymMat(Mat::Identity(1, 1)),
                               std::vector<SymMat>{SymMat(Mat::Identity(1, 1)), SymMat(Mat::Zero(1, 1))});
    p.objective = (Vec(2) << 1.0, 1.0).finished();
    EXPECT_THROW((void)solve(p), InvalidInput);
    p.objective = Vec::Ones(3);
    EXPECT_THROW((void)solve(p), DimensionMismatch);
    SdpProblem empty;
    empty.layout.add_scalar("t");
    empty.objective = Vec::Zero(1);
    EXPECT_THROW((void)solve(empty), InvalidInput);
}

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "etc/experiment.hpp"
#include "etc/hybrid_sim.hpp"
#include "oracles.hpp"

using namespace etc;

namespace {

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

// x' = 0, e' = x: with x = 1 and e(0) = -0.5 the trigger e^2 >= x^2 first
// holds at t = 1.5.
struct Ramp {
    ClosedLoopMatrices cl{scalar(0), scalar(0), scalar(1), scalar(0), scalar(1)};
    TriggerPredicate pred{TriggerConfig{1.0, 1.0, 0.1, 1.0, 1.0}, scalar(1)};
    HybridState s0{scalar(1), scalar(-0.5), 0.0};
};

struct Fixed {
    PlantModel plant = example_plant();
    ClosedLoopMatrices cl;
    TriggerConfig trigger;

    explicit Fixed(const std::string& name) {
        const Fixture& f = fixture(name);
        cl = assemble_closed_loop(plant, f.controller);
        trigger.gamma = std::sqrt(f.mu);
        trigger.eps1 = 1.0 / f.eps;
        trigger.L = compute_L(plant, f.controller);
        trigger.masp = masp(trigger.gamma, trigger.L);
        trigger.T = (1 - 1e-6) * trigger.masp;
    }
    [[nodiscard]] TriggerPredicate pred() const { return {trigger, cl.Cbar}; }
};

Vec stack(const HybridState& s) {
    Vec z(s.x.size() + s.e.size());
    z << s.x, s.e;
    return z;
}

} // namespace

TEST(FlowMap, LinearVectorField) {
    const Fixed f("eps_weight_1");
    std::mt19937_64 rng(51);
    const HybridState s{oracle::random_matrix(rng, 4, 1), oracle::random_matrix(rng, 2, 1), 0.3};
    const HybridState d = flow_derivative(s, f.cl);
    EXPECT_LT((d.x - (f.cl.A1 * s.x + f.cl.B1 * s.e)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((d.e - (f.cl.A2 * s.x + f.cl.B2 * s.e)).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_EQ(d.tau, 1.0);
    EXPECT_THROW((void)flow_derivative(HybridState{Vec::Zero(3), Vec::Zero(2), 0}, f.cl), DimensionMismatch);
}

TEST(TriggerSets, QuadraticAndClock) {
    const Ramp r;
    HybridState s = r.s0;
    EXPECT_DOUBLE_EQ(r.pred.quadratic(s), 0.25 - 1.0);
    EXPECT_TRUE(r.pred.in_flow_set(s));
    EXPECT_FALSE(r.pred.in_jump_set(s));
    s.e = scalar(2.0);
    EXPECT_TRUE(r.pred.in_flow_set(s));  // tau <= T keeps it in C
    EXPECT_FALSE(r.pred.in_jump_set(s));
    s.tau = 0.1;
    EXPECT_TRUE(r.pred.in_flow_set(s));  // both hold on the boundary
    EXPECT_TRUE(r.pred.in_jump_set(s));
    s.tau = 0.2;
    EXPECT_FALSE(r.pred.in_flow_set(s));
}

TEST(Simulate, ManufacturedCrossingTime) {
    const Ramp r;
    const HybridTrajectory tr = simulate(r.s0, r.cl, r.pred, 3.0, {1e-3});
    ASSERT_EQ(tr.jump_times.size(), 2u);
    EXPECT_NEAR(tr.jump_times[0], 1.5, 1e-9);
    EXPECT_NEAR(tr.jump_times[1], 2.5, 1e-9);  // restarts from e = 0
    EXPECT_EQ(tr.terminal, Terminal::TimeLimit);
    EXPECT_NEAR(tr.t_final, 3.0, 1e-12);
}

TEST(Simulate, CrossingDoesNotDependOnStepSize) {
    const Ramp r;
    for (double h : {0.37, 0.05, 1e-3, 1e-4}) {
        const HybridTrajectory tr = simulate(r.s0, r.cl, r.pred, 2.0, {h});
        ASSERT_EQ(tr.jump_times.size(), 1u) << h;
        EXPECT_NEAR(tr.jump_times[0], 1.5, 1e-9) << h;
    }
}

TEST(Simulate, ZeroStateJumpsEveryDwellTime) {
    for (const Fixture& fx : fixtures()) {
        const Fixed f(fx.name);
        const HybridState z{Vec::Zero(4), Vec::Zero(2), 0.0};
        const HybridTrajectory tr = simulate(z, f.cl, f.pred(), 0.5);
        const auto gaps = tr.gaps();
        ASSERT_GE(gaps.size(), 10u);
        EXPECT_NEAR(tr.jump_times[0], f.trigger.T, 1e-12);
        for (double g : gaps) EXPECT_NEAR(g, f.trigger.T, 1e-8) << fx.name;
    }
}

TEST(Simulate, NoEventInsideTheFlowSet) {
    // e = 0 at a large state keeps the quadratic negative for a while.
    const Fixed f("eps_weight_1e4");
    const HybridState s{(Vec(4) << 3, 1, 0, 0).finished(), Vec::Zero(2), 0.0};
    const HybridTrajectory tr = simulate(s, f.cl, f.pred(), 0.05, {1e-4, 1});
    ASSERT_EQ(tr.jump_times.size(), 1u);
    // Every recorded pre-jump sample satisfied the flow condition.
    const Arc& a = tr.arcs.front();
    for (std::size_t k = 0; k + 1 < a.states.size(); ++k) {
        const auto& st = a.states[k];
        EXPECT_TRUE(f.pred().quadratic(st) < 0.0 || st.tau <= f.trigger.T + 1e-12);
    }
    // The event sits on the boundary of the jump set.
    EXPECT_TRUE(f.pred().in_jump_set(a.states.back()) || std::abs(f.pred().quadratic(a.states.back())) < 1e-6);
}

TEST(Simulate, MatchesMatrixExponentialBetweenJumps) {
    std::mt19937_64 rng(52);
    const TriggerPredicate never{TriggerConfig{0.01, 1.0, 2.0, masp(0.01, 0.1), 0.1}, Mat::Zero(1, 3)};
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index nx = 3, ne = 1 + trial % 3;
        Mat f = oracle::random_matrix(rng, nx + ne, nx + ne, 2.0);
        const double shift = Eigen::EigenSolver<Mat>(f).eigenvalues().real().maxCoeff() + 0.5;
        f -= shift * Mat::Identity(nx + ne, nx + ne);
        const ClosedLoopMatrices cl{f.topLeftCorner(nx, nx), f.topRightCorner(nx, ne), f.bottomLeftCorner(ne, nx),
                                    f.bottomRightCorner(ne, ne), Mat::Zero(1, nx)};
        const HybridState s{oracle::random_matrix(rng, nx, 1), oracle::random_matrix(rng, ne, 1), 0.0};
        const HybridTrajectory tr = simulate(s, cl, never, 1.0);
        ASSERT_TRUE(tr.jump_times.empty());
        const Vec ref = oracle::expm_flow(f, stack(s), 1.0);
        EXPECT_LT((stack(tr.final_state) - ref).cwiseAbs().maxCoeff(), 1e-6) << "trial " << trial;
        EXPECT_NEAR(tr.final_state.tau, 1.0, 1e-12);
        // Intermediate samples as well.
        const Arc& a = tr.arcs.front();
        for (std::size_t k = 0; k < a.times.size(); k += 1234) {
            const Vec mid = oracle::expm_flow(f, stack(s), a.times[k]);
            EXPECT_LT((stack(a.states[k]) - mid).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(Simulate, SlopeMatchesVectorField) {
    const Fixed f("min_mu_alpha_beta");
    const HybridState s{(Vec(4) << 1, -2, 0.5, 0.1).finished(), (Vec(2) << 0.01, -0.02).finished(), 0.0};
    const double h = 1e-6;
    const StepResult fwd = step(s, f.cl, f.pred(), h);
    ASSERT_FALSE(fwd.jumped);
    const HybridState d = flow_derivative(s, f.cl);
    const Vec slope = (stack(fwd.state) - stack(s)) / fwd.dt;
    const Vec ref = stack(d);
    EXPECT_LT((slope - ref).cwiseAbs().maxCoeff(), 1e-4 * ref.cwiseAbs().maxCoeff());
}

TEST(Simulate, GapsNeverShorterThanDwellTime) {
    for (const Fixture& fx : fixtures()) {
        const Fixed f(fx.name);
        for (const HybridState& s : sample_initial_conditions(4, 2, 25.0, 5, 7)) {
            const HybridTrajectory tr = simulate(s, f.cl, f.pred(), 1.0, {1e-4, SIZE_MAX, false});
            for (double g : tr.gaps()) EXPECT_GE(g, f.trigger.T - 1e-12) << fx.name;
            if (!tr.jump_times.empty()) {
                EXPECT_GE(tr.jump_times[0], f.trigger.T - 1e-12);
            }
        }
    }
}

TEST(Step, ResetKeepsPlantStateAndClearsError) {
    const Ramp r;
    HybridState s = r.s0;
    s.e = scalar(1.0);
    s.tau = 0.5;  // already in D
    const StepResult res = step(s, r.cl, r.pred, 0.01);
    ASSERT_TRUE(res.jumped);
    EXPECT_EQ(res.dt, 0.0);
    EXPECT_EQ(res.state.x, s.x);
    EXPECT_EQ(res.state.e, Vec::Zero(1));
    EXPECT_EQ(res.state.tau, 0.0);
    EXPECT_EQ(res.pre_jump.e, s.e);
}

TEST(Step, LandsOnTheDwellTimeExactly) {
    const Ramp r;
    HybridState s = r.s0;
    s.e = scalar(1.0);  // trigger already active, waiting for the clock
    s.tau = 0.05;
    const StepResult res = step(s, r.cl, r.pred, 1.0);
    ASSERT_TRUE(res.jumped);
    EXPECT_DOUBLE_EQ(res.dt, 0.05);
    EXPECT_DOUBLE_EQ(res.pre_jump.tau, 0.1);
}

TEST(Simulate, JumpCapAndBadInput) {
    const Fixed f("min_mu_alpha_beta");
    const HybridState z{Vec::Zero(4), Vec::Zero(2), 0.0};
    const HybridTrajectory tr = simulate(z, f.cl, f.pred(), 1.0, {1e-4, 3});
    EXPECT_EQ(tr.terminal, Terminal::JumpLimit);
    EXPECT_EQ(tr.jump_times.size(), 3u);
    EXPECT_THROW((void)simulate(z, f.cl, f.pred(), -1.0), InvalidInput);
    EXPECT_THROW((void)simulate(z, f.cl, f.pred(), 1.0, {0.0}), InvalidInput);
    EXPECT_THROW((void)simulate(HybridState{Vec::Zero(3), Vec::Zero(2), 0}, f.cl, f.pred(), 1.0), DimensionMismatch);
}

TEST(Simulate, DivergenceIsReportedNotThrown) {
    const ClosedLoopMatrices cl{scalar(800), scalar(0), scalar(0), scalar(0), scalar(0)};
    const TriggerPredicate pred{TriggerConfig{0.01, 1.0, 1.0, masp(0.01, 0.1), 0.1}, scalar(0)};
    const HybridTrajectory tr = simulate(HybridState{scalar(1), scalar(0), 0}, cl, pred, 2.0, {1e-2, SIZE_MAX, false});
    EXPECT_EQ(tr.terminal, Terminal::Numerical);
    EXPECT_LT(tr.t_final, 2.0);
}

TEST(Stats, PooledOverTrajectories) {
    HybridTrajectory a, b;
    a.jump_times = {0.1, 0.3, 0.4};
    b.jump_times = {1.0, 1.6};
    const GapStats g = stats({a, b});
    EXPECT_EQ(g.count, 3u);
    EXPECT_DOUBLE_EQ(g.tau_min, 0.1);
    EXPECT_NEAR(g.tau_avg, (0.2 + 0.1 + 0.6) / 3.0, 1e-15);
    HybridTrajectory none;
    none.jump_times = {0.5};
    EXPECT_THROW((void)stats({none}), EmptyInput);
    EXPECT_THROW((void)stats({}), EmptyInput);
}

TEST(Csv, HeadersAndRows) {
    const Ramp r;
    const HybridTrajectory tr = simulate(r.s0, r.cl, r.pred, 2.0, {0.5});
    std::ostringstream traj, jumps;
    write_trajectory_csv(traj, tr);
    write_jump_log_csv(jumps, tr);
    EXPECT_EQ(traj.str().substr(0, traj.str().find('\n')), "t,j,x1,e1,tau");
    std::istringstream in(jumps.str());
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "j,t_j,gap");
    EXPECT_EQ(row.substr(0, 2), "1,");
    EXPECT_NEAR(std::stod(row.substr(row.rfind(',') + 1)), 1.5, 1e-9);  // first gap measured from t = 0
}

#pragma once

// Fixed-step simulation of the event-triggered closed loop
//
//   flow  (x, e, tau)' = (A1 x + B1 e, A2 x + B2 e, 1)    on C
//   jump  (x, e, tau)+ = (x, 0, 0)                        on D
//
// with C = {gamma^2 |e|^2 <= eps1 |y|^2 or tau <= T} and
//      D = {gamma^2 |e|^2 >= eps1 |y|^2 and tau >= T}, y = Cbar x.
// Jumps take priority on C intersect D.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <vector>

#include "etc/codesign.hpp"

namespace etc {

struct HybridState {
    Vec x;
    Vec e;
    double tau = 0.0;
};

class TriggerPredicate {
public:
    TriggerPredicate(TriggerConfig trigger, Mat cbar);

    /// gamma^2 |e|^2 - eps1 |Cbar x|^2; the trigger fires once this is >= 0.
    [[nodiscard]] double quadratic(const HybridState& s) const;
    [[nodiscard]] bool in_flow_set(const HybridState& s) const;
    [[nodiscard]] bool in_jump_set(const HybridState& s) const;

    [[nodiscard]] const TriggerConfig& trigger() const noexcept { return trigger_; }
    [[nodiscard]] const Mat& cbar() const noexcept { return cbar_; }

private:
    TriggerConfig trigger_;
    Mat cbar_;
};

[[nodiscard]] HybridState flow_derivative(const HybridState& s, const ClosedLoopMatrices& cl);

struct StepResult {
    HybridState state;     // after the reset when jumped
    HybridState pre_jump;  // state at the event (valid when jumped)
    double dt = 0.0;       // flow time consumed
    bool jumped = false;
};

/// Flows for at most dt_max, stopping early at the first jump. A jump is
/// located by bisection on the sub-step length to 1e-10 T.
[[nodiscard]] StepResult step(const HybridState& s, const ClosedLoopMatrices& cl, const TriggerPredicate& predicate,
                              double dt_max);

enum class Terminal { TimeLimit, JumpLimit, Numerical };

struct Arc {
    double t_begin = 0.0;
    double t_end = 0.0;
    std::size_t j = 0;
    std::vector<double> times;         // empty unless samples were recorded
    std::vector<HybridState> states;
};

struct HybridTrajectory {
    std::vector<Arc> arcs;
    std::vector<double> jump_times;
    HybridState initial;
    HybridState final_state;
    double t_final = 0.0;
    Terminal terminal = Terminal::TimeLimit;

    /// Differences of consecutive jump times.
    [[nodiscard]] std::vector<double> gaps() const;
};

struct SimOptions {
    double h = 1e-4;
    std::size_t jump_cap = std::numeric_limits<std::size_t>::max();
    bool record_samples = true;
};

[[nodiscard]] HybridTrajectory simulate(const HybridState& initial, const ClosedLoopMatrices& cl,
                                        const TriggerPredicate& predicate, double t_end, const SimOptions& opts = {});

struct GapStats {
    double tau_min = 0.0;
    double tau_avg = 0.0;
    std::size_t count = 0;
};

/// Pooled over every consecutive-jump gap. Throws EmptyInput without gaps.
[[nodiscard]] GapStats stats(const std::vector<HybridTrajectory>& trajectories);

/// Columns t, j, x..., e..., tau; one row per recorded sample.
void write_trajectory_csv(std::ostream& out, const HybridTrajectory& trajectory);
/// Columns j, t_j, gap; the first gap is measured from t = 0.
void write_jump_log_csv(std::ostream& out, const HybridTrajectory& trajectory);

} // namespace etc

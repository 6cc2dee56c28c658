#pragma once

// Small dense semidefinite programs in inequality form:
//
//   minimize  c^T v   subject to  F_i(v) > 0  or  F_i(v) < 0,  i = 1..K,
//
// where each F_i is an AffineLmi over the same DecisionLayout. Strict
// inequalities are enforced with a margin: F_i(v) - delta_i I >= 0 (or
// -F_i(v) - delta_i I >= 0) with delta_i = margin_rel * scale(F_i).

#include <string>
#include <vector>

#include "etc/lmi.hpp"

namespace etc {

struct SdpProblem {
    DecisionLayout layout;
    std::vector<AffineLmi> constraints;
    Vec objective;  // one weight per scalar unknown; all zero means pure feasibility

    /// Throws InvalidInput / DimensionMismatch when the invariants fail.
    void validate() const;
};

struct SdpOptions {
    double gap_tol = 1e-7;          // relative duality gap
    double feas_tol = 1e-6;         // relative primal/dual residuals
    double margin_rel = 1e-7;       // strictness margin relative to each constraint's scale
    double infeasibility_tol = 1e-8;
    int max_iterations = 200;
    bool prescale = true;           // power-of-ten normalization of each unknown
};

enum class SdpStatus { Optimal, Feasible, Infeasible, NumericalFailure };

[[nodiscard]] const char* to_string(SdpStatus s) noexcept;

struct SdpSolution {
    SdpStatus status = SdpStatus::NumericalFailure;
    Vec values;
    double objective_value = 0.0;
    /// min over constraints of the sign-adjusted extreme eigenvalue.
    double worst_margin = 0.0;
    double relative_gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    /// Residual of the normalized Farkas ray when status == Infeasible.
    double certificate_residual = 0.0;
    int iterations = 0;
    std::string message;
};

[[nodiscard]] SdpSolution solve(const SdpProblem& problem, const SdpOptions& opts = {});

/// Per-constraint margins (see margin()) in constraint order.
[[nodiscard]] std::vector<double> check_assignment(const SdpProblem& problem, const Vec& values);

} // namespace etc

#pragma once

// Controller and trigger co-design: reconstruction of (A_c, B_c, C_c) from an
// LMI solution, the MASP bound, the closed-loop hybrid matrices, and a
// numerical certificate built from the Lyapunov matrix P.

#include <string>

#include "etc/lmi.hpp"
#include "etc/plant.hpp"
#include "etc/sdp.hpp"

namespace etc {

struct ControllerRealization {
    Mat Ac;  // n_p x n_p
    Mat Bc;  // n_p x n_y
    Mat Cc;  // n_u x n_p
    Mat U, V;  // factorization pair, U V^T = I - X Y (empty for given controllers)
};

struct TriggerConfig {
    double gamma = 0.0;  // sqrt(mu)
    double eps1 = 0.0;   // 1 / eps
    double T = 0.0;      // enforced dwell time [s]
    double masp = 0.0;   // maximum allowable sampling period [s]
    double L = 0.0;

    /// Throws InvalidInput unless gamma >= 0, eps1 > 0, L > 0 and 0 < T < masp.
    void validate() const;
};

struct ClosedLoopMatrices {
    Mat A1, B1, A2, B2;
    Mat Cbar;  // [C_p 0]

    [[nodiscard]] Eigen::Index n_x() const noexcept { return A1.rows(); }
    [[nodiscard]] Eigen::Index n_e() const noexcept { return B1.cols(); }
};

struct VerificationCertificate {
    Mat P;
    Mat Xhat, Yhat;
    double lmi13_max_eig = 0.0;
    double eps2 = 0.0;
    double p_min_eig = 0.0;
    /// alpha*beta - lambda_max(B_c^T C_c^T C_c B_c); NaN when LMI-C was not imposed.
    double claim1_gap = 0.0;
    double factorization_residual = 0.0;  // |U V^T - (I - X Y)|_max / max(1, |I - X Y|_max)
};

enum class Factorization { Balanced, UEqImXY };

/// Maximum allowable sampling period for gain gamma >= 0 and L > 0.
[[nodiscard]] double masp(double gamma, double L);

/// max(|C_c B_c|, |C_p B_p|), i.e. the spectral norm of B2.
[[nodiscard]] double compute_L(const PlantModel& plant, const ControllerRealization& controller);

[[nodiscard]] ClosedLoopMatrices assemble_closed_loop(const PlantModel& plant,
                                                      const ControllerRealization& controller);

/// Throws SingularFactor when I - X Y is numerically singular.
[[nodiscard]] ControllerRealization reconstruct(const LmiSolution& solution, const PlantModel& plant,
                                                Factorization factorization = Factorization::Balanced);

/// Block matrix [[A1^T P + P A1 + A2^T A2 + eps1 Cbar^T Cbar, P B1], [B1^T P, -mu I]].
[[nodiscard]] SymMat lyapunov_lmi(const ClosedLoopMatrices& cl, const Mat& P, double mu, double eps1);

/// Rebuilds P from (X, Y, U, V) and checks the closed-loop certificate.
/// Throws VerificationFailed naming the first violated item.
[[nodiscard]] VerificationCertificate verify(const PlantModel& plant, const ControllerRealization& controller,
                                             const LmiSolution& solution, bool lmi_c_imposed = true);

struct DesignWeights {
    double mu = 1.0;
    double alpha = 1.0;
    double beta = 1.0;
    double eps = 0.0;
};

struct DesignOptions {
    DesignWeights weights;
    bool include_lmi_c = true;
    double T_fraction = 1.0 - 1e-6;
    Factorization factorization = Factorization::Balanced;
    SdpOptions sdp;
};

struct DesignResult {
    LmiSolution solution;
    ControllerRealization controller;
    TriggerConfig trigger;
    VerificationCertificate certificate;
    SdpSolution sdp;
};

/// Builds the co-design program for the given weights.
[[nodiscard]] SdpProblem codesign_problem(const PlantModel& plant, const DesignOptions& opts);

/// Solves, reconstructs, selects T and verifies. Throws Infeasible,
/// NumericalFailure or VerificationFailed.
[[nodiscard]] DesignResult design(const PlantModel& plant, const DesignOptions& opts = {});

/// Guaranteed minimum inter-transmission time of the trigger.
[[nodiscard]] double lemma1_bound(const TriggerConfig& trigger) noexcept;

/// Certificate for a given controller and trigger gains: a strictly feasible
/// P > 0 with lyapunov_lmi(cl, P, mu, eps1) < 0.
struct EmulationCertificate {
    Mat P;
    double lmi13_max_eig = 0.0;
    double p_min_eig = 0.0;
    bool certified = false;
    SdpStatus status = SdpStatus::NumericalFailure;
};

[[nodiscard]] EmulationCertificate certify_emulation(const PlantModel& plant, const ControllerRealization& controller,
                                                     double mu, double eps1, const SdpOptions& sdp = {});

} // namespace etc

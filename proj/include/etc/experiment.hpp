#pragma once

// Batch campaigns: design (or load a published controller), simulate many
// initial conditions, aggregate inter-transmission statistics.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "etc/codesign.hpp"
#include "etc/hybrid_sim.hpp"

namespace etc {

/// Second-order example plant A_p = [0 1; -2 3], B_p = [0; 1], C_p = [-1 4].
[[nodiscard]] PlantModel example_plant();

/// Published controller and trigger parameters for the example plant.
struct Fixture {
    std::string name;
    std::string description;
    DesignWeights weights;  // weights that produced the published values
    ControllerRealization controller;
    double mu = 0.0, eps = 0.0, L = 0.0, alpha = 0.0, beta = 0.0, T = 0.0;
    int controller_decimals = 4;  // rounding of the printed controller entries
    double reported_tau_min = 0.0, reported_tau_avg = 0.0;
};

[[nodiscard]] const std::vector<Fixture>& fixtures();
/// Throws InvalidInput for unknown names.
[[nodiscard]] const Fixture& fixture(const std::string& name);

/// Uniform samples from the closed ball of the given radius in R^(n_x + n_e),
/// with tau = 0. Deterministic for a given seed.
[[nodiscard]] std::vector<HybridState> sample_initial_conditions(Eigen::Index n_x, Eigen::Index n_e, double radius,
                                                                 std::size_t count, std::uint64_t seed);

struct Campaign {
    enum class Mode { Design, Fixture };

    PlantModel plant = example_plant();
    Mode mode = Mode::Design;
    DesignOptions design;        // Design mode
    std::string fixture_name;    // Fixture mode
    std::size_t ic_count = 100;
    double ic_radius = 25.0;
    double t_end = 20.0;
    std::uint64_t seed = 1;
    double h = 1e-4;
    unsigned workers = 0;  // 0: hardware concurrency

    void validate() const;
};

struct Report {
    std::string source;  // "design" or "fixture:<name>"
    PlantModel plant;
    std::size_t ic_count = 0;
    double ic_radius = 0.0;
    double t_end = 0.0;
    std::uint64_t seed = 0;
    double h = 0.0;

    double T = 0.0, masp = 0.0, mu = 0.0, eps = 0.0, L = 0.0, alpha = 0.0, beta = 0.0;
    ControllerRealization controller;

    double tau_min = 0.0;
    double tau_avg = 0.0;
    std::size_t gap_count = 0;
    std::vector<double> decay;         // |x(t_end)| / |x(0)| per run
    std::vector<std::size_t> jumps;    // jump count per run
    std::vector<std::pair<std::string, double>> margins;

    [[nodiscard]] double eps_mu() const noexcept { return eps * mu; }
    [[nodiscard]] double max_decay() const;
};

/// Throws Infeasible, NumericalFailure or VerificationFailed from the design
/// step, and VerificationFailed("emulation") when a fixture cannot be certified.
[[nodiscard]] Report run_campaign(const Campaign& campaign);

struct Comparison {
    double tau_avg_ratio = 0.0;  // b / a
    double tau_min_ratio = 0.0;
    double T_ratio = 0.0;
    double eps_mu_a = 0.0;
    double eps_mu_b = 0.0;
    double eps_mu_ratio = 0.0;
};

/// Throws ConfigMismatch unless both reports share plant and IC configuration.
[[nodiscard]] Comparison compare_campaigns(const Report& a, const Report& b);

[[nodiscard]] std::string report_to_json(const Report& report);
[[nodiscard]] Report report_from_json(const std::string& text);
[[nodiscard]] std::string comparison_to_json(const Comparison& c);

/// Solution, controller (with U, V), trigger and certificate of a design.
[[nodiscard]] std::string design_to_json(const PlantModel& plant, const DesignResult& result);
/// Restores plant, solution, controller and trigger; the certificate and SDP
/// diagnostics are left default-initialized.
[[nodiscard]] std::pair<PlantModel, DesignResult> design_from_json(const std::string& text);

/// {"A_p": [[...]], "B_p": [[...]], "C_p": [[...]]}
[[nodiscard]] PlantModel plant_from_json(const std::string& text);
[[nodiscard]] std::string plant_to_json(const PlantModel& plant);

} // namespace etc

// Command-line front end: MASP evaluation, co-design, certificate checks,
// single simulations and batch campaigns.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "etc/experiment.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace etc;

enum Exit { kOk = 0, kError = 1, kInfeasible = 2, kVerification = 3, kNumerical = 4 };

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    out << text;
}

std::vector<std::string> fixture_names() {
    std::vector<std::string> names;
    for (const auto& f : fixtures()) names.push_back(f.name);
    return names;
}

struct DesignFlags {
    std::string plant_file;
    std::vector<double> weights{1, 1, 1, 0};
    bool no_lmi_c = false;
    double theta = 1.0 - 1e-6;
    std::string factorization = "balanced";

    void add(CLI::App* app) {
        app->add_option("--plant", plant_file, "plant JSON with keys A_p, B_p, C_p (default: built-in example)");
        app->add_option("--weights", weights, "weights on mu, alpha, beta, eps")->expected(4);
        app->add_flag("--no-lmi-c", no_lmi_c, "drop the alpha-beta constraint");
        app->add_option("--theta", theta, "dwell time as a fraction of the MASP")->check(CLI::Range(0.0, 1.0));
        app->add_option("--factorization", factorization, "U V^T factorization")
            ->check(CLI::IsMember({"balanced", "u_eq_ImXY"}));
    }

    PlantModel plant() const { return plant_file.empty() ? example_plant() : plant_from_json(read_file(plant_file)); }

    DesignOptions options() const {
        DesignOptions o;
        o.weights = {weights[0], weights[1], weights[2], weights[3]};
        o.include_lmi_c = !no_lmi_c;
        o.T_fraction = theta;
        o.factorization = factorization == "balanced" ? Factorization::Balanced : Factorization::UEqImXY;
        return o;
    }
};

json certificate_json(const VerificationCertificate& c) {
    auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    return {{"lmi13_max_eig", num(c.lmi13_max_eig)}, {"eps2", num(c.eps2)}, {"p_min_eig", num(c.p_min_eig)},
            {"claim1_gap", num(c.claim1_gap)}, {"factorization_residual", num(c.factorization_residual)}};
}

// Closed loop and trigger either from a design file or from a fixture.
struct LoadedLoop {
    PlantModel plant;
    ControllerRealization controller;
    TriggerConfig trigger;
};

LoadedLoop load_loop(const std::string& design_file, const std::string& fixture_name, double theta) {
    if (design_file.empty() == fixture_name.empty()) throw InvalidInput("give exactly one of --design or --fixture");
    LoadedLoop l;
    if (!design_file.empty()) {
        auto [plant, d] = design_from_json(read_file(design_file));
        l.plant = std::move(plant);
        l.controller = std::move(d.controller);
        l.trigger = d.trigger;
    } else {
        const Fixture& f = fixture(fixture_name);
        l.plant = example_plant();
        l.controller = f.controller;
        l.trigger.gamma = std::sqrt(f.mu);
        l.trigger.eps1 = 1.0 / f.eps;
        l.trigger.L = compute_L(l.plant, f.controller);
        l.trigger.masp = masp(l.trigger.gamma, l.trigger.L);
        l.trigger.T = theta * l.trigger.masp;
    }
    l.trigger.validate();
    return l;
}

Vec vec(const std::vector<double>& v, Eigen::Index n, const char* what) {
    if (v.empty()) return Vec::Zero(n);
    if (static_cast<Eigen::Index>(v.size()) != n) {
        throw DimensionMismatch(std::string(what) + " needs " + std::to_string(n) + " values");
    }
    return Eigen::Map<const Vec>(v.data(), n);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-triggered output feedback co-design"};
    app.require_subcommand(1);

    double gamma = -1.0, mu = -1.0, L = 0.0;
    auto* masp_cmd = app.add_subcommand("masp", "maximum allowable sampling period");
    auto* gamma_opt = masp_cmd->add_option("--gamma", gamma, "trigger gain gamma");
    masp_cmd->add_option("--mu", mu, "mu = gamma^2")->excludes(gamma_opt);
    masp_cmd->add_option("--L", L, "L = |B2|")->required();

    DesignFlags design_flags;
    std::string out_file;
    auto* design_cmd = app.add_subcommand("design", "solve the co-design program and print the result as JSON");
    design_flags.add(design_cmd);
    design_cmd->add_option("-o,--out", out_file, "output file (default stdout)");

    std::string design_file, fixture_name;
    double theta = 1.0 - 1e-6;
    auto* verify_cmd = app.add_subcommand("verify", "re-check the Lyapunov certificate of a design or fixture");
    verify_cmd->add_option("--design", design_file, "design JSON written by 'design'");
    verify_cmd->add_option("--fixture", fixture_name, "published controller")->check(CLI::IsMember(fixture_names()));

    std::vector<double> x0, e0;
    double t_end = 20.0, h = 1e-4;
    std::string traj_file, jumps_file;
    auto* sim_cmd = app.add_subcommand("simulate", "simulate one initial condition");
    sim_cmd->add_option("--design", design_file, "design JSON written by 'design'");
    sim_cmd->add_option("--fixture", fixture_name, "published controller")->check(CLI::IsMember(fixture_names()));
    sim_cmd->add_option("--theta", theta, "dwell time as a fraction of the MASP (fixtures)")->check(CLI::Range(0.0, 1.0));
    sim_cmd->add_option("--x0", x0, "initial plant and controller state");
    sim_cmd->add_option("--e0", e0, "initial network-induced error");
    sim_cmd->add_option("--t-end", t_end, "simulation horizon [s]")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--step", h, "integrator step [s]")->check(CLI::PositiveNumber);
    sim_cmd->add_option("--trajectory", traj_file, "trajectory CSV (t, j, x..., e..., tau)");
    sim_cmd->add_option("--jumps", jumps_file, "jump log CSV (j, t_j, gap)");

    DesignFlags batch_flags;
    Campaign campaign;
    auto* batch_cmd = app.add_subcommand("batch", "run a campaign over random initial conditions");
    batch_flags.add(batch_cmd);
    batch_cmd->add_option("--fixture", fixture_name, "use a published controller instead of designing")
        ->check(CLI::IsMember(fixture_names()));
    batch_cmd->add_option("--ic-count", campaign.ic_count, "number of initial conditions")->check(CLI::PositiveNumber);
    batch_cmd->add_option("--ic-radius", campaign.ic_radius, "radius of the initial-condition ball")
        ->check(CLI::PositiveNumber);
    batch_cmd->add_option("--seed", campaign.seed, "random seed");
    batch_cmd->add_option("--t-end", campaign.t_end, "simulation horizon [s]")->check(CLI::PositiveNumber);
    batch_cmd->add_option("--step", campaign.h, "integrator step [s]")->check(CLI::PositiveNumber);
    batch_cmd->add_option("--workers", campaign.workers, "worker threads (0: all cores)");
    batch_cmd->add_option("-o,--out", out_file, "report file (default stdout)");

    std::string report_a, report_b;
    auto* compare_cmd = app.add_subcommand("compare", "compare two campaign reports (ratios are b / a)");
    compare_cmd->add_option("a", report_a, "baseline report")->required();
    compare_cmd->add_option("b", report_b, "other report")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*masp_cmd) {
            if (gamma < 0.0 && mu < 0.0) throw InvalidInput("give --gamma or --mu");
            const double g = gamma >= 0.0 ? gamma : std::sqrt(mu);
            std::printf("%.10g\n", masp(g, L));
        } else if (*design_cmd) {
            const PlantModel plant = design_flags.plant();
            const DesignResult d = design(plant, design_flags.options());
            write_output(out_file, design_to_json(plant, d));
        } else if (*verify_cmd) {
            if (design_file.empty() == fixture_name.empty()) throw InvalidInput("give exactly one of --design or --fixture");
            if (!design_file.empty()) {
                auto [plant, d] = design_from_json(read_file(design_file));
                // alpha and beta stay zero when the alpha-beta LMI was dropped.
                const VerificationCertificate c = verify(plant, d.controller, d.solution, d.solution.alpha > 0.0);
                std::cout << json{{"certified", true}, {"certificate", certificate_json(c)}}.dump(2) << "\n";
            } else {
                const LoadedLoop l = load_loop(design_file, fixture_name, theta);
                const EmulationCertificate c =
                    certify_emulation(l.plant, l.controller, fixture(fixture_name).mu, l.trigger.eps1);
                std::cout << json{{"certified", c.certified},
                                  {"status", to_string(c.status)},
                                  {"lmi13_max_eig", c.lmi13_max_eig},
                                  {"p_min_eig", c.p_min_eig}}
                                 .dump(2)
                          << "\n";
                if (!c.certified) return kVerification;
            }
        } else if (*sim_cmd) {
            const LoadedLoop l = load_loop(design_file, fixture_name, theta);
            const ClosedLoopMatrices cl = assemble_closed_loop(l.plant, l.controller);
            HybridState s{vec(x0, cl.n_x(), "--x0"), vec(e0, cl.n_e(), "--e0"), 0.0};
            SimOptions opts;
            opts.h = h;
            opts.record_samples = !traj_file.empty();
            const HybridTrajectory tr = simulate(s, cl, TriggerPredicate(l.trigger, cl.Cbar), t_end, opts);
            if (!traj_file.empty()) {
                std::ofstream f(traj_file);
                write_trajectory_csv(f, tr);
            }
            if (!jumps_file.empty()) {
                std::ofstream f(jumps_file);
                write_jump_log_csv(f, tr);
            }
            json summary = {{"T", l.trigger.T}, {"jumps", tr.jump_times.size()}, {"t_final", tr.t_final},
                            {"final_x_norm", tr.final_state.x.norm()}};
            const auto gaps = tr.gaps();
            if (!gaps.empty()) {
                const GapStats g = stats({tr});
                summary["tau_min"] = g.tau_min;
                summary["tau_avg"] = g.tau_avg;
            }
            std::cout << summary.dump(2) << "\n";
            if (tr.terminal == Terminal::Numerical) return kNumerical;
        } else if (*batch_cmd) {
            campaign.plant = batch_flags.plant();
            campaign.design = batch_flags.options();
            if (!fixture_name.empty()) {
                campaign.mode = Campaign::Mode::Fixture;
                campaign.fixture_name = fixture_name;
            }
            write_output(out_file, report_to_json(run_campaign(campaign)));
        } else if (*compare_cmd) {
            const Report a = report_from_json(read_file(report_a));
            const Report b = report_from_json(read_file(report_b));
            std::cout << comparison_to_json(compare_campaigns(a, b));
        }
    } catch (const Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const VerificationFailed& e) {
        std::cerr << "verification failed (" << e.item() << "): " << e.what() << "\n";
        return kVerification;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kOk;
}

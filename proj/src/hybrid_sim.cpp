#include "etc/hybrid_sim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

namespace etc {

TriggerPredicate::TriggerPredicate(TriggerConfig trigger, Mat cbar) : trigger_(trigger), cbar_(std::move(cbar)) {
    if (!(trigger_.gamma >= 0.0) || !(trigger_.eps1 > 0.0) || !(trigger_.T > 0.0)) {
        throw InvalidInput("TriggerPredicate: need gamma >= 0, eps1 > 0, T > 0");
    }
    require_finite(cbar_, "TriggerPredicate Cbar");
}

double TriggerPredicate::quadratic(const HybridState& s) const {
    const double g2 = trigger_.gamma * trigger_.gamma;
    return g2 * s.e.squaredNorm() - trigger_.eps1 * (cbar_ * s.x).squaredNorm();
}

bool TriggerPredicate::in_flow_set(const HybridState& s) const {
    return s.tau <= trigger_.T || quadratic(s) <= 0.0;
}

bool TriggerPredicate::in_jump_set(const HybridState& s) const {
    return s.tau >= trigger_.T && quadratic(s) >= 0.0;
}

HybridState flow_derivative(const HybridState& s, const ClosedLoopMatrices& cl) {
    if (s.x.size() != cl.n_x() || s.e.size() != cl.n_e()) throw DimensionMismatch("flow_derivative: wrong x or e size");
    return {cl.A1 * s.x + cl.B1 * s.e, cl.A2 * s.x + cl.B2 * s.e, 1.0};
}

namespace {

// Classic RK4 on z = (x, e). The flow is linear, so a full step of length h
// is the fixed matrix I + hF + (hF)^2/2 + (hF)^3/6 + (hF)^4/24.
class Flow {
public:
    Flow(const ClosedLoopMatrices& cl, double h) : nx_(cl.n_x()), ne_(cl.n_e()), h_(h) {
        f_.resize(nx_ + ne_, nx_ + ne_);
        f_ << cl.A1, cl.B1, cl.A2, cl.B2;
        full_ = polynomial(h);
    }

    HybridState advance(const HybridState& s, double dt) const {
        Vec z(nx_ + ne_);
        z << s.x, s.e;
        const Vec z1 = dt == h_ ? Vec(full_ * z) : rk4(z, dt);
        return {z1.head(nx_), z1.tail(ne_), s.tau + dt};
    }

private:
    Mat polynomial(double dt) const {
        const Mat a = dt * f_;
        const Mat i = Mat::Identity(f_.rows(), f_.cols());
        return i + a * (i + a * (i + a * (i + a / 4.0) / 3.0) / 2.0);
    }

    Vec rk4(const Vec& z, double dt) const {
        const Vec k1 = f_ * z;
        const Vec k2 = f_ * (z + 0.5 * dt * k1);
        const Vec k3 = f_ * (z + 0.5 * dt * k2);
        const Vec k4 = f_ * (z + dt * k3);
        return z + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }

    Eigen::Index nx_, ne_;
    double h_;
    Mat f_;
    Mat full_;
};

bool finite(const HybridState& s) { return s.x.allFinite() && s.e.allFinite() && std::isfinite(s.tau); }

StepResult jump_at(const HybridState& s, double dt) {
    StepResult r;
    r.pre_jump = s;
    r.state = {s.x, Vec::Zero(s.e.size()), 0.0};
    r.dt = dt;
    r.jumped = true;
    return r;
}

StepResult advance_step(const HybridState& s, const Flow& flow, const TriggerPredicate& pred, double dt_max) {
    const double T = pred.trigger().T;
    if (pred.in_jump_set(s)) return jump_at(s, 0.0);

    double dt = dt_max;
    const bool clipped = s.tau < T && s.tau + dt >= T;
    if (clipped) dt = T - s.tau;
    HybridState s1 = flow.advance(s, dt);
    if (clipped) s1.tau = T;
    if (!finite(s1)) throw NumericalFailure("hybrid step: state is no longer finite");

    if (!pred.in_jump_set(s1)) return {s1, {}, dt, false};
    if (clipped) return jump_at(s1, dt);

    // tau >= T throughout and the trigger crossed zero inside the step.
    double lo = 0.0, hi = dt;
    HybridState at_hi = s1;
    const double tol = 1e-10 * T;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        HybridState sm = flow.advance(s, mid);
        if (pred.quadratic(sm) >= 0.0) {
            hi = mid;
            at_hi = std::move(sm);
        } else {
            lo = mid;
        }
    }
    return jump_at(at_hi, hi);
}

void check_state(const HybridState& s, const ClosedLoopMatrices& cl) {
    if (s.x.size() != cl.n_x() || s.e.size() != cl.n_e()) throw DimensionMismatch("hybrid state: wrong x or e size");
    if (!finite(s)) throw InvalidInput("hybrid state: non-finite entries");
    if (!(s.tau >= 0.0)) throw InvalidInput("hybrid state: tau must be >= 0");
}

} // namespace

StepResult step(const HybridState& s, const ClosedLoopMatrices& cl, const TriggerPredicate& predicate, double dt_max) {
    check_state(s, cl);
    if (!(dt_max > 0.0)) throw InvalidInput("step: dt_max must be > 0");
    return advance_step(s, Flow(cl, dt_max), predicate, dt_max);
}

std::vector<double> HybridTrajectory::gaps() const {
    std::vector<double> g;
    for (std::size_t i = 1; i < jump_times.size(); ++i) g.push_back(jump_times[i] - jump_times[i - 1]);
    return g;
}

HybridTrajectory simulate(const HybridState& initial, const ClosedLoopMatrices& cl, const TriggerPredicate& predicate,
                          double t_end, const SimOptions& opts) {
    check_state(initial, cl);
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw InvalidInput("simulate: t_end must be > 0");
    if (!(opts.h > 0.0)) throw InvalidInput("simulate: step h must be > 0");
    if (predicate.cbar().cols() != cl.n_x()) throw DimensionMismatch("simulate: Cbar does not match the closed loop");

    const Flow flow(cl, opts.h);
    HybridTrajectory traj;
    traj.initial = initial;
    HybridState s = initial;
    double t = 0.0;
    traj.arcs.push_back(Arc{0.0, 0.0, 0, {}, {}});
    auto record = [&](double time, const HybridState& st) {
        if (!opts.record_samples) return;
        traj.arcs.back().times.push_back(time);
        traj.arcs.back().states.push_back(st);
    };
    record(0.0, s);

    const double t_eps = 1e-12 * std::max(1.0, t_end);
    while (t_end - t > t_eps) {
        StepResult r;
        try {
            r = advance_step(s, flow, predicate, std::min(opts.h, t_end - t));
        } catch (const NumericalFailure&) {
            traj.terminal = Terminal::Numerical;
            break;
        }
        t += r.dt;
        if (r.jumped) {
            record(t, r.pre_jump);
            traj.arcs.back().t_end = t;
            traj.jump_times.push_back(t);
            traj.arcs.push_back(Arc{t, t, traj.jump_times.size(), {}, {}});
            s = std::move(r.state);
            record(t, s);
            if (traj.jump_times.size() >= opts.jump_cap) {
                traj.terminal = Terminal::JumpLimit;
                break;
            }
        } else {
            s = std::move(r.state);
            record(t, s);
        }
    }
    traj.arcs.back().t_end = t;
    traj.final_state = s;
    traj.t_final = t;
    return traj;
}

GapStats stats(const std::vector<HybridTrajectory>& trajectories) {
    GapStats g;
    g.tau_min = std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& tr : trajectories) {
        for (double gap : tr.gaps()) {
            g.tau_min = std::min(g.tau_min, gap);
            sum += gap;
            ++g.count;
        }
    }
    if (g.count == 0) throw EmptyInput("stats: no inter-jump gaps");
    g.tau_avg = sum / static_cast<double>(g.count);
    return g;
}

void write_trajectory_csv(std::ostream& out, const HybridTrajectory& trajectory) {
    const auto& s0 = trajectory.initial;
    out << "t,j";
    for (Eigen::Index i = 0; i < s0.x.size(); ++i) out << ",x" << i + 1;
    for (Eigen::Index i = 0; i < s0.e.size(); ++i) out << ",e" << i + 1;
    out << ",tau\n" << std::setprecision(17);
    for (const auto& arc : trajectory.arcs) {
        for (std::size_t k = 0; k < arc.times.size(); ++k) {
            const auto& s = arc.states[k];
            out << arc.times[k] << ',' << arc.j;
            for (Eigen::Index i = 0; i < s.x.size(); ++i) out << ',' << s.x(i);
            for (Eigen::Index i = 0; i < s.e.size(); ++i) out << ',' << s.e(i);
            out << ',' << s.tau << '\n';
        }
    }
}

void write_jump_log_csv(std::ostream& out, const HybridTrajectory& trajectory) {
    out << "j,t_j,gap\n" << std::setprecision(17);
    double prev = 0.0;
    for (std::size_t k = 0; k < trajectory.jump_times.size(); ++k) {
        const double t = trajectory.jump_times[k];
        out << k + 1 << ',' << t << ',' << t - prev << '\n';
        prev = t;
    }
}

} // namespace etc

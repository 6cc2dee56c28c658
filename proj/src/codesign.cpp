#include "etc/codesign.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace etc {

namespace {

Mat eye(Eigen::Index n) { return Mat::Identity(n, n); }

void check_controller(const PlantModel& plant, const ControllerRealization& k) {
    plant.validate();
    const auto np = plant.n_p(), nu = plant.n_u(), ny = plant.n_y();
    if (k.Ac.rows() != np || k.Ac.cols() != np) throw DimensionMismatch("controller: A_c must be n_p x n_p");
    if (k.Bc.rows() != np || k.Bc.cols() != ny) throw DimensionMismatch("controller: B_c must be n_p x n_y");
    if (k.Cc.rows() != nu || k.Cc.cols() != np) throw DimensionMismatch("controller: C_c must be n_u x n_p");
    require_finite(k.Ac, "controller A_c");
    require_finite(k.Bc, "controller B_c");
    require_finite(k.Cc, "controller C_c");
}

} // namespace

void TriggerConfig::validate() const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidInput("trigger: gamma must be finite and >= 0");
    if (!(eps1 > 0.0) || !std::isfinite(eps1)) throw InvalidInput("trigger: eps1 must be finite and > 0");
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidInput("trigger: L must be finite and > 0");
    if (!(T > 0.0) || !(T < masp)) throw InvalidInput("trigger: need 0 < T < masp");
}

double masp(double gamma, double L) {
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidInput("masp: L must be finite and > 0");
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidInput("masp: gamma must be finite and >= 0");
    if (std::abs(gamma - L) <= 1e-9 * L) return 1.0 / L;
    const double q = gamma / L;
    const double r = std::sqrt(std::abs(q * q - 1.0));
    if (gamma > L) return std::atan(r) / (L * r);
    if (gamma == 0.0) return std::numeric_limits<double>::infinity();
    return std::atanh(r) / (L * r);
}

double compute_L(const PlantModel& plant, const ControllerRealization& controller) {
    check_controller(plant, controller);
    return std::max(spectral_norm(Mat(controller.Cc * controller.Bc)), spectral_norm(Mat(plant.C * plant.B)));
}

ClosedLoopMatrices assemble_closed_loop(const PlantModel& plant, const ControllerRealization& k) {
    check_controller(plant, k);
    const auto np = plant.n_p(), nu = plant.n_u(), ny = plant.n_y();
    const Mat& A = plant.A;
    const Mat& B = plant.B;
    const Mat& C = plant.C;

    ClosedLoopMatrices cl;
    cl.A1.resize(2 * np, 2 * np);
    cl.A1 << A, B * k.Cc, k.Bc * C, k.Ac;
    cl.B1 = Mat::Zero(2 * np, ny + nu);
    cl.B1.topRightCorner(np, nu) = B;
    cl.B1.bottomLeftCorner(np, ny) = k.Bc;
    cl.A2.resize(ny + nu, 2 * np);
    cl.A2 << -C * A, -C * B * k.Cc, -k.Cc * k.Bc * C, -k.Cc * k.Ac;
    cl.B2 = Mat::Zero(ny + nu, ny + nu);
    cl.B2.topRightCorner(ny, nu) = -C * B;
    cl.B2.bottomLeftCorner(nu, ny) = -k.Cc * k.Bc;
    cl.Cbar = Mat::Zero(ny, 2 * np);
    cl.Cbar.leftCols(np) = C;
    return cl;
}

ControllerRealization reconstruct(const LmiSolution& s, const PlantModel& plant, Factorization factorization) {
    plant.validate();
    const auto np = plant.n_p();
    const Mat I = eye(np);
    const Mat imxy = I - s.X * s.Y;

    Eigen::JacobiSVD<Mat> svd(imxy, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    if (!(sv(np - 1) > 1e-12 * std::max(1.0, sv(0)))) throw SingularFactor("reconstruct: I - X Y is singular");

    ControllerRealization k;
    if (factorization == Factorization::Balanced) {
        const Vec root = sv.cwiseSqrt();
        k.U = svd.matrixU() * root.asDiagonal();
        k.V = svd.matrixV() * root.asDiagonal();
    } else {
        k.U = imxy;
        k.V = I;
    }
    const Mat& A = plant.A;
    const Mat& B = plant.B;
    const Mat& C = plant.C;
    const Mat inner = s.M - s.Y * A * s.X - s.Y * B * s.N - s.Z * C * s.X;
    // K U^-T = (U^-1 K^T)^T
    const auto right_uinv_t = [&](const Mat& m) -> Mat { return solve_linear(k.U, m.transpose()).transpose(); };
    k.Ac = right_uinv_t(solve_linear(k.V, inner));
    k.Bc = solve_linear(k.V, s.Z);
    k.Cc = right_uinv_t(s.N);
    return k;
}

SymMat lyapunov_lmi(const ClosedLoopMatrices& cl, const Mat& P, double mu, double eps1) {
    const auto nx = cl.n_x(), ne = cl.n_e();
    if (P.rows() != nx || P.cols() != nx) throw DimensionMismatch("lyapunov_lmi: P must be n_x x n_x");
    Mat m(nx + ne, nx + ne);
    m.topLeftCorner(nx, nx) = cl.A1.transpose() * P + P * cl.A1 + cl.A2.transpose() * cl.A2 +
                              eps1 * cl.Cbar.transpose() * cl.Cbar;
    m.topRightCorner(nx, ne) = P * cl.B1;
    m.bottomLeftCorner(ne, nx) = cl.B1.transpose() * P;
    m.bottomRightCorner(ne, ne) = -mu * eye(ne);
    return SymMat(m);
}

VerificationCertificate verify(const PlantModel& plant, const ControllerRealization& k, const LmiSolution& s,
                               bool lmi_c_imposed) {
    check_controller(plant, k);
    const auto np = plant.n_p();
    if (k.U.rows() != np || k.V.rows() != np) throw DimensionMismatch("verify: controller has no factorization pair");
    if (!(s.mu > 0.0) || !(s.eps > 0.0)) throw VerificationFailed("lmi13", "verify: mu and eps must be positive");

    VerificationCertificate c;
    const Mat imxy = eye(np) - s.X * s.Y;
    c.factorization_residual = max_abs(Mat(k.U * k.V.transpose() - imxy)) / std::max(1.0, max_abs(imxy));
    if (!(c.factorization_residual <= 1e-8)) {
        throw VerificationFailed("factorization", "verify: U V^T differs from I - X Y");
    }

    // S = [[X, U], [U^T, Xhat]] and S^-1 = [[Y, V], [V^T, Yhat]].
    c.Xhat = -(k.U.transpose() * solve_linear(k.V, s.Y).transpose());
    c.Xhat = 0.5 * (c.Xhat + c.Xhat.transpose());
    c.Yhat = -solve_linear(k.U, Mat(s.X * k.V));
    c.Yhat = 0.5 * (c.Yhat + c.Yhat.transpose());
    Mat S(2 * np, 2 * np);
    S << s.X, k.U, k.U.transpose(), c.Xhat;
    c.P = SymMat(inverse(S)).matrix();
    c.p_min_eig = lambda_min(SymMat(c.P));
    if (!(c.p_min_eig > 0.0)) throw VerificationFailed("p_min_eig", "verify: Lyapunov matrix is not positive definite");

    const ClosedLoopMatrices cl = assemble_closed_loop(plant, k);
    c.lmi13_max_eig = lambda_max(lyapunov_lmi(cl, c.P, s.mu, 1.0 / s.eps));
    c.eps2 = -c.lmi13_max_eig;
    if (!(c.lmi13_max_eig < 0.0)) throw VerificationFailed("lmi13", "verify: closed-loop Lyapunov inequality fails");

    if (lmi_c_imposed) {
        const Mat cb = k.Cc * k.Bc;
        c.claim1_gap = s.alpha * s.beta - lambda_max(SymMat(Mat(cb.transpose() * cb)));
        if (!(c.claim1_gap > 0.0)) throw VerificationFailed("claim1", "verify: B_c^T C_c^T C_c B_c exceeds alpha beta");
    } else {
        c.claim1_gap = std::numeric_limits<double>::quiet_NaN();
    }
    return c;
}

SdpProblem codesign_problem(const PlantModel& plant, const DesignOptions& opts) {
    plant.validate();
    const auto& w = opts.weights;
    for (double v : {w.mu, w.alpha, w.beta, w.eps}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("design: weights must be finite and >= 0");
    }
    if (!opts.include_lmi_c && (w.alpha > 0.0 || w.beta > 0.0)) {
        throw InvalidInput("design: alpha/beta weights need the alpha-beta LMI");
    }
    SdpProblem p{DecisionLayout::codesign(plant.n_p(), plant.n_u(), plant.n_y()), {}, {}};
    p.constraints.push_back(build_lmi_A(plant, p.layout));
    p.constraints.push_back(build_lmi_B(plant, p.layout));
    p.constraints.push_back(build_positivity(p.layout, "mu"));
    p.constraints.push_back(build_positivity(p.layout, "eps"));
    if (opts.include_lmi_c) {
        p.constraints.push_back(build_lmi_C(plant, p.layout));
        p.constraints.push_back(build_positivity(p.layout, "alpha"));
        p.constraints.push_back(build_positivity(p.layout, "beta"));
    }
    p.objective = Vec::Zero(static_cast<Eigen::Index>(p.layout.size()));
    p.layout.set("mu", w.mu, p.objective);
    p.layout.set("alpha", w.alpha, p.objective);
    p.layout.set("beta", w.beta, p.objective);
    p.layout.set("eps", w.eps, p.objective);
    return p;
}

DesignResult design(const PlantModel& plant, const DesignOptions& opts) {
    if (!(opts.T_fraction > 0.0 && opts.T_fraction < 1.0)) throw InvalidInput("design: T fraction must lie in (0, 1)");
    const SdpProblem problem = codesign_problem(plant, opts);

    DesignResult r;
    r.sdp = solve(problem, opts.sdp);
    if (r.sdp.status == SdpStatus::Infeasible) throw Infeasible("design: co-design LMIs are infeasible");
    if (r.sdp.status == SdpStatus::NumericalFailure) throw NumericalFailure("design: SDP solver failed: " + r.sdp.message);

    r.solution = LmiSolution::from_assignment(problem.layout, r.sdp.values);
    r.controller = reconstruct(r.solution, plant, opts.factorization);
    r.trigger.gamma = std::sqrt(r.solution.mu);
    r.trigger.eps1 = 1.0 / r.solution.eps;
    r.trigger.L = compute_L(plant, r.controller);
    r.trigger.masp = masp(r.trigger.gamma, r.trigger.L);
    r.trigger.T = opts.T_fraction * r.trigger.masp;
    r.trigger.validate();
    r.certificate = verify(plant, r.controller, r.solution, opts.include_lmi_c);
    return r;
}

double lemma1_bound(const TriggerConfig& trigger) noexcept { return trigger.T; }

EmulationCertificate certify_emulation(const PlantModel& plant, const ControllerRealization& controller, double mu,
                                       double eps1, const SdpOptions& sdp) {
    if (!(mu > 0.0) || !(eps1 > 0.0)) throw InvalidInput("certify_emulation: mu and eps1 must be positive");
    const ClosedLoopMatrices cl = assemble_closed_loop(plant, controller);
    const auto nx = cl.n_x(), ne = cl.n_e();

    DecisionLayout layout;
    layout.add_symmetric("P", nx);
    LmiBuilder lyap(layout, {nx, ne}, "lyapunov", Sense::NegativeDefinite);
    lyap.constant(0, 0, cl.A2.transpose() * cl.A2 + eps1 * cl.Cbar.transpose() * cl.Cbar)
        .term(0, 0, cl.A1.transpose(), "P", eye(nx))
        .term(0, 0, eye(nx), "P", cl.A1)
        .term(1, 0, cl.B1.transpose(), "P", eye(nx))
        .constant(1, 1, -mu * eye(ne));
    LmiBuilder pos(layout, {nx}, "P_positive", Sense::PositiveDefinite);
    pos.term(0, 0, eye(nx), "P", eye(nx));

    SdpProblem problem{layout, {lyap.build(), pos.build()}, Vec::Zero(static_cast<Eigen::Index>(layout.size()))};
    const SdpSolution s = solve(problem, sdp);

    EmulationCertificate c;
    c.status = s.status;
    if (s.status != SdpStatus::Feasible) return c;
    c.P = layout.matrix("P", s.values);
    c.p_min_eig = lambda_min(SymMat(c.P));
    c.lmi13_max_eig = lambda_max(lyapunov_lmi(cl, c.P, mu, eps1));
    c.certified = c.p_min_eig > 0.0 && c.lmi13_max_eig < 0.0;
    return c;
}

} // namespace etc

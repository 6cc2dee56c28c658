#include "etc/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace etc {

const char* to_string(SdpStatus s) noexcept {
    switch (s) {
    case SdpStatus::Optimal:
        return "optimal";
    case SdpStatus::Feasible:
        return "feasible";
    case SdpStatus::Infeasible:
        return "infeasible";
    case SdpStatus::NumericalFailure:
        return "numerical_failure";
    }
    return "unknown";
}

void SdpProblem::validate() const {
    if (constraints.empty()) throw InvalidInput("SdpProblem: no constraints");
    if (static_cast<std::size_t>(objective.size()) != layout.size()) {
        throw DimensionMismatch("SdpProblem: objective has " + std::to_string(objective.size()) +
                                " weights, layout has " + std::to_string(layout.size()) + " unknowns");
    }
    require_finite(objective, "SdpProblem objective");
    for (const auto& c : constraints) {
        if (c.num_unknowns() != layout.size()) {
            throw DimensionMismatch("SdpProblem: constraint " + c.name() + " uses a different layout");
        }
    }
}

std::vector<double> check_assignment(const SdpProblem& problem, const Vec& values) {
    if (static_cast<std::size_t>(values.size()) != problem.layout.size()) {
        throw MissingVariable("check_assignment: assignment does not cover the layout");
    }
    std::vector<double> out;
    out.reserve(problem.constraints.size());
    for (const auto& c : problem.constraints) out.push_back(margin(c, values));
    return out;
}

namespace {

// One constraint in standard form G0 + sum_k y_k G_k >= 0, restricted to the
// unknowns that survive (active columns).
struct StdBlock {
    Eigen::Index n = 0;
    Mat g0;
    std::vector<Mat> g;          // per active unknown (zero when unused)
    std::vector<bool> uses;
    std::vector<std::size_t> used;  // indices into active unknowns
};

double frob(const Mat& a, const Mat& b) { return a.cwiseProduct(b).sum(); }

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Largest a in (0, inf] with X + a D >= 0, given X > 0 with Cholesky factor l.
double max_step(const Mat& l, const Mat& d) {
    const auto tri = l.triangularView<Eigen::Lower>();
    const Mat w = tri.solve(Mat(tri.solve(d).transpose()));
    const double lmin = lambda_min(SymMat(w));
    return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double pow10_round(double v) {
    if (!(v > 0.0)) return 1.0;
    return std::pow(10.0, std::round(std::log10(v)));
}

class InteriorPoint {
public:
    InteriorPoint(const SdpProblem& p, const SdpOptions& o) : problem_(p), opts_(o) { setup(); }

    SdpSolution run();

private:
    void setup();
    void residuals();
    bool interior_y() const;
    Vec unscaled_values() const;
    SdpSolution finish(SdpStatus status, std::string message);
    // Falls back to the best interior iterate when it met the tolerances.
    SdpSolution fail(std::string message);
    void track_best(bool y_ok);

    const SdpProblem& problem_;
    const SdpOptions& opts_;

    std::vector<std::size_t> active_;  // original unknown index per active column
    Vec col_scale_;                    // y_orig = y / col_scale
    Vec c_;
    std::vector<StdBlock> blocks_;
    Eigen::Index total_dim_ = 0;

    Vec y_;
    std::vector<Mat> x_, z_;
    std::vector<Mat> rd_;
    Vec rp_;
    double g0_norm_ = 0.0;
    int iter_ = 0;
    double rel_gap_ = 0.0, pinf_ = 0.0, dinf_ = 0.0;

    Vec best_y_;
    double best_score_ = std::numeric_limits<double>::infinity();
    double best_gap_ = 0.0, best_pinf_ = 0.0, best_dinf_ = 0.0;
    int best_iter_ = 0;
};

void InteriorPoint::setup() {
    problem_.validate();
    const std::size_t nvar = problem_.layout.size();

    for (std::size_t k = 0; k < nvar; ++k) {
        const bool used = std::any_of(problem_.constraints.begin(), problem_.constraints.end(),
                                      [&](const AffineLmi& c) { return c.depends_on(k); });
        if (used) {
            active_.push_back(k);
        } else if (problem_.objective(static_cast<Eigen::Index>(k)) != 0.0) {
            throw InvalidInput("SdpProblem: objective weights an unknown that no constraint involves");
        }
    }
    const auto m = static_cast<Eigen::Index>(active_.size());
    col_scale_ = Vec::Ones(m);
    c_ = Vec(m);

    for (const auto& con : problem_.constraints) {
        StdBlock b;
        b.n = con.dim();
        const double sign = con.sense() == Sense::PositiveDefinite ? 1.0 : -1.0;
        const double delta = opts_.margin_rel * (con.scale() > 0.0 ? con.scale() : 1.0);
        b.g0 = sign * con.constant().matrix() - delta * Mat::Identity(b.n, b.n);
        for (Eigen::Index j = 0; j < m; ++j) {
            const std::size_t k = active_[static_cast<std::size_t>(j)];
            const bool uses = con.depends_on(k);
            b.uses.push_back(uses);
            if (uses) {
                b.g.push_back(sign * con.coefficient(k).matrix());
                b.used.push_back(static_cast<std::size_t>(j));
            } else {
                b.g.emplace_back(Mat::Zero(b.n, b.n));
            }
        }
        total_dim_ += b.n;
        blocks_.push_back(std::move(b));
    }

    for (Eigen::Index j = 0; j < m; ++j) {
        double mag = 0.0;
        for (const auto& b : blocks_) mag = std::max(mag, max_abs(b.g[static_cast<std::size_t>(j)]));
        if (opts_.prescale) col_scale_(j) = pow10_round(mag);
        for (auto& b : blocks_) b.g[static_cast<std::size_t>(j)] /= col_scale_(j);
        c_(j) = problem_.objective(static_cast<Eigen::Index>(active_[static_cast<std::size_t>(j)])) / col_scale_(j);
    }

    // Infeasible start: identity-proportional slacks.
    y_ = Vec::Zero(m);
    for (const auto& b : blocks_) {
        const double rootn = std::sqrt(static_cast<double>(b.n));
        double xi = std::max(10.0, rootn);
        double eta = std::max({10.0, rootn, b.g0.norm()});
        for (std::size_t j : b.used) {
            const double gn = b.g[j].norm();
            xi = std::max(xi, static_cast<double>(b.n) * (1.0 + std::abs(c_(static_cast<Eigen::Index>(j)))) / (1.0 + gn));
            eta = std::max(eta, gn);
        }
        x_.push_back(xi * Mat::Identity(b.n, b.n));
        z_.push_back(eta * Mat::Identity(b.n, b.n));
        g0_norm_ = std::max(g0_norm_, b.g0.norm());
    }
}

void InteriorPoint::residuals() {
    const auto m = static_cast<Eigen::Index>(active_.size());
    rd_.assign(blocks_.size(), Mat());
    rp_ = c_;
    double rd_norm2 = 0.0;
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        const auto& b = blocks_[bi];
        Mat g = b.g0;
        for (std::size_t j : b.used) g += y_(static_cast<Eigen::Index>(j)) * b.g[j];
        rd_[bi] = g - z_[bi];
        rd_norm2 += rd_[bi].squaredNorm();
        for (std::size_t j : b.used) rp_(static_cast<Eigen::Index>(j)) -= frob(b.g[j], x_[bi]);
    }
    double xz = 0.0, pobj_bound = 0.0;
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        xz += frob(x_[bi], z_[bi]);
        pobj_bound += frob(blocks_[bi].g0, x_[bi]);
    }
    const double fobj = m > 0 ? c_.dot(y_) : 0.0;
    rel_gap_ = xz / (1.0 + std::abs(fobj) + std::abs(pobj_bound));
    pinf_ = std::sqrt(rd_norm2) / (1.0 + g0_norm_);
    dinf_ = rp_.norm() / (1.0 + c_.norm());
}

bool InteriorPoint::interior_y() const {
    for (const auto& b : blocks_) {
        Mat g = b.g0;
        for (std::size_t j : b.used) g += y_(static_cast<Eigen::Index>(j)) * b.g[j];
        if (!try_cholesky(SymMat(g))) return false;
    }
    return true;
}

Vec InteriorPoint::unscaled_values() const {
    Vec v = Vec::Zero(static_cast<Eigen::Index>(problem_.layout.size()));
    for (std::size_t j = 0; j < active_.size(); ++j) {
        v(static_cast<Eigen::Index>(active_[j])) = y_(static_cast<Eigen::Index>(j)) / col_scale_(static_cast<Eigen::Index>(j));
    }
    return v;
}

SdpSolution InteriorPoint::finish(SdpStatus status, std::string message) {
    SdpSolution s;
    s.status = status;
    s.values = unscaled_values();
    s.objective_value = problem_.objective.dot(s.values);
    const auto margins = check_assignment(problem_, s.values);
    s.worst_margin = *std::min_element(margins.begin(), margins.end());
    s.relative_gap = rel_gap_;
    s.primal_residual = pinf_;
    s.dual_residual = dinf_;
    s.iterations = iter_;
    s.message = std::move(message);
    if ((status == SdpStatus::Optimal || status == SdpStatus::Feasible) && !(s.worst_margin > 0.0)) {
        s.status = SdpStatus::NumericalFailure;
        s.message = "converged iterate violates a constraint";
    }
    return s;
}

void InteriorPoint::track_best(bool y_ok) {
    if (!y_ok) return;
    const double score = std::max({rel_gap_ / opts_.gap_tol, pinf_ / opts_.feas_tol, dinf_ / opts_.feas_tol});
    if (score < best_score_) {
        best_score_ = score;
        best_y_ = y_;
        best_gap_ = rel_gap_;
        best_pinf_ = pinf_;
        best_dinf_ = dinf_;
        best_iter_ = iter_;
    }
}

SdpSolution InteriorPoint::fail(std::string message) {
    if (best_score_ <= 1.0) {
        y_ = best_y_;
        rel_gap_ = best_gap_;
        pinf_ = best_pinf_;
        dinf_ = best_dinf_;
        return finish(SdpStatus::Optimal, "converged (best iterate; then " + message + ")");
    }
    return finish(SdpStatus::NumericalFailure, std::move(message));
}

SdpSolution InteriorPoint::run() {
    const auto m = static_cast<Eigen::Index>(active_.size());
    const bool feasibility = c_.isZero(0.0);
    const std::size_t nb = blocks_.size();
    int stalled = 0;

    for (iter_ = 0; iter_ <= opts_.max_iterations; ++iter_) {
        residuals();

        const bool y_ok = interior_y();
        track_best(y_ok);
        if (feasibility && y_ok) return finish(SdpStatus::Feasible, "strictly feasible point found");
        if (y_ok && rel_gap_ <= opts_.gap_tol && pinf_ <= opts_.feas_tol && dinf_ <= opts_.feas_tol) {
            return finish(SdpStatus::Optimal, "converged");
        }

        // Farkas ray: X >= 0 with <G_k, X> ~ 0 and <G0, X> < 0.
        double g0x = 0.0;
        Vec ax = Vec::Zero(m);
        for (std::size_t bi = 0; bi < nb; ++bi) {
            g0x += frob(blocks_[bi].g0, x_[bi]);
            for (std::size_t j : blocks_[bi].used) ax(static_cast<Eigen::Index>(j)) += frob(blocks_[bi].g[j], x_[bi]);
        }
        if (g0x < 0.0) {
            const double res = ax.norm() / -g0x;
            if (res < opts_.infeasibility_tol) {
                SdpSolution s = finish(SdpStatus::Infeasible, "Farkas certificate found");
                s.certificate_residual = res;
                return s;
            }
        }
        if (iter_ == opts_.max_iterations) break;

        double mu = 0.0;
        for (std::size_t bi = 0; bi < nb; ++bi) mu += frob(x_[bi], z_[bi]);
        mu /= static_cast<double>(total_dim_);

        // Nesterov-Todd scaling per block: W Z W = X with W = G G^T and
        // G^-1 X G^-T = G^T Z G = D diagonal.
        std::vector<Mat> xl(nb), zl(nb), gs(nb), gsinv(nb), w(nb);
        std::vector<Vec> dscaled(nb);
        Mat schur = Mat::Zero(m, m);
        try {
            for (std::size_t bi = 0; bi < nb; ++bi) {
                xl[bi] = cholesky(SymMat(x_[bi]));
                zl[bi] = cholesky(SymMat(z_[bi]));
                Eigen::JacobiSVD<Mat> svd(Mat(zl[bi].transpose() * xl[bi]), Eigen::ComputeFullU | Eigen::ComputeFullV);
                const Vec sv = svd.singularValues();
                if (!(sv.minCoeff() > 0.0)) throw NumericalFailure("degenerate scaling");
                dscaled[bi] = sv;
                gs[bi] = xl[bi] * svd.matrixV() * sv.cwiseInverse().cwiseSqrt().asDiagonal();
                const auto tri = xl[bi].triangularView<Eigen::Lower>();
                const Mat xlinv = tri.solve(Mat::Identity(blocks_[bi].n, blocks_[bi].n));
                gsinv[bi] = sv.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() * xlinv;
                w[bi] = symmetrize(gs[bi] * gs[bi].transpose());
                const auto& b = blocks_[bi];
                for (std::size_t j : b.used) {
                    const Mat wgw = w[bi] * b.g[j] * w[bi];
                    for (std::size_t i : b.used) {
                        schur(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += frob(b.g[i], wgw);
                    }
                }
            }
        } catch (const Error&) {
            return fail("lost positive definiteness of iterates");
        }
        schur = symmetrize(schur);
        Eigen::LDLT<Mat> ldlt(schur);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || !(ldlt.vectorD().minCoeff() > 0.0)) {
            // Near the optimum the Schur matrix can lose definiteness to
            // rounding; a relative diagonal shift restores it.
            const double shift = 1e-12 * std::max(1.0, schur.diagonal().cwiseAbs().maxCoeff());
            schur.diagonal().array() += shift;
            ldlt.compute(schur);
            if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
                return fail("singular Newton system");
            }
        }

        // Solves for (dy, dZ, dX) with dX + W dZ W = Q_b per block.
        auto direction = [&](const std::vector<Mat>& q, Vec& dy, std::vector<Mat>& dz, std::vector<Mat>& dx) {
            Vec h = -rp_;
            for (std::size_t bi = 0; bi < nb; ++bi) {
                const Mat t = q[bi] - w[bi] * rd_[bi] * w[bi];
                for (std::size_t j : blocks_[bi].used) h(static_cast<Eigen::Index>(j)) += frob(blocks_[bi].g[j], t);
            }
            dy = ldlt.solve(h);
            dy += ldlt.solve(Vec(h - schur * dy));
            dz.resize(nb);
            dx.resize(nb);
            for (std::size_t bi = 0; bi < nb; ++bi) {
                Mat d = rd_[bi];
                for (std::size_t j : blocks_[bi].used) d += dy(static_cast<Eigen::Index>(j)) * blocks_[bi].g[j];
                dz[bi] = symmetrize(d);
                dx[bi] = symmetrize(q[bi] - w[bi] * dz[bi] * w[bi]);
            }
        };
        auto steps = [&](const std::vector<Mat>& dx, const std::vector<Mat>& dz, double& ap, double& ad) {
            ap = std::numeric_limits<double>::infinity();
            ad = ap;
            for (std::size_t bi = 0; bi < nb; ++bi) {
                ap = std::min(ap, max_step(xl[bi], dx[bi]));
                ad = std::min(ad, max_step(zl[bi], dz[bi]));
            }
        };

        // Predictor (affine scaling).
        std::vector<Mat> q(nb);
        for (std::size_t bi = 0; bi < nb; ++bi) q[bi] = -x_[bi];
        Vec dya;
        std::vector<Mat> dza, dxa;
        direction(q, dya, dza, dxa);
        double apa = 0.0, ada = 0.0;
        steps(dxa, dza, apa, ada);
        apa = std::min(1.0, apa);
        ada = std::min(1.0, ada);
        double mu_aff = 0.0;
        for (std::size_t bi = 0; bi < nb; ++bi) {
            mu_aff += frob(Mat(x_[bi] + apa * dxa[bi]), Mat(z_[bi] + ada * dza[bi]));
        }
        mu_aff /= static_cast<double>(total_dim_);
        const double expon = std::max(1.0, 3.0 * std::min(apa, ada) * std::min(apa, ada));
        const double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, expon), 0.0, 1.0);

        // Corrector with the second-order term.
        for (std::size_t bi = 0; bi < nb; ++bi) {
            const Vec& dd = dscaled[bi];
            const Mat xs = gsinv[bi] * dxa[bi] * gsinv[bi].transpose();
            const Mat zs = gs[bi].transpose() * dza[bi] * gs[bi];
            Mat r = -(xs * zs + zs * xs);
            r.diagonal().array() += 2.0 * sigma * mu - 2.0 * dd.array().square();
            for (Eigen::Index i = 0; i < r.rows(); ++i)
                for (Eigen::Index j = 0; j < r.cols(); ++j) r(i, j) /= dd(i) + dd(j);
            q[bi] = symmetrize(gs[bi] * r * gs[bi].transpose());
        }
        Vec dy;
        std::vector<Mat> dz, dx;
        direction(q, dy, dz, dx);
        double ap = 0.0, ad = 0.0;
        steps(dx, dz, ap, ad);
        const double frac = 0.9 + 0.09 * std::min(apa, ada);
        ap = std::min(1.0, frac * ap);
        ad = std::min(1.0, frac * ad);

        if (!dy.allFinite() || !std::isfinite(ap) || !std::isfinite(ad)) {
            return fail("non-finite search direction");
        }
        stalled = (std::max(ap, ad) < 1e-8) ? stalled + 1 : 0;
        if (stalled >= 5) return fail("step length stagnation");
        // Close to the optimum the multiplier accuracy can plateau; stop once the
        // best iterate has not improved for a while.
        if (best_score_ <= 1.0 && iter_ - best_iter_ >= 8) return fail("no further progress");

        for (std::size_t bi = 0; bi < nb; ++bi) {
            x_[bi] = symmetrize(x_[bi] + ap * dx[bi]);
            z_[bi] = symmetrize(z_[bi] + ad * dz[bi]);
        }
        y_ += ad * dy;
    }
    return fail("iteration cap reached");
}

} // namespace

SdpSolution solve(const SdpProblem& problem, const SdpOptions& opts) {
    InteriorPoint ip(problem, opts);
    return ip.run();
}

} // namespace etc

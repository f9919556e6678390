#include "cfd/dichotomy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfd {

namespace {

SideReport reduce_side(std::vector<PairSample>&& samples) {
    SideReport out;
    out.min_slack = std::numeric_limits<double>::infinity();
    bool any_value = false;
    for (const PairSample& p : samples) {
        if (p.value == 0.0) continue;
        any_value = true;
        if (p.slack < out.min_slack) {
            out.min_slack = p.slack;
            out.argmin_t = p.t;
            out.argmin_s = p.s;
        }
    }
    out.vacuous = !any_value;
    out.samples = std::move(samples);
    return out;
}

void check_projection(const Matrix& P) {
    const double drift = column_sum_norm(Matrix(P * P - P));
    if (drift > 1e-8 * (1.0 + column_sum_norm(P)))
        throw PreconditionError("projection matrix fails P^2 = P");
}

}  // namespace

StabilityReport classify_stability(const FundamentalMatrix& X,
                                   std::span<const double> t_grid,
                                   std::span<const double> s_grid, double slope_tol) {
    StabilityReport rep;
    const Matrix eye = Matrix::Identity(X.dim(), X.dim());

    // (D1) and the decay trend of log||X(t)||.
    double sum_u = 0.0, sum_z = 0.0, sum_uu = 0.0, sum_uz = 0.0;
    std::size_t m = 0;
    for (double t : t_grid) {
        const double norm = column_sum_norm(X.value(t));
        rep.sup_norm = std::max(rep.sup_norm, norm);
        if (norm > 0.0) {
            const double u = X.order().transform(t);
            const double z = std::log(norm);
            sum_u += u;
            sum_z += z;
            sum_uu += u * u;
            sum_uz += u * z;
            ++m;
        }
    }
    const double denom = static_cast<double>(m) * sum_uu - sum_u * sum_u;
    rep.trend_slope = denom > 0.0
                          ? (static_cast<double>(m) * sum_uz - sum_u * sum_z) / denom
                          : 0.0;

    // (D2) and (D4) from the pairwise ratios.
    std::vector<PairSample> ratios =
        scan_pairs(X, eye, Side::stable, 1.0, 0.0, 0.0, t_grid, s_grid);
    for (const PairSample& p : ratios) rep.sup_ratio = std::max(rep.sup_ratio, p.value);
    const SideFit fit = fit_side(X.order(), ratios, Side::stable, 0.0);
    rep.fitted_K = fit.N;
    rep.fitted_lambda = fit.beta;

    rep.d1 = rep.trend_slope < slope_tol;
    rep.d2 = rep.d1;
    rep.d3 = rep.trend_slope < -slope_tol;
    rep.d4 = !fit.vacuous && fit.beta > slope_tol;
    return rep;
}

VerifyReport verify_dichotomy(const FundamentalMatrix& X, const DichotomyEstimate& est,
                              std::span<const double> t_grid,
                              std::span<const double> s_grid, double eps) {
    check_projection(est.P);
    const Matrix complement = Matrix::Identity(X.dim(), X.dim()) - est.P;
    VerifyReport rep;
    rep.stable = reduce_side(
        scan_pairs(X, est.P, Side::stable, est.N1, est.beta1, eps, t_grid, s_grid));
    rep.unstable = reduce_side(scan_pairs(X, complement, Side::unstable, est.N2,
                                          est.beta2, eps, t_grid, s_grid));
    return rep;
}

DichotomyEstimate estimate_dichotomy(const FundamentalMatrix& X, const Matrix& P,
                                     std::span<const double> t_grid,
                                     std::span<const double> s_grid, double eps) {
    check_projection(P);
    const Matrix complement = Matrix::Identity(X.dim(), X.dim()) - P;

    std::vector<PairSample> stable =
        scan_pairs(X, P, Side::stable, 1.0, 0.0, 0.0, t_grid, s_grid);
    const SideFit fit1 = fit_side(X.order(), stable, Side::stable, eps);
    if (fit1.vacuous)
        throw ConvergenceError("estimate_dichotomy: stable block is identically zero");

    std::vector<PairSample> unstable =
        scan_pairs(X, complement, Side::unstable, 1.0, 0.0, 0.0, t_grid, s_grid);
    const SideFit fit2 = fit_side(X.order(), unstable, Side::unstable, eps);

    DichotomyEstimate est;
    est.P = P;
    est.N1 = fit1.N;
    est.beta1 = fit1.beta;
    if (fit2.vacuous) {
        est.N2 = 1.0;  // nothing to bound: any positive constants verify vacuously
        est.beta2 = 1.0;
    } else {
        est.N2 = fit2.N;
        est.beta2 = fit2.beta;
    }
    return est;
}

ProjectedConstants projected_constants(double N1, double N2, double beta1, double beta2,
                                       double eps) {
    if (!(N1 > 0.0) || !(N2 > 0.0) || !(beta1 > 0.0) || !(beta2 > 0.0) || eps < 0.0)
        throw PreconditionError("projected_constants: inputs must be positive");
    ProjectedConstants out;
    out.theta = eps * (N1 / beta1 + N2 / beta2);
    out.admissible = out.theta < 1.0;
    if (!out.admissible) return out;
    out.K1 = N1 / (1.0 - out.theta);
    out.K2 = N2 / (1.0 - out.theta);
    out.lambda1 = beta1 - eps * N1 / (1.0 - out.theta);
    out.lambda2 = beta2 - eps * N2 / (1.0 - out.theta);
    out.rates_positive = out.lambda1 > 0.0 && out.lambda2 > 0.0;
    return out;
}

InequalityCheck projected_inequality_check(const FractionalOrder& order,
                                           const DichotomyEstimate& est, double eps,
                                           const ScalarSignal& u, double t0,
                                           std::span<const double> t_grid,
                                           const QuadratureConfig& cfg) {
    if (eps < 0.0) throw PreconditionError("projected_inequality_check: eps >= 0 required");
    const double horizon = u.hi();
    const double u_hor = order.transform(horizon);

    double sup_u = 0.0;
    for (double t : t_grid) sup_u = std::max(sup_u, u(t));

    InequalityCheck out;
    out.hypothesis_margin = std::numeric_limits<double>::infinity();
    out.conclusion_margin = std::numeric_limits<double>::infinity();

    const ProjectedConstants pc =
        projected_constants(est.N1, est.N2, est.beta1, est.beta2, eps);

    for (double t : t_grid) {
        if (t < t0 || t > horizon)
            throw DomainError("projected_inequality_check: grid point outside [t0, T]");
        const double ut = order.transform(t);
        const double tail = sup_u * eps * est.N2 / est.beta2 *
                            std::exp(-est.beta2 * (u_hor - ut));
        out.truncation_tail = std::max(out.truncation_tail, tail);
        if (tail > cfg.abs_tol)
            throw ConvergenceError(
                "projected_inequality_check: truncation tail exceeds tolerance");

        double rhs = est.N1 * ml_scalar(order, est.beta1, t0) / ml_scalar(order, est.beta1, t);
        if (eps > 0.0) {
            auto grow = [&](double v) {
                const double s = order.inverse_transform(v);
                return ml_scalar(order, est.beta1, s) * u(s);
            };
            auto decay = [&](double v) {
                const double s = order.inverse_transform(v);
                return u(s) / ml_scalar(order, est.beta2, s);
            };
            const double i1 =
                quad::integrate(grow, order.transform(t0), ut, cfg);
            const double i2 = quad::integrate(decay, ut, u_hor, cfg);
            rhs += eps * est.N1 / ml_scalar(order, est.beta1, t) * i1 +
                   eps * est.N2 * ml_scalar(order, est.beta2, t) * i2;
        }

        const double ut_val = u(t);
        const double hyp = ut_val == 0.0 ? std::numeric_limits<double>::infinity()
                                         : rhs / ut_val;
        out.hypothesis_margin = std::min(out.hypothesis_margin, hyp);

        if (pc.admissible) {
            const double bound = pc.K1 * ml_scalar(order, pc.lambda1, t0) /
                                 ml_scalar(order, pc.lambda1, t);
            const double concl = ut_val == 0.0 ? std::numeric_limits<double>::infinity()
                                               : bound / ut_val;
            out.conclusion_margin = std::min(out.conclusion_margin, concl);
        }
    }

    out.hypothesis_holds = out.hypothesis_margin >= 1.0 - kSlackFpGuard;
    out.conclusion_holds =
        out.hypothesis_holds && pc.admissible &&
        out.conclusion_margin >= 1.0 - kSlackFpGuard;
    return out;
}

}  // namespace cfd

#include "cfd/nonuniform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfd {

NonuniformStability nonuniform_stability_constants(double N_hat, double beta_hat,
                                                   double delta) {
    if (!(N_hat > 0.0) || !(beta_hat > 0.0) || delta < 0.0)
        throw PreconditionError("nonuniform_stability_constants: inputs must be positive");
    NonuniformStability out;
    out.theta = delta * N_hat / beta_hat;
    if (!(out.theta < 1.0))
        throw PreconditionError("nonuniform_stability_constants: theta >= 1");
    out.K = N_hat / (1.0 - out.theta);
    out.gamma = beta_hat - delta * N_hat / (1.0 - out.theta);
    return out;
}

ProjectedConstants nonuniform_dichotomy_constants(double N1_hat, double N2_hat,
                                                  double beta1_hat, double beta2_hat,
                                                  double delta, double eps) {
    if (!(eps < std::min(beta1_hat, beta2_hat)))
        throw PreconditionError(
            "nonuniform_dichotomy_constants: requires eps < min{beta1, beta2}");
    ProjectedConstants out =
        projected_constants(N1_hat, N2_hat, beta1_hat, beta2_hat, delta);
    if (!out.admissible)
        throw PreconditionError("nonuniform_dichotomy_constants: theta >= 1");
    return out;
}

ProjectionNormBound projection_norm_bound(const FractionalOrder& order, double N_hat,
                                          double beta_hat, double delta, double eps,
                                          double t) {
    if (!(N_hat > 0.0) || !(beta_hat > 0.0) || delta < 0.0 || eps < 0.0)
        throw PreconditionError("projection_norm_bound: inputs must be positive");
    const double denom = 2.0 * beta_hat * beta_hat - 5.0 * delta * N_hat * beta_hat -
                         eps * (beta_hat - 2.0 * delta * N_hat);
    ProjectionNormBound out;
    out.eta_hat = denom > 0.0 ? delta * N_hat * N_hat * beta_hat / denom
                              : std::numeric_limits<double>::infinity();
    if (!(out.eta_hat < 0.25))
        throw PreconditionError("projection_norm_bound: eta_hat >= 1/4");
    out.bound = 4.0 * N_hat * ml_scalar(order, eps, t);
    return out;
}

NonuniformRoughness nonuniform_roughness_constants(double N_hat, double beta_hat,
                                                   double delta) {
    if (!(N_hat > 0.0) || !(beta_hat > 0.0) || delta < 0.0)
        throw PreconditionError("nonuniform_roughness_constants: inputs must be positive");
    const double denom = beta_hat - 2.0 * delta * N_hat;
    NonuniformRoughness out;
    if (!(denom > 0.0))
        throw PreconditionError("nonuniform_roughness_constants: beta - 2 delta N <= 0");
    out.near_pole = denom <= 1e-6;
    if (out.near_pole) {
        out.K_final = std::numeric_limits<double>::infinity();
        out.lambda_hat = 0.0;
        return out;
    }
    out.K_final = 4.0 * N_hat * N_hat * beta_hat / denom;
    out.lambda_hat = beta_hat - delta * N_hat * beta_hat / denom;
    return out;
}

namespace {

void validate_family(const FundamentalMatrix& X,
                     const std::function<Matrix(double)>& P_of_t,
                     std::span<const double> t_grid, std::span<const double> s_grid,
                     double tol) {
    for (double t : t_grid) {
        const Matrix p = P_of_t(t);
        if (column_sum_norm(Matrix(p * p - p)) > tol * (1.0 + column_sum_norm(p)))
            throw PreconditionError("estimate_nonuniform: family fails P(t)^2 = P(t)");
    }
    for (double t : t_grid)
        for (double s : s_grid) {
            if (t < s) continue;
            const Matrix trans = evolution(X, t, s);
            const Matrix lhs = trans * P_of_t(s);
            const Matrix rhs = P_of_t(t) * trans;
            const double scale = std::max(1.0, column_sum_norm(lhs));
            if (column_sum_norm(Matrix(lhs - rhs)) > tol * scale)
                throw PreconditionError(
                    "estimate_nonuniform: commutation T(t,s)P(s) = P(t)T(t,s) fails");
        }
}

}  // namespace

NonuniformDichotomy estimate_nonuniform(const FundamentalMatrix& X,
                                        const std::function<Matrix(double)>& P_of_t,
                                        std::span<const double> t_grid,
                                        std::span<const double> s_grid,
                                        std::span<const double> eps_candidates,
                                        double n_cap, double commutation_tol) {
    if (eps_candidates.empty())
        throw PreconditionError("estimate_nonuniform: no eps candidates");
    validate_family(X, P_of_t, t_grid, s_grid, commutation_tol);

    const Matrix p0 = P_of_t(0.0);
    const Matrix complement = Matrix::Identity(X.dim(), X.dim()) - p0;

    std::vector<PairSample> stable =
        scan_pairs(X, p0, Side::stable, 1.0, 0.0, 0.0, t_grid, s_grid);
    std::vector<PairSample> unstable =
        scan_pairs(X, complement, Side::unstable, 1.0, 0.0, 0.0, t_grid, s_grid);

    std::vector<double> eps_sorted(eps_candidates.begin(), eps_candidates.end());
    std::sort(eps_sorted.begin(), eps_sorted.end());

    for (double eps : eps_sorted) {
        const SideFit fit1 = fit_side(X.order(), stable, Side::stable, eps);
        if (fit1.vacuous)
            throw ConvergenceError("estimate_nonuniform: stable block is identically zero");
        const SideFit fit2 = fit_side(X.order(), unstable, Side::unstable, eps);
        const double n2 = fit2.vacuous ? 1.0 : fit2.N;
        if (std::max(fit1.N, n2) <= n_cap) {
            NonuniformDichotomy out;
            out.P0 = p0;
            out.N1_hat = fit1.N;
            out.beta1_hat = fit1.beta;
            out.N2_hat = n2;
            out.beta2_hat = fit2.vacuous ? 1.0 : fit2.beta;
            out.eps = eps;
            return out;
        }
    }
    throw ConvergenceError("estimate_nonuniform: no eps candidate admissible under the cap");
}

VerifyReport verify_nonuniform(const FundamentalMatrix& X, const NonuniformDichotomy& est,
                               std::span<const double> t_grid,
                               std::span<const double> s_grid) {
    DichotomyEstimate uni;
    uni.P = est.P0;
    uni.N1 = est.N1_hat;
    uni.N2 = est.N2_hat;
    uni.beta1 = est.beta1_hat;
    uni.beta2 = est.beta2_hat;
    return verify_dichotomy(X, uni, t_grid, s_grid, est.eps);
}

NonuniformKernel nonuniform_bounded_kernel(const FundamentalMatrix& X,
                                           const NonuniformDichotomy& est,
                                           const NonuniformPerturbation& pert,
                                           double s_anchor, double horizon, double fp_tol,
                                           int max_iter) {
    const FractionalOrder& order = X.order();
    const int n = X.dim();
    const double theta =
        pert.delta * (est.N1_hat / est.beta1_hat + est.N2_hat / est.beta2_hat);
    if (!(theta < 1.0))
        throw PreconditionError("nonuniform_bounded_kernel: theta >= 1");
    if (pert.weight_power != 1 && pert.weight_power != 2)
        throw PreconditionError("nonuniform_bounded_kernel: weight_power must be 1 or 2");

    // Work grid from the anchor to the end of coverage, uniform in u.
    const double u_anchor = order.transform(s_anchor);
    const double u_end = X.u_grid().back();
    const int m = std::max<int>(257, static_cast<int>(X.u_grid().size()));
    std::vector<double> u(m), t(m);
    for (int i = 0; i < m; ++i) {
        u[static_cast<std::size_t>(i)] =
            u_anchor + (u_end - u_anchor) * static_cast<double>(i) / (m - 1);
        t[static_cast<std::size_t>(i)] =
            order.inverse_transform(u[static_cast<std::size_t>(i)]);
    }
    t.front() = s_anchor;
    const double h = (u_end - u_anchor) / (m - 1);

    const double sup_u_bound = est.N1_hat / (1.0 - theta) *
                               ml_scalar(order, est.eps, s_anchor);
    const double tail = pert.delta * est.N2_hat * sup_u_bound / est.beta2_hat *
                        std::exp(-est.beta2_hat * (u_end - order.transform(horizon)));
    if (tail >= fp_tol / 10.0)
        throw PreconditionError(
            "nonuniform_bounded_kernel: tail truncation exceeds tolerance");

    const Matrix eye = Matrix::Identity(n, n);
    const Matrix& p0 = est.P0;
    const Matrix complement = eye - p0;

    std::vector<Matrix> x_node(m), b_node(m), base(m);
    const Matrix inv_anchor = X.solve(s_anchor, eye);
    for (int i = 0; i < m; ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        x_node[k] = X.value(t[k]);
        b_node[k] = pert.B(t[k]);
        base[k] = x_node[k] * (p0 * inv_anchor);
        const double weight =
            ml_scalar(order, static_cast<double>(pert.weight_power) * est.eps, t[k]);
        if (column_sum_norm(b_node[k]) * weight > pert.delta * (1.0 + 1e-9))
            throw PreconditionError(
                "nonuniform_bounded_kernel: ||B(t)|| exceeds delta / E(w eps, t)");
    }

    std::vector<Matrix> kern(base);
    FixedPointReport fp;
    fp.theta = theta;
    fp.tail_bound = tail;

    std::vector<Matrix> g1(static_cast<std::size_t>(m)), g2(static_cast<std::size_t>(m));
    auto sweep = [&](std::vector<Matrix>& target) {
        for (int i = 0; i < m; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            const Matrix integrand = X.solve(t[k], Matrix(b_node[k] * target[k]));
            g1[k] = p0 * integrand;
            g2[k] = complement * integrand;
        }
        std::vector<Matrix> prefix = quad::cumulative_integral(h, g1);
        std::vector<Matrix> suffix = [&] {
            std::vector<Matrix> rev(g2.rbegin(), g2.rend());
            std::vector<Matrix> acc = quad::cumulative_integral(h, rev);
            std::vector<Matrix> out_(g2.size(), Matrix(Matrix::Zero(n, n)));
            for (std::size_t k = 0; k < g2.size(); ++k) out_[k] = acc[g2.size() - 1 - k];
            return out_;
        }();
        double change = 0.0;
        for (int i = 0; i < m; ++i) {
            const std::size_t k = static_cast<std::size_t>(i);
            Matrix next = base[k] + x_node[k] * prefix[k] - x_node[k] * suffix[k];
            change = std::max(change, column_sum_norm(Matrix(next - target[k])));
            target[k] = std::move(next);
        }
        return change;
    };

    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        fp.final_change = sweep(kern);
        fp.iterations = it + 1;
        if (fp.final_change < fp_tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("nonuniform_bounded_kernel: fixed point did not converge");

    {
        std::vector<Matrix> copy(kern);
        fp.residual = sweep(copy) / ml_scalar(order, est.eps, s_anchor);
    }

    NonuniformKernel out;
    out.U.t = std::move(t);
    out.U.u = std::move(u);
    out.U.values = std::move(kern);
    out.fp = fp;
    return out;
}

std::function<Matrix(double)> nonuniform_projection_family(const FundamentalMatrix& Y,
                                                           const Matrix& U_iota_iota,
                                                           double iota) {
    return [&Y, U_iota_iota, iota](double t) {
        return Matrix(evolution(Y, t, iota) * U_iota_iota * evolution(Y, iota, t));
    };
}

}  // namespace cfd

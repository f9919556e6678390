#include "cfd/roughness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cfd {

namespace {

constexpr double kZeroTime = 1e-12;

/// Uniform work grid in u covering X, reusing X's own nodes when they are
/// already uniform there.
struct WorkGrid {
    std::vector<double> t, u;
    double h = 0.0;
};

WorkGrid make_work_grid(const FundamentalMatrix& X, double u_start, int min_nodes) {
    WorkGrid g;
    const auto& ug = X.u_grid();
    const bool aligned = X.uniform_in_u() && std::abs(ug.front() - u_start) <= 1e-12 &&
                         static_cast<int>(ug.size()) >= min_nodes;
    if (aligned) {
        g.u = ug;
        g.t = X.times();
    } else {
        const int m = std::max(min_nodes, static_cast<int>(ug.size()));
        const double u_end = ug.back();
        g.u.reserve(static_cast<std::size_t>(m));
        g.t.reserve(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i) {
            const double u = u_start + (u_end - u_start) * static_cast<double>(i) / (m - 1);
            g.u.push_back(u);
            g.t.push_back(X.order().inverse_transform(u));
        }
        g.t.front() = X.order().inverse_transform(u_start);
        g.t.back() = X.t_max();
    }
    g.h = (g.u.back() - g.u.front()) / static_cast<double>(g.u.size() - 1);
    return g;
}

/// Suffix integrals S_i = integral from u_i to u_end of the samples, computed
/// by a reversed cumulative pass so decaying integrands keep full accuracy.
template <typename T>
std::vector<T> suffix_integral(double h, const std::vector<T>& f) {
    std::vector<T> rev(f.rbegin(), f.rend());
    std::vector<T> acc = quad::cumulative_integral(h, rev);
    std::vector<T> out(f.size(), T(0.0 * f[0]));
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = acc[f.size() - 1 - i];
    return out;
}

}  // namespace

RoughnessConstants roughness_constants(double N1, double N2, double beta1, double beta2,
                                       double eps_perturb) {
    if (!(N1 > 0.0) || !(N2 > 0.0) || !(beta1 > 0.0) || !(beta2 > 0.0) ||
        eps_perturb < 0.0)
        throw PreconditionError("roughness_constants: inputs must be positive");
    RoughnessConstants out;
    out.N = std::max(N1, N2);
    out.beta = std::min(beta1, beta2);
    out.theta = eps_perturb * (N1 / beta1 + N2 / beta2);
    out.admissible = eps_perturb < out.beta / (5.0 * out.N * out.N);
    out.K_new = 25.0 * out.N * out.N / 9.0;
    out.lambda_new = out.beta - 3.0 * eps_perturb * out.N;

    const double eta_denom = 2.0 * out.beta - 5.0 * eps_perturb * out.N;
    out.eta = eta_denom > 0.0 ? eps_perturb * out.N * out.N / eta_denom
                              : std::numeric_limits<double>::infinity();
    const double dist_denom = 2.0 * out.beta - 5.0 * eps_perturb * out.N -
                              2.0 * eps_perturb * out.N * out.N;
    out.proj_distance_bound = dist_denom > 0.0
                                  ? 2.0 * eps_perturb * out.N * out.N * out.N / dist_denom
                                  : std::numeric_limits<double>::infinity();
    return out;
}

double required_work_horizon(const FractionalOrder& order, const DichotomyEstimate& est,
                             double eps_perturb, double horizon, double fp_tol) {
    const double theta = eps_perturb * (est.N1 / est.beta1 + est.N2 / est.beta2);
    if (!(theta < 1.0)) throw PreconditionError("required_work_horizon: theta >= 1");
    const double sup_y = est.N1 / (1.0 - theta);
    const double scale = std::max(eps_perturb * est.N2 * sup_y / est.beta2, 1e-30);
    // scale * exp(-beta2 (u_work - u_horizon)) < fp_tol / 10
    const double gap = std::log(scale * 10.0 / fp_tol) / est.beta2;
    const double u_work = order.transform(horizon) + std::max(gap, 0.0) + 1.0;
    return order.inverse_transform(u_work);
}

PerturbedProjection perturbed_projection(const FundamentalMatrix& X,
                                         const DichotomyEstimate& est,
                                         const PerturbationSpec& pert, double horizon,
                                         double fp_tol, int max_iter) {
    if (std::abs(X.t_min()) > kZeroTime)
        throw PreconditionError("perturbed_projection: coverage must start at t = 0");
    const double theta = pert.eps_perturb * (est.N1 / est.beta1 + est.N2 / est.beta2);
    if (!(theta < 1.0))
        throw PreconditionError("perturbed_projection: contraction condition theta < 1 fails");

    const FractionalOrder& order = X.order();
    const int n = X.dim();
    WorkGrid grid = make_work_grid(X, 0.0, 257);
    const std::size_t m = grid.u.size();

    const double sup_y_bound = est.N1 / (1.0 - theta);
    const double tail = pert.eps_perturb * est.N2 * sup_y_bound / est.beta2 *
                        std::exp(-est.beta2 * (grid.u.back() - order.transform(horizon)));
    if (tail >= fp_tol / 10.0)
        throw PreconditionError(
            "perturbed_projection: tail truncation exceeds tolerance; enlarge coverage "
            "(see required_work_horizon)");

    const Matrix eye = Matrix::Identity(n, n);
    const Matrix& P = est.P;
    const Matrix complement = eye - P;

    std::vector<Matrix> x_node(m), xp(m), b_node(m);
    double sup_b = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        x_node[i] = X.value(grid.t[i]);
        xp[i] = x_node[i] * P;
        b_node[i] = pert.B(grid.t[i]);
        sup_b = std::max(sup_b, column_sum_norm(b_node[i]));
    }
    if (sup_b > pert.eps_perturb * (1.0 + 1e-12))
        throw PreconditionError("perturbed_projection: ||B(t)|| exceeds eps_perturb on grid");

    std::vector<Matrix> y(xp);  // start from the unperturbed fixed point X(t)P
    FixedPointReport fp;
    fp.theta = theta;
    fp.tail_bound = tail;

    std::vector<Matrix> g1(m), g2(m);
    auto sweep = [&](std::vector<Matrix>& target) {
        for (std::size_t i = 0; i < m; ++i) {
            const Matrix integrand = X.solve(grid.t[i], Matrix(b_node[i] * target[i]));
            g1[i] = P * integrand;
            g2[i] = complement * integrand;
        }
        std::vector<Matrix> prefix = quad::cumulative_integral(grid.h, g1);
        std::vector<Matrix> suffix = suffix_integral(grid.h, g2);
        double change = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            Matrix next = xp[i] + x_node[i] * prefix[i] - x_node[i] * suffix[i];
            change = std::max(change, column_sum_norm(Matrix(next - target[i])));
            target[i] = std::move(next);
        }
        return change;
    };

    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        fp.final_change = sweep(y);
        fp.iterations = it + 1;
        if (fp.final_change < fp_tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("perturbed_projection: fixed point did not converge");

    // Residual of the converged iterate under one more application of L.
    {
        std::vector<Matrix> copy(y);
        fp.residual = sweep(copy);
    }

    PerturbedProjection out;
    out.Q = y.front();
    out.fp = fp;
    out.fp.projector_drift = column_sum_norm(Matrix(out.Q * out.Q - out.Q));
    const double tol = std::max(1e-6, 100.0 * fp_tol);
    if (out.fp.projector_drift > tol)
        throw ConvergenceError("perturbed_projection: Q failed the projection identity");
    if (column_sum_norm(Matrix(out.Q * P - out.Q)) > tol ||
        column_sum_norm(Matrix(P * out.Q - P)) > tol)
        throw ConvergenceError("perturbed_projection: QP = Q / PQ = P identities failed");
    out.rank = static_cast<int>(std::lround(out.Q.trace()));

    out.Y1.t = grid.t;
    out.Y1.u = grid.u;
    out.Y1.values = std::move(y);
    return out;
}

VerifyReport verify_roughness(const FundamentalMatrix& Y, const Matrix& Q, double K1,
                              double lambda1, double K2, double lambda2,
                              std::span<const double> t_grid,
                              std::span<const double> s_grid) {
    DichotomyEstimate est;
    est.P = Q;
    est.N1 = K1;
    est.N2 = K2;
    est.beta1 = lambda1;
    est.beta2 = lambda2;
    return verify_dichotomy(Y, est, t_grid, s_grid);
}

ManifoldPoint invariant_manifold(const FundamentalMatrix& X, const DichotomyEstimate& est,
                                 const std::function<Vector(double, const Vector&)>& f,
                                 const std::function<double(double)>& zeta, double delta,
                                 double t0, const Vector& x0_stable, double lambda,
                                 double horizon, double fp_tol, int max_iter) {
    const FractionalOrder& order = X.order();
    const int n = X.dim();
    if (std::isnan(lambda)) lambda = est.beta1;

    if (zeta(0.0) != 0.0)
        throw PreconditionError("invariant_manifold: zeta(0) must be 0");
    const double kappa = est.N1 / est.beta1 + est.N2 / est.beta2;
    const double z_delta = zeta(delta);
    if (!(kappa * z_delta < 0.5))
        throw PreconditionError(
            "invariant_manifold: contraction condition (N1/b1 + N2/b2) zeta(delta) < 1/2 fails");
    if (!(est.N1 <
          (est.beta2 + lambda - 4.0 * est.N1 * est.N2 * z_delta) * kappa))
        throw PreconditionError("invariant_manifold: secondary smallness condition fails");

    const Vector p0 = est.P * x0_stable;
    const double p0_norm = l1_norm(p0);
    if (p0_norm > delta / (2.0 * est.N1) * (1.0 + 1e-12))
        throw PreconditionError("invariant_manifold: ||P x0|| exceeds delta/(2 N1)");

    WorkGrid grid = make_work_grid(X, order.transform(t0), 257);
    const std::size_t m = grid.u.size();

    const double tail = est.N2 * z_delta * delta / est.beta2 *
                        std::exp(-est.beta2 * (grid.u.back() - order.transform(horizon)));
    if (tail >= fp_tol / 10.0)
        throw PreconditionError(
            "invariant_manifold: tail truncation exceeds tolerance; enlarge coverage");

    const Matrix eye = Matrix::Identity(n, n);
    const Matrix& P = est.P;
    const Matrix complement = eye - P;

    std::vector<Matrix> x_node(m);
    std::vector<Vector> base(m);
    const Vector w0 = X.solve(t0, Vector(p0));
    for (std::size_t i = 0; i < m; ++i) {
        x_node[i] = X.value(grid.t[i]);
        base[i] = x_node[i] * (P * w0);
    }

    std::vector<Vector> phi(m, Vector(base.front()));
    for (std::size_t i = 0; i < m; ++i) phi[i] = base[i];

    FixedPointReport fp;
    fp.theta = kappa * z_delta;
    fp.tail_bound = tail;

    std::vector<Vector> g1(m), g2(m);
    auto sweep = [&](std::vector<Vector>& target) {
        for (std::size_t i = 0; i < m; ++i) {
            const Vector integrand = X.solve(grid.t[i], Vector(f(grid.t[i], target[i])));
            g1[i] = P * integrand;
            g2[i] = complement * integrand;
        }
        std::vector<Vector> prefix = quad::cumulative_integral(grid.h, g1);
        std::vector<Vector> suffix = suffix_integral(grid.h, g2);
        double change = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            Vector next = base[i] + x_node[i] * prefix[i] - x_node[i] * suffix[i];
            change = std::max(change, l1_norm(Vector(next - target[i])));
            if (l1_norm(next) > delta * (1.0 + 1e-9))
                throw ConvergenceError("invariant_manifold: iterate left the delta ball");
            target[i] = std::move(next);
        }
        return change;
    };

    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        fp.final_change = sweep(phi);
        fp.iterations = it + 1;
        if (fp.final_change < fp_tol) {
            converged = true;
            break;
        }
    }
    if (!converged)
        throw ConvergenceError("invariant_manifold: contraction did not converge");

    ManifoldPoint out;
    out.h = phi.front();
    out.fp = fp;
    out.tangency_ratio =
        p0_norm == 0.0 ? 0.0 : l1_norm(Vector(complement * out.h)) / p0_norm;
    out.tangency_bound =
        2.0 * est.N1 * est.N2 / est.beta2 * zeta(2.0 * est.N1 * p0_norm);
    out.gamma1 = lambda - est.N1 * est.beta1 * est.beta2 /
                              (est.N1 * est.beta2 + est.N2 * est.beta1);
    out.decay_M = 2.0 * est.N1 * est.N1;

    const double u0 = grid.u.front();
    const double u_hor = order.transform(horizon);
    const double h_norm = l1_norm(out.h);
    out.decay_slack_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        if (grid.u[i] > u_hor + 1e-12) break;
        out.trajectory.t.push_back(grid.t[i]);
        out.trajectory.u.push_back(grid.u[i]);
        out.trajectory.values.push_back(phi[i]);
        const double norm = l1_norm(phi[i]);
        if (norm == 0.0) continue;
        const double bound =
            out.decay_M * std::exp(-out.gamma1 * (grid.u[i] - u0)) * h_norm;
        out.decay_slack_min = std::min(out.decay_slack_min, bound / norm);
    }
    return out;
}

}  // namespace cfd

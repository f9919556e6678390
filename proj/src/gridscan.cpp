#include "cfd/gridscan.hpp"

#include <cmath>
#include <limits>

namespace cfd {

namespace {

struct ScanPlan {
    std::vector<Matrix> x_t;      // X(t) per t node
    std::vector<Matrix> proj_inv; // projector * X^{-1}(s) per s node
    std::vector<double> u_t, u_s;
    std::vector<std::pair<int, int>> pairs;
};

ScanPlan build_plan(const FundamentalMatrix& X, const Matrix& projector, Side side,
                    std::span<const double> t_grid, std::span<const double> s_grid) {
    ScanPlan plan;
    const int n = X.dim();
    plan.x_t.reserve(t_grid.size());
    plan.u_t.reserve(t_grid.size());
    for (double t : t_grid) {
        plan.x_t.push_back(X.value(t));
        plan.u_t.push_back(X.order().transform(t));
    }
    plan.proj_inv.reserve(s_grid.size());
    plan.u_s.reserve(s_grid.size());
    const Matrix eye = Matrix::Identity(n, n);
    for (double s : s_grid) {
        plan.proj_inv.emplace_back(projector * X.solve(s, eye));
        plan.u_s.push_back(X.order().transform(s));
    }
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        for (std::size_t j = 0; j < s_grid.size(); ++j) {
            const bool admissible = side == Side::stable ? t_grid[i] >= s_grid[j]
                                                         : s_grid[j] >= t_grid[i];
            if (admissible) plan.pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
        }
    return plan;
}

inline PairSample eval_pair(const ScanPlan& plan, Side side, double N, double beta,
                            double eps, double t, double s, int i, int j) {
    PairSample out;
    out.t = t;
    out.s = s;
    out.value = column_sum_norm(Matrix(plan.x_t[static_cast<std::size_t>(i)] *
                                       plan.proj_inv[static_cast<std::size_t>(j)]));
    const double ut = plan.u_t[static_cast<std::size_t>(i)];
    const double us = plan.u_s[static_cast<std::size_t>(j)];
    const double exponent = (side == Side::stable ? beta * (us - ut) : beta * (ut - us)) +
                            eps * us;
    out.bound = N * std::exp(exponent);
    out.slack = out.value == 0.0 ? std::numeric_limits<double>::infinity()
                                 : out.bound / out.value;
    return out;
}

}  // namespace

std::vector<PairSample> scan_pairs(const FundamentalMatrix& X, const Matrix& projector,
                                   Side side, double N, double beta, double eps,
                                   std::span<const double> t_grid,
                                   std::span<const double> s_grid) {
    const ScanPlan plan = build_plan(X, projector, side, t_grid, s_grid);
    std::vector<PairSample> out(plan.pairs.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (long k = 0; k < static_cast<long>(plan.pairs.size()); ++k) {
        const auto [i, j] = plan.pairs[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(k)] =
            eval_pair(plan, side, N, beta, eps, t_grid[static_cast<std::size_t>(i)],
                      s_grid[static_cast<std::size_t>(j)], i, j);
    }
    return out;
}

std::vector<PairSample> scan_pairs_serial(const FundamentalMatrix& X,
                                          const Matrix& projector, Side side, double N,
                                          double beta, double eps,
                                          std::span<const double> t_grid,
                                          std::span<const double> s_grid) {
    const ScanPlan plan = build_plan(X, projector, side, t_grid, s_grid);
    std::vector<PairSample> out(plan.pairs.size());
    for (std::size_t k = 0; k < plan.pairs.size(); ++k) {
        const auto [i, j] = plan.pairs[k];
        out[k] = eval_pair(plan, side, N, beta, eps, t_grid[static_cast<std::size_t>(i)],
                           s_grid[static_cast<std::size_t>(j)], i, j);
    }
    return out;
}

SideFit fit_side(const FractionalOrder& order, const std::vector<PairSample>& samples,
                 Side side, double eps) {
    SideFit fit;
    double sum_d = 0.0, sum_z = 0.0, sum_dd = 0.0, sum_dz = 0.0;
    std::size_t count = 0;
    for (const PairSample& p : samples) {
        if (p.value == 0.0) continue;
        const double ut = order.transform(p.t);
        const double us = order.transform(p.s);
        const double d = side == Side::stable ? ut - us : us - ut;
        const double z = std::log(p.value) - eps * us;
        sum_d += d;
        sum_z += z;
        sum_dd += d * d;
        sum_dz += d * z;
        ++count;
    }
    if (count == 0) {
        fit.vacuous = true;
        return fit;
    }
    const double m = static_cast<double>(count);
    const double denom = m * sum_dd - sum_d * sum_d;
    double beta;
    if (denom > 0.0) {
        beta = -(m * sum_dz - sum_d * sum_z) / denom;
    } else {
        beta = 1.0;  // all pairs share one separation; slope is unidentifiable
    }
    if (!(beta > 0.0)) beta = 1e-12;  // keep the estimate inside the admissible cone

    double log_n = -std::numeric_limits<double>::infinity();
    for (const PairSample& p : samples) {
        if (p.value == 0.0) continue;
        const double ut = order.transform(p.t);
        const double us = order.transform(p.s);
        const double d = side == Side::stable ? ut - us : us - ut;
        log_n = std::max(log_n, std::log(p.value) - eps * us + beta * d);
    }
    fit.N = std::exp(log_n);
    fit.beta = beta;
    return fit;
}

}  // namespace cfd

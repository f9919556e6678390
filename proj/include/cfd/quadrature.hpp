#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "cfd/errors.hpp"

namespace cfd {

/// Tolerances and budget for adaptive quadrature.
struct QuadratureConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    int max_subdivisions = 40;

    void validate() const {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw PreconditionError("QuadratureConfig: tolerances must be strictly positive");
        if (max_subdivisions < 1)
            throw PreconditionError("QuadratureConfig: max_subdivisions must be >= 1");
    }
};

namespace quad {

inline double error_norm(double v) { return std::abs(v); }

template <typename Derived>
double error_norm(const Eigen::MatrixBase<Derived>& v) {
    return v.cwiseAbs().maxCoeff();
}

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule (positive abscissae).
inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};

inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
auto gauss_kronrod_panel(F&& f, double a, double b, double& err)
    -> decltype(f(a)) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);

    auto fc = f(mid);
    auto kronrod = decltype(fc)(kWgk[7] * fc);
    auto gauss = decltype(fc)(kWg[3] * fc);
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kXgk[i];
        auto fsum = decltype(fc)(f(mid - dx) + f(mid + dx));
        kronrod += kWgk[i] * fsum;
        if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
    }
    kronrod *= half;
    gauss *= half;
    err = error_norm(decltype(fc)(kronrod - gauss));
    return kronrod;
}

template <typename F>
auto integrate_rec(F&& f, double a, double b, double abs_budget, double rel_tol,
                   int depth) -> decltype(f(a)) {
    double err = 0.0;
    auto panel = gauss_kronrod_panel(f, a, b, err);
    if (err <= std::max(abs_budget, rel_tol * error_norm(panel))) return panel;
    if (depth <= 0)
        throw ConvergenceError("adaptive quadrature: subdivision budget exhausted");
    const double mid = 0.5 * (a + b);
    return decltype(panel)(
        integrate_rec(f, a, mid, 0.5 * abs_budget, rel_tol, depth - 1) +
        integrate_rec(f, mid, b, 0.5 * abs_budget, rel_tol, depth - 1));
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f over [a, b]. Works for double,
/// Eigen vector and Eigen matrix integrands.
template <typename F>
auto integrate(F&& f, double a, double b, const QuadratureConfig& cfg)
    -> decltype(f(a)) {
    cfg.validate();
    if (a == b) return decltype(f(a))(0.0 * f(a));
    return detail::integrate_rec(f, a, b, cfg.abs_tol, cfg.rel_tol,
                                 cfg.max_subdivisions);
}

/// Cumulative integral of uniformly spaced samples: returns I with
/// I[k] = integral of the sampled function from x[0] to x[k], fourth order.
/// Falls back to lower-order rules when fewer than four samples are given.
template <typename T>
std::vector<T> cumulative_integral(double h, const std::vector<T>& f) {
    const std::size_t m = f.size();
    std::vector<T> out;
    out.reserve(m);
    if (m == 0) return out;
    out.push_back(T(0.0 * f[0]));
    if (m == 1) return out;
    if (m == 2) {
        out.push_back(T(out[0] + (h / 2.0) * (f[0] + f[1])));
        return out;
    }
    if (m == 3) {
        out.push_back(T(out[0] + (h / 12.0) * (5.0 * f[0] + 8.0 * f[1] - f[2])));
        out.push_back(T(out[0] + (h / 3.0) * (f[0] + 4.0 * f[1] + f[2])));
        return out;
    }
    out.push_back(T(out[0] + (h / 24.0) * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])));
    for (std::size_t i = 1; i + 2 < m; ++i) {
        out.push_back(T(out[i] + (h / 24.0) * (-f[i - 1] + 13.0 * f[i] +
                                               13.0 * f[i + 1] - f[i + 2])));
    }
    out.push_back(T(out[m - 2] + (h / 24.0) * (f[m - 4] - 5.0 * f[m - 3] +
                                               19.0 * f[m - 2] + 9.0 * f[m - 1])));
    return out;
}

}  // namespace quad
}  // namespace cfd

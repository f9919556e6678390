#pragma once

#include <span>
#include <vector>

#include "cfd/gridscan.hpp"

namespace cfd {

/// Ties at a verified bound are decided at machine precision: slacks within
/// this distance of 1 count as verified. Far below every stated tolerance.
inline constexpr double kSlackFpGuard = 1e-12;

/// Projection plus dichotomy constants for ||X(t) P X^{-1}(s)|| and
/// ||X(t) (I-P) X^{-1}(s)||.
struct DichotomyEstimate {
    Matrix P;
    double N1 = 1.0;
    double N2 = 1.0;
    double beta1 = 1.0;
    double beta2 = 1.0;
};

struct SideReport {
    double min_slack = 0.0;
    double argmin_t = 0.0;
    double argmin_s = 0.0;
    bool vacuous = false;  ///< all pair values were zero
    std::vector<PairSample> samples;

    bool verified() const { return vacuous || min_slack >= 1.0 - kSlackFpGuard; }
};

struct VerifyReport {
    SideReport stable;
    SideReport unstable;
    bool verified() const { return stable.verified() && unstable.verified(); }
};

struct StabilityReport {
    double sup_norm = 0.0;      ///< (D1) sup ||X(t)||
    double sup_ratio = 0.0;     ///< (D2) sup over t >= s of ||X(t) X^{-1}(s)||
    double trend_slope = 0.0;   ///< slope of log||X(t)|| against u(t)
    double fitted_K = 0.0;      ///< (D4) sup-inflated constant
    double fitted_lambda = 0.0; ///< (D4) fitted decay rate
    bool d1 = false, d2 = false, d3 = false, d4 = false;
};

/// Evaluates the stability properties (D1)-(D4) on the grids. Report only.
StabilityReport classify_stability(const FundamentalMatrix& X,
                                   std::span<const double> t_grid,
                                   std::span<const double> s_grid,
                                   double slope_tol = 1e-3);

/// Checks both dichotomy inequalities pairwise; the optional nonuniform
/// exponent eps multiplies each bound by E(eps, s).
VerifyReport verify_dichotomy(const FundamentalMatrix& X, const DichotomyEstimate& est,
                              std::span<const double> t_grid,
                              std::span<const double> s_grid, double eps = 0.0);

/// Fits (N1, beta1) and (N2, beta2) by log-linear least squares followed by
/// sup-inflation, so that verify_dichotomy accepts the result on the same
/// grids by construction. Throws when the stable block is identically zero.
DichotomyEstimate estimate_dichotomy(const FundamentalMatrix& X, const Matrix& P,
                                     std::span<const double> t_grid,
                                     std::span<const double> s_grid,
                                     double eps = 0.0);

/// Constants of the projected integral inequality:
/// theta = eps (N1/beta1 + N2/beta2), K_i = N_i/(1-theta),
/// lambda_i = beta_i - eps N_i/(1-theta).
struct ProjectedConstants {
    double theta = 0.0;
    bool admissible = false;   ///< theta < 1
    double K1 = 0.0, K2 = 0.0;
    double lambda1 = 0.0, lambda2 = 0.0;
    bool rates_positive = false;  ///< lambda_1 > 0 and lambda_2 > 0
};

ProjectedConstants projected_constants(double N1, double N2, double beta1, double beta2,
                                       double eps);

struct InequalityCheck {
    bool hypothesis_holds = false;
    bool conclusion_holds = false;
    double hypothesis_margin = 0.0;  ///< min over the grid of RHS(t)/u(t)
    double conclusion_margin = 0.0;  ///< min over the grid of bound(t)/u(t)
    double truncation_tail = 0.0;
};

/// Evaluates the projected integral inequality for a concrete signal u on
/// [t0, T]: checks the hypothesis pointwise on the grid and, when it holds,
/// the conclusion u(t) <= K1 E(lambda1, t0)/E(lambda1, t). The improper
/// integral is truncated at the end of u's domain; the analytic tail bound
/// must stay below cfg.abs_tol.
InequalityCheck projected_inequality_check(const FractionalOrder& order,
                                           const DichotomyEstimate& est, double eps,
                                           const ScalarSignal& u, double t0,
                                           std::span<const double> t_grid,
                                           const QuadratureConfig& cfg);

}  // namespace cfd

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cfd/roughness.hpp"

namespace cfd {

/// Constants for nonuniform asymptotic stability under a perturbation with
/// ||B(t)|| <= delta / E(eps, t).
struct NonuniformStability {
    double theta = 0.0;  ///< delta N / beta
    double K = 0.0;      ///< N / (1 - theta)
    double gamma = 0.0;  ///< beta - delta N / (1 - theta)
};

NonuniformStability nonuniform_stability_constants(double N_hat, double beta_hat,
                                                   double delta);

/// Perturbed nonuniform dichotomy constants. Shares the arithmetic of
/// projected_constants exactly; additionally requires eps < min{beta_i}.
ProjectedConstants nonuniform_dichotomy_constants(double N1_hat, double N2_hat,
                                                  double beta1_hat, double beta2_hat,
                                                  double delta, double eps);

struct ProjectionNormBound {
    double eta_hat = 0.0;
    double bound = 0.0;  ///< 4 N E(eps, t)
};

/// Norm bound of the perturbed projections: 4 N E(eps, t), valid under
/// eta_hat = delta N^2 beta / (2 beta^2 - 5 delta N beta - eps(beta - 2 delta N)) < 1/4.
ProjectionNormBound projection_norm_bound(const FractionalOrder& order, double N_hat,
                                          double beta_hat, double delta, double eps,
                                          double t);

struct NonuniformRoughness {
    double K_final = 0.0;     ///< 4 N^2 beta / (beta - 2 delta N)
    double lambda_hat = 0.0;  ///< beta - delta N beta / (beta - 2 delta N)
    bool near_pole = false;   ///< denominator within 1e-6 of 0 (reported, not thrown)
};

NonuniformRoughness nonuniform_roughness_constants(double N_hat, double beta_hat,
                                                   double delta);

/// Nonuniform dichotomy data: the projection family is represented by its
/// anchor value P0 = P(0); the commutation identity T(t,s)P(s) = P(t)T(t,s)
/// collapses T(t,s)P(s) to X(t) P0 X^{-1}(s), so the scan kernels coincide
/// with the uniform ones and the nonuniform weight enters only the bounds.
struct NonuniformDichotomy {
    Matrix P0;
    double N1_hat = 0.0, N2_hat = 0.0;
    double beta1_hat = 0.0, beta2_hat = 0.0;
    double eps = 0.0;
};

/// Fits nonuniform constants for each candidate eps (ascending) and returns
/// the smallest one whose sup-inflated N-hats stay below n_cap. The supplied
/// family must satisfy the commutation and idempotency invariants on the
/// grids (checked, tolerance commutation_tol).
NonuniformDichotomy estimate_nonuniform(const FundamentalMatrix& X,
                                        const std::function<Matrix(double)>& P_of_t,
                                        std::span<const double> t_grid,
                                        std::span<const double> s_grid,
                                        std::span<const double> eps_candidates,
                                        double n_cap, double commutation_tol = 1e-6);

/// Verifies the nonuniform dichotomy bounds (the eps weight multiplies both
/// sides' bounds by E(eps, s)).
VerifyReport verify_nonuniform(const FundamentalMatrix& X, const NonuniformDichotomy& est,
                               std::span<const double> t_grid,
                               std::span<const double> s_grid);

/// Perturbation admissible for the nonuniform roughness theorems:
/// ||B(t)|| <= delta / E(weight_power * eps, t).
struct NonuniformPerturbation {
    TimeMatrixFunction B;
    double delta;
    int weight_power = 1;  ///< 1 or 2
};

struct NonuniformKernel {
    MatrixGrid U;  ///< U(t, s_anchor) for t in [s_anchor, coverage]
    FixedPointReport fp;
};

/// Bounded-solution kernel of the perturbed equation anchored at s: the unique
/// fixed point of
///   (L U)(t) = X(t) P0 X^{-1}(s) + X(t) P0 I^a_s (X^{-1} B U)
///              + X(t)(I-P0) I^a_{+inf} (X^{-1} B U).
/// The residual in fp is measured in the alpha-weighted norm
/// sup ||U(t)|| / E(eps, s_anchor).
NonuniformKernel nonuniform_bounded_kernel(const FundamentalMatrix& X,
                                           const NonuniformDichotomy& est,
                                           const NonuniformPerturbation& pert,
                                           double s_anchor, double horizon,
                                           double fp_tol, int max_iter = 200);

/// Projection family of the perturbed system built from the kernel value at
/// the anchor iota: P_hat(t) = That(t, iota) U(iota, iota) That(iota, t),
/// where That is the evolution of the perturbed fundamental matrix Y.
std::function<Matrix(double)> nonuniform_projection_family(const FundamentalMatrix& Y,
                                                           const Matrix& U_iota_iota,
                                                           double iota);

}  // namespace cfd

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cfd/dichotomy.hpp"

namespace cfd {

/// Bounded linear perturbation B(t) with its sup-norm size on R+.
struct PerturbationSpec {
    TimeMatrixFunction B;
    double eps_perturb;  ///< >= sup_t ||B(t)|| on the working horizon
};

/// Constants of the persistence statement under a perturbation of size eps:
/// with N = max{N1,N2} and beta = min{beta1,beta2}, admissibility means
/// eps < beta/(5 N^2); then the perturbed system satisfies the dichotomy with
/// K_new = 25 N^2/9 and rate lambda_new = beta - 3 eps N, and the projections
/// stay within proj_distance_bound = 2 eps N^3/(2 beta - 5 eps N - 2 eps N^2).
struct RoughnessConstants {
    double N = 0.0;
    double beta = 0.0;
    double theta = 0.0;  ///< eps (N1/beta1 + N2/beta2)
    double eta = 0.0;    ///< eps N^2 / (2 beta - 5 eps N)
    bool admissible = false;
    double K_new = 0.0;
    double lambda_new = 0.0;
    double proj_distance_bound = 0.0;
};

RoughnessConstants roughness_constants(double N1, double N2, double beta1, double beta2,
                                       double eps_perturb);

/// Matrix-valued function sampled on a uniform grid in the transformed time.
struct MatrixGrid {
    std::vector<double> t;
    std::vector<double> u;
    std::vector<Matrix> values;
};

struct FixedPointReport {
    int iterations = 0;
    double final_change = 0.0;   ///< sup-norm change of the last sweep
    double residual = 0.0;       ///< sup-norm of L(Y) - Y after convergence
    double tail_bound = 0.0;     ///< analytic bound on the truncated improper integral
    double theta = 0.0;          ///< contraction factor
    double projector_drift = 0.0;  ///< ||Q^2 - Q||
};

struct PerturbedProjection {
    Matrix Q;
    int rank = 0;
    FixedPointReport fp;
    MatrixGrid Y1;  ///< the bounded matrix solution, Q = Y1(0)
};

/// Picard iteration for the bounded-solution operator
///   (L Y)(t) = X(t)P + X(t)P I^a_0 (X^{-1} B Y) + X(t)(I-P) I^a_{+inf} (X^{-1} B Y),
/// truncated at the coverage of X. Requires theta < 1, coverage starting at 0
/// and enough coverage beyond `horizon` for the documented tail bound.
PerturbedProjection perturbed_projection(const FundamentalMatrix& X,
                                         const DichotomyEstimate& est,
                                         const PerturbationSpec& pert, double horizon,
                                         double fp_tol, int max_iter = 200);

/// Working coverage needed so the truncated tail stays below fp_tol/10 for
/// report times up to `horizon`.
double required_work_horizon(const FractionalOrder& order, const DichotomyEstimate& est,
                             double eps_perturb, double horizon, double fp_tol);

/// Verifies the perturbed dichotomy inequalities for the perturbed fundamental
/// matrix Y with projection Q and explicit constants.
VerifyReport verify_roughness(const FundamentalMatrix& Y, const Matrix& Q, double K1,
                              double lambda1, double K2, double lambda2,
                              std::span<const double> t_grid,
                              std::span<const double> s_grid);

struct VectorGrid {
    std::vector<double> t;
    std::vector<double> u;
    std::vector<Vector> values;
};

struct ManifoldPoint {
    Vector h;                    ///< point on the manifold over the stable datum
    VectorGrid trajectory;       ///< fixed-point trajectory up to the horizon
    double tangency_ratio = 0.0; ///< ||(I-P) h|| / ||P x0||
    double tangency_bound = 0.0; ///< (2 N1 N2 / beta2) zeta(2 N1 ||P x0||)
    double gamma1 = 0.0;         ///< decay rate lambda - N1 b1 b2/(N1 b2 + N2 b1)
    double decay_M = 0.0;        ///< decay constant 2 K N1
    double decay_slack_min = 0.0;
    FixedPointReport fp;
};

/// Stable-manifold point through the projected initial datum P x0: iterates
/// the integral operator of the manifold construction to its fixed point and
/// reports tangency and decay margins. `zeta` is the Lipschitz modulus of the
/// nonlinearity, `delta` the working ball radius, `lambda` the uniform rate
/// used by the decay estimate (defaults to beta1 when NaN is passed).
ManifoldPoint invariant_manifold(const FundamentalMatrix& X, const DichotomyEstimate& est,
                                 const std::function<Vector(double, const Vector&)>& f,
                                 const std::function<double(double)>& zeta, double delta,
                                 double t0, const Vector& x0_stable, double lambda,
                                 double horizon, double fp_tol, int max_iter = 200);

}  // namespace cfd

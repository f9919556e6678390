#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "cfd/fractional.hpp"

namespace cfd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// The matrix norm fixed for the whole artifact: maximum absolute column sum
/// (the operator norm induced by the l1 vector norm below).
double column_sum_norm(const Matrix& m);

/// l1 norm of a state vector.
double l1_norm(const Vector& v);

/// Mittag-Leffler-type matrix function: exp(A u(t)) with
/// u(t) = sign(t)|t|^alpha/alpha, computed by Pade scaling-and-squaring.
/// Throws OverflowError when the result leaves the floating-point range.
Matrix ml_matrix(const FractionalOrder& order, const Matrix& A, double t);

/// Exact finite-sum evaluation of E_alpha(lambda I + N, 1) for the canonical
/// nilpotent N (ones on the superdiagonal); an independent oracle for
/// ml_matrix on Jordan blocks.
Matrix ml_jordan_block(const FractionalOrder& order, double lambda, int size);

/// Hyperbolic spectral data of a constant matrix.
struct SpectralSplit {
    Matrix stable_projection;  ///< P: range = stable invariant subspace
    double stable_rate;        ///< min |Re lambda| over stable eigenvalues
    double unstable_rate;      ///< min Re lambda over unstable eigenvalues
    int stable_rank;           ///< rank(P) = number of stable eigenvalues
};

/// Projection onto the invariant subspace of eigenvalues with Re < 0 along the
/// complementary invariant subspace, realized through the matrix sign
/// function. Throws NonHyperbolicError if some eigenvalue has |Re| < tol.
SpectralSplit spectral_projection(const Matrix& A, double tol);

struct DecayCertificate {
    double K;
    double lambda;
};

/// For A with strictly stable spectrum, returns (K, lambda) certifying
/// ||E_alpha(A, t)|| <= K E_alpha(-lambda, t) on the given grid, with
/// lambda = min|Re| - margin.
DecayCertificate negative_spectrum_bound(const FractionalOrder& order, const Matrix& A,
                                         std::span<const double> t_grid,
                                         double margin = 1e-6);

}  // namespace cfd

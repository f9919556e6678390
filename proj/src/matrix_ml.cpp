#include "cfd/matrix_ml.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

namespace cfd {

double column_sum_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

double l1_norm(const Vector& v) { return v.lpNorm<1>(); }

Matrix ml_matrix(const FractionalOrder& order, const Matrix& A, double t) {
    if (A.rows() != A.cols()) throw PreconditionError("ml_matrix: matrix must be square");
    const double u = order.transform(t);
    Matrix result = (A * u).exp();
    if (!result.allFinite())
        throw OverflowError("ml_matrix: matrix exponential overflowed");
    return result;
}

Matrix ml_jordan_block(const FractionalOrder& order, double lambda, int size) {
    if (size < 1) throw PreconditionError("ml_jordan_block: size must be >= 1");
    const double scale = ml_scalar(order, lambda, 1.0);
    Matrix out = Matrix::Zero(size, size);
    double coeff = 1.0;  // 1 / (alpha^j j!)
    for (int j = 0; j < size; ++j) {
        if (j > 0) coeff /= (order.value() * j);
        for (int i = 0; i + j < size; ++i) out(i, i + j) = scale * coeff;
    }
    return out;
}

namespace {

// Newton iteration for the matrix sign function with determinant scaling.
Matrix matrix_sign(const Matrix& A) {
    const int n = static_cast<int>(A.rows());
    Matrix s = A;
    double prev_diff = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 80; ++iter) {
        Eigen::PartialPivLU<Matrix> lu(s);
        const double det = std::abs(lu.determinant());
        if (!(det > 0.0) || !std::isfinite(det))
            throw ConvergenceError("matrix sign iteration: singular iterate");
        double c = std::pow(det, -1.0 / n);
        if (prev_diff < 1e-2) c = 1.0;  // drop scaling near convergence
        c = std::min(std::max(c, 1e-8), 1e8);
        Matrix s_next = 0.5 * (c * s + lu.inverse() / c);
        const double diff = column_sum_norm(Matrix(s_next - s));
        const double scale = column_sum_norm(s_next);
        s = std::move(s_next);
        if (diff <= 1e-14 * std::max(scale, 1.0)) return s;
        prev_diff = diff / std::max(scale, 1.0);
    }
    throw ConvergenceError("matrix sign iteration did not converge");
}

}  // namespace

SpectralSplit spectral_projection(const Matrix& A, double tol) {
    if (A.rows() != A.cols())
        throw PreconditionError("spectral_projection: matrix must be square");
    const int n = static_cast<int>(A.rows());

    Eigen::EigenSolver<Matrix> eig(A);
    double stable_rate = std::numeric_limits<double>::infinity();
    double unstable_rate = std::numeric_limits<double>::infinity();
    int stable_count = 0;
    for (int i = 0; i < n; ++i) {
        const double re = eig.eigenvalues()[i].real();
        if (std::abs(re) < tol)
            throw NonHyperbolicError(
                "spectral_projection: eigenvalue within tol of the imaginary axis");
        if (re < 0.0) {
            ++stable_count;
            stable_rate = std::min(stable_rate, -re);
        } else {
            unstable_rate = std::min(unstable_rate, re);
        }
    }

    SpectralSplit out;
    if (stable_count == 0) {
        out.stable_projection = Matrix::Zero(n, n);
    } else if (stable_count == n) {
        out.stable_projection = Matrix::Identity(n, n);
    } else {
        const Matrix sign = matrix_sign(A);
        Matrix p = 0.5 * (Matrix::Identity(n, n) - sign);
        // One purification step toward idempotency.
        p = 3.0 * p * p - 2.0 * p * p * p;
        out.stable_projection = p;
    }
    out.stable_rate = stable_rate;
    out.unstable_rate = unstable_rate;
    out.stable_rank = stable_count;
    return out;
}

DecayCertificate negative_spectrum_bound(const FractionalOrder& order, const Matrix& A,
                                         std::span<const double> t_grid, double margin) {
    if (t_grid.empty())
        throw PreconditionError("negative_spectrum_bound: empty grid");
    Eigen::EigenSolver<Matrix> eig(A);
    double min_abs_re = std::numeric_limits<double>::infinity();
    for (int i = 0; i < A.rows(); ++i) {
        const double re = eig.eigenvalues()[i].real();
        if (re >= 0.0)
            throw PreconditionError(
                "negative_spectrum_bound: spectrum is not strictly stable");
        min_abs_re = std::min(min_abs_re, -re);
    }
    const double lambda = min_abs_re - margin;
    if (!(lambda > 0.0))
        throw PreconditionError("negative_spectrum_bound: margin exceeds min|Re|");

    double k = 0.0;
    for (double t : t_grid) {
        if (t < 0.0)
            throw PreconditionError("negative_spectrum_bound: grid must lie in R+");
        const double norm = column_sum_norm(ml_matrix(order, A, t));
        k = std::max(k, norm * ml_scalar(order, lambda, t));
    }
    return {k, lambda};
}

}  // namespace cfd

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cfd/matrix_ml.hpp"

namespace cfd {

/// A continuous time-dependent square matrix on a closed interval.
class TimeMatrixFunction {
  public:
    TimeMatrixFunction(std::function<Matrix(double)> eval, double t_lo, double t_hi,
                       int dim)
        : eval_(std::move(eval)), lo_(t_lo), hi_(t_hi), dim_(dim) {
        if (!(t_lo <= t_hi)) throw PreconditionError("TimeMatrixFunction: empty domain");
        if (dim < 1) throw PreconditionError("TimeMatrixFunction: dimension must be >= 1");
    }

    static TimeMatrixFunction constant(const Matrix& A,
                                       double t_lo = -1e18, double t_hi = 1e18) {
        if (A.rows() != A.cols())
            throw PreconditionError("TimeMatrixFunction: matrix must be square");
        const int n = static_cast<int>(A.rows());
        return TimeMatrixFunction([A](double) { return A; }, t_lo, t_hi, n);
    }

    Matrix operator()(double t) const {
        if (t < lo_ || t > hi_)
            throw DomainError("TimeMatrixFunction: evaluation outside domain");
        Matrix m = eval_(t);
        if (m.rows() != dim_ || m.cols() != dim_)
            throw PreconditionError("TimeMatrixFunction: dimension changed over time");
        return m;
    }

    int dim() const { return dim_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }

  private:
    std::function<Matrix(double)> eval_;
    double lo_, hi_;
    int dim_;
};

/// Initial value problem for the conformable equation T^alpha x = f(t, x).
struct IVP {
    FractionalOrder order;
    std::function<Vector(double, const Vector&)> rhs;
    double t0 = 0.0;
    Vector x0;
    std::optional<double> lipschitz_L;            ///< Lipschitz constant on the box
    std::optional<std::pair<double, double>> box; ///< (a, b): |t - t0| <= a, ||x - x0|| <= b
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    double realized_step = 0.0;  ///< delta_+ for picard_solve
    int iterations = 0;          ///< Picard iterations used
};

/// Picard iteration on the step interval of the local existence theorem:
/// delta_+ = min{a, (b/M) t0^{1-alpha}} with M estimated by sampling the box.
/// Requires the box and Lipschitz data, t0 != 0 and b < M/L.
/// For t0 < 0 the reflected problem is solved and mapped back.
Trajectory picard_solve(const IVP& ivp, double tol, int max_iter,
                        int grid_points = 129);

/// Adaptive Runge-Kutta (Dormand-Prince 5(4)) applied in the transformed time
/// u = sign(t)|t|^alpha/alpha, where the equation is classical. Trajectories
/// through t = 0 are split there and restarted.
Trajectory ivp_solve(const IVP& ivp, double t_end, double rk_tol,
                     int output_points = 65);

struct FundamentalOptions {
    double liouville_tol = 1e-6;  ///< relative drift allowed from the determinant law
    bool parallel = true;         ///< integrate columns concurrently when OpenMP is on
};

/// Grid-sampled fundamental matrix with cubic Hermite interpolation in the
/// transformed time and cached LU factors per node.
class FundamentalMatrix {
  public:
    /// Assemble from externally computed samples. derivative_hint(t) must give
    /// A(t) so node slopes dX/du = A X can be recorded for interpolation.
    static FundamentalMatrix from_samples(const FractionalOrder& order,
                                          std::vector<double> times,
                                          std::vector<Matrix> values,
                                          const std::function<Matrix(double)>& A_of_t);

    const FractionalOrder& order() const { return order_; }
    int dim() const { return dim_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& u_grid() const { return u_; }
    double t_min() const { return times_.front(); }
    double t_max() const { return times_.back(); }
    bool covers(double t) const { return t >= t_min() && t <= t_max(); }

    /// Interpolated X(t).
    Matrix value(double t) const;
    /// X(s)^{-1} b, using the cached factorization when s is a grid node.
    Matrix solve(double s, const Matrix& b) const;
    Vector solve(double s, const Vector& b) const;

    const Matrix& node_value(std::size_t i) const { return values_[i]; }
    double node_determinant(std::size_t i) const { return dets_[i]; }

    /// Worst condition number (column-sum norm) among the grid nodes.
    double cond_report() const { return cond_; }
    /// True when the node spacing is uniform in u (within rounding).
    bool uniform_in_u() const { return uniform_u_; }

  private:
    friend FundamentalMatrix fundamental_matrix(const FractionalOrder&,
                                                const TimeMatrixFunction&,
                                                std::span<const double>, double,
                                                const FundamentalOptions&);
    FundamentalMatrix(FractionalOrder order) : order_(order) {}
    void finalize();
    std::size_t locate(double u) const;

    FractionalOrder order_;
    int dim_ = 0;
    std::vector<double> times_, u_;
    std::vector<Matrix> values_, slopes_;  // slopes: dX/du at nodes
    std::vector<Eigen::PartialPivLU<Matrix>> lu_;
    std::vector<double> dets_;
    double cond_ = 0.0;
    bool uniform_u_ = false;
};

/// Integrates T^alpha X = A(t) X columnwise from X(grid[0]) = I and verifies
/// the determinant against the conformable Liouville formula at every node.
FundamentalMatrix fundamental_matrix(const FractionalOrder& order,
                                     const TimeMatrixFunction& A,
                                     std::span<const double> grid, double rk_tol,
                                     const FundamentalOptions& options = {});

/// Evolution operator T(t, s) = X(t) X^{-1}(s).
Matrix evolution(const FundamentalMatrix& X, double t, double s);

/// Variation of constants: X(t) X^{-1}(t0) x0 + X(t) I^alpha_{t0}(X^{-1} f)(t).
Vector variation_of_constants(const FundamentalMatrix& X,
                              const std::function<Vector(double)>& forcing,
                              double t0, const Vector& x0, double t,
                              const QuadratureConfig& cfg);

struct LiouvilleCheck {
    double predicted;
    double actual;
};

/// Compares det X(t) against det X(t0) exp(I^alpha_{t0} tr A) (report only).
LiouvilleCheck liouville_determinant(const FundamentalMatrix& X,
                                     const TimeMatrixFunction& A, double t,
                                     const QuadratureConfig& cfg);

enum class GridSpacing { uniform_time, uniform_u, geometric_u };

/// Builds a strictly increasing time grid; geometric_u spaces the points
/// geometrically in the natural clock u = t^alpha/alpha.
std::vector<double> time_grid(const FractionalOrder& order, double t_min,
                              double t_max, int count,
                              GridSpacing spacing = GridSpacing::geometric_u);

}  // namespace cfd

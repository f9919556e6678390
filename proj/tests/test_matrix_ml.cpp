#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "cfd/matrix_ml.hpp"

using namespace cfd;

namespace {

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

// Direct truncated series oracle with the tail controlled by the scalar
// majorant E_alpha(||A||, |t|).
Matrix series_oracle(const FractionalOrder& order, const Matrix& A, double t) {
    const double u = order.transform(t);
    Matrix term = Matrix::Identity(A.rows(), A.cols());
    Matrix sum = term;
    for (int k = 1; k < 200; ++k) {
        term = Matrix(term * A) * (u / static_cast<double>(k));
        sum += term;
        if (column_sum_norm(term) < 1e-16 * column_sum_norm(sum) && k > 4) break;
    }
    return sum;
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("column-sum norm is the max absolute column sum") {
    CHECK(column_sum_norm(mat2(1, -4, 2, 0)) == doctest::Approx(4.0));
    CHECK(column_sum_norm(mat2(-1, 0.5, 3, -0.25)) == doctest::Approx(4.0));
    CHECK(l1_norm(Eigen::Vector3d(1, -2, 0.5)) == doctest::Approx(3.5));
}

TEST_CASE("ml_matrix basics") {
    FractionalOrder half(0.5);

    SUBCASE("zero matrix gives the identity") {
        const Matrix id = ml_matrix(half, Matrix::Zero(3, 3), 2.7);
        CHECK(max_abs(Matrix(id - Matrix::Identity(3, 3))) < 1e-15);
    }

    SUBCASE("alpha = 1 reduces to the classical matrix exponential") {
        Matrix a = mat2(0.3, -1.2, 0.7, -0.4);
        const Matrix expected = (a * 1.7).exp();
        const Matrix got = ml_matrix(FractionalOrder(1.0), a, 1.7);
        CHECK(max_abs(Matrix(got - expected)) < 1e-13);
    }

    SUBCASE("diagonal case evaluates ml_scalar entrywise") {
        Matrix a = mat2(-1.0, 0.0, 0.0, 2.0);
        const Matrix got = ml_matrix(half, a, 1.0);
        CHECK(got(0, 0) == doctest::Approx(0.13533528323661271).epsilon(1e-13));
        CHECK(got(1, 1) == doctest::Approx(54.598150033144236).epsilon(1e-13));
        CHECK(got(0, 1) == 0.0);
        CHECK(got(1, 0) == 0.0);
    }

    SUBCASE("negative time uses the mirrored branch") {
        Matrix a = mat2(-1.0, 0.0, 0.0, 2.0);
        const Matrix got = ml_matrix(half, a, -1.0);
        // exp(-A (-t)^alpha / alpha) = exp(-2A) at t = -1
        CHECK(got(0, 0) == doctest::Approx(std::exp(2.0)).epsilon(1e-13));
        CHECK(got(1, 1) == doctest::Approx(std::exp(-4.0)).epsilon(1e-13));
    }

    SUBCASE("overflow raises") {
        Matrix a = mat2(900.0, 0.0, 0.0, 900.0);
        CHECK_THROWS_AS(ml_matrix(FractionalOrder(1.0), a, 1.0), OverflowError);
    }
}

TEST_CASE("ml_matrix agrees with the truncated series oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> entry(-1.0, 1.0), alpha_d(0.2, 1.0),
        t_d(0.1, 2.0);
    for (int k = 0; k < 40; ++k) {
        FractionalOrder order(alpha_d(rng));
        const int n = 2 + static_cast<int>(rng() % 3);
        Matrix a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = entry(rng);
        double t = t_d(rng);
        // keep the series in its fast-converging regime ||A|| |u| <= 5
        if (column_sum_norm(a) * std::abs(order.transform(t)) > 5.0) t = 0.5;
        const Matrix got = ml_matrix(order, a, t);
        const Matrix expect = series_oracle(order, a, t);
        CHECK(column_sum_norm(Matrix(got - expect)) <=
              1e-10 * std::max(1.0, column_sum_norm(expect)));
    }
}

TEST_CASE("ml_matrix similarity identity") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> entry(-1.0, 1.0);
    FractionalOrder order(0.65);
    for (int k = 0; k < 20; ++k) {
        Matrix a(3, 3), p(3, 3);
        do {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    a(i, j) = entry(rng);
                    p(i, j) = entry(rng);
                }
        } while (std::abs(p.determinant()) < 0.1);
        const Matrix lhs = ml_matrix(order, Matrix(p.inverse() * a * p), 1.0);
        const Matrix rhs = p.inverse() * ml_matrix(order, a, 1.0) * p;
        CHECK(column_sum_norm(Matrix(lhs - rhs)) < 1e-10);
    }
}

TEST_CASE("ml_matrix semigroup in the transformed clock") {
    FractionalOrder order(0.4);
    Matrix a = mat2(-0.6, 0.4, 0.1, -0.2);
    for (double t : {0.5, 1.5, 3.0})
        for (double s : {0.25, 1.0, 2.0}) {
            const double du = order.transform(t) - order.transform(s);
            const Matrix lhs =
                ml_matrix(order, a, t) * ml_matrix(order, a, s).inverse();
            const Matrix rhs = (a * du).exp();
            CHECK(column_sum_norm(Matrix(lhs - rhs)) < 1e-12);
        }
}

TEST_CASE("ml_jordan_block closed forms") {
    SUBCASE("1x1 block") {
        const Matrix b = ml_jordan_block(FractionalOrder(0.7), -1.2, 1);
        CHECK(b(0, 0) == doctest::Approx(ml_scalar(FractionalOrder(0.7), -1.2, 1.0)));
    }

    SUBCASE("classical 2x2 nilpotent") {
        const Matrix b = ml_jordan_block(FractionalOrder(1.0), 0.0, 2);
        CHECK(b(0, 0) == doctest::Approx(1.0));
        CHECK(b(0, 1) == doctest::Approx(1.0));
        CHECK(b(1, 0) == 0.0);
        CHECK(b(1, 1) == doctest::Approx(1.0));
    }

    SUBCASE("alpha = 0.5, size 3 finite sum") {
        const Matrix b = ml_jordan_block(FractionalOrder(0.5), 0.0, 3);
        Matrix expect(3, 3);
        expect << 1, 2, 2, 0, 1, 2, 0, 0, 1;
        CHECK(max_abs(Matrix(b - expect)) < 1e-14);
    }

    SUBCASE("cross-check against ml_matrix on a full Jordan block") {
        FractionalOrder order(0.7);
        const int n = 4;
        const double lambda = -0.5;
        Matrix j = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) j(i, i) = lambda;
        for (int i = 0; i + 1 < n; ++i) j(i, i + 1) = 1.0;
        const Matrix via_expm = ml_matrix(order, j, 1.0);
        const Matrix via_sum = ml_jordan_block(order, lambda, n);
        CHECK(column_sum_norm(Matrix(via_expm - via_sum)) < 1e-12);
    }
}

TEST_CASE("spectral projection") {
    SUBCASE("diagonal split") {
        const SpectralSplit s = spectral_projection(mat2(-1, 0, 0, 2), 1e-8);
        CHECK(max_abs(Matrix(s.stable_projection - mat2(1, 0, 0, 0))) < 1e-12);
        CHECK(s.stable_rate == doctest::Approx(1.0));
        CHECK(s.unstable_rate == doctest::Approx(2.0));
        CHECK(s.stable_rank == 1);
    }

    SUBCASE("all eigenvalues stable gives the identity") {
        const SpectralSplit s = spectral_projection(mat2(-1, 5, 0, -3), 1e-8);
        CHECK(max_abs(Matrix(s.stable_projection - Matrix::Identity(2, 2))) < 1e-12);
        CHECK(s.stable_rank == 2);
    }

    SUBCASE("triangular mixing") {
        const SpectralSplit s = spectral_projection(mat2(-1, 1, 0, 2), 1e-8);
        Matrix expect = mat2(1, -1.0 / 3.0, 0, 0);
        CHECK(max_abs(Matrix(s.stable_projection - expect)) < 1e-10);
        CHECK(s.stable_rate == doctest::Approx(1.0));
        CHECK(s.unstable_rate == doctest::Approx(2.0));
    }

    SUBCASE("idempotency and commutation on random hyperbolic matrices") {
        std::mt19937_64 rng(23);
        std::uniform_real_distribution<double> entry(-1.0, 1.0), rate(0.5, 2.0);
        for (int k = 0; k < 25; ++k) {
            const int n = 3 + static_cast<int>(rng() % 2);
            Matrix v(n, n);
            do {
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j) v(i, j) = entry(rng);
            } while (std::abs(v.determinant()) < 0.1);
            Matrix d = Matrix::Zero(n, n);
            int stable = 0;
            for (int i = 0; i < n; ++i) {
                const bool neg = (rng() % 2) == 0;
                d(i, i) = neg ? -rate(rng) : rate(rng);
                stable += neg ? 1 : 0;
            }
            const Matrix a = v * d * v.inverse();
            const SpectralSplit s = spectral_projection(a, 1e-6);
            const Matrix& p = s.stable_projection;
            CHECK(column_sum_norm(Matrix(p * p - p)) < 1e-10);
            CHECK(column_sum_norm(Matrix(a * p - p * a)) < 1e-9);
            CHECK(s.stable_rank == stable);
            CHECK(std::lround(p.trace()) == stable);
        }
    }

    SUBCASE("non-hyperbolic spectrum is rejected") {
        CHECK_THROWS_AS(spectral_projection(mat2(0, 1, -1, 0), 1e-8), NonHyperbolicError);
        CHECK_THROWS_AS(spectral_projection(mat2(1e-12, 0, 0, -1), 1e-8),
                        NonHyperbolicError);
    }
}

TEST_CASE("negative spectrum decay certificate") {
    FractionalOrder order(0.5);
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(0.25 * i);

    SUBCASE("diagonal: K = 1 at zero margin") {
        const DecayCertificate c =
            negative_spectrum_bound(order, mat2(-1, 0, 0, -3), grid, 0.0);
        CHECK(c.lambda == doctest::Approx(1.0));
        CHECK(c.K == doctest::Approx(1.0));
    }

    SUBCASE("scaled identity") {
        const DecayCertificate c =
            negative_spectrum_bound(order, Matrix(-Matrix::Identity(2, 2)), grid, 0.0);
        CHECK(c.lambda == doctest::Approx(1.0));
        CHECK(c.K == doctest::Approx(1.0));
    }

    SUBCASE("defective transient growth inflates K") {
        const DecayCertificate c =
            negative_spectrum_bound(order, mat2(-1, 10, 0, -1), grid);
        CHECK(c.lambda == doctest::Approx(1.0 - 1e-6));
        CHECK(c.K > 1.0);
        // certificate holds on the grid
        for (double t : grid) {
            const double norm = column_sum_norm(ml_matrix(order, mat2(-1, 10, 0, -1), t));
            CHECK(norm <= c.K * ml_scalar(order, -c.lambda, t) * (1.0 + 1e-12));
        }
    }

    SUBCASE("unstable eigenvalue is rejected") {
        CHECK_THROWS_AS(negative_spectrum_bound(order, mat2(-1, 0, 0, 0.5), grid),
                        PreconditionError);
    }
}

#pragma once

#include <span>
#include <vector>

#include "cfd/solver.hpp"

namespace cfd {

/// One verified (t, s) pair: measured operator norm, its claimed bound and the
/// multiplicative slack bound/value (>= 1 means the bound holds).
struct PairSample {
    double t;
    double s;
    double value;
    double bound;
    double slack;
};

enum class Side { stable, unstable };

/// Scans every admissible pair of the two grids (t >= s on the stable side,
/// s >= t on the unstable side) and evaluates
///   value = ||X(t) * projector * X^{-1}(s)||,
///   bound = N * E(beta, s)/E(beta, t) * E(eps, s)      (stable side)
///           N * E(beta, t)/E(beta, s) * E(eps, s)      (unstable side).
/// The pair loop runs under OpenMP; every sample is computed independently,
/// so the output is identical to the serial reference for any thread count.
std::vector<PairSample> scan_pairs(const FundamentalMatrix& X, const Matrix& projector,
                                   Side side, double N, double beta, double eps,
                                   std::span<const double> t_grid,
                                   std::span<const double> s_grid);

/// Serial reference implementation of scan_pairs, kept for testing and
/// benchmarking against the parallel kernel.
std::vector<PairSample> scan_pairs_serial(const FundamentalMatrix& X,
                                          const Matrix& projector, Side side, double N,
                                          double beta, double eps,
                                          std::span<const double> t_grid,
                                          std::span<const double> s_grid);

struct SideFit {
    double N = 0.0;
    double beta = 0.0;
    bool vacuous = false;  ///< every sample had value zero (nothing to bound)
};

/// Log-linear least squares of log(value) - eps*u(s) against the elapsed
/// clock |u(t) - u(s)|, followed by sup-inflation of N so the fitted bound
/// covers every sample. Zero-valued samples are excluded.
SideFit fit_side(const FractionalOrder& order, const std::vector<PairSample>& samples,
                 Side side, double eps);

}  // namespace cfd

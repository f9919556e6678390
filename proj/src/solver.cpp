#include "cfd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/numeric/odeint.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cfd {

namespace {

using State = std::vector<double>;

constexpr double kTiny = 1e-300;

/// Integrates dx/du = rhs(t(u), x) through the given strictly monotone list of
/// u values and returns the state at each of them (including the first).
std::vector<Vector> integrate_transformed(const FractionalOrder& order,
                                          const std::function<Vector(double, const Vector&)>& rhs,
                                          const Vector& x0,
                                          const std::vector<double>& u_nodes,
                                          double rk_tol) {
    namespace ode = boost::numeric::odeint;
    const int n = static_cast<int>(x0.size());

    auto system = [&](const State& x, State& dxdu, double u) {
        const double t = order.inverse_transform(u);
        Eigen::Map<const Vector> xm(x.data(), n);
        Vector d = rhs(t, xm);
        dxdu.resize(static_cast<std::size_t>(n));
        Eigen::Map<Vector>(dxdu.data(), n) = d;
    };

    std::vector<Vector> out;
    out.reserve(u_nodes.size());
    State state(x0.data(), x0.data() + n);
    auto observer = [&](const State& x, double) {
        out.emplace_back(Eigen::Map<const Vector>(x.data(), n));
    };

    const double span = u_nodes.back() - u_nodes.front();
    if (span == 0.0) {
        for (std::size_t i = 0; i < u_nodes.size(); ++i) observer(state, u_nodes[i]);
        return out;
    }
    const double dt0 = span / 100.0;
    auto stepper = ode::make_controlled(rk_tol, rk_tol, ode::runge_kutta_dopri5<State>());
    try {
        ode::integrate_times(stepper, system, state, u_nodes.begin(), u_nodes.end(),
                             dt0, observer);
    } catch (const std::overflow_error&) {
        throw ConvergenceError("ivp integration: step size underflow (stiffness or blow-up)");
    }
    for (const Vector& v : out)
        if (!v.allFinite())
            throw ConvergenceError("ivp integration: non-finite state reached");
    return out;
}

std::vector<double> linspace(double a, double b, int count) {
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = a + (b - a) * static_cast<double>(i) / (count - 1);
    out.front() = a;
    out.back() = b;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// picard_solve
// ---------------------------------------------------------------------------

Trajectory picard_solve(const IVP& ivp, double tol, int max_iter, int grid_points) {
    if (!ivp.box || !ivp.lipschitz_L)
        throw PreconditionError("picard_solve: box and Lipschitz constant are required");
    if (ivp.t0 == 0.0)
        throw PreconditionError(
            "picard_solve: the step bound degenerates at t0 = 0; use ivp_solve");
    if (grid_points < 4) throw PreconditionError("picard_solve: grid_points must be >= 4");

    if (ivp.t0 < 0.0) {
        IVP reflected = ivp;
        reflected.t0 = -ivp.t0;
        auto f = ivp.rhs;
        reflected.rhs = [f](double t, const Vector& x) { return Vector(-f(-t, x)); };
        Trajectory r = picard_solve(reflected, tol, max_iter, grid_points);
        Trajectory out;
        out.realized_step = r.realized_step;
        out.iterations = r.iterations;
        for (std::size_t i = r.times.size(); i-- > 0;) {
            out.times.push_back(-r.times[i]);
            out.states.push_back(r.states[i]);
        }
        return out;
    }

    const auto [a, b] = *ivp.box;
    const double L = *ivp.lipschitz_L;
    if (!(a > 0.0) || !(b > 0.0) || !(L > 0.0))
        throw PreconditionError("picard_solve: box and Lipschitz constant must be positive");
    const int n = static_cast<int>(ivp.x0.size());

    // Estimate M = max ||f|| over the box by deterministic sampling.
    double m_est = 0.0;
    const double t_lo = std::max(ivp.t0 - a, 0.0);
    const double t_hi = ivp.t0 + a;
    std::uint64_t lcg = 0x9e3779b97f4a7c15ull;
    std::vector<Vector> probes;
    probes.push_back(Vector::Zero(n));
    for (int i = 0; i < n; ++i) {
        Vector e = Vector::Zero(n);
        e[i] = b;
        probes.push_back(e);
        probes.push_back(-e);
    }
    for (int k = 0; k < 16; ++k) {
        Vector d(n);
        for (int i = 0; i < n; ++i) {
            lcg = lcg * 6364136223846793005ull + 1442695040888963407ull;
            d[i] = static_cast<double>(static_cast<std::int64_t>(lcg >> 11)) / 4.6e18;
        }
        const double norm = l1_norm(d);
        if (norm > 0.0) probes.push_back(Vector(d * (b / norm)));
    }
    for (int it = 0; it <= 16; ++it) {
        const double t = t_lo + (t_hi - t_lo) * it / 16.0;
        for (const Vector& p : probes)
            m_est = std::max(m_est, l1_norm(ivp.rhs(t, Vector(ivp.x0 + p))));
    }
    if (!(m_est > 0.0)) {
        // f vanishes on the sample set; the solution is (numerically) constant.
        m_est = kTiny;
    }
    if (m_est > kTiny && !(b < m_est / L))
        throw PreconditionError("picard_solve: convergence condition b < M/L violated");

    const double alpha = ivp.order.value();
    const double delta =
        std::min(a, (b / std::max(m_est, kTiny)) * std::pow(ivp.t0, 1.0 - alpha));

    const double u0 = ivp.order.transform(ivp.t0);
    const double u1 = ivp.order.transform(ivp.t0 + delta);
    std::vector<double> u_nodes = linspace(u0, u1, grid_points);
    std::vector<double> t_nodes(u_nodes.size());
    for (std::size_t i = 0; i < u_nodes.size(); ++i)
        t_nodes[i] = ivp.order.inverse_transform(u_nodes[i]);
    t_nodes.front() = ivp.t0;
    t_nodes.back() = ivp.t0 + delta;
    const double h = (u1 - u0) / (grid_points - 1);

    std::vector<Vector> phi(u_nodes.size(), ivp.x0);
    int iterations = 0;
    for (; iterations < max_iter;) {
        ++iterations;
        std::vector<Vector> g(u_nodes.size());
        for (std::size_t i = 0; i < u_nodes.size(); ++i) g[i] = ivp.rhs(t_nodes[i], phi[i]);
        std::vector<Vector> prefix = quad::cumulative_integral(h, g);
        double change = 0.0;
        for (std::size_t i = 0; i < u_nodes.size(); ++i) {
            Vector next = ivp.x0 + prefix[i];
            change = std::max(change, l1_norm(Vector(next - phi[i])));
            if (l1_norm(prefix[i]) > b * (1.0 + 1e-12))
                throw ConvergenceError("picard_solve: iterates escaped the box");
            phi[i] = std::move(next);
        }
        if (change < tol) break;
        if (iterations == max_iter)
            throw ConvergenceError("picard_solve: max_iter reached without convergence");
    }

    Trajectory out;
    out.times = std::move(t_nodes);
    out.states = std::move(phi);
    out.realized_step = delta;
    out.iterations = iterations;
    return out;
}

// ---------------------------------------------------------------------------
// ivp_solve
// ---------------------------------------------------------------------------

Trajectory ivp_solve(const IVP& ivp, double t_end, double rk_tol, int output_points) {
    if (output_points < 2) throw PreconditionError("ivp_solve: output_points must be >= 2");
    Trajectory out;
    if (t_end == ivp.t0) {
        out.times = {ivp.t0};
        out.states = {ivp.x0};
        return out;
    }

    auto run_piece = [&](double ta, double tb, const Vector& xa, int pts,
                         bool include_first) {
        const double ua = ivp.order.transform(ta);
        const double ub = ivp.order.transform(tb);
        std::vector<double> u_nodes = linspace(ua, ub, pts);
        std::vector<Vector> states =
            integrate_transformed(ivp.order, ivp.rhs, xa, u_nodes, rk_tol);
        for (std::size_t i = include_first ? 0 : 1; i < u_nodes.size(); ++i) {
            double t = ivp.order.inverse_transform(u_nodes[i]);
            if (i == 0) t = ta;
            if (i + 1 == u_nodes.size()) t = tb;
            out.times.push_back(t);
            out.states.push_back(states[i]);
        }
    };

    const bool crosses_zero = (ivp.t0 < 0.0 && t_end > 0.0) || (ivp.t0 > 0.0 && t_end < 0.0);
    if (crosses_zero) {
        // The time transform is not differentiable at 0: split and restart.
        const int first_pts = std::max(2, output_points / 2);
        run_piece(ivp.t0, 0.0, ivp.x0, first_pts, true);
        run_piece(0.0, t_end, out.states.back(), output_points - first_pts + 1, false);
    } else {
        run_piece(ivp.t0, t_end, ivp.x0, output_points, true);
    }
    return out;
}

// ---------------------------------------------------------------------------
// FundamentalMatrix
// ---------------------------------------------------------------------------

void FundamentalMatrix::finalize() {
    const std::size_t m = times_.size();
    lu_.reserve(m);
    dets_.reserve(m);
    cond_ = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        lu_.emplace_back(values_[i]);
        const double det = lu_.back().determinant();
        if (!std::isfinite(det) || det == 0.0)
            throw ConvergenceError("FundamentalMatrix: singular node value");
        dets_.push_back(det);
        const double cond =
            column_sum_norm(values_[i]) * column_sum_norm(lu_.back().inverse());
        cond_ = std::max(cond_, cond);
    }
    uniform_u_ = true;
    if (m >= 3) {
        const double h = u_[1] - u_[0];
        for (std::size_t i = 1; i + 1 < m; ++i)
            if (std::abs((u_[i + 1] - u_[i]) - h) > 1e-9 * std::max(1.0, std::abs(h)))
                uniform_u_ = false;
    }
}

FundamentalMatrix FundamentalMatrix::from_samples(
    const FractionalOrder& order, std::vector<double> times, std::vector<Matrix> values,
    const std::function<Matrix(double)>& A_of_t) {
    if (times.size() < 2 || times.size() != values.size())
        throw PreconditionError("FundamentalMatrix: need matching times/values, >= 2 nodes");
    for (std::size_t i = 1; i < times.size(); ++i)
        if (!(times[i] > times[i - 1]))
            throw PreconditionError("FundamentalMatrix: times must be strictly increasing");

    FundamentalMatrix x(order);
    x.dim_ = static_cast<int>(values.front().rows());
    x.times_ = std::move(times);
    x.values_ = std::move(values);
    x.u_.reserve(x.times_.size());
    for (double t : x.times_) x.u_.push_back(order.transform(t));
    x.slopes_.reserve(x.times_.size());
    for (std::size_t i = 0; i < x.times_.size(); ++i)
        x.slopes_.emplace_back(A_of_t(x.times_[i]) * x.values_[i]);
    x.finalize();
    return x;
}

std::size_t FundamentalMatrix::locate(double u) const {
    auto it = std::upper_bound(u_.begin(), u_.end(), u);
    std::size_t i = static_cast<std::size_t>(std::distance(u_.begin(), it));
    if (i == 0) return 0;
    if (i >= u_.size()) return u_.size() - 2;
    return i - 1;
}

Matrix FundamentalMatrix::value(double t) const {
    if (!covers(t)) throw DomainError("FundamentalMatrix: time outside grid coverage");
    const double u = order_.transform(t);
    const std::size_t i = locate(u);
    const double h = u_[i + 1] - u_[i];
    const double theta = (u - u_[i]) / h;
    if (theta == 0.0) return values_[i];
    if (theta == 1.0) return values_[i + 1];
    const double t2 = theta * theta, t3 = t2 * theta;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + theta;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * values_[i] + (h * h10) * slopes_[i] + h01 * values_[i + 1] +
           (h * h11) * slopes_[i + 1];
}

namespace {
inline bool near_node(double node, double u) {
    return node == u || std::abs(node - u) <= 1e-14 * (1.0 + std::abs(u));
}
}  // namespace

Matrix FundamentalMatrix::solve(double s, const Matrix& b) const {
    const double u = order_.transform(s);
    const std::size_t i = locate(u);
    if (near_node(u_[i], u)) return lu_[i].solve(b);
    if (i + 1 < u_.size() && near_node(u_[i + 1], u)) return lu_[i + 1].solve(b);
    return Eigen::PartialPivLU<Matrix>(value(s)).solve(b);
}

Vector FundamentalMatrix::solve(double s, const Vector& b) const {
    const double u = order_.transform(s);
    const std::size_t i = locate(u);
    if (near_node(u_[i], u)) return lu_[i].solve(b);
    if (i + 1 < u_.size() && near_node(u_[i + 1], u)) return lu_[i + 1].solve(b);
    return Eigen::PartialPivLU<Matrix>(value(s)).solve(b);
}

FundamentalMatrix fundamental_matrix(const FractionalOrder& order,
                                     const TimeMatrixFunction& A,
                                     std::span<const double> grid, double rk_tol,
                                     const FundamentalOptions& options) {
    if (grid.size() < 2)
        throw PreconditionError("fundamental_matrix: grid needs at least two nodes");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw PreconditionError("fundamental_matrix: grid must be strictly increasing");
    if (grid.front() < 0.0 && grid.back() > 0.0)
        throw PreconditionError("fundamental_matrix: grid crosses t = 0; split there");
    if (grid.front() < A.lo() || grid.back() > A.hi())
        throw DomainError("fundamental_matrix: grid outside the domain of A");

    const int n = A.dim();
    FundamentalMatrix x(order);
    x.dim_ = n;
    x.times_.assign(grid.begin(), grid.end());
    x.u_.reserve(grid.size());
    for (double t : grid) x.u_.push_back(order.transform(t));

    auto rhs = [&A](double t, const Vector& v) { return Vector(A(t) * v); };

    std::vector<std::vector<Vector>> columns(static_cast<std::size_t>(n));
    std::string error;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (options.parallel)
#endif
    for (int j = 0; j < n; ++j) {
        try {
            Vector e = Vector::Zero(n);
            e[j] = 1.0;
            columns[static_cast<std::size_t>(j)] =
                integrate_transformed(order, rhs, e, x.u_, rk_tol);
        } catch (const std::exception& ex) {
#ifdef _OPENMP
#pragma omp critical
#endif
            error = ex.what();
        }
    }
    if (!error.empty()) throw ConvergenceError("fundamental_matrix: " + error);

    x.values_.reserve(grid.size());
    x.slopes_.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Matrix m(n, n);
        for (int j = 0; j < n; ++j) m.col(j) = columns[static_cast<std::size_t>(j)][i];
        x.values_.push_back(m);
        x.slopes_.emplace_back(A(x.times_[i]) * m);
    }
    x.finalize();

    // Determinant control: det X(t) = det X(t0) exp(I^alpha_{t0} tr A).
    const QuadratureConfig tight{1e-12, 1e-14, 40};
    double log_pred = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        auto trace = [&](double u) { return A(order.inverse_transform(u)).trace(); };
        log_pred += quad::integrate(trace, x.u_[i - 1], x.u_[i], tight);
        const double actual = x.node_determinant(i);
        if (actual * x.node_determinant(0) <= 0.0)
            throw ConvergenceError("fundamental_matrix: determinant changed sign");
        const double rel =
            std::abs(std::log(std::abs(actual) / std::abs(x.node_determinant(0))) - log_pred);
        if (rel > options.liouville_tol * std::max(1.0, std::abs(log_pred)) + options.liouville_tol)
            throw ConvergenceError(
                "fundamental_matrix: determinant drifted from the Liouville value");
    }
    return x;
}

Matrix evolution(const FundamentalMatrix& X, double t, double s) {
    if (!X.covers(t) || !X.covers(s))
        throw DomainError("evolution: time outside grid coverage");
    const Matrix inv_s = X.solve(s, Matrix(Matrix::Identity(X.dim(), X.dim())));
    return X.value(t) * inv_s;
}

Vector variation_of_constants(const FundamentalMatrix& X,
                              const std::function<Vector(double)>& forcing, double t0,
                              const Vector& x0, double t, const QuadratureConfig& cfg) {
    if (!X.covers(t0) || !X.covers(t))
        throw DomainError("variation_of_constants: time outside grid coverage");
    const FractionalOrder& order = X.order();
    Vector base = X.solve(t0, x0);
    auto integrand = [&](double u) {
        const double s = order.inverse_transform(u);
        return Vector(X.solve(s, Vector(forcing(s))));
    };
    Vector integral =
        quad::integrate(integrand, order.transform(t0), order.transform(t), cfg);
    return X.value(t) * (base + integral);
}

LiouvilleCheck liouville_determinant(const FundamentalMatrix& X,
                                     const TimeMatrixFunction& A, double t,
                                     const QuadratureConfig& cfg) {
    if (!X.covers(t)) throw DomainError("liouville_determinant: time outside coverage");
    const FractionalOrder& order = X.order();
    auto trace = [&](double u) { return A(order.inverse_transform(u)).trace(); };
    const double integral =
        quad::integrate(trace, X.u_grid().front(), order.transform(t), cfg);
    LiouvilleCheck out;
    out.predicted = X.node_determinant(0) * std::exp(integral);
    out.actual = Eigen::PartialPivLU<Matrix>(X.value(t)).determinant();
    return out;
}

std::vector<double> time_grid(const FractionalOrder& order, double t_min, double t_max,
                              int count, GridSpacing spacing) {
    if (count < 2) throw PreconditionError("time_grid: count must be >= 2");
    if (!(t_max > t_min)) throw PreconditionError("time_grid: t_max must exceed t_min");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(count));
    switch (spacing) {
        case GridSpacing::uniform_time:
            return linspace(t_min, t_max, count);
        case GridSpacing::uniform_u: {
            std::vector<double> u = linspace(order.transform(t_min),
                                             order.transform(t_max), count);
            for (double v : u) out.push_back(order.inverse_transform(v));
            break;
        }
        case GridSpacing::geometric_u: {
            if (t_min < 0.0)
                throw PreconditionError("time_grid: geometric spacing needs t_min >= 0");
            const double u_hi = order.transform(t_max);
            double u_lo = order.transform(t_min);
            bool lead_zero = false;
            if (u_lo <= 0.0) {
                lead_zero = true;
                u_lo = u_hi / 512.0;
            }
            const int pts = lead_zero ? count - 1 : count;
            if (lead_zero) out.push_back(0.0);
            for (int i = 0; i < pts; ++i) {
                const double w = static_cast<double>(i) / std::max(1, pts - 1);
                out.push_back(order.inverse_transform(u_lo * std::pow(u_hi / u_lo, w)));
            }
            break;
        }
    }
    out.front() = t_min;
    out.back() = t_max;
    return out;
}

}  // namespace cfd

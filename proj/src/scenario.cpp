#include "cfd/scenario.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <vector>

#include <json.hpp>

#include "cfd/expr.hpp"
#include "cfd/nonuniform.hpp"
#include "cfd/report.hpp"
#include "cfd/version.hpp"

namespace cfd {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Field access with diagnostics that name the missing/invalid field.
// ---------------------------------------------------------------------------

const json& require(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ValidationError("missing field: " + key);
    return j.at(key);
}

double require_number(const json& j, const std::string& key) {
    const json& v = require(j, key);
    if (!v.is_number()) throw ValidationError("invalid field (number expected): " + key);
    return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number())
        throw ValidationError("invalid field (number expected): " + key);
    return j.at(key).get<double>();
}

std::vector<double> require_vector(const json& j, const std::string& key) {
    const json& v = require(j, key);
    if (!v.is_array() || v.empty())
        throw ValidationError("invalid field (array expected): " + key);
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) throw ValidationError("invalid field (numbers expected): " + key);
        out.push_back(e.get<double>());
    }
    return out;
}

Matrix parse_matrix(const json& v, const std::string& key) {
    if (!v.is_array() || v.empty())
        throw ValidationError("invalid field (matrix expected): " + key);
    const std::size_t n = v.size();
    Matrix m(static_cast<int>(n), static_cast<int>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (!v[i].is_array() || v[i].size() != n)
            throw ValidationError("invalid field (square matrix expected): " + key);
        for (std::size_t k = 0; k < n; ++k) {
            if (!v[i][k].is_number())
                throw ValidationError("invalid field (numeric entries expected): " + key);
            m(static_cast<int>(i), static_cast<int>(k)) = v[i][k].get<double>();
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// System construction
// ---------------------------------------------------------------------------

struct SystemSpec {
    TimeMatrixFunction fn;
    std::optional<Matrix> constant;  // set when the system is autonomous
    Json echo;                       // resolved description for the report
};

SystemSpec build_system(const json& spec, const FractionalOrder& order,
                        const std::string& key) {
    if (!spec.is_object()) throw ValidationError("invalid field (object expected): " + key);

    if (spec.contains("matrix")) {
        Matrix a = parse_matrix(spec.at("matrix"), key + ".matrix");
        Json echo = Json::object();
        Json rows = Json::array();
        for (int i = 0; i < a.rows(); ++i) {
            Json row = Json::array();
            for (int k = 0; k < a.cols(); ++k) row.push_back(a(i, k));
            rows.push_back(std::move(row));
        }
        echo.set("matrix", std::move(rows));
        return {TimeMatrixFunction::constant(a), a, std::move(echo)};
    }

    if (spec.contains("exprs")) {
        const json& rows = spec.at("exprs");
        if (!rows.is_array() || rows.empty())
            throw ValidationError("invalid field (expression rows expected): " + key + ".exprs");
        const std::size_t n = rows.size();
        std::vector<std::vector<Expression>> entries;
        Json echo_rows = Json::array();
        for (std::size_t i = 0; i < n; ++i) {
            if (!rows[i].is_array() || rows[i].size() != n)
                throw ValidationError("invalid field (square expression matrix expected): " +
                                      key + ".exprs");
            std::vector<Expression> row;
            Json echo_row = Json::array();
            for (std::size_t k = 0; k < n; ++k) {
                if (!rows[i][k].is_string())
                    throw ValidationError("invalid field (string entries expected): " + key +
                                          ".exprs");
                const std::string src = rows[i][k].get<std::string>();
                try {
                    row.push_back(Expression::parse(src));
                } catch (const ParseError& e) {
                    throw ValidationError(key + ".exprs[" + std::to_string(i) + "][" +
                                          std::to_string(k) + "]: " + e.what());
                }
                if (row.back().uses_state())
                    throw ValidationError(key + ".exprs: state variables not allowed here");
                echo_row.push_back(src);
            }
            entries.push_back(std::move(row));
            echo_rows.push_back(std::move(echo_row));
        }
        const int dim = static_cast<int>(n);
        auto eval = [entries, dim](double t) {
            Matrix m(dim, dim);
            for (int i = 0; i < dim; ++i)
                for (int k = 0; k < dim; ++k)
                    m(i, k) = entries[static_cast<std::size_t>(i)]
                                     [static_cast<std::size_t>(k)].eval(t);
            return m;
        };
        Json echo = Json::object();
        echo.set("exprs", std::move(echo_rows));
        return {TimeMatrixFunction(eval, -1e18, 1e18, dim), std::nullopt, std::move(echo)};
    }

    if (spec.contains("builtin")) {
        const json& b = spec.at("builtin");
        const std::string name = require(b, "name").get<std::string>();
        if (name == "nonuniform_burst") {
            const double omega = require_number(b, "omega");
            const double amp = require_number(b, "amp");
            if (!(omega > amp) || !(amp >= 0.0))
                throw ValidationError("invalid field: builtin requires omega > amp >= 0");
            FractionalOrder ord = order;
            auto eval = [ord, omega, amp](double t) {
                const double u = ord.transform(t);
                Matrix m(1, 1);
                m(0, 0) = -omega - amp * (std::sin(u) + u * std::cos(u));
                return m;
            };
            Json echo = Json::object();
            echo.set("builtin", name);
            echo.set("omega", omega);
            echo.set("amp", amp);
            return {TimeMatrixFunction(eval, -1e18, 1e18, 1), std::nullopt, std::move(echo)};
        }
        throw ValidationError("invalid field: unknown builtin '" + name + "'");
    }

    throw ValidationError("missing field: " + key + ".matrix | .exprs | .builtin");
}

// ---------------------------------------------------------------------------
// Resolved run configuration
// ---------------------------------------------------------------------------

struct RunConfig {
    FractionalOrder order;
    std::vector<double> grid;
    std::string spacing;
    double horizon;
    double rk_tol, fp_tol;
    QuadratureConfig quad;
    std::uint64_t seed;
};

RunConfig resolve_config(const json& root, const ScenarioOverrides& overrides) {
    const double alpha = require_number(root, "alpha");
    FractionalOrder order(alpha);

    const json& grid = require(root, "grid");
    const double t_min = require_number(grid, "t_min");
    const double t_max = require_number(grid, "t_max");
    const int count = static_cast<int>(number_or(grid, "count", 33));
    std::string spacing = grid.contains("spacing") ? grid.at("spacing").get<std::string>()
                                                   : std::string("geometric-u");
    GridSpacing sp;
    if (spacing == "geometric-u") sp = GridSpacing::geometric_u;
    else if (spacing == "uniform-u") sp = GridSpacing::uniform_u;
    else if (spacing == "uniform-t") sp = GridSpacing::uniform_time;
    else throw ValidationError("invalid field: grid.spacing");

    RunConfig cfg{order,
                  time_grid(order, t_min, t_max, count, sp),
                  spacing,
                  number_or(root, "horizon", t_max),
                  number_or(root, "rk_tol", 1e-10),
                  number_or(root, "fp_tol", 1e-9),
                  QuadratureConfig{number_or(root, "quad_rel", 1e-10),
                                   number_or(root, "quad_abs", 1e-12), 40},
                  static_cast<std::uint64_t>(number_or(root, "seed", 0))};
    if (overrides.horizon) cfg.horizon = *overrides.horizon;
    if (overrides.tol) {
        cfg.rk_tol = *overrides.tol;
        cfg.fp_tol = *overrides.tol;
        cfg.quad.rel_tol = *overrides.tol;
    }
    if (overrides.seed) cfg.seed = *overrides.seed;
    return cfg;
}

Json echo_config(const RunConfig& cfg, const std::string& kind, const Json& system_echo) {
    Json c = Json::object();
    c.set("kind", kind);
    c.set("alpha", cfg.order.value());
    Json grid = Json::array();
    for (double t : cfg.grid) grid.push_back(t);
    c.set("grid", std::move(grid));
    c.set("grid_spacing", cfg.spacing);
    c.set("horizon", cfg.horizon);
    c.set("rk_tol", cfg.rk_tol);
    c.set("fp_tol", cfg.fp_tol);
    c.set("quad_rel", cfg.quad.rel_tol);
    c.set("quad_abs", cfg.quad.abs_tol);
    c.set("seed", cfg.seed);
    c.set("system", system_echo);
    return c;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

struct CsvTable {
    std::string name;
    std::vector<std::array<double, 5>> rows;  // t, s, value, bound, slack
};

std::string format_cell(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_outputs(const std::string& out_dir, const Json& report,
                   const std::vector<CsvTable>& tables) {
    fs::create_directories(fs::path(out_dir) / "tables");
    {
        std::ofstream f(fs::path(out_dir) / "report.json", std::ios::binary);
        f << report.dump();
    }
    for (const CsvTable& t : tables) {
        std::ofstream f(fs::path(out_dir) / "tables" / (t.name + ".csv"), std::ios::binary);
        f << "t,s,value,bound,slack\n";
        for (const auto& row : t.rows) {
            f << format_cell(row[0]) << ',' << format_cell(row[1]) << ','
              << format_cell(row[2]) << ',' << format_cell(row[3]) << ','
              << format_cell(row[4]) << '\n';
        }
    }
}

CsvTable side_table(const std::string& name, const SideReport& side) {
    CsvTable t{name, {}};
    for (const PairSample& p : side.samples)
        t.rows.push_back({p.t, p.s, p.value, p.bound, p.slack});
    return t;
}

Json side_json(const SideReport& side) {
    Json j = Json::object();
    j.set("vacuous", side.vacuous);
    j.set("min_slack", side.min_slack);
    j.set("argmin_t", side.argmin_t);
    j.set("argmin_s", side.argmin_s);
    j.set("verified", side.verified());
    return j;
}

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix projection_or_spectral(const json& root, const SystemSpec& system,
                              Json& results) {
    if (root.contains("projection"))
        return parse_matrix(root.at("projection"), "projection");
    if (!system.constant)
        throw ValidationError(
            "missing field: projection (required for time-dependent systems)");
    const SpectralSplit split = spectral_projection(*system.constant, 1e-9);
    Json sp = Json::object();
    sp.set("stable_rank", split.stable_rank);
    sp.set("stable_rate", split.stable_rate);
    sp.set("unstable_rate", split.unstable_rate);
    results.set("spectral_projection", std::move(sp));
    return split.stable_projection;
}

// ---------------------------------------------------------------------------
// Kind pipelines; each fills `results`, `tables` and returns `verified`.
// ---------------------------------------------------------------------------

bool run_solve(const json& root, const RunConfig& cfg, const SystemSpec& system,
               Json& results, std::vector<CsvTable>& tables) {
    std::vector<double> x0v = require_vector(root, "x0");
    const double t0 = number_or(root, "t0", cfg.grid.front());
    Vector x0 = Eigen::Map<Vector>(x0v.data(), static_cast<int>(x0v.size()));
    if (static_cast<int>(x0v.size()) != system.fn.dim())
        throw ValidationError("invalid field: x0 dimension mismatch");

    IVP ivp{cfg.order, [&system](double t, const Vector& x) { return Vector(system.fn(t) * x); },
            t0, x0, std::nullopt, std::nullopt};
    Trajectory traj =
        ivp_solve(ivp, cfg.horizon, cfg.rk_tol, static_cast<int>(cfg.grid.size()));

    const bool have_l = root.contains("lipschitz");
    const double L = have_l ? require_number(root, "lipschitz") : 0.0;

    CsvTable table{"trajectory", {}};
    bool verified = true;
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const double value = l1_norm(traj.states[i]);
        double bound = std::numeric_limits<double>::quiet_NaN();
        double slack = std::numeric_limits<double>::quiet_NaN();
        if (have_l) {
            bound = l1_norm(x0) * ml_scalar(cfg.order, L, std::abs(t)) *
                    ml_scalar(cfg.order, L, std::abs(t0));
            slack = value == 0.0 ? std::numeric_limits<double>::infinity() : bound / value;
            verified = verified && slack >= 1.0 - kSlackFpGuard;
        }
        table.rows.push_back({t, t0, value, bound, slack});
    }
    tables.push_back(std::move(table));

    Json final_state = Json::array();
    for (int i = 0; i < traj.states.back().size(); ++i)
        final_state.push_back(traj.states.back()[i]);
    results.set("t_end", traj.times.back());
    results.set("final_state", std::move(final_state));
    results.set("final_norm", l1_norm(traj.states.back()));
    if (have_l) results.set("growth_bound_verified", verified);
    return verified;
}

bool run_ml(const RunConfig& cfg, const SystemSpec& system, Json& results,
            std::vector<CsvTable>& tables) {
    if (!system.constant)
        throw ValidationError("invalid field: ml requires system.matrix (constant)");
    const Matrix& a = *system.constant;
    const double a_norm = column_sum_norm(a);

    CsvTable table{"ml_norms", {}};
    bool verified = true;
    for (double t : cfg.grid) {
        const double value = column_sum_norm(ml_matrix(cfg.order, a, t));
        const double bound = ml_scalar(cfg.order, a_norm, std::abs(t));
        const double slack = value == 0.0 ? std::numeric_limits<double>::infinity()
                                          : bound / value;
        verified = verified && slack >= 1.0 - kSlackFpGuard;
        table.rows.push_back({t, 0.0, value, bound, slack});
    }
    tables.push_back(std::move(table));
    results.set("matrix_norm", a_norm);
    results.set("series_bound_verified", verified);
    return verified;
}

bool run_dichotomy(const json& root, const RunConfig& cfg, const SystemSpec& system,
                   bool estimate, Json& results, std::vector<CsvTable>& tables) {
    FundamentalMatrix x =
        fundamental_matrix(cfg.order, system.fn, cfg.grid, cfg.rk_tol);

    DichotomyEstimate est;
    if (estimate) {
        est = estimate_dichotomy(x, projection_or_spectral(root, system, results),
                                 cfg.grid, cfg.grid);
    } else {
        est.P = parse_matrix(require(root, "projection"), "projection");
        const json& c = require(root, "constants");
        est.N1 = require_number(c, "N1");
        est.N2 = require_number(c, "N2");
        est.beta1 = require_number(c, "beta1");
        est.beta2 = require_number(c, "beta2");
    }

    VerifyReport rep = verify_dichotomy(x, est, cfg.grid, cfg.grid);
    results.set("projection", matrix_json(est.P));
    results.set("N1", est.N1);
    results.set("N2", est.N2);
    results.set("beta1", est.beta1);
    results.set("beta2", est.beta2);
    results.set("stable", side_json(rep.stable));
    results.set("unstable", side_json(rep.unstable));
    results.set("cond_report", x.cond_report());
    tables.push_back(side_table("stable", rep.stable));
    tables.push_back(side_table("unstable", rep.unstable));
    return rep.verified();
}

bool run_roughness(const json& root, const RunConfig& cfg, const SystemSpec& system,
                   Json& results, std::vector<CsvTable>& tables) {
    if (std::abs(cfg.grid.front()) > 1e-12)
        throw ValidationError("invalid field: grid.t_min must be 0 for roughness");
    const json& pert_spec = require(root, "perturbation");
    SystemSpec pert_system = build_system(pert_spec, cfg.order, "perturbation");
    const double eps = require_number(pert_spec, "eps");

    // Constants for the unperturbed dichotomy: given or estimated.
    FundamentalMatrix x_report =
        fundamental_matrix(cfg.order, system.fn, cfg.grid, cfg.rk_tol);
    DichotomyEstimate est;
    if (root.contains("constants")) {
        const json& c = root.at("constants");
        est.P = projection_or_spectral(root, system, results);
        est.N1 = require_number(c, "N1");
        est.N2 = require_number(c, "N2");
        est.beta1 = require_number(c, "beta1");
        est.beta2 = require_number(c, "beta2");
    } else {
        est = estimate_dichotomy(x_report, projection_or_spectral(root, system, results),
                                 cfg.grid, cfg.grid);
    }

    const RoughnessConstants rc =
        roughness_constants(est.N1, est.N2, est.beta1, est.beta2, eps);
    Json constants = Json::object();
    constants.set("N", rc.N);
    constants.set("beta", rc.beta);
    constants.set("theta", rc.theta);
    constants.set("eta", rc.eta);
    constants.set("admissible", rc.admissible);
    constants.set("K_new", rc.K_new);
    constants.set("lambda_new", rc.lambda_new);
    constants.set("proj_distance_bound", rc.proj_distance_bound);
    results.set("roughness_constants", std::move(constants));
    if (!rc.admissible) {
        results.set("verified", false);
        return false;
    }

    // Work coverage for the fixed point.
    const double t_work = std::max(
        required_work_horizon(cfg.order, est, eps, cfg.horizon, cfg.fp_tol),
        cfg.grid.back());
    const int work_nodes = std::max<int>(513, static_cast<int>(cfg.grid.size()) * 4);
    std::vector<double> work_grid =
        time_grid(cfg.order, 0.0, t_work, work_nodes, GridSpacing::uniform_u);
    FundamentalMatrix x_work =
        fundamental_matrix(cfg.order, system.fn, work_grid, cfg.rk_tol);

    PerturbationSpec pert{pert_system.fn, eps};
    PerturbedProjection pp =
        perturbed_projection(x_work, est, pert, cfg.horizon, cfg.fp_tol);
    results.set("Q", matrix_json(pp.Q));
    results.set("Q_rank", pp.rank);
    Json fp = Json::object();
    fp.set("iterations", pp.fp.iterations);
    fp.set("residual", pp.fp.residual);
    fp.set("theta", pp.fp.theta);
    fp.set("tail_bound", pp.fp.tail_bound);
    results.set("fixed_point", std::move(fp));

    // Perturbed fundamental matrix and dichotomy verification.
    auto perturbed_fn = [&system, &pert_system](double t) {
        return Matrix(system.fn(t) + pert_system.fn(t));
    };
    TimeMatrixFunction ab(perturbed_fn, -1e18, 1e18, system.fn.dim());
    FundamentalMatrix y = fundamental_matrix(cfg.order, ab, cfg.grid, cfg.rk_tol);
    VerifyReport rep = verify_roughness(y, pp.Q, rc.K_new, rc.lambda_new, rc.K_new,
                                        rc.lambda_new, cfg.grid, cfg.grid);
    results.set("stable", side_json(rep.stable));
    results.set("unstable", side_json(rep.unstable));
    tables.push_back(side_table("stable", rep.stable));
    tables.push_back(side_table("unstable", rep.unstable));

    // Projection distance along the grid.
    CsvTable dist{"projection_distance", {}};
    bool dist_ok = true;
    const Matrix eye = Matrix::Identity(system.fn.dim(), system.fn.dim());
    for (double t : cfg.grid) {
        const Matrix qd = y.value(t) * pp.Q * y.solve(t, eye);
        const Matrix pd = x_report.value(t) * est.P * x_report.solve(t, eye);
        const double value = column_sum_norm(Matrix(qd - pd));
        const double slack = value == 0.0 ? std::numeric_limits<double>::infinity()
                                          : rc.proj_distance_bound / value;
        dist_ok = dist_ok && slack >= 1.0 - kSlackFpGuard;
        dist.rows.push_back({t, t, value, rc.proj_distance_bound, slack});
    }
    tables.push_back(std::move(dist));
    results.set("projection_distance_verified", dist_ok);

    return rep.verified() && dist_ok;
}

bool run_manifold(const json& root, const RunConfig& cfg, const SystemSpec& system,
                  Json& results, std::vector<CsvTable>& tables) {
    const json& nl = require(root, "nonlinearity");
    const json& rows = require(nl, "exprs");
    if (!rows.is_array() || static_cast<int>(rows.size()) != system.fn.dim())
        throw ValidationError("invalid field: nonlinearity.exprs dimension mismatch");
    std::vector<Expression> f_exprs;
    for (const auto& r : rows) {
        if (!r.is_string())
            throw ValidationError("invalid field: nonlinearity.exprs entries must be strings");
        f_exprs.push_back(Expression::parse(r.get<std::string>()));
    }
    const double zeta_coef = require_number(nl, "zeta_coef");
    const double delta = require_number(root, "delta");
    std::vector<double> x0v = require_vector(root, "x0_stable");
    if (static_cast<int>(x0v.size()) != system.fn.dim())
        throw ValidationError("invalid field: x0_stable dimension mismatch");
    Vector x0 = Eigen::Map<Vector>(x0v.data(), static_cast<int>(x0v.size()));
    const double t0 = number_or(root, "t0", 0.0);

    std::vector<double> ladder{1.0, 0.5, 0.25, 0.125, 0.0625};
    if (root.contains("ladder")) ladder = require_vector(root, "ladder");

    FundamentalMatrix x_report =
        fundamental_matrix(cfg.order, system.fn, cfg.grid, cfg.rk_tol);
    DichotomyEstimate est =
        estimate_dichotomy(x_report, projection_or_spectral(root, system, results),
                           cfg.grid, cfg.grid);
    const double lambda = number_or(root, "lambda", est.beta1);

    auto f = [&f_exprs](double t, const Vector& x) {
        Vector out(x.size());
        std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
        for (int i = 0; i < x.size(); ++i)
            out[i] = f_exprs[static_cast<std::size_t>(i)].eval(t, xs);
        return out;
    };
    auto zeta = [zeta_coef](double sigma) { return zeta_coef * sigma; };

    // Working coverage with the manifold tail bound.
    DichotomyEstimate tail_est = est;
    const double t_work = std::max(
        required_work_horizon(cfg.order, tail_est, zeta(delta), cfg.horizon, cfg.fp_tol),
        cfg.grid.back());
    std::vector<double> work_grid = time_grid(
        cfg.order, t0, t_work, std::max<int>(513, static_cast<int>(cfg.grid.size()) * 4),
        GridSpacing::uniform_u);
    FundamentalMatrix x_work =
        fundamental_matrix(cfg.order, system.fn, work_grid, cfg.rk_tol);

    CsvTable tangency{"tangency", {}};
    CsvTable decay{"decay", {}};
    Json points = Json::array();
    bool verified = true;
    double prev_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        const Vector scaled = x0 * ladder[k];
        ManifoldPoint mp = invariant_manifold(x_work, est, f, zeta, delta, t0, scaled,
                                              lambda, cfg.horizon, cfg.fp_tol);
        const double p_norm = l1_norm(Vector(est.P * scaled));
        const double slack = mp.tangency_ratio == 0.0
                                 ? std::numeric_limits<double>::infinity()
                                 : mp.tangency_bound / mp.tangency_ratio;
        verified = verified && slack >= 1.0 - kSlackFpGuard;
        verified = verified && mp.decay_slack_min >= 1.0 - kSlackFpGuard;
        if (mp.tangency_ratio > prev_ratio * (1.0 + 1e-9)) verified = false;
        prev_ratio = mp.tangency_ratio;
        tangency.rows.push_back({p_norm, 0.0, mp.tangency_ratio, mp.tangency_bound, slack});
        if (k == 0) {
            for (std::size_t i = 0; i < mp.trajectory.t.size(); ++i) {
                const double norm = l1_norm(mp.trajectory.values[i]);
                const double bound = mp.decay_M *
                                     std::exp(-mp.gamma1 * (mp.trajectory.u[i] -
                                                            mp.trajectory.u.front())) *
                                     l1_norm(mp.h);
                decay.rows.push_back({mp.trajectory.t[i], t0, norm, bound,
                                      norm == 0.0 ? std::numeric_limits<double>::infinity()
                                                  : bound / norm});
            }
        }
        Json pj = Json::object();
        pj.set("p_norm", p_norm);
        pj.set("tangency_ratio", mp.tangency_ratio);
        pj.set("tangency_bound", mp.tangency_bound);
        pj.set("decay_slack_min", mp.decay_slack_min);
        pj.set("gamma1", mp.gamma1);
        pj.set("iterations", mp.fp.iterations);
        points.push_back(std::move(pj));
    }
    tables.push_back(std::move(tangency));
    tables.push_back(std::move(decay));
    results.set("N1", est.N1);
    results.set("N2", est.N2);
    results.set("beta1", est.beta1);
    results.set("beta2", est.beta2);
    results.set("lambda", lambda);
    results.set("ladder", std::move(points));
    return verified;
}

bool run_nonuniform(const json& root, const RunConfig& cfg, const SystemSpec& system,
                    Json& results, std::vector<CsvTable>& tables) {
    FundamentalMatrix x =
        fundamental_matrix(cfg.order, system.fn, cfg.grid, cfg.rk_tol);

    Matrix p0 = projection_or_spectral(root, system, results);
    // Propagated family: commutation holds by construction.
    auto family = [&x, p0](double t) {
        const Matrix eye = Matrix::Identity(p0.rows(), p0.cols());
        return Matrix(x.value(t) * p0 * x.solve(t, eye));
    };

    std::vector<double> candidates{0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    if (root.contains("eps_candidates")) candidates = require_vector(root, "eps_candidates");
    const double n_cap = number_or(root, "n_cap", 1e3);

    NonuniformDichotomy est =
        estimate_nonuniform(x, family, cfg.grid, cfg.grid, candidates, n_cap);
    VerifyReport rep = verify_nonuniform(x, est, cfg.grid, cfg.grid);

    results.set("eps", est.eps);
    results.set("N1_hat", est.N1_hat);
    results.set("N2_hat", est.N2_hat);
    results.set("beta1_hat", est.beta1_hat);
    results.set("beta2_hat", est.beta2_hat);
    results.set("stable", side_json(rep.stable));
    results.set("unstable", side_json(rep.unstable));
    tables.push_back(side_table("stable", rep.stable));
    tables.push_back(side_table("unstable", rep.unstable));

    if (root.contains("delta")) {
        const double delta = require_number(root, "delta");
        Json derived = Json::object();
        try {
            const ProjectedConstants pc = nonuniform_dichotomy_constants(
                est.N1_hat, est.N2_hat, est.beta1_hat, est.beta2_hat, delta, est.eps);
            derived.set("theta", pc.theta);
            derived.set("K1", pc.K1);
            derived.set("K2", pc.K2);
            derived.set("lambda1", pc.lambda1);
            derived.set("lambda2", pc.lambda2);
        } catch (const PreconditionError& e) {
            derived.set("error", std::string(e.what()));
        }
        results.set("perturbed_constants", std::move(derived));
    }
    return rep.verified();
}

}  // namespace

int run_scenario(const std::string& path, const std::string& out_dir,
                 const ScenarioOverrides& overrides) {
    json root;
    try {
        std::ifstream f(path);
        if (!f) throw ValidationError("cannot open scenario file: " + path);
        root = json::parse(f);
    } catch (const json::parse_error& e) {
        std::cerr << "scenario parse error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "scenario validation error: " << e.what() << "\n";
        return 2;
    }

    std::string kind;
    Json report = Json::object();
    Json results = Json::object();
    std::vector<CsvTable> tables;
    bool verified = false;
    try {
        if (!root.is_object()) throw ValidationError("missing field: kind");
        kind = require(root, "kind").get<std::string>();
        static const std::vector<std::string> kinds{
            "solve", "ml", "dichotomy-estimate", "dichotomy-verify",
            "roughness", "manifold", "nonuniform"};
        if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
            throw ValidationError("invalid field: kind");
        if (overrides.expected_kind && kind != *overrides.expected_kind)
            throw ValidationError("invalid field: kind (scenario is '" + kind +
                                  "' but the subcommand expects '" +
                                  *overrides.expected_kind + "')");

        RunConfig cfg = resolve_config(root, overrides);
        SystemSpec system = build_system(require(root, "system"), cfg.order, "system");

        report.set("schema_version", 1);
        report.set("library_version", kLibraryVersion);
        report.set("config", echo_config(cfg, kind, system.echo));

        if (kind == "solve") verified = run_solve(root, cfg, system, results, tables);
        else if (kind == "ml") verified = run_ml(cfg, system, results, tables);
        else if (kind == "dichotomy-estimate")
            verified = run_dichotomy(root, cfg, system, true, results, tables);
        else if (kind == "dichotomy-verify")
            verified = run_dichotomy(root, cfg, system, false, results, tables);
        else if (kind == "roughness")
            verified = run_roughness(root, cfg, system, results, tables);
        else if (kind == "manifold")
            verified = run_manifold(root, cfg, system, results, tables);
        else
            verified = run_nonuniform(root, cfg, system, results, tables);
    } catch (const ValidationError& e) {
        std::cerr << "scenario validation error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }

    report.set("results", std::move(results));
    report.set("verified", verified);
    try {
        write_outputs(out_dir, report, tables);
    } catch (const std::exception& e) {
        std::cerr << "output failure: " << e.what() << "\n";
        return 3;
    }
    return verified ? 0 : 1;
}

}  // namespace cfd

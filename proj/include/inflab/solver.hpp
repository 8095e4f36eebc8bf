#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "inflab/analytic.hpp"
#include "inflab/errors.hpp"
#include "inflab/fd.hpp"
#include "inflab/grid.hpp"
#include "inflab/parallel.hpp"

namespace inflab::solver {

/// epsilon is the uniform ellipticity of the regularized operator; kappa the
/// gradient-squared shift used by the Sobolev-type estimates; delta the floor
/// below which gradient quotients are defined as zero (0 = auto: 1e3 *
/// machine epsilon * field scale).
struct RegularizationParams {
    double epsilon = 1e-2;
    double kappa = 0.0;
    double delta = 0.0;

    void validate() const {
        if (!(epsilon > 0.0) || epsilon > 1.0) throw InvalidEpsilon(epsilon);
        if (kappa < 0.0 || delta < 0.0)
            throw InvalidArgument("kappa and delta must be nonnegative");
    }
};

inline double effective_delta(double delta, double field_scale) {
    if (delta > 0.0) return delta;
    return 1e3 * std::numeric_limits<double>::epsilon() * std::max(field_scale, 1e-300);
}

struct SolverConfig {
    int max_outer_iterations = 4000;
    int max_inner_sweeps = 40;
    double residual_tolerance = 1e-7;
    double relaxation = 0.7;
    bool deterministic_ordering = true;

    void validate() const {
        if (!(residual_tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
        if (!(relaxation > 0.0) || relaxation > 1.0)
            throw InvalidArgument("relaxation must lie in (0,1]");
        if (max_outer_iterations < 1 || max_inner_sweeps < 1)
            throw InvalidArgument("iteration limits must be positive");
    }
};

/// Closed-form boundary values tagged with a name.
struct BoundaryData {
    std::string name;
    std::function<double(double, double)> fn;

    double operator()(double x, double y) const { return fn(x, y); }

    static BoundaryData from_reference(const analytic::ReferenceFunction& f) {
        return {f.name, f.value};
    }

    /// Per-node samples, `index,value` rows; index runs over boundary nodes
    /// in row-major (y then x) grid order.
    static BoundaryData from_csv(const GridSpec& g, const std::string& path);
};

namespace detail {

inline std::vector<long> boundary_indices(const GridSpec& g) {
    std::vector<long> idx;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.on_boundary(i, j)) idx.push_back(g.idx(i, j));
    return idx;
}

/// Transfinite (bilinear) blend of the four boundary edges; reproduces the
/// boundary data exactly on the boundary ring and any affine g exactly.
inline ScalarField transfinite_init(const GridSpec& g, const BoundaryData& bd) {
    ScalarField u(g);
    const double x0 = g.origin_x, y0 = g.origin_y;
    const double x1 = g.origin_x + g.extent_x, y1 = g.origin_y + g.extent_y;
    for (int j = 0; j < g.ny; ++j) {
        const double y = g.y(j);
        const double t = (y - y0) / g.extent_y;
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i);
            const double s = (x - x0) / g.extent_x;
            const double blend = (1.0 - s) * bd(x0, y) + s * bd(x1, y) + (1.0 - t) * bd(x, y0) +
                                 t * bd(x, y1) -
                                 ((1.0 - s) * (1.0 - t) * bd(x0, y0) + s * (1.0 - t) * bd(x1, y0) +
                                  (1.0 - s) * t * bd(x0, y1) + s * t * bd(x1, y1));
            u.v[g.idx(i, j)] = blend;
        }
    }
    for (long k : boundary_indices(g)) {
        const int i = static_cast<int>(k % g.nx), j = static_cast<int>(k / g.nx);
        u.v[k] = bd(g.x(i), g.y(j));
        if (!std::isfinite(u.v[k])) throw InvariantViolation("boundary data non-finite");
    }
    return u;
}

/// One relaxed point-iteration pass over the interior for the frozen
/// operator trace((Du_k (x) Du_k + eps I) D^2 u) = 0. Colored mode walks the
/// four 2x2 parities in fixed order; every node in a parity class is
/// independent of the others (the 9-point stencil never reaches distance-2
/// neighbors), so the pass is parallel-safe and bit-reproducible for any
/// worker count.
inline void frozen_sweep(ScalarField& u, const std::vector<double>& a11,
                         const std::vector<double>& a12, const std::vector<double>& a22,
                         double omega, bool colored) {
    const GridSpec& g = u.grid;
    const long nx = g.nx;
    double* uv = u.v.data();
    auto update = [&](long k) {
        const double diag = 2.0 * (a11[k] + a22[k]);
        const double cross = uv[k + nx + 1] - uv[k + nx - 1] - uv[k - nx + 1] + uv[k - nx - 1];
        const double num = a11[k] * (uv[k - 1] + uv[k + 1]) + a22[k] * (uv[k - nx] + uv[k + nx]) +
                           0.5 * a12[k] * cross;
        uv[k] += omega * (num / diag - uv[k]);
    };
    if (!colored) {
        for (int j = 1; j < g.ny - 1; ++j)
            for (int i = 1; i < g.nx - 1; ++i) update(g.idx(i, j));
        return;
    }
    for (int cj = 0; cj < 2; ++cj)
        for (int ci = 0; ci < 2; ++ci) {
            const int jstart = (cj == 1) ? 1 : 2;
            const int istart = (ci == 1) ? 1 : 2;
            const long nrows = (g.ny - 1 - jstart + 1) / 2;
            parallel_for(0, nrows, [&](long rr) {
                const int j = jstart + 2 * static_cast<int>(rr);
                for (int i = istart; i < g.nx - 1; i += 2) update(g.idx(i, j));
            });
        }
}

inline void assemble_coefficients(const ScalarField& u, double epsilon, std::vector<double>& a11,
                                  std::vector<double>& a12, std::vector<double>& a22) {
    const VectorField2 Du = gradient(u);
    const long n = u.grid.size();
    a11.resize(static_cast<size_t>(n));
    a12.resize(static_cast<size_t>(n));
    a22.resize(static_cast<size_t>(n));
    for (long k = 0; k < n; ++k) {
        const double gx = Du.x[k], gy = Du.y[k];
        a11[k] = gx * gx + epsilon;
        a12[k] = gx * gy;
        a22[k] = gy * gy + epsilon;
    }
}

}  // namespace detail

/// Node-wise -Delta_inf u - eps Delta u assembled from the grid operators.
inline ScalarField pde_residual(const ScalarField& u, double epsilon) {
    const VectorField2 Du = gradient(u);
    const SymMatField H = hessian(u);
    ScalarField out(u.grid);
    for (long k = 0; k < u.grid.size(); ++k) {
        const double g1 = Du.x[k], g2 = Du.y[k];
        const double dinf = g1 * g1 * H.a11[k] + 2.0 * g1 * g2 * H.a12[k] + g2 * g2 * H.a22[k];
        out.v[k] = -dinf - epsilon * (H.a11[k] + H.a22[k]);
    }
    return out;
}

/// Sup of the PDE residual over nodes at least two rings from the boundary.
inline double interior_residual(const ScalarField& u, double epsilon) {
    const ScalarField r = pde_residual(u, epsilon);
    const Region R = interior_margin(u.grid, 2);
    double m = 0.0;
    const GridSpec& g = u.grid;
    for (int j = 2; j < g.ny - 2; ++j)
        for (int i = 2; i < g.nx - 2; ++i)
            if (R.contains(g.x(i), g.y(j), g)) m = std::max(m, std::abs(r.v[g.idx(i, j)]));
    return m;
}

struct SolveStats {
    int outer_iterations = 0;
    long total_sweeps = 0;
    double final_residual = 0.0;
    double boundary_min = 0.0;
    double boundary_max = 0.0;
};

/// Dirichlet solve of -Delta_inf u - eps Delta u = 0 by Picard iteration:
/// freeze A = Du (x) Du + eps I from the current iterate, run relaxed point
/// sweeps on the linear problem trace(A D^2 u) = 0, repeat until the sup
/// residual on the 2h-interior falls below cfg.residual_tolerance.
inline ScalarField solve_dirichlet(const GridSpec& grid, const BoundaryData& g,
                                   const RegularizationParams& params, const SolverConfig& cfg,
                                   SolveStats* stats = nullptr) {
    params.validate();
    cfg.validate();
    ScalarField u = detail::transfinite_init(grid, g);
    u.check_finite("initial iterate");

    double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
    for (long k : detail::boundary_indices(grid)) {
        bmin = std::min(bmin, u.v[k]);
        bmax = std::max(bmax, u.v[k]);
    }

    std::vector<double> a11, a12, a22;
    double res = std::numeric_limits<double>::infinity();
    int outer = 0;
    long sweeps = 0;
    for (; outer < cfg.max_outer_iterations; ++outer) {
        res = interior_residual(u, params.epsilon);
        if (res <= cfg.residual_tolerance) break;
        detail::assemble_coefficients(u, params.epsilon, a11, a12, a22);
        for (int s = 0; s < cfg.max_inner_sweeps; ++s, ++sweeps)
            detail::frozen_sweep(u, a11, a12, a22, cfg.relaxation, cfg.deterministic_ordering);
    }
    if (stats) {
        stats->outer_iterations = outer;
        stats->total_sweeps = sweeps;
        stats->final_residual = res;
        stats->boundary_min = bmin;
        stats->boundary_max = bmax;
    }
    if (res > cfg.residual_tolerance)
        throw NonConvergence("regularized solve stalled above tolerance", res);
    return u;
}

/// Discrete maximum principle bound for a solve with boundary range
/// [gmin, gmax]: min - tol <= u <= max + tol with tol = 10 * solver tol.
inline bool max_principle_holds(const ScalarField& u, double gmin, double gmax, double tol) {
    for (double x : u.v)
        if (x < gmin - tol || x > gmax + tol) return false;
    return true;
}

/// Independent eps = 0 cross-check: local Lipschitz extension sweeps. Each
/// interior node moves toward the value equalizing the steepest up- and
/// down-slope over its 8-neighbor stencil (distance-weighted midpoint),
/// iterated to a fixed point.
inline ScalarField amle_cross_check(const GridSpec& grid, const BoundaryData& g,
                                    const SolverConfig& cfg, SolveStats* stats = nullptr) {
    cfg.validate();
    ScalarField u = detail::transfinite_init(grid, g);
    const long nx = grid.nx;
    const double h = grid.h, hd = grid.h * std::sqrt(2.0);
    const long offs[8] = {+1, -1, +nx, -nx, +nx + 1, +nx - 1, -nx + 1, -nx - 1};
    const double dist[8] = {h, h, h, h, hd, hd, hd, hd};

    double range = 0.0;
    {
        double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
        for (long k : detail::boundary_indices(grid)) {
            bmin = std::min(bmin, u.v[k]);
            bmax = std::max(bmax, u.v[k]);
        }
        range = std::max(bmax - bmin, 1e-30);
        if (stats) {
            stats->boundary_min = bmin;
            stats->boundary_max = bmax;
        }
    }
    // A max-update this small corresponds to a solution error of roughly
    // residual_tolerance * range (geometric convergence at rate ~ 1 - c h^2).
    const double tol_change = cfg.residual_tolerance * range * h * h;
    const long budget = static_cast<long>(cfg.max_outer_iterations) * cfg.max_inner_sweeps;

    double* uv = u.v.data();
    double max_change = std::numeric_limits<double>::infinity();
    long sweep = 0;
    std::vector<double> row_change(static_cast<size_t>(grid.ny), 0.0);
    for (; sweep < budget && max_change > tol_change; ++sweep) {
        std::fill(row_change.begin(), row_change.end(), 0.0);
        for (int cj = 0; cj < 2; ++cj)
            for (int ci = 0; ci < 2; ++ci) {
                const int jstart = (cj == 1) ? 1 : 2;
                const long nrows = (grid.ny - 1 - jstart + 1) / 2;
                parallel_for(0, nrows, [&](long rr) {
                    const int j = jstart + 2 * static_cast<int>(rr);
                    double local = row_change[static_cast<size_t>(j)];
                    for (int i = (ci == 1 ? 1 : 2); i < grid.nx - 1; i += 2) {
                        const long k = grid.idx(i, j);
                        double s_up = -std::numeric_limits<double>::infinity();
                        double s_dn = std::numeric_limits<double>::infinity();
                        double v_up = 0.0, d_up = h, v_dn = 0.0, d_dn = h;
                        for (int m = 0; m < 8; ++m) {
                            const double val = uv[k + offs[m]];
                            const double slope = (val - uv[k]) / dist[m];
                            if (slope > s_up) {
                                s_up = slope;
                                v_up = val;
                                d_up = dist[m];
                            }
                            if (slope < s_dn) {
                                s_dn = slope;
                                v_dn = val;
                                d_dn = dist[m];
                            }
                        }
                        const double target = (d_dn * v_up + d_up * v_dn) / (d_up + d_dn);
                        const double delta = cfg.relaxation * (target - uv[k]);
                        uv[k] += delta;
                        local = std::max(local, std::abs(delta));
                    }
                    row_change[static_cast<size_t>(j)] = local;
                });
            }
        max_change = 0.0;
        for (double c : row_change) max_change = std::max(max_change, c);
    }
    if (stats) {
        stats->total_sweeps = sweep;
        stats->final_residual = max_change;
    }
    if (max_change > tol_change)
        throw NonConvergence("lipschitz-extension sweeps stalled", max_change);
    return u;
}

inline BoundaryData BoundaryData::from_csv(const GridSpec& g, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open boundary csv '" + path + "'");
    const std::vector<long> bidx = detail::boundary_indices(g);
    std::vector<double> values(bidx.size(), std::numeric_limits<double>::quiet_NaN());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.rfind("index", 0) == 0) continue;
        std::stringstream ss(line);
        std::string tok;
        if (!std::getline(ss, tok, ','))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": missing index");
        const long index = std::stol(tok);
        if (!std::getline(ss, tok, ','))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": missing value");
        const double value = std::stod(tok);
        if (index < 0 || index >= static_cast<long>(values.size()))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": boundary index " +
                              std::to_string(index) + " out of range");
        if (!std::isfinite(value))
            throw ConfigError(path + ":" + std::to_string(lineno) + ": non-finite value");
        values[static_cast<size_t>(index)] = value;
    }
    for (size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw ConfigError(path + ": boundary index " + std::to_string(i) + " missing");

    // capture a node-coordinate lookup so the samples behave like a function
    struct Lookup {
        GridSpec grid;
        std::vector<double> table;  // full-grid table, NaN off-boundary
    };
    auto lk = std::make_shared<Lookup>();
    lk->grid = g;
    lk->table.assign(static_cast<size_t>(g.size()), std::numeric_limits<double>::quiet_NaN());
    for (size_t i = 0; i < bidx.size(); ++i) lk->table[static_cast<size_t>(bidx[i])] = values[i];
    BoundaryData bd;
    bd.name = "csv:" + path;
    bd.fn = [lk](double x, double y) {
        const GridSpec& gg = lk->grid;
        const int i = static_cast<int>(std::lround((x - gg.origin_x) / gg.h));
        const int j = static_cast<int>(std::lround((y - gg.origin_y) / gg.h));
        if (i < 0 || j < 0 || i >= gg.nx || j >= gg.ny)
            throw InvalidArgument("boundary lookup outside grid");
        return lk->table[static_cast<size_t>(gg.idx(i, j))];
    };
    return bd;
}

}  // namespace inflab::solver

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "inflab/analytic.hpp"
#include "inflab/errors.hpp"
#include "inflab/estimates.hpp"
#include "inflab/fd.hpp"
#include "inflab/grid.hpp"
#include "inflab/parallel.hpp"
#include "inflab/quadrature.hpp"
#include "inflab/solver.hpp"

namespace inflab::capacity {

// ---------------------------------------------------------------------------
// Quadrilateral geometry: an axis-aligned rectilinear Jordan polygon whose
// boundary splits into four arcs gamma_1..gamma_4 counterclockwise.
// ---------------------------------------------------------------------------

struct Quadrilateral {
    std::vector<std::array<double, 2>> vertices;  // ccw, axis-aligned edges, on grid nodes
    std::array<int, 4> arc_starts{};              // vertex index where each arc begins
    GridSpec grid;

    // derived embedding
    std::vector<unsigned char> inside;              // closed-polygon membership per node
    std::vector<long> boundary_cycle;               // ccw node indices, starts at arc 0
    std::array<std::pair<int, int>, 4> arc_range{};  // half-open [begin,end) into boundary_cycle

    static Quadrilateral make(std::vector<std::array<double, 2>> vertices,
                              std::array<int, 4> arc_starts, const GridSpec& grid);

    /// Rectangle [0,w]x[0,ht]; gamma_1..4 = bottom, right, top, left.
    static Quadrilateral rectangle(double w, double ht, double spacing) {
        const int nx = static_cast<int>(std::lround(w / spacing)) + 1;
        const int ny = static_cast<int>(std::lround(ht / spacing)) + 1;
        return make({{0.0, 0.0}, {w, 0.0}, {w, ht}, {0.0, ht}}, {0, 1, 2, 3},
                    GridSpec::make(0.0, 0.0, w, ht, nx, ny));
    }

    /// [0,s]^2 with the upper-right quadrant removed; gamma_2 is the
    /// three-edge reentrant chain, so the quadrilateral is a hexagon.
    static Quadrilateral l_shape(double s, double spacing) {
        const int n = static_cast<int>(std::lround(s / spacing)) + 1;
        const double m = 0.5 * s;
        return make({{0.0, 0.0}, {s, 0.0}, {s, m}, {m, m}, {m, s}, {0.0, s}}, {0, 1, 4, 5},
                    GridSpec::make(0.0, 0.0, s, s, n, n));
    }

    /// Same polygon re-embedded on a coarser nested grid, if the vertices
    /// still land on nodes there.
    std::optional<Quadrilateral> coarsened() const {
        if ((grid.nx - 1) % 2 != 0 || (grid.ny - 1) % 2 != 0) return std::nullopt;
        const int nx = (grid.nx - 1) / 2 + 1, ny = (grid.ny - 1) / 2 + 1;
        if (nx < 9 || ny < 9) return std::nullopt;
        const GridSpec cg = GridSpec::make(grid.origin_x, grid.origin_y, grid.extent_x,
                                           grid.extent_y, nx, ny);
        for (const auto& v : vertices) {
            const double fi = (v[0] - cg.origin_x) / cg.h, fj = (v[1] - cg.origin_y) / cg.h;
            if (std::abs(fi - std::lround(fi)) > 1e-9 || std::abs(fj - std::lround(fj)) > 1e-9)
                return std::nullopt;
        }
        return make(vertices, arc_starts, cg);
    }

    /// Dirichlet node set of an arc: its half-open node range plus the
    /// corner node that starts the next arc (discrete closure).
    std::vector<long> arc_closure(int a) const {
        std::vector<long> nodes;
        const auto [b, e] = arc_range[a & 3];
        for (int t = b; t < e; ++t) nodes.push_back(boundary_cycle[t]);
        nodes.push_back(boundary_cycle[e % static_cast<int>(boundary_cycle.size())]);
        return nodes;
    }
};

namespace detail {

inline bool on_segment(double px, double py, const std::array<double, 2>& a,
                       const std::array<double, 2>& b, double tol) {
    if (std::abs(a[0] - b[0]) < tol) {  // vertical
        return std::abs(px - a[0]) < tol && py >= std::min(a[1], b[1]) - tol &&
               py <= std::max(a[1], b[1]) + tol;
    }
    return std::abs(py - a[1]) < tol && px >= std::min(a[0], b[0]) - tol &&
           px <= std::max(a[0], b[0]) + tol;
}

inline bool point_in_closed_polygon(double px, double py,
                                    const std::vector<std::array<double, 2>>& vs, double tol) {
    const size_t n = vs.size();
    bool in = false;
    for (size_t i = 0; i < n; ++i) {
        const auto& a = vs[i];
        const auto& b = vs[(i + 1) % n];
        if (on_segment(px, py, a, b, tol)) return true;
        if ((a[1] > py) != (b[1] > py)) {
            const double xint = a[0] + (py - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if (px < xint) in = !in;
        }
    }
    return in;
}

}  // namespace detail

inline Quadrilateral Quadrilateral::make(std::vector<std::array<double, 2>> vertices,
                                         std::array<int, 4> arc_starts, const GridSpec& grid) {
    Quadrilateral q;
    q.vertices = std::move(vertices);
    q.arc_starts = arc_starts;
    q.grid = grid;
    const int nv = static_cast<int>(q.vertices.size());
    if (nv < 4) throw InvalidArgument("polygon needs at least 4 vertices");

    double area2 = 0.0;
    for (int i = 0; i < nv; ++i) {
        const auto& a = q.vertices[i];
        const auto& b = q.vertices[(i + 1) % nv];
        if (std::abs(a[0] - b[0]) > 1e-12 && std::abs(a[1] - b[1]) > 1e-12)
            throw InvalidArgument("polygon edges must be axis-aligned");
        area2 += a[0] * b[1] - b[0] * a[1];
    }
    if (area2 <= 0.0) throw InvalidArgument("vertices must be counterclockwise");
    for (int a = 0; a < 4; ++a)
        if (arc_starts[a] < 0 || arc_starts[a] >= nv ||
            (a > 0 && arc_starts[a] <= arc_starts[a - 1]))
            throw InvalidArgument("arc starts must be increasing vertex indices");

    const double tol = 1e-9 * grid.h;
    auto node_of = [&](const std::array<double, 2>& v) {
        const double fi = (v[0] - grid.origin_x) / grid.h, fj = (v[1] - grid.origin_y) / grid.h;
        const long i = std::lround(fi), j = std::lround(fj);
        if (std::abs(fi - i) > 1e-9 || std::abs(fj - j) > 1e-9 || i < 0 || j < 0 || i >= grid.nx ||
            j >= grid.ny)
            throw InvalidArgument("polygon vertex not on a grid node");
        return std::pair<int, int>{static_cast<int>(i), static_cast<int>(j)};
    };

    // closed-polygon node membership
    q.inside.assign(static_cast<size_t>(grid.size()), 0);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            q.inside[grid.idx(i, j)] =
                detail::point_in_closed_polygon(grid.x(i), grid.y(j), q.vertices, tol) ? 1 : 0;

    // walk the boundary counterclockwise starting at the first arc vertex
    const int v0 = arc_starts[0];
    for (int e = 0; e < nv; ++e) {
        const auto [ai, aj] = node_of(q.vertices[(v0 + e) % nv]);
        const auto [bi, bj] = node_of(q.vertices[(v0 + e + 1) % nv]);
        const int di = (bi > ai) - (bi < ai), dj = (bj > aj) - (bj < aj);
        int ci = ai, cj = aj;
        while (ci != bi || cj != bj) {
            q.boundary_cycle.push_back(grid.idx(ci, cj));
            ci += di;
            cj += dj;
        }
    }
    // arc index ranges (vertex positions along the cycle)
    std::vector<int> vertex_pos(static_cast<size_t>(nv), -1);
    {
        int pos = 0;
        for (int e = 0; e < nv; ++e) {
            vertex_pos[static_cast<size_t>((v0 + e) % nv)] = pos;
            const auto [ai, aj] = node_of(q.vertices[(v0 + e) % nv]);
            const auto [bi, bj] = node_of(q.vertices[(v0 + e + 1) % nv]);
            pos += std::max(std::abs(bi - ai), std::abs(bj - aj));
        }
    }
    const int cyc = static_cast<int>(q.boundary_cycle.size());
    for (int a = 0; a < 4; ++a) {
        const int b = vertex_pos[static_cast<size_t>(arc_starts[a])];
        const int e = (a == 3) ? cyc : vertex_pos[static_cast<size_t>(arc_starts[a + 1])];
        if (e - b < 2) throw InvariantViolation("each arc needs at least 2 boundary nodes");
        q.arc_range[a] = {b, e};
    }
    return q;
}

// ---------------------------------------------------------------------------
// p-capacity by energy minimization
// ---------------------------------------------------------------------------

struct CapacityResult {
    double p = 2.0;
    double value = 0.0;
    ScalarField minimizer;
    bool converged = false;
};

namespace detail {

/// Corner-sampled Q1 gradient energy. Each active cell contributes four
/// samples (h^2/4 each); the gradient at a corner pairs the two edge
/// differences meeting there, which keeps the quadratic form coercive on
/// the full grid graph (no decoupled checkerboard).
struct PEnergyGrid {
    const Quadrilateral* q = nullptr;
    std::vector<unsigned char> cell_active;  // (nx-1) x (ny-1)
    std::vector<unsigned char> free_node;
    std::vector<double> wx;  // x-edge weights, (nx-1) x ny
    std::vector<double> wy;  // y-edge weights, nx x (ny-1)

    long cidx(int i, int j) const { return static_cast<long>(j) * (q->grid.nx - 1) + i; }
    long xidx(int i, int j) const { return static_cast<long>(j) * (q->grid.nx - 1) + i; }
    long yidx(int i, int j) const { return static_cast<long>(j) * q->grid.nx + i; }
};

inline PEnergyGrid setup_energy_grid(const Quadrilateral& q, int e_arc, int f_arc,
                                     ScalarField& u, const ScalarField* warm) {
    const GridSpec& g = q.grid;
    PEnergyGrid eg;
    eg.q = &q;
    eg.cell_active.assign(static_cast<size_t>(g.nx - 1) * (g.ny - 1), 0);
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            eg.cell_active[eg.cidx(i, j)] = q.inside[g.idx(i, j)] && q.inside[g.idx(i + 1, j)] &&
                                            q.inside[g.idx(i, j + 1)] &&
                                            q.inside[g.idx(i + 1, j + 1)];
    eg.free_node.assign(static_cast<size_t>(g.size()), 0);
    for (long k = 0; k < g.size(); ++k) eg.free_node[k] = q.inside[k];

    u = ScalarField(g, 0.0);
    if (warm) {
        if (!warm->grid.same_layout(g)) throw InvalidArgument("warm start grid mismatch");
        u.v = warm->v;
    } else {
        for (long k = 0; k < g.size(); ++k) u.v[k] = q.inside[k] ? 0.5 : 0.0;
    }
    for (long k : q.arc_closure(e_arc)) {
        u.v[k] = 1.0;
        eg.free_node[k] = 0;
    }
    for (long k : q.arc_closure(f_arc)) {
        u.v[k] = 0.0;
        eg.free_node[k] = 0;
    }
    return eg;
}

/// Freezes (|grad|^2 + mu)^{(p-2)/2} at every corner sample and folds the
/// samples into per-edge weights of the quadratic form. For p > 2 the raw
/// secant-weight update oscillates, so the new weights are blended
/// geometrically into the old ones with exponent damping 2/p.
inline void assemble_edge_weights(PEnergyGrid& eg, const ScalarField& u, double p, double mu) {
    const GridSpec& g = u.grid;
    const double inv_h = 1.0 / g.h;
    const double damping = std::min(1.0, 2.0 / p);
    std::vector<double> wx_old, wy_old;
    const bool blend = damping < 1.0 && !eg.wx.empty();
    if (blend) {
        wx_old.swap(eg.wx);
        wy_old.swap(eg.wy);
    }
    eg.wx.assign(static_cast<size_t>(g.nx - 1) * g.ny, 0.0);
    eg.wy.assign(static_cast<size_t>(g.nx) * (g.ny - 1), 0.0);
    const double expo = 0.5 * (p - 2.0);
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            if (!eg.cell_active[eg.cidx(i, j)]) continue;
            const double ll = u.v[g.idx(i, j)], lr = u.v[g.idx(i + 1, j)];
            const double ul = u.v[g.idx(i, j + 1)], ur = u.v[g.idx(i + 1, j + 1)];
            const double dxb = (lr - ll) * inv_h, dxt = (ur - ul) * inv_h;
            const double dyl = (ul - ll) * inv_h, dyr = (ur - lr) * inv_h;
            const double wll = std::pow(dxb * dxb + dyl * dyl + mu, expo);
            const double wlr = std::pow(dxb * dxb + dyr * dyr + mu, expo);
            const double wul = std::pow(dxt * dxt + dyl * dyl + mu, expo);
            const double wur = std::pow(dxt * dxt + dyr * dyr + mu, expo);
            // quarter-cell samples touching each edge of this cell
            eg.wx[eg.xidx(i, j)] += 0.25 * (wll + wlr);
            eg.wx[eg.xidx(i, j + 1)] += 0.25 * (wul + wur);
            eg.wy[eg.yidx(i, j)] += 0.25 * (wll + wul);
            eg.wy[eg.yidx(i + 1, j)] += 0.25 * (wlr + wur);
        }
    if (blend) {
        for (size_t k = 0; k < eg.wx.size(); ++k)
            if (eg.wx[k] > 0.0 && wx_old[k] > 0.0)
                eg.wx[k] = std::pow(wx_old[k], 1.0 - damping) * std::pow(eg.wx[k], damping);
        for (size_t k = 0; k < eg.wy.size(); ++k)
            if (eg.wy[k] > 0.0 && wy_old[k] > 0.0)
                eg.wy[k] = std::pow(wy_old[k], 1.0 - damping) * std::pow(eg.wy[k], damping);
    }
}

/// Raw p-energy sum over corner samples (no mu).
inline double p_energy(const PEnergyGrid& eg, const ScalarField& u, double p) {
    const GridSpec& g = u.grid;
    const double inv_h = 1.0 / g.h;
    std::vector<double> terms;
    terms.reserve(eg.cell_active.size());
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            if (!eg.cell_active[eg.cidx(i, j)]) continue;
            const double ll = u.v[g.idx(i, j)], lr = u.v[g.idx(i + 1, j)];
            const double ul = u.v[g.idx(i, j + 1)], ur = u.v[g.idx(i + 1, j + 1)];
            const double dxb = (lr - ll) * inv_h, dxt = (ur - ul) * inv_h;
            const double dyl = (ul - ll) * inv_h, dyr = (ur - lr) * inv_h;
            const double s = std::pow(dxb * dxb + dyl * dyl, 0.5 * p) +
                             std::pow(dxb * dxb + dyr * dyr, 0.5 * p) +
                             std::pow(dxt * dxt + dyl * dyl, 0.5 * p) +
                             std::pow(dxt * dxt + dyr * dyr, 0.5 * p);
            terms.push_back(0.25 * s);
        }
    return pairwise_sum(terms) * g.h * g.h;
}

/// Red-black relaxed sweeps on the frozen weighted 5-point form.
inline void weighted_sweeps(const PEnergyGrid& eg, ScalarField& u, int sweeps, double omega) {
    const GridSpec& g = u.grid;
    double* uv = u.v.data();
    for (int s = 0; s < sweeps; ++s)
        for (int color = 0; color < 2; ++color) {
            parallel_for(0, g.ny, [&](long j) {
                const int jj = static_cast<int>(j);
                for (int i = (static_cast<int>(jj) + color) & 1; i < g.nx; i += 2) {
                    const long k = g.idx(i, jj);
                    if (!eg.free_node[k]) continue;
                    double num = 0.0, den = 0.0;
                    if (i > 0) {
                        const double w = eg.wx[eg.xidx(i - 1, jj)];
                        num += w * uv[k - 1];
                        den += w;
                    }
                    if (i + 1 < g.nx) {
                        const double w = eg.wx[eg.xidx(i, jj)];
                        num += w * uv[k + 1];
                        den += w;
                    }
                    if (jj > 0) {
                        const double w = eg.wy[eg.yidx(i, jj - 1)];
                        num += w * uv[k - g.nx];
                        den += w;
                    }
                    if (jj + 1 < g.ny) {
                        const double w = eg.wy[eg.yidx(i, jj)];
                        num += w * uv[k + g.nx];
                        den += w;
                    }
                    if (den > 0.0) uv[k] += omega * (num / den - uv[k]);
                }
            });
        }
}

/// Mask-aware prolongation from a coarse quadrilateral embedding.
inline ScalarField prolong(const Quadrilateral& coarse_q, const ScalarField& cu,
                           const Quadrilateral& fine_q) {
    const GridSpec& cg = cu.grid;
    const GridSpec& fg = fine_q.grid;
    ScalarField out(fg, 0.0);
    auto cval = [&](int ci, int cj, double& acc, double& wsum) {
        if (ci < 0 || cj < 0 || ci >= cg.nx || cj >= cg.ny) return;
        const long k = cg.idx(ci, cj);
        if (!coarse_q.inside[k]) return;
        acc += cu.v[k];
        wsum += 1.0;
    };
    for (int j = 0; j < fg.ny; ++j)
        for (int i = 0; i < fg.nx; ++i) {
            const long k = fg.idx(i, j);
            if (!fine_q.inside[k]) continue;
            const int ci = i / 2, cj = j / 2;
            double acc = 0.0, wsum = 0.0;
            if (i % 2 == 0 && j % 2 == 0) {
                cval(ci, cj, acc, wsum);
            } else if (i % 2 == 1 && j % 2 == 0) {
                cval(ci, cj, acc, wsum);
                cval(ci + 1, cj, acc, wsum);
            } else if (i % 2 == 0 && j % 2 == 1) {
                cval(ci, cj, acc, wsum);
                cval(ci, cj + 1, acc, wsum);
            } else {
                cval(ci, cj, acc, wsum);
                cval(ci + 1, cj, acc, wsum);
                cval(ci, cj + 1, acc, wsum);
                cval(ci + 1, cj + 1, acc, wsum);
            }
            out.v[k] = wsum > 0.0 ? acc / wsum : 0.5;
        }
    return out;
}

inline CapacityResult minimize_level(const Quadrilateral& q, int e_arc, int f_arc, double p,
                                     const solver::SolverConfig& cfg, const ScalarField* warm,
                                     double mu) {
    CapacityResult res;
    res.p = p;
    ScalarField u;
    PEnergyGrid eg = setup_energy_grid(q, e_arc, f_arc, u, warm);
    double energy = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
        assemble_edge_weights(eg, u, p, mu);
        weighted_sweeps(eg, u, cfg.max_inner_sweeps, cfg.relaxation);
        const double e_now = p_energy(eg, u, p);
        if (std::abs(e_now - energy) <= cfg.residual_tolerance * std::max(e_now, 1e-300)) {
            energy = e_now;
            converged = true;
            break;
        }
        energy = e_now;
    }
    res.value = energy;
    res.minimizer = std::move(u);
    res.converged = converged;
    return res;
}

}  // namespace detail

/// Discrete p-capacity between the closed arcs E and F (u = 1 on E, u = 0 on
/// F, natural condition elsewhere), minimized by Picard iteration on the
/// mu-regularized p-Laplacian with nested-grid warm starts.
inline CapacityResult p_capacity(const Quadrilateral& quad, int e_arc, int f_arc, double p,
                                 const solver::SolverConfig& cfg, double mu = 1e-10) {
    if (!(p > 1.0) || !std::isfinite(p))
        throw UnsupportedExponent("p-capacity implemented for 1 < p < inf");
    if (e_arc < 0 || e_arc > 3 || f_arc < 0 || f_arc > 3 || std::abs(e_arc - f_arc) != 2)
        throw InvalidArgument("E and F must be the opposite arc pair");
    cfg.validate();

    // coarse-to-fine: cheap sweeps resolve the global profile early
    std::vector<Quadrilateral> levels{quad};
    while (true) {
        auto c = levels.back().coarsened();
        if (!c) break;
        levels.push_back(std::move(*c));
    }
    std::optional<ScalarField> warm;
    CapacityResult res;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        res = detail::minimize_level(*it, e_arc, f_arc, p, cfg, warm ? &*warm : nullptr, mu);
        if (std::next(it) != levels.rend())
            warm = detail::prolong(*it, res.minimizer, *std::next(it));
    }
    if (!res.converged)
        throw NonConvergence("p-capacity energy failed to settle", res.value);
    return res;
}

/// Cap_p(g1,g3)^{1/p} * Cap_q(g2,g4)^{1/q} with q the conjugate exponent;
/// equal to 1 in the continuum for every Jordan quadrilateral.
inline double duality_product(const Quadrilateral& quad, double p, const solver::SolverConfig& cfg,
                              double mu = 1e-10) {
    if (!(p > 1.0)) throw UnsupportedExponent("duality product needs p in (1, inf)");
    const double q = p / (p - 1.0);
    const CapacityResult cp = p_capacity(quad, 0, 2, p, cfg, mu);
    const CapacityResult cq = p_capacity(quad, 1, 3, q, cfg, mu);
    return std::pow(cp.value, 1.0 / p) * std::pow(cq.value, 1.0 / q);
}

// ---------------------------------------------------------------------------
// Dual 1-Laplacian equation  -div(Dv/|Dv|) = |Dv|/(2v)
// ---------------------------------------------------------------------------

namespace detail {

inline double curvature_residual(double v, double v1, double v2, double v11, double v12,
                                 double v22) {
    const double dn2 = v1 * v1 + v2 * v2;
    const double dn = std::sqrt(dn2);
    const double div_unit = (v2 * v2 * v11 - 2.0 * v1 * v2 * v12 + v1 * v1 * v22) / (dn2 * dn);
    return -div_unit - dn / (2.0 * v);
}

}  // namespace detail

/// Discrete mode: derivatives of the sampled field via the grid stencils.
inline ScalarField dual_equation_residual(const ScalarField& v, const Region& R,
                                          double delta = 0.0) {
    const GridSpec& g = v.grid;
    R.validate(g);
    const VectorField2 Dv = gradient(v);
    const SymMatField H = hessian(v);
    double scale = 0.0;
    for (long k = 0; k < g.size(); ++k) scale = std::max(scale, Dv.norm_at(k));
    const double dfloor = solver::effective_delta(delta, scale);
    ScalarField out(g, 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!R.contains(g.x(i), g.y(j), g)) continue;
            const long k = g.idx(i, j);
            if (Dv.norm_at(k) <= dfloor)
                throw DegenerateGradient("|Dv| below the delta floor inside the region");
            out.v[k] = detail::curvature_residual(v.v[k], Dv.x[k], Dv.y[k], H.a11[k], H.a12[k],
                                                  H.a22[k]);
        }
    return out;
}

/// Analytic mode for v = |Dw|^2/2 of the Aronsson function: closed-form
/// derivatives, zero residual expected off the axes.
inline ScalarField dual_equation_residual_analytic(const GridSpec& g, const Region& R) {
    R.validate(g);
    ScalarField out(g, 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i), y = g.y(j);
            if (!R.contains(x, y, g)) continue;
            if (analytic::on_axis(x, y, 0.0))
                throw DegenerateGradient("analytic dual residual undefined on the axes");
            const double v = 0.5 * analytic::aronsson_speed(x, y) * analytic::aronsson_speed(x, y);
            const double cx = std::cbrt(x), cy = std::cbrt(y);
            const double v1 = 16.0 / 27.0 / cx, v2 = 16.0 / 27.0 / cy;
            const double v11 = -16.0 / 81.0 / (cx * cx * cx * cx);
            const double v22 = -16.0 / 81.0 / (cy * cy * cy * cy);
            out.v[g.idx(i, j)] = detail::curvature_residual(v, v1, v2, v11, 0.0, v22);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Singular axis measure of the dual equation for the Aronsson function
// ---------------------------------------------------------------------------

struct SingularMeasureResult {
    double f_value = 0.0;     // extrapolated distributional pairing
    double line_value = 0.0;  // -2 (\int phi(x,0) dx + \int phi(0,y) dy)
    std::array<double, 3> f_at_eta{};
};

/// Pairs the dual operator of v = |Dw|^2/2 against phi away from the axes
/// and extrapolates the axis-exclusion width eta -> 0 (the truncation error
/// scales like eta^{2/3}); the lemma says the result equals the -2-weighted
/// line integrals along the axes.
inline SingularMeasureResult singular_measure_check(const estimates::TestFunction& phi,
                                                    int samples_per_side = 2048) {
    const double hq = 2.0 * phi.radius / samples_per_side;
    // snap the sample box to the hq-lattice so half-offset samples never hit an axis
    const double x_lo = std::floor((phi.cx - phi.radius) / hq) * hq;
    const double y_lo = std::floor((phi.cy - phi.radius) / hq) * hq;
    const int nx = samples_per_side + 2, ny = samples_per_side + 2;

    const std::array<double, 3> etas = {8.0 * hq, 4.0 * hq, 2.0 * hq};
    std::array<double, 3> sums = {0.0, 0.0, 0.0};
    for (int j = 0; j < ny; ++j) {
        const double y = y_lo + (j + 0.5) * hq;
        for (int i = 0; i < nx; ++i) {
            const double x = x_lo + (i + 0.5) * hq;
            const double pv = phi.value(x, y);
            const auto pg = phi.grad(x, y);
            if (pv == 0.0 && pg[0] == 0.0 && pg[1] == 0.0) continue;
            const double cx = std::cbrt(x), cy = std::cbrt(y);
            const double v = 0.5 * analytic::aronsson_speed(x, y) * analytic::aronsson_speed(x, y);
            const double v1 = 16.0 / 27.0 / cx, v2 = 16.0 / 27.0 / cy;
            const double dn = std::hypot(v1, v2);
            const double g_val = (v1 * pg[0] + v2 * pg[1]) / dn - dn / (2.0 * v) * pv;
            const double ax = std::abs(x), ay = std::abs(y);
            for (int e = 0; e < 3; ++e)
                if (ax > etas[e] && ay > etas[e]) sums[e] += g_val;
        }
    }
    SingularMeasureResult res;
    for (int e = 0; e < 3; ++e) res.f_at_eta[e] = sums[e] * hq * hq;

    // least-squares line in z = eta^{2/3}; intercept is the eta -> 0 limit
    double sz = 0.0, szz = 0.0, sf = 0.0, szf = 0.0;
    for (int e = 0; e < 3; ++e) {
        const double z = std::pow(etas[e], 2.0 / 3.0);
        sz += z;
        szz += z * z;
        sf += res.f_at_eta[e];
        szf += z * res.f_at_eta[e];
    }
    const double slope = (3.0 * szf - sz * sf) / (3.0 * szz - sz * sz);
    res.f_value = (sf - slope * sz) / 3.0;

    // 1D line integrals along each axis crossing the support
    auto line_integral = [&](bool x_axis) {
        const double c_along = x_axis ? phi.cx : phi.cy;
        const double c_perp = x_axis ? phi.cy : phi.cx;
        if (std::abs(c_perp) >= phi.radius) return 0.0;
        const double half = std::sqrt(phi.radius * phi.radius - c_perp * c_perp);
        const int n = 1 << 16;
        const double dt = 2.0 * half / n;
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = c_along - half + (i + 0.5) * dt;
            s += x_axis ? phi.value(t, 0.0) : phi.value(0.0, t);
        }
        return s * dt;
    };
    res.line_value = -2.0 * (line_integral(true) + line_integral(false));
    return res;
}

}  // namespace inflab::capacity

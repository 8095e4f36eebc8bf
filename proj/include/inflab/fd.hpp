#pragma once

#include "inflab/grid.hpp"

namespace inflab {

// Second-order stencils throughout: central differences at interior nodes,
// shifted one-sided stencils on the boundary ring. All operators are exact
// on polynomials of degree <= 2 at every node.

namespace detail {

/// d/dx along grid rows. (-3,4,-1)/(2h) one-sided at the edges.
inline void diff_x(const ScalarField& f, std::vector<double>& out) {
    const GridSpec& g = f.grid;
    const double inv2h = 1.0 / (2.0 * g.h);
    out.resize(static_cast<size_t>(g.size()));
    for (int j = 0; j < g.ny; ++j) {
        const long row = g.idx(0, j);
        const double* u = f.v.data() + row;
        double* d = out.data() + row;
        d[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2h;
        for (int i = 1; i < g.nx - 1; ++i) d[i] = (u[i + 1] - u[i - 1]) * inv2h;
        d[g.nx - 1] = (3.0 * u[g.nx - 1] - 4.0 * u[g.nx - 2] + u[g.nx - 3]) * inv2h;
    }
}

inline void diff_y(const ScalarField& f, std::vector<double>& out) {
    const GridSpec& g = f.grid;
    const double inv2h = 1.0 / (2.0 * g.h);
    const long nx = g.nx;
    out.resize(static_cast<size_t>(g.size()));
    const double* u = f.v.data();
    double* d = out.data();
    for (int i = 0; i < g.nx; ++i) {
        d[i] = (-3.0 * u[i] + 4.0 * u[i + nx] - u[i + 2 * nx]) * inv2h;
        const long top = g.idx(i, g.ny - 1);
        d[top] = (3.0 * u[top] - 4.0 * u[top - nx] + u[top - 2 * nx]) * inv2h;
    }
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const long k = g.idx(i, j);
            d[k] = (u[k + nx] - u[k - nx]) * inv2h;
        }
}

/// One-dimensional second derivative with index stride `stride` and n nodes.
/// Edge nodes use the 4-point (2,-5,4,-1)/h^2 stencil when n >= 4 (second
/// order), else the shifted 3-point stencil (still exact on quadratics).
inline double second_diff_1d(const double* u, int pos, int n, long stride, double inv_h2) {
    if (pos == 0) {
        if (n >= 4)
            return (2.0 * u[0] - 5.0 * u[stride] + 4.0 * u[2 * stride] - u[3 * stride]) * inv_h2;
        return (u[0] - 2.0 * u[stride] + u[2 * stride]) * inv_h2;
    }
    if (pos == n - 1) {
        const double* e = u + static_cast<long>(n - 1) * stride;
        if (n >= 4)
            return (2.0 * e[0] - 5.0 * e[-stride] + 4.0 * e[-2 * stride] - e[-3 * stride]) * inv_h2;
        return (e[0] - 2.0 * e[-stride] + e[-2 * stride]) * inv_h2;
    }
    const double* c = u + static_cast<long>(pos) * stride;
    return (c[stride] - 2.0 * c[0] + c[-stride]) * inv_h2;
}

}  // namespace detail

inline VectorField2 gradient(const ScalarField& f) {
    f.check_finite("gradient input");
    VectorField2 out(f.grid);
    detail::diff_x(f, out.x);
    detail::diff_y(f, out.y);
    return out;
}

/// a12 is built as d/dx applied to d/dy(f); the two 1D operators act on
/// independent indices and therefore commute, so the result is symmetric by
/// construction and reduces to the 4-corner cross stencil at interior nodes.
inline SymMatField hessian(const ScalarField& f) {
    f.check_finite("hessian input");
    const GridSpec& g = f.grid;
    SymMatField out(g);
    const double inv_h2 = 1.0 / (g.h * g.h);
    for (int j = 0; j < g.ny; ++j) {
        const double* row = f.v.data() + g.idx(0, j);
        for (int i = 0; i < g.nx; ++i)
            out.a11[g.idx(i, j)] = detail::second_diff_1d(row, i, g.nx, 1, inv_h2);
    }
    for (int i = 0; i < g.nx; ++i) {
        const double* col = f.v.data() + i;
        for (int j = 0; j < g.ny; ++j)
            out.a22[g.idx(i, j)] = detail::second_diff_1d(col, j, g.ny, g.nx, inv_h2);
    }
    ScalarField fy(g);
    detail::diff_y(f, fy.v);
    detail::diff_x(fy, out.a12);
    return out;
}

/// Trace of the discrete Hessian, so laplacian(f) == a11 + a22 node-wise.
inline ScalarField laplacian(const ScalarField& f) {
    const SymMatField H = hessian(f);
    ScalarField out(f.grid);
    for (long k = 0; k < f.grid.size(); ++k) out.v[k] = H.a11[k] + H.a22[k];
    return out;
}

/// Pointwise u_i u_j u_ij from one gradient and one Hessian evaluation.
inline ScalarField infinity_laplacian(const ScalarField& f) {
    const VectorField2 Du = gradient(f);
    const SymMatField H = hessian(f);
    ScalarField out(f.grid);
    for (long k = 0; k < f.grid.size(); ++k) {
        const double g1 = Du.x[k], g2 = Du.y[k];
        out.v[k] = g1 * g1 * H.a11[k] + 2.0 * g1 * g2 * H.a12[k] + g2 * g2 * H.a22[k];
    }
    return out;
}

inline ScalarField infinity_laplacian(const VectorField2& Du, const SymMatField& H) {
    ScalarField out(Du.grid);
    for (long k = 0; k < Du.grid.size(); ++k) {
        const double g1 = Du.x[k], g2 = Du.y[k];
        out.v[k] = g1 * g1 * H.a11[k] + 2.0 * g1 * g2 * H.a12[k] + g2 * g2 * H.a22[k];
    }
    return out;
}

/// |Du| per node.
inline ScalarField speed_field(const VectorField2& Du) {
    ScalarField out(Du.grid);
    for (long k = 0; k < Du.grid.size(); ++k) out.v[k] = Du.norm_at(k);
    return out;
}

}  // namespace inflab

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "inflab/errors.hpp"

namespace inflab {

/// Uniform rectangular grid with square cells. Node (i,j) sits at
/// (origin_x + i*h, origin_y + j*h); storage is row-major by y then x,
/// i.e. index = j*nx + i.
struct GridSpec {
    double origin_x = 0.0;
    double origin_y = 0.0;
    double extent_x = 1.0;
    double extent_y = 1.0;
    int nx = 0;
    int ny = 0;
    double h = 0.0;

    static GridSpec make(double ox, double oy, double ex, double ey, int nx, int ny) {
        if (nx < 3 || ny < 3)
            throw InvariantViolation("grid needs at least 3 nodes per direction");
        if (!(ex > 0.0) || !(ey > 0.0) || !std::isfinite(ox) || !std::isfinite(oy) ||
            !std::isfinite(ex) || !std::isfinite(ey))
            throw InvariantViolation("grid extents must be finite and positive");
        const double hx = ex / (nx - 1);
        const double hy = ey / (ny - 1);
        if (std::abs(hx - hy) > 1e-12 * std::max(hx, hy))
            throw InvariantViolation("cells must be square: hx=" + std::to_string(hx) +
                                     " hy=" + std::to_string(hy));
        GridSpec g;
        g.origin_x = ox;
        g.origin_y = oy;
        g.extent_x = ex;
        g.extent_y = ey;
        g.nx = nx;
        g.ny = ny;
        g.h = hx;
        return g;
    }

    /// Square domain [o, o+e]^2 with n nodes per side.
    static GridSpec square(double o, double e, int n) { return make(o, o, e, e, n, n); }

    long size() const { return static_cast<long>(nx) * ny; }
    long idx(int i, int j) const { return static_cast<long>(j) * nx + i; }
    double x(int i) const { return origin_x + i * h; }
    double y(int j) const { return origin_y + j * h; }
    bool on_boundary(int i, int j) const {
        return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
    }
    bool same_layout(const GridSpec& o) const { return nx == o.nx && ny == o.ny; }
};

/// One real value per node.
struct ScalarField {
    GridSpec grid;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& g, double fill = 0.0)
        : grid(g), v(static_cast<size_t>(g.size()), fill) {}

    template <typename Fn>
    static ScalarField sample(const GridSpec& g, Fn&& fn) {
        ScalarField f(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) f.v[g.idx(i, j)] = fn(g.x(i), g.y(j));
        return f;
    }

    double& at(int i, int j) { return v[grid.idx(i, j)]; }
    double at(int i, int j) const { return v[grid.idx(i, j)]; }

    double max_abs() const {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

    void check_finite(const char* what = "field") const {
        if (v.size() != static_cast<size_t>(grid.size()))
            throw InvariantViolation(std::string(what) + ": value count mismatch");
        for (double x : v)
            if (!std::isfinite(x)) throw InvariantViolation(std::string(what) + ": non-finite value");
    }
};

/// Two real components per node (gradients).
struct VectorField2 {
    GridSpec grid;
    std::vector<double> x;
    std::vector<double> y;

    VectorField2() = default;
    explicit VectorField2(const GridSpec& g)
        : grid(g), x(static_cast<size_t>(g.size()), 0.0), y(static_cast<size_t>(g.size()), 0.0) {}

    double norm_at(long k) const { return std::hypot(x[k], y[k]); }
};

/// Symmetric 2x2 matrix per node; only (a11, a12, a22) stored.
struct SymMatField {
    GridSpec grid;
    std::vector<double> a11;
    std::vector<double> a12;
    std::vector<double> a22;

    SymMatField() = default;
    explicit SymMatField(const GridSpec& g)
        : grid(g),
          a11(static_cast<size_t>(g.size()), 0.0),
          a12(static_cast<size_t>(g.size()), 0.0),
          a22(static_cast<size_t>(g.size()), 0.0) {}
};

enum class RegionKind { disk, square, annulus, strip, full_interior };

/// Node-membership region used by quadrature and the estimate harness.
/// Nodes are the cell centers of the midpoint rule, so membership per node
/// center is the whole story. `margin` additionally shaves a band off the
/// grid rectangle (derived fields are least accurate on the boundary ring).
struct Region {
    RegionKind kind = RegionKind::full_interior;
    double cx = 0.0, cy = 0.0;  // center (disk, square, annulus)
    double a = 0.0, b = 0.0;    // disk: a=r; square: half-widths; annulus: (r_in, r_out); strip: [lo,hi]
    int strip_axis = 0;         // strip: 0 constrains x, 1 constrains y
    double margin = 0.0;

    static Region disk(double cx, double cy, double r, double margin = 0.0) {
        Region R;
        R.kind = RegionKind::disk;
        R.cx = cx; R.cy = cy; R.a = r; R.margin = margin;
        return R;
    }
    static Region square(double cx, double cy, double half_x, double half_y, double margin = 0.0) {
        Region R;
        R.kind = RegionKind::square;
        R.cx = cx; R.cy = cy; R.a = half_x; R.b = half_y; R.margin = margin;
        return R;
    }
    static Region annulus(double cx, double cy, double r_in, double r_out, double margin = 0.0) {
        Region R;
        R.kind = RegionKind::annulus;
        R.cx = cx; R.cy = cy; R.a = r_in; R.b = r_out; R.margin = margin;
        return R;
    }
    static Region strip(int axis, double lo, double hi, double margin = 0.0) {
        Region R;
        R.kind = RegionKind::strip;
        R.strip_axis = axis; R.a = lo; R.b = hi; R.margin = margin;
        return R;
    }
    static Region full_interior(double margin) {
        Region R;
        R.kind = RegionKind::full_interior;
        R.margin = margin;
        return R;
    }

    bool contains(double px, double py, const GridSpec& g) const {
        if (margin > 0.0) {
            if (px < g.origin_x + margin || px > g.origin_x + g.extent_x - margin ||
                py < g.origin_y + margin || py > g.origin_y + g.extent_y - margin)
                return false;
        }
        switch (kind) {
            case RegionKind::disk: {
                const double dx = px - cx, dy = py - cy;
                return dx * dx + dy * dy <= a * a;
            }
            case RegionKind::square:
                return std::abs(px - cx) <= a && std::abs(py - cy) <= b;
            case RegionKind::annulus: {
                const double r2 = (px - cx) * (px - cx) + (py - cy) * (py - cy);
                return r2 >= a * a && r2 <= b * b;
            }
            case RegionKind::strip: {
                const double t = (strip_axis == 0) ? px : py;
                return t >= a && t <= b;
            }
            case RegionKind::full_interior:
                return true;
        }
        return false;
    }

    /// Closure of the region must fit inside the grid rectangle.
    void validate(const GridSpec& g) const {
        const double x0 = g.origin_x, x1 = g.origin_x + g.extent_x;
        const double y0 = g.origin_y, y1 = g.origin_y + g.extent_y;
        auto inside = [&](double px, double py) {
            return px >= x0 - 1e-12 && px <= x1 + 1e-12 && py >= y0 - 1e-12 && py <= y1 + 1e-12;
        };
        bool ok = true;
        switch (kind) {
            case RegionKind::disk:
                ok = inside(cx - a, cy - a) && inside(cx + a, cy + a) && a > 0.0;
                break;
            case RegionKind::square:
                ok = inside(cx - a, cy - b) && inside(cx + a, cy + b) && a > 0.0 && b > 0.0;
                break;
            case RegionKind::annulus:
                ok = inside(cx - b, cy - b) && inside(cx + b, cy + b) && b > a && a >= 0.0;
                break;
            case RegionKind::strip: {
                const double lo = (strip_axis == 0) ? x0 : y0;
                const double hi = (strip_axis == 0) ? x1 : y1;
                ok = b > a && a >= lo - 1e-12 && b <= hi + 1e-12;
                break;
            }
            case RegionKind::full_interior:
                ok = true;
                break;
        }
        if (!ok || margin < 0.0) throw InvariantViolation("region does not fit inside the grid");
    }
};

/// Full interior shrunk by k boundary rings (default 2: one-sided stencils
/// live on ring 0, and ring 1 stencils read ring 0).
inline Region interior_margin(const GridSpec& g, int rings = 2) {
    return Region::full_interior((rings - 0.5) * g.h);  // half-cell slack against FP ties
}

}  // namespace inflab

#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "inflab/grid.hpp"

namespace inflab {

/// Fixed-order pairwise summation; deterministic and O(log n) error growth.
inline double pairwise_sum(std::span<const double> xs) {
    const size_t n = xs.size();
    if (n <= 16) {
        double s = 0.0;
        for (double x : xs) s += x;
        return s;
    }
    const size_t half = n / 2;
    return pairwise_sum(xs.subspan(0, half)) + pairwise_sum(xs.subspan(half));
}

/// Cell-midpoint quadrature: each node owns an h x h cell centered on it;
/// a cell contributes value*h^2 iff its center (the node) lies in R.
template <typename Fn>
double integrate_nodes(const GridSpec& g, const Region& R, Fn&& integrand) {
    R.validate(g);
    std::vector<double> terms;
    terms.reserve(static_cast<size_t>(g.size()) / 4 + 16);
    for (int j = 0; j < g.ny; ++j) {
        const double py = g.y(j);
        for (int i = 0; i < g.nx; ++i) {
            if (R.contains(g.x(i), py, g)) terms.push_back(integrand(g.idx(i, j)));
        }
    }
    return pairwise_sum(terms) * g.h * g.h;
}

inline double integrate(const ScalarField& f, const Region& R) {
    return integrate_nodes(f.grid, R, [&](long k) { return f.v[k]; });
}

/// Quadrature area of R (counts member cells).
inline double region_area(const GridSpec& g, const Region& R) {
    return integrate_nodes(g, R, [](long) { return 1.0; });
}

inline double lp_norm(const ScalarField& f, double p, const Region& R) {
    if (!(p >= 1.0)) throw InvalidArgument("lp_norm requires p >= 1");
    const double s = integrate_nodes(f.grid, R, [&](long k) { return std::pow(std::abs(f.v[k]), p); });
    return std::pow(s, 1.0 / p);
}

inline double sup_norm(const ScalarField& f, const Region& R) {
    double m = 0.0;
    const GridSpec& g = f.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (R.contains(g.x(i), g.y(j), g)) m = std::max(m, std::abs(f.v[g.idx(i, j)]));
    return m;
}

}  // namespace inflab

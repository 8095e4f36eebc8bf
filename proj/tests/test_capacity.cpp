#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "inflab/analytic.hpp"
#include "inflab/capacity.hpp"

using namespace inflab;
using namespace inflab::capacity;

namespace {

solver::SolverConfig cap_cfg() {
    solver::SolverConfig cfg;
    cfg.residual_tolerance = 1e-8;
    cfg.max_outer_iterations = 2000;
    cfg.max_inner_sweeps = 40;
    cfg.relaxation = 1.0;
    return cfg;
}

}  // namespace

TEST_CASE("quadrilateral embedding: arcs partition the boundary counterclockwise") {
    const auto q = Quadrilateral::rectangle(1.0, 1.0, 1.0 / 8);
    CHECK(q.boundary_cycle.size() == 32);
    size_t total = 0;
    for (int a = 0; a < 4; ++a) {
        const auto [b, e] = q.arc_range[a];
        CHECK(e - b == 8);
        total += e - b;
    }
    CHECK(total == q.boundary_cycle.size());
    // closures share exactly the corner nodes
    CHECK(q.arc_closure(0).back() == q.arc_closure(1).front());
    CHECK(q.arc_closure(3).back() == q.arc_closure(0).front());

    CHECK_THROWS_AS(Quadrilateral::make({{0, 0}, {0, 1}, {1, 1}, {1, 0}}, {0, 1, 2, 3},
                                        GridSpec::square(0, 1, 9)),
                    InvalidArgument);  // clockwise
    CHECK_THROWS_AS(Quadrilateral::make({{0, 0}, {0.33, 0}, {0.33, 1}, {0, 1}}, {0, 1, 2, 3},
                                        GridSpec::make(0, 0, 0.33, 1, 4, 10)),
                    InvariantViolation);  // vertex off the node lattice -> non-square cells
}

TEST_CASE("l-shape embedding masks the removed quadrant") {
    const auto q = Quadrilateral::l_shape(2.0, 1.0 / 8);
    const GridSpec& g = q.grid;
    CHECK(q.inside[g.idx(4, 4)] == 1);    // (0.5, 0.5)
    CHECK(q.inside[g.idx(12, 12)] == 0);  // (1.5, 1.5) removed
    CHECK(q.inside[g.idx(8, 12)] == 1);   // (1.0, 1.5) on the reentrant edge
}

TEST_CASE("p-capacity: exact rectangle values") {
    // unit square, opposite sides, p = 2: minimizer u = x, energy 1
    const auto sq = Quadrilateral::rectangle(1.0, 1.0, 1.0 / 64);
    const auto c2 = p_capacity(sq, 1, 3, 2.0, cap_cfg());
    CHECK(c2.converged);
    CHECK(c2.value == doctest::Approx(1.0).epsilon(0.01));

    // [0,2]x[0,1], E = left, F = right, p = 3: u = x/2, energy = 2 * (1/2)^3
    const auto rc = Quadrilateral::rectangle(2.0, 1.0, 1.0 / 64);
    const auto c3 = p_capacity(rc, 3, 1, 3.0, cap_cfg());
    CHECK(c3.value == doctest::Approx(0.25).epsilon(0.01));

    // E = bottom, F = top, p = 3/2: u = y, |Du| = 1, energy = area = 2
    const auto c15 = p_capacity(rc, 0, 2, 1.5, cap_cfg());
    CHECK(c15.value == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("p-capacity guards and minimizer boundary values") {
    const auto rc = Quadrilateral::rectangle(1.0, 1.0, 1.0 / 16);
    CHECK_THROWS_AS(p_capacity(rc, 0, 2, 1.0, cap_cfg()), UnsupportedExponent);
    CHECK_THROWS_AS(p_capacity(rc, 0, 2, 0.5, cap_cfg()), UnsupportedExponent);
    CHECK_THROWS_AS(p_capacity(rc, 0, 1, 2.0, cap_cfg()), InvalidArgument);  // adjacent arcs

    const auto res = p_capacity(rc, 0, 2, 2.5, cap_cfg());
    for (long k : rc.arc_closure(0)) CHECK(res.minimizer.v[k] == 1.0);
    for (long k : rc.arc_closure(2)) CHECK(res.minimizer.v[k] == 0.0);
}

TEST_CASE("capacity non-convergence carries out of the minimizer") {
    solver::SolverConfig starved;
    starved.residual_tolerance = 1e-16;
    starved.max_outer_iterations = 1;
    starved.max_inner_sweeps = 2;
    starved.relaxation = 1.0;
    CHECK_THROWS_AS(p_capacity(Quadrilateral::rectangle(1, 1, 1.0 / 32), 0, 2, 2.0, starved),
                    NonConvergence);
}

TEST_CASE("swapping E and F leaves the capacity unchanged") {
    const auto rc = Quadrilateral::rectangle(2.0, 1.0, 1.0 / 32);
    const auto a = p_capacity(rc, 0, 2, 2.7, cap_cfg());
    const auto b = p_capacity(rc, 2, 0, 2.7, cap_cfg());
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
}

TEST_CASE("dilation scaling: Cap_p scales by lambda^{2-p}") {
    for (double p : {1.5, 3.0}) {
        const auto small = Quadrilateral::rectangle(1.0, 0.5, 1.0 / 64);
        const auto big = Quadrilateral::rectangle(2.0, 1.0, 1.0 / 32);  // same node count
        const double cs = p_capacity(small, 0, 2, p, cap_cfg()).value;
        const double cb = p_capacity(big, 0, 2, p, cap_cfg()).value;
        CHECK(cb == doctest::Approx(std::pow(2.0, 2.0 - p) * cs).epsilon(0.01));
    }
}

TEST_CASE("duality products: rectangles exact, l-shape tightening under refinement") {
    CHECK(duality_product(Quadrilateral::rectangle(1, 1, 1.0 / 64), 2.0, cap_cfg()) ==
          doctest::Approx(1.0).epsilon(0.01));
    for (double p : {1.5, 2.0, 3.0})
        CHECK(duality_product(Quadrilateral::rectangle(2, 1, 1.0 / 64), p, cap_cfg()) ==
              doctest::Approx(1.0).epsilon(0.02));

    const double dev_coarse =
        std::abs(duality_product(Quadrilateral::l_shape(2.0, 1.0 / 32), 2.0, cap_cfg()) - 1.0);
    const double dev_fine =
        std::abs(duality_product(Quadrilateral::l_shape(2.0, 1.0 / 64), 2.0, cap_cfg()) - 1.0);
    CHECK(dev_coarse <= 0.03);
    CHECK(dev_fine <= dev_coarse);

    // desk-scale form of the duality lemma across the p-range
    for (double p : {1.2, 5.0}) {
        const auto q = Quadrilateral::rectangle(2, 1, 1.0 / 32);
        const double tol = 3.0 * std::sqrt(q.grid.h);
        CHECK(std::abs(duality_product(q, p, cap_cfg()) - 1.0) <= tol);
    }
}

TEST_CASE("dual equation: analytic mode is exact off the axes") {
    const GridSpec g = GridSpec::square(0.5, 1.0, 65);
    const Region all = Region::full_interior(0.0);
    const ScalarField r = dual_equation_residual_analytic(g, all);
    CHECK(sup_norm(r, all) <= 1e-10);

    // both sides at (1,1) are sqrt(2)/6
    const double v = 0.5 * std::pow(analytic::aronsson_speed(1.0, 1.0), 2.0);
    const double dv = 16.0 / 27.0 * std::sqrt(2.0);
    CHECK(dv / (2.0 * v) == doctest::Approx(std::sqrt(2.0) / 6.0).epsilon(1e-12));
}

TEST_CASE("dual equation: discrete residual decays at order >= 1") {
    const Region R = Region::full_interior(2.0 / 16.0);
    std::vector<double> sups;
    for (int n : {33, 65, 129}) {
        const GridSpec g = GridSpec::square(0.5, 1.0, n);
        const ScalarField v = ScalarField::sample(g, [](double x, double y) {
            const double s = analytic::aronsson_speed(x, y);
            return 0.5 * s * s;
        });
        sups.push_back(sup_norm(dual_equation_residual(v, R), R));
    }
    CHECK(std::log2(sups.front() / sups.back()) / 2.0 >= 1.0);
}

TEST_CASE("dual equation: radial negative control fails as expected") {
    const GridSpec g = GridSpec::square(0.5, 1.0, 65);
    const ScalarField v = ScalarField::sample(g, [](double x, double y) {
        const double dx = x - 0.1, dy = y - 0.1;
        return 0.5 * (dx * dx + dy * dy);
    });
    const Region R = interior_margin(g, 2);
    const ScalarField r = dual_equation_residual(v, R);
    const long k = g.idx(32, 32);
    const double rho = std::hypot(g.x(32) - 0.1, g.y(32) - 0.1);
    // -div(Dv/|Dv|) = -1/rho but |Dv|/(2v) = 1/rho: residual -2/rho, far from zero
    CHECK(r.v[k] == doctest::Approx(-2.0 / rho).epsilon(1e-3));
    CHECK(std::abs(r.v[k]) > 1.0);

    // degenerate gradient at the cone vertex inside the region
    const ScalarField vc = ScalarField::sample(g, [](double x, double y) {
        const double dx = x - 1.0, dy = y - 1.0;
        return 0.5 * (dx * dx + dy * dy);
    });
    CHECK_THROWS_AS(dual_equation_residual(vc, R), DegenerateGradient);
}

TEST_CASE("singular measure check matches the exact line integrals within 2%") {
    // bump line integral: \int (1 - t^2/r^2)^3 dt = 32 r / 35
    {
        const estimates::TestFunction phi(1.0, 0.0, 0.5, 3);
        const auto res = singular_measure_check(phi);
        const double exact = -2.0 * (32.0 * 0.5 / 35.0);
        CHECK(res.line_value == doctest::Approx(exact).epsilon(1e-6));
        CHECK(std::abs(res.f_value - res.line_value) <= 0.02 * std::abs(res.line_value));
    }
    {
        const estimates::TestFunction phi(1.0, 1.0, 0.4, 3);  // away from both axes
        const auto res = singular_measure_check(phi);
        CHECK(res.line_value == 0.0);
        CHECK(std::abs(res.f_value) <= 2e-3);
    }
    {
        const estimates::TestFunction phi(0.0, 0.0, 0.5, 3);  // both axes
        const auto res = singular_measure_check(phi);
        const double exact = -2.0 * 2.0 * (16.0 / 35.0);
        CHECK(res.line_value == doctest::Approx(exact).epsilon(1e-6));
        CHECK(std::abs(res.f_value - res.line_value) <= 0.02 * std::abs(res.line_value));
    }
}

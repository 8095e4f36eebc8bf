#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "inflab/analytic.hpp"
#include "inflab/fd.hpp"
#include "inflab/grid.hpp"
#include "inflab/io.hpp"
#include "inflab/quadrature.hpp"

using namespace inflab;

TEST_CASE("grid invariants") {
    CHECK_THROWS_AS(GridSpec::make(0, 0, 1, 1, 2, 5), InvariantViolation);
    CHECK_THROWS_AS(GridSpec::make(0, 0, 1, 2, 5, 5), InvariantViolation);  // non-square cells
    const GridSpec g = GridSpec::make(0, 0, 2, 1, 9, 5);
    CHECK(g.h == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(g.size() == 45);
    CHECK(g.on_boundary(0, 2));
    CHECK(!g.on_boundary(1, 2));
}

TEST_CASE("gradient exact on linear and constant fields") {
    const GridSpec g = GridSpec::square(0.0, 1.0, 17);
    const ScalarField fx = ScalarField::sample(g, [](double x, double) { return x; });
    const VectorField2 d = gradient(fx);
    for (long k = 0; k < g.size(); ++k) {
        CHECK(d.x[k] == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(std::abs(d.y[k]) < 1e-13);
    }
    const ScalarField c = ScalarField::sample(g, [](double, double) { return 7.0; });
    const VectorField2 dc = gradient(c);
    for (long k = 0; k < g.size(); ++k) {
        CHECK(dc.x[k] == 0.0);
        CHECK(dc.y[k] == 0.0);
    }
}

TEST_CASE("gradient of the aronsson function at (1,1) is (4/3, -4/3) to O(h^2)") {
    // place a node exactly at (1,1): grid [0.5,1.5]^2 with odd node count
    double errs[2];
    int t = 0;
    for (int n : {65, 129}) {
        const GridSpec g = GridSpec::square(0.5, 1.0, n);
        const ScalarField w = ScalarField::sample(g, analytic::aronsson_value);
        const VectorField2 d = gradient(w);
        const int mid = (n - 1) / 2;
        const long k = g.idx(mid, mid);
        errs[t++] = std::max(std::abs(d.x[k] - 4.0 / 3.0), std::abs(d.y[k] + 4.0 / 3.0));
    }
    CHECK(errs[0] < 1e-4);
    CHECK(errs[1] < errs[0] / 3.0);  // at least ~order 1.6, expect 2
}

TEST_CASE("hessian exact on quadratics") {
    const GridSpec g = GridSpec::square(-1.0, 2.0, 13);
    const ScalarField saddle = ScalarField::sample(g, [](double x, double y) { return x * x - y * y; });
    const SymMatField H = hessian(saddle);
    for (long k = 0; k < g.size(); ++k) {
        CHECK(H.a11[k] == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(H.a22[k] == doctest::Approx(-2.0).epsilon(1e-12));
        CHECK(std::abs(H.a12[k]) < 1e-11);
    }
    const ScalarField xy = ScalarField::sample(g, [](double x, double y) { return x * y; });
    const SymMatField Hxy = hessian(xy);
    for (long k = 0; k < g.size(); ++k) CHECK(Hxy.a12[k] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hessian of aronsson at (1,1) -> diag(4/9, -4/9)") {
    const GridSpec g = GridSpec::square(0.5, 1.0, 129);
    const ScalarField w = ScalarField::sample(g, analytic::aronsson_value);
    const SymMatField H = hessian(w);
    const long k = g.idx(64, 64);
    CHECK(H.a11[k] == doctest::Approx(4.0 / 9.0).epsilon(2e-4));
    CHECK(H.a22[k] == doctest::Approx(-4.0 / 9.0).epsilon(2e-4));
    CHECK(std::abs(H.a12[k]) < 1e-6);
}

TEST_CASE("laplacian equals hessian trace node-wise") {
    const GridSpec g = GridSpec::square(0.0, 1.0, 21);
    const ScalarField f =
        ScalarField::sample(g, [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y); });
    const ScalarField lap = laplacian(f);
    const SymMatField H = hessian(f);
    for (long k = 0; k < g.size(); ++k)
        CHECK(std::abs(lap.v[k] - (H.a11[k] + H.a22[k])) < 1e-12 * (1.0 + std::abs(lap.v[k])));
}

TEST_CASE("infinity laplacian: linear kills it, saddle hand value at (1,2)") {
    const GridSpec g = GridSpec::make(0.0, 0.0, 3.0, 3.0, 13, 13);
    const ScalarField lin = ScalarField::sample(g, [](double x, double y) { return 2 * x - y + 3; });
    const ScalarField d_lin = infinity_laplacian(lin);
    for (long k = 0; k < g.size(); ++k) CHECK(std::abs(d_lin.v[k]) < 1e-11);

    // oracle: u_x^2 u_xx + 2 u_x u_y u_xy + u_y^2 u_yy for u = x^2 - y^2
    // at (1,2): ux=2, uy=-4, uxx=2, uyy=-2, uxy=0 -> 4*2 + 16*(-2) = -24
    const ScalarField saddle = ScalarField::sample(g, [](double x, double y) { return x * x - y * y; });
    const ScalarField dinf = infinity_laplacian(saddle);
    const ScalarField lap = laplacian(saddle);
    const int i = 4, j = 8;  // node (1.0, 2.0) with h = 0.25
    REQUIRE(g.x(i) == doctest::Approx(1.0));
    REQUIRE(g.y(j) == doctest::Approx(2.0));
    CHECK(dinf.v[g.idx(i, j)] == doctest::Approx(-24.0).epsilon(1e-12));
    for (long k = 0; k < g.size(); ++k) CHECK(std::abs(lap.v[k]) < 1e-10);
}

TEST_CASE("discrete infinity laplacian of w decays at order >= 1.9") {
    // sup over a fixed physical region (2x the coarsest h) so the h-sweep
    // compares the same functional
    const Region R = Region::full_interior(2.0 / 32.0);
    std::vector<double> sups;
    for (int n : {33, 65, 129}) {
        const GridSpec g = GridSpec::square(0.5, 1.0, n);
        const ScalarField w = ScalarField::sample(g, analytic::aronsson_value);
        sups.push_back(sup_norm(infinity_laplacian(w), R));
    }
    for (size_t i = 0; i + 1 < sups.size(); ++i) {
        const double order = std::log2(sups[i] / sups[i + 1]);
        CHECK(order >= 1.9);
    }
}

TEST_CASE("operators are linear to machine precision") {
    const GridSpec g = GridSpec::square(0.0, 1.0, 33);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ScalarField f(g), q(g);
    for (long k = 0; k < g.size(); ++k) {
        f.v[k] = U(rng);
        q.v[k] = U(rng);
    }
    const double a = 1.7, b = -0.3;
    ScalarField combo(g);
    for (long k = 0; k < g.size(); ++k) combo.v[k] = a * f.v[k] + b * q.v[k];
    const VectorField2 d_combo = gradient(combo);
    const VectorField2 df = gradient(f), dq = gradient(q);
    double scale = 0.0;
    for (long k = 0; k < g.size(); ++k) scale = std::max(scale, std::abs(d_combo.x[k]));
    for (long k = 0; k < g.size(); ++k) {
        CHECK(std::abs(d_combo.x[k] - (a * df.x[k] + b * dq.x[k])) < 1e-12 * (1.0 + scale));
        CHECK(std::abs(d_combo.y[k] - (a * df.y[k] + b * dq.y[k])) < 1e-12 * (1.0 + scale));
    }
}

TEST_CASE("quadrature: constants, polynomial disk integral, lp norms") {
    const GridSpec g = GridSpec::square(-1.25, 2.5, 257);
    const Region unit_square = Region::square(0.0, 0.0, 0.5, 0.5);
    const ScalarField one = ScalarField::sample(g, [](double, double) { return 1.0; });
    CHECK(integrate(one, unit_square) == doctest::Approx(1.0).epsilon(2.5 * g.h));

    // disk integral of x^4 over B(0,1): pi/8 (polar: int cos^4 = 3pi/4, int r^5 = 1/6)
    const ScalarField x4 = ScalarField::sample(g, [](double x, double) { return x * x * x * x; });
    const Region ball = Region::disk(0.0, 0.0, 1.0);
    CHECK(integrate(x4, ball) == doctest::Approx(M_PI / 8.0).epsilon(2e-3));

    const ScalarField c = ScalarField::sample(g, [](double, double) { return 3.0; });
    const double area = region_area(g, unit_square);
    CHECK(lp_norm(c, 4.0, unit_square) == doctest::Approx(3.0 * std::pow(area, 0.25)).epsilon(1e-12));
    CHECK_THROWS_AS(lp_norm(c, 0.5, unit_square), InvalidArgument);
}

TEST_CASE("bump quadrature converges at order >= 2") {
    // exact integral of (1 - |x|^2/r^2)^3 over B(0,r) is pi r^2 / 4
    const double r = 0.8;
    const double exact = M_PI * r * r / 4.0;
    std::vector<double> errs;
    for (int n : {33, 65, 129, 257}) {
        const GridSpec g = GridSpec::square(-1.0, 2.0, n);
        const ScalarField f = ScalarField::sample(g, [r](double x, double y) {
            const double t = 1.0 - (x * x + y * y) / (r * r);
            return t > 0 ? t * t * t : 0.0;
        });
        errs.push_back(std::abs(integrate(f, Region::full_interior(0.0)) - exact));
    }
    const double order = std::log2(errs[0] / errs.back()) / 3.0;
    CHECK(order >= 2.0);
}

TEST_CASE("region validation and membership") {
    const GridSpec g = GridSpec::square(0.0, 1.0, 17);
    CHECK_THROWS_AS(Region::disk(0.9, 0.5, 0.3).validate(g), InvariantViolation);
    const Region R = Region::annulus(0.5, 0.5, 0.2, 0.4);
    R.validate(g);
    CHECK(R.contains(0.8, 0.5, g));
    CHECK(!R.contains(0.5, 0.5, g));
    const Region S = Region::strip(0, 0.25, 0.5);
    CHECK(S.contains(0.3, 0.9, g));
    CHECK(!S.contains(0.6, 0.9, g));
    const Region M = Region::full_interior(0.2);
    CHECK(!M.contains(0.1, 0.5, g));
    CHECK(M.contains(0.5, 0.5, g));
}

TEST_CASE("field csv dump format") {
    const GridSpec g = GridSpec::square(0.0, 1.0, 3);
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return x + 10 * y; });
    const std::string path = "test_field_dump.csv";
    write_field_csv(f, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "x,y,value");
    std::string line;
    int count = 0;
    std::string first;
    while (std::getline(in, line)) {
        if (count == 1) first = line;  // second row: node (1,0) -> x=0.5,y=0,value=0.5
        ++count;
    }
    CHECK(count == 9);
    CHECK(first == "0.5,0,0.5");
    std::remove(path.c_str());
}

TEST_CASE("pairwise sum is deterministic and accurate") {
    std::vector<double> xs(100001);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    long double exact = 0.0;
    for (auto& x : xs) {
        x = U(rng);
        exact += static_cast<long double>(x);
    }
    const double s1 = pairwise_sum(xs);
    const double s2 = pairwise_sum(xs);
    CHECK(s1 == s2);
    CHECK(std::abs(s1 - static_cast<double>(exact)) < 1e-9);
}

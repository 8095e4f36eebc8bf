#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "inflab/errors.hpp"
#include "inflab/fd.hpp"
#include "inflab/grid.hpp"

namespace inflab::analytic {

// ---------------------------------------------------------------------------
// Aronsson function w = |x1|^{4/3} - |x2|^{4/3} and its derived quantities.
// All fractional powers go through cbrt so the formulas hold on every
// quadrant; the second derivatives blow up on the coordinate axes.
// ---------------------------------------------------------------------------

inline double pow43(double t) {
    const double c = std::cbrt(t);
    return c * c * c * c;
}
inline double pow23(double t) {
    const double c = std::cbrt(t);
    return c * c;
}

inline double aronsson_value(double x, double y) { return pow43(x) - pow43(y); }

inline std::array<double, 2> aronsson_grad(double x, double y) {
    return {4.0 / 3.0 * std::cbrt(x), -4.0 / 3.0 * std::cbrt(y)};
}

/// |Dw| = (4/3) (x^{2/3} + y^{2/3})^{1/2}
inline double aronsson_speed(double x, double y) {
    return 4.0 / 3.0 * std::sqrt(pow23(x) + pow23(y));
}

/// (a11, a12, a22); singular on the axes.
inline std::array<double, 3> aronsson_hess(double x, double y) {
    return {4.0 / 9.0 / pow23(x), 0.0, -4.0 / 9.0 / pow23(y)};
}

/// D(|Dw|^2) = (32/27) (x^{-1/3}, y^{-1/3}).
inline std::array<double, 2> aronsson_speed2_grad(double x, double y) {
    return {32.0 / 27.0 / std::cbrt(x), 32.0 / 27.0 / std::cbrt(y)};
}

/// D(|Dw|^alpha) = (alpha/2) |Dw|^{alpha-2} D(|Dw|^2).
inline std::array<double, 2> aronsson_speed_pow_grad(double x, double y, double alpha) {
    const double s = aronsson_speed(x, y);
    const double c = 0.5 * alpha * std::pow(s, alpha - 2.0);
    const auto d2 = aronsson_speed2_grad(x, y);
    return {c * d2[0], c * d2[1]};
}

/// |D(|Dw|^alpha)| = (alpha/2) |Dw|^{alpha-2} * (32/27) (x^{-2/3}+y^{-2/3})^{1/2}.
inline double aronsson_speed_pow_grad_norm(double x, double y, double alpha) {
    const double s = aronsson_speed(x, y);
    return 0.5 * alpha * std::pow(s, alpha - 2.0) * (32.0 / 27.0) *
           std::sqrt(1.0 / pow23(x) + 1.0 / pow23(y));
}

/// |D log|Dw|| = (1/2) |Dw|^{-2} |D(|Dw|^2)|.
inline double aronsson_log_speed_grad_norm(double x, double y) {
    const double s = aronsson_speed(x, y);
    return 0.5 / (s * s) * (32.0 / 27.0) * std::sqrt(1.0 / pow23(x) + 1.0 / pow23(y));
}

inline bool on_axis(double x, double y, double tol) {
    return std::abs(x) <= tol || std::abs(y) <= tol;
}

// ---------------------------------------------------------------------------
// Reference function registry
// ---------------------------------------------------------------------------

/// Closed-form reference with exact derivatives. `singular` marks points
/// where the C^2 evaluators are invalid.
struct ReferenceFunction {
    std::string name;
    std::function<double(double, double)> value;
    std::function<std::array<double, 2>(double, double)> grad;
    std::function<std::array<double, 3>(double, double)> hess;
    std::function<bool(double, double)> singular = [](double, double) { return false; };
    std::string singular_set;
};

inline ReferenceFunction make_aronsson() {
    ReferenceFunction f;
    f.name = "aronsson";
    f.value = aronsson_value;
    f.grad = [](double x, double y) { return aronsson_grad(x, y); };
    f.hess = [](double x, double y) {
        if (on_axis(x, y, 0.0)) throw SingularNode("aronsson hessian requested on an axis");
        return aronsson_hess(x, y);
    };
    f.singular = [](double x, double y) { return on_axis(x, y, 0.0); };
    f.singular_set = "coordinate axes (second derivatives)";
    return f;
}

inline ReferenceFunction make_linear(double a, double b, double c) {
    ReferenceFunction f;
    std::ostringstream nm;
    nm << "linear:" << a << ',' << b << ',' << c;
    f.name = nm.str();
    f.value = [a, b, c](double x, double y) { return a * x + b * y + c; };
    f.grad = [a, b](double, double) { return std::array<double, 2>{a, b}; };
    f.hess = [](double, double) { return std::array<double, 3>{0.0, 0.0, 0.0}; };
    return f;
}

/// Distance cone |x - x0|; infinity-harmonic away from the vertex.
inline ReferenceFunction make_cone(double x0, double y0) {
    ReferenceFunction f;
    std::ostringstream nm;
    nm << "cone:" << x0 << ',' << y0;
    f.name = nm.str();
    f.value = [x0, y0](double x, double y) { return std::hypot(x - x0, y - y0); };
    f.grad = [x0, y0](double x, double y) {
        const double r = std::hypot(x - x0, y - y0);
        return std::array<double, 2>{(x - x0) / r, (y - y0) / r};
    };
    f.hess = [x0, y0](double x, double y) {
        const double dx = x - x0, dy = y - y0;
        const double r2 = dx * dx + dy * dy;
        const double r3 = r2 * std::sqrt(r2);
        return std::array<double, 3>{dy * dy / r3, -dx * dy / r3, dx * dx / r3};
    };
    f.singular = [x0, y0](double x, double y) { return x == x0 && y == y0; };
    f.singular_set = "vertex";
    return f;
}

inline ReferenceFunction make_saddle() {
    ReferenceFunction f;
    f.name = "quadratic-saddle";
    f.value = [](double x, double y) { return x * x - y * y; };
    f.grad = [](double x, double y) { return std::array<double, 2>{2.0 * x, -2.0 * y}; };
    f.hess = [](double, double) { return std::array<double, 3>{2.0, 0.0, -2.0}; };
    return f;
}

inline std::vector<std::string> reference_names() {
    return {"aronsson", "linear:a,b,c", "cone:x0,y0", "quadratic-saddle"};
}

/// Parse "aronsson", "linear:a,b,c", "cone:x0,y0", "quadratic-saddle".
inline ReferenceFunction make_reference(const std::string& spec) {
    auto parse_args = [](const std::string& s, size_t want) {
        std::vector<double> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            size_t used = 0;
            out.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw InvalidArgument("bad number '" + tok + "'");
        }
        if (out.size() != want)
            throw InvalidArgument("expected " + std::to_string(want) + " parameters, got " +
                                  std::to_string(out.size()));
        return out;
    };
    const auto colon = spec.find(':');
    const std::string head = spec.substr(0, colon);
    const std::string tail = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (head == "aronsson") return make_aronsson();
    if (head == "quadratic-saddle" || head == "saddle") return make_saddle();
    if (head == "linear") {
        if (tail.empty()) return make_linear(1.0, 0.0, 0.0);
        const auto a = parse_args(tail, 3);
        return make_linear(a[0], a[1], a[2]);
    }
    if (head == "cone") {
        const auto a = parse_args(tail.empty() ? "-0.5,-0.5" : tail, 2);
        return make_cone(a[0], a[1]);
    }
    throw InvalidArgument("unknown reference function '" + spec + "'");
}

// ---------------------------------------------------------------------------
// Exact Aronsson field sampling
// ---------------------------------------------------------------------------

struct AronssonFields {
    ScalarField value;
    VectorField2 grad;
    std::optional<SymMatField> hess;
    ScalarField speed;
};

/// Samples of w, Dw, |Dw| and (optionally) D^2w. Throws SingularNode if a
/// second-derivative sample lands on an axis; offset the grid by h/2 there.
inline AronssonFields aronsson_fields(const GridSpec& g, bool with_hessian = true) {
    AronssonFields out{ScalarField(g), VectorField2(g), std::nullopt, ScalarField(g)};
    if (with_hessian) out.hess = SymMatField(g);
    const double axis_tol = 1e-12 * g.h;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.x(i), y = g.y(j);
            const long k = g.idx(i, j);
            out.value.v[k] = aronsson_value(x, y);
            const auto dg = aronsson_grad(x, y);
            out.grad.x[k] = dg[0];
            out.grad.y[k] = dg[1];
            out.speed.v[k] = aronsson_speed(x, y);
            if (with_hessian) {
                if (on_axis(x, y, axis_tol))
                    throw SingularNode("node (" + std::to_string(x) + "," + std::to_string(y) +
                                       ") lies on an axis; offset the grid by h/2");
                const auto H = aronsson_hess(x, y);
                out.hess->a11[k] = H[0];
                out.hess->a12[k] = H[1];
                out.hess->a22[k] = H[2];
            }
        }
    return out;
}

}  // namespace inflab::analytic

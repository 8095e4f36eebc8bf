#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "inflab/analytic.hpp"
#include "inflab/errors.hpp"

namespace inflab::analytic {

/// Which singular set of w the dyadic pieces shrink towards.
enum class SingularityMode { origin, axis };

struct ExponentFit {
    double alpha = 0.0;
    SingularityMode mode = SingularityMode::origin;
    double fitted_critical_p = 0.0;  // +inf sentinel when no divergence up to p_max
    double stderr_p = 0.0;
    double target_p_alpha = 0.0;
    int levels = 0;
};

namespace detail {

/// Per-level quadrature samples of ln f with weights, where f is the
/// integrand whose p-th power is integrated. Level k covers the annulus
/// B(0,2^-k) \ B(0,2^-k-1) (origin, quarter-plane x4) or the strip
/// {1 < x1 < 2} x {2^-k-1 < x2 < 2^-k} (axis).
struct DyadicLevel {
    std::vector<double> log_f;
    std::vector<double> weight;
};

template <typename Fn>
DyadicLevel sample_level(int k, SingularityMode mode, int nsamp, Fn&& integrand) {
    DyadicLevel lvl;
    lvl.log_f.reserve(static_cast<size_t>(nsamp) * nsamp);
    lvl.weight.reserve(static_cast<size_t>(nsamp) * nsamp);
    if (mode == SingularityMode::origin) {
        const double r1 = std::ldexp(1.0, -k);
        const double r0 = 0.5 * r1;
        const double dr = (r1 - r0) / nsamp;
        const double dth = (M_PI / 2.0) / nsamp;
        for (int a = 0; a < nsamp; ++a) {
            const double r = r0 + (a + 0.5) * dr;
            for (int b = 0; b < nsamp; ++b) {
                const double th = (b + 0.5) * dth;
                const double x = r * std::cos(th), y = r * std::sin(th);
                lvl.log_f.push_back(std::log(integrand(x, y)));
                lvl.weight.push_back(4.0 * r * dr * dth);
            }
        }
    } else {
        const double y1 = std::ldexp(1.0, -k);
        const double y0 = 0.5 * y1;
        const double dy = (y1 - y0) / nsamp;
        const double dx = 1.0 / nsamp;
        for (int a = 0; a < nsamp; ++a) {
            const double x = 1.0 + (a + 0.5) * dx;
            for (int b = 0; b < nsamp; ++b) {
                const double y = y0 + (b + 0.5) * dy;
                lvl.log_f.push_back(std::log(integrand(x, y)));
                lvl.weight.push_back(dx * dy);
            }
        }
    }
    return lvl;
}

inline double log_integral_pow(const DyadicLevel& lvl, double p) {
    double lmax = -std::numeric_limits<double>::infinity();
    for (double lf : lvl.log_f) lmax = std::max(lmax, p * lf);
    double s = 0.0;
    for (size_t i = 0; i < lvl.log_f.size(); ++i)
        s += lvl.weight[i] * std::exp(p * lvl.log_f[i] - lmax);
    return lmax + std::log(s);
}

struct SlopeFit {
    double slope;
    double slope_stderr;
};

/// Least squares of log I_k against k.
inline SlopeFit fit_slope(const std::vector<DyadicLevel>& levels, int k0, double p) {
    const int n = static_cast<int>(levels.size());
    double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
    std::vector<double> ys(n);
    for (int i = 0; i < n; ++i) {
        const double k = k0 + i;
        ys[i] = log_integral_pow(levels[i], p);
        sk += k;
        sy += ys[i];
        skk += k * k;
        sky += k * ys[i];
    }
    const double det = n * skk - sk * sk;
    const double slope = (n * sky - sk * sy) / det;
    const double icept = (sy - slope * sk) / n;
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = ys[i] - (icept + slope * (k0 + i));
        ss += r * r;
    }
    const double var = (n > 2) ? ss / (n - 2) / (skk - sk * sk / n) : 0.0;
    return {slope, std::sqrt(std::max(0.0, var))};
}

template <typename Fn>
ExponentFit fit_critical_exponent(double alpha, SingularityMode mode, int levels_n, double target,
                                  Fn&& integrand) {
    if (levels_n < 5) throw InsufficientLevels(levels_n);
    constexpr int kNsamp = 256;
    constexpr double kPMin = 0.5, kPMax = 10.0, kPTol = 0.02;
    const int k0 = (mode == SingularityMode::origin) ? 1 : 6;

    std::vector<detail::DyadicLevel> lv;
    lv.reserve(static_cast<size_t>(levels_n));
    for (int i = 0; i < levels_n; ++i)
        lv.push_back(detail::sample_level(k0 + i, mode, kNsamp, integrand));

    ExponentFit fit;
    fit.alpha = alpha;
    fit.mode = mode;
    fit.target_p_alpha = target;
    fit.levels = levels_n;

    auto slope = [&](double p) { return detail::fit_slope(lv, k0, p); };
    double lo = kPMin, hi = kPMax;
    const SlopeFit s_lo = slope(lo);
    if (s_lo.slope >= 0.0)
        throw Error("dyadic integrals already divergent at p = " + std::to_string(lo));
    SlopeFit s_hi = slope(hi);
    if (s_hi.slope < 0.0) {
        // convergent through the whole sweep: report the +inf sentinel
        fit.fitted_critical_p = std::numeric_limits<double>::infinity();
        fit.stderr_p = 0.0;
        return fit;
    }
    while (hi - lo > kPTol) {
        const double mid = 0.5 * (lo + hi);
        if (slope(mid).slope < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    fit.fitted_critical_p = 0.5 * (lo + hi);
    const SlopeFit at_root = slope(fit.fitted_critical_p);
    const double ds_dp =
        (slope(fit.fitted_critical_p + 0.1).slope - slope(fit.fitted_critical_p - 0.1).slope) / 0.2;
    fit.stderr_p = ds_dp > 0.0 ? at_root.slope_stderr / ds_dp : 0.0;
    return fit;
}

}  // namespace detail

/// Slope of log I_k vs k for I_k = dyadic integral of f^p (diagnostic /
/// oracle hook; negative slope means the dyadic sum converges).
inline double dyadic_decay_slope(double p, double alpha, SingularityMode mode, int levels_n,
                                 bool log_integrand = false) {
    if (levels_n < 5) throw InsufficientLevels(levels_n);
    const int k0 = (mode == SingularityMode::origin) ? 1 : 6;
    std::vector<detail::DyadicLevel> lv;
    for (int i = 0; i < levels_n; ++i) {
        if (log_integrand)
            lv.push_back(detail::sample_level(k0 + i, mode, 256, [](double x, double y) {
                return aronsson_log_speed_grad_norm(x, y);
            }));
        else
            lv.push_back(detail::sample_level(k0 + i, mode, 256, [alpha](double x, double y) {
                return aronsson_speed_pow_grad_norm(x, y, alpha);
            }));
    }
    return detail::fit_slope(lv, k0, p).slope;
}

/// Fits the divergence threshold of \int |D(|Dw|^alpha)|^p over dyadic
/// pieces shrinking to the chosen singular set. Sobolev sharpness target:
/// p_alpha = 3 for alpha >= 1 and 6/(3-alpha) for alpha in (0,1).
inline ExponentFit critical_exponent_estimate(double alpha, SingularityMode mode, int levels_n) {
    if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
    const double target =
        (mode == SingularityMode::axis)
            ? 3.0
            : (alpha < 3.0 ? 6.0 / (3.0 - alpha) : std::numeric_limits<double>::infinity());
    return detail::fit_critical_exponent(alpha, mode, levels_n, target,
                                         [alpha](double x, double y) {
                                             return aronsson_speed_pow_grad_norm(x, y, alpha);
                                         });
}

/// Same machinery for |D log|Dw||; the combined (origin + axis) threshold is
/// the smaller of the two fitted values, with target p = 2.
inline ExponentFit log_speed_exponent_estimate(int levels_n) {
    auto integrand = [](double x, double y) { return aronsson_log_speed_grad_norm(x, y); };
    ExponentFit origin =
        detail::fit_critical_exponent(0.0, SingularityMode::origin, levels_n, 2.0, integrand);
    ExponentFit axis =
        detail::fit_critical_exponent(0.0, SingularityMode::axis, levels_n, 2.0, integrand);
    return (origin.fitted_critical_p <= axis.fitted_critical_p) ? origin : axis;
}

}  // namespace inflab::analytic

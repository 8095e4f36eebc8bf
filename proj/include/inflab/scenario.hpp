#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "inflab/analytic.hpp"
#include "inflab/capacity.hpp"
#include "inflab/errors.hpp"
#include "inflab/estimates.hpp"
#include "inflab/exponents.hpp"
#include "inflab/io.hpp"
#include "inflab/solver.hpp"
#include "inflab/version.hpp"

namespace inflab::cli {

using nlohmann::json;

struct ScenarioConfig {
    std::string scenario;
    GridSpec grid = GridSpec::square(0.5, 1.0, 129);
    std::string boundary = "aronsson";
    std::vector<double> epsilons{1e-2};
    std::vector<double> alphas{1.0};
    std::vector<double> kappas{1e-4};
    std::vector<double> ps{3.0};
    std::vector<int> node_counts{};
    std::string quad = "rectangle:2,1";
    double quad_spacing = 1.0 / 64.0;
    std::string out_dir = "out";
    bool deterministic = false;
    solver::SolverConfig solver_cfg;
    double kappa_default = 0.0;
    double delta = 0.0;
    json echo;
};

// ---------------------------------------------------------------------------
// Config parsing (flat JSON document)
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
T get_or(const json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("field '" + key + "': " + e.what());
    }
}

inline GridSpec parse_grid(const json& j) {
    if (!j.is_object()) throw ConfigError("'grid' must be an object");
    const auto origin = get_or<std::vector<double>>(j, "origin", {0.5, 0.5});
    const auto extent = get_or<std::vector<double>>(j, "extent", {1.0, 1.0});
    const auto nodes = get_or<std::vector<int>>(j, "nodes", {129, 129});
    if (origin.size() != 2 || extent.size() != 2 || nodes.size() != 2)
        throw ConfigError("'grid' origin/extent/nodes must have 2 entries");
    try {
        return GridSpec::make(origin[0], origin[1], extent[0], extent[1], nodes[0], nodes[1]);
    } catch (const Error& e) {
        throw ConfigError(std::string("'grid': ") + e.what());
    }
}

}  // namespace detail

inline ScenarioConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("top-level document must be an object");
    static const std::vector<std::string> known = {
        "scenario", "grid",         "boundary", "epsilons",      "alphas",
        "kappas",   "ps",           "nodes",    "quad",          "quad_spacing",
        "out_dir",  "deterministic", "solver",  "kappa",         "delta"};
    for (auto it = doc.begin(); it != doc.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            throw ConfigError("unknown field '" + it.key() + "'");

    ScenarioConfig cfg;
    cfg.echo = doc;
    if (!doc.contains("scenario")) throw ConfigError("missing 'scenario'");
    cfg.scenario = doc.at("scenario").get<std::string>();
    static const std::vector<std::string> kinds = {"solve",     "verify",   "sweep",
                                                   "sharpness", "capacity", "dual"};
    if (std::find(kinds.begin(), kinds.end(), cfg.scenario) == kinds.end())
        throw ConfigError("unknown scenario '" + cfg.scenario + "'");

    if (doc.contains("grid")) cfg.grid = detail::parse_grid(doc.at("grid"));
    cfg.boundary = detail::get_or<std::string>(doc, "boundary", cfg.boundary);
    cfg.epsilons = detail::get_or<std::vector<double>>(doc, "epsilons", cfg.epsilons);
    cfg.alphas = detail::get_or<std::vector<double>>(doc, "alphas", cfg.alphas);
    cfg.kappas = detail::get_or<std::vector<double>>(doc, "kappas", cfg.kappas);
    cfg.ps = detail::get_or<std::vector<double>>(doc, "ps", cfg.ps);
    cfg.node_counts = detail::get_or<std::vector<int>>(doc, "nodes", cfg.node_counts);
    cfg.quad = detail::get_or<std::string>(doc, "quad", cfg.quad);
    cfg.quad_spacing = detail::get_or<double>(doc, "quad_spacing", cfg.quad_spacing);
    cfg.out_dir = detail::get_or<std::string>(doc, "out_dir", cfg.out_dir);
    cfg.deterministic = detail::get_or<bool>(doc, "deterministic", cfg.deterministic);
    cfg.kappa_default = detail::get_or<double>(doc, "kappa", 0.0);
    cfg.delta = detail::get_or<double>(doc, "delta", 0.0);

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        cfg.solver_cfg.max_outer_iterations =
            detail::get_or<int>(s, "max_outer_iterations", cfg.solver_cfg.max_outer_iterations);
        cfg.solver_cfg.max_inner_sweeps =
            detail::get_or<int>(s, "max_inner_sweeps", cfg.solver_cfg.max_inner_sweeps);
        cfg.solver_cfg.residual_tolerance =
            detail::get_or<double>(s, "residual_tolerance", cfg.solver_cfg.residual_tolerance);
        cfg.solver_cfg.relaxation = detail::get_or<double>(s, "relaxation", cfg.solver_cfg.relaxation);
        cfg.solver_cfg.deterministic_ordering =
            detail::get_or<bool>(s, "deterministic_ordering", cfg.solver_cfg.deterministic_ordering);
        try {
            cfg.solver_cfg.validate();
        } catch (const Error& e) {
            throw ConfigError(std::string("'solver': ") + e.what());
        }
    }

    const bool needs_lists = cfg.scenario == "sweep" || cfg.scenario == "sharpness";
    if (needs_lists && (cfg.epsilons.empty() || cfg.alphas.empty()))
        throw ConfigError("sweep scenarios need nonempty epsilon/alpha lists");

    if (cfg.boundary.rfind("csv:", 0) != 0) {
        try {
            analytic::make_reference(cfg.boundary);  // validate registry name early
        } catch (const Error& e) {
            throw ConfigError("'boundary': " + std::string(e.what()));
        }
    }
    return cfg;
}

inline ScenarioConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("parse error in '") + path + "': " + e.what());
    }
    return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Report emission
// ---------------------------------------------------------------------------

inline void write_reports_csv(const std::vector<estimates::EstimateReport>& rows,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "'");
    out << "name,lhs,rhs_core,ratio,pass,h,epsilon,alpha,kappa\n";
    for (const auto& r : rows)
        out << r.name << ',' << num17(r.lhs) << ',' << num17(r.rhs_core) << ',' << num17(r.ratio)
            << ',' << (r.pass ? "true" : "false") << ',' << num17(r.h) << ',' << num17(r.epsilon)
            << ',' << num17(r.alpha) << ',' << num17(r.kappa) << '\n';
}

inline void write_reports_json(const std::vector<estimates::EstimateReport>& rows,
                               const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "'");
    out << "[\n";
    for (size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        out << "  {\"name\":\"" << r.name << "\",\"lhs\":" << num17(r.lhs)
            << ",\"rhs_core\":" << num17(r.rhs_core) << ",\"ratio\":" << num17(r.ratio)
            << ",\"pass\":" << (r.pass ? "true" : "false") << ",\"h\":" << num17(r.h)
            << ",\"epsilon\":" << num17(r.epsilon) << ",\"alpha\":" << num17(r.alpha)
            << ",\"kappa\":" << num17(r.kappa) << "}" << (i + 1 < rows.size() ? "," : "") << "\n";
    }
    out << "]\n";
}

namespace detail {

/// JSON numbers like "inf" are not representable; quote them.
inline std::string json_num(double x) {
    if (std::isfinite(x)) return num17(x);
    return std::string("\"") + (x > 0 ? "inf" : (x < 0 ? "-inf" : "nan")) + "\"";
}

struct RunContext {
    const ScenarioConfig& cfg;
    std::vector<estimates::EstimateReport> rows;
    std::vector<std::string> artifacts;
    std::filesystem::path dir;

    explicit RunContext(const ScenarioConfig& c) : cfg(c), dir(c.out_dir) {
        std::filesystem::create_directories(dir);
    }
    void add(estimates::EstimateReport r) { rows.push_back(std::move(r)); }
    std::string path(const std::string& name) {
        artifacts.push_back(name);
        return (dir / name).string();
    }
    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

inline std::string eps_tag(double eps) {
    std::ostringstream ss;
    ss << eps;
    std::string s = ss.str();
    for (char& c : s)
        if (c == '.' || c == '+') c = '_';
    return s;
}

inline solver::BoundaryData boundary_for(const ScenarioConfig& cfg, const GridSpec& g) {
    if (cfg.boundary.rfind("csv:", 0) == 0)
        return solver::BoundaryData::from_csv(g, cfg.boundary.substr(4));
    return solver::BoundaryData::from_reference(analytic::make_reference(cfg.boundary));
}

/// Default V << W pair proportional to the grid rectangle.
inline estimates::SubdomainPair default_pair(const GridSpec& g) {
    const double cx = g.origin_x + 0.5 * g.extent_x, cy = g.origin_y + 0.5 * g.extent_y;
    const Region V = Region::square(cx, cy, 0.25 * g.extent_x, 0.25 * g.extent_y);
    const Region W = Region::square(cx, cy, 0.40 * g.extent_x, 0.40 * g.extent_y);
    return estimates::SubdomainPair::make(V, W, g);
}

inline estimates::EstimateReport basic_row(const std::string& name, double lhs, double rhs,
                                           bool pass, const GridSpec& g, double eps = 0.0,
                                           double alpha = 0.0, double kappa = 0.0) {
    estimates::EstimateReport r;
    r.name = name;
    r.lhs = lhs;
    r.rhs_core = rhs;
    r.ratio = rhs != 0.0 ? std::abs(lhs) / std::abs(rhs) : (lhs == 0.0 ? 0.0 : INFINITY);
    r.pass = pass;
    r.h = g.h;
    r.epsilon = eps;
    r.alpha = alpha;
    r.kappa = kappa;
    return r;
}

// --- scenario bodies -------------------------------------------------------

inline void run_solve(RunContext& ctx) {
    const ScenarioConfig& cfg = ctx.cfg;
    const solver::BoundaryData bd = boundary_for(cfg, cfg.grid);
    for (double eps : cfg.epsilons) {
        solver::RegularizationParams rp{eps, cfg.kappa_default, cfg.delta};
        solver::SolveStats st;
        const ScalarField u = solver::solve_dirichlet(cfg.grid, bd, rp, cfg.solver_cfg, &st);
        write_field_csv(u, ctx.path("u_eps" + eps_tag(eps) + ".csv"));
        ctx.add(basic_row("solve_residual", st.final_residual, cfg.solver_cfg.residual_tolerance,
                          st.final_residual <= cfg.solver_cfg.residual_tolerance, cfg.grid, eps));
        const double viol = std::max(
            0.0, std::max(st.boundary_min - *std::min_element(u.v.begin(), u.v.end()),
                          *std::max_element(u.v.begin(), u.v.end()) - st.boundary_max));
        ctx.add(basic_row("max_principle", viol, 10.0 * cfg.solver_cfg.residual_tolerance,
                          viol <= 10.0 * cfg.solver_cfg.residual_tolerance, cfg.grid, eps));
    }
}

inline void run_verify(RunContext& ctx) {
    const ScenarioConfig& cfg = ctx.cfg;
    const GridSpec& g = cfg.grid;
    const solver::BoundaryData bd = boundary_for(cfg, g);
    const Region margin = interior_margin(g, 2);
    const estimates::SubdomainPair pair = default_pair(g);
    const estimates::TestFunction phi(g.origin_x + 0.5 * g.extent_x,
                                      g.origin_y + 0.5 * g.extent_y, 0.35 * g.extent_x, 3);

    for (double eps : cfg.epsilons) {
        solver::RegularizationParams rp{eps, cfg.kappa_default, cfg.delta};
        solver::SolveStats st;
        const ScalarField u = solver::solve_dirichlet(g, bd, rp, cfg.solver_cfg, &st);
        const ScalarField lap = laplacian(u);
        const VectorField2 Du = gradient(u);
        const ScalarField sp = speed_field(Du);
        const double lap_sup = sup_norm(lap, margin);
        const double delta_eff = solver::effective_delta(cfg.delta, sp.max_abs());

        const double viol = std::max(
            0.0, std::max(st.boundary_min - *std::min_element(u.v.begin(), u.v.end()),
                          *std::max_element(u.v.begin(), u.v.end()) - st.boundary_max));
        ctx.add(basic_row("max_principle", viol, 10.0 * cfg.solver_cfg.residual_tolerance,
                          viol <= 10.0 * cfg.solver_cfg.residual_tolerance, g, eps));

        auto alg = estimates::pointwise_identity_check(u, eps, estimates::PointwiseCheck::alg2x2,
                                                       Region::full_interior(0.0));
        ctx.add(basic_row("alg2x2", alg.max_abs_residual, 1e-12,
                          alg.max_abs_residual <= 1e-12, g, eps));

        auto k2 = estimates::pointwise_identity_check(u, eps, estimates::PointwiseCheck::key_II,
                                                      margin);
        {
            const double bound = cfg.solver_cfg.residual_tolerance * std::max(lap_sup, 1e-30);
            ctx.add(basic_row("key_II_residual", k2.l1_average, bound,
                              k2.l1_average <= 10.0 * bound, g, eps));
        }
        auto k3 = estimates::pointwise_identity_check(u, eps, estimates::PointwiseCheck::key_III,
                                                      margin, nullptr, cfg.delta);
        {
            double quot_sup = 0.0;
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    if (!margin.contains(g.x(i), g.y(j), g)) continue;
                    const long k = g.idx(i, j);
                    if (sp.v[k] > delta_eff)
                        quot_sup = std::max(quot_sup,
                                            std::abs(lap.v[k]) / (sp.v[k] * sp.v[k]));
                }
            const double bound = cfg.solver_cfg.residual_tolerance * std::max(quot_sup, 1e-30);
            ctx.add(basic_row("key_III_residual", k3.l1_average, bound,
                              k3.l1_average <= 10.0 * bound, g, eps));
        }
        auto nd = estimates::pointwise_identity_check(u, eps, estimates::PointwiseCheck::nonneg_det,
                                                      margin);
        {
            double det_scale = 0.0;
            const SymMatField H = hessian(u);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    if (!margin.contains(g.x(i), g.y(j), g)) continue;
                    const long k = g.idx(i, j);
                    det_scale = std::max(det_scale,
                                         std::abs(H.a12[k] * H.a12[k] - H.a11[k] * H.a22[k]));
                }
            const double eps_m = std::numeric_limits<double>::epsilon();
            const double noise = 1e4 * eps_m * eps_m *
                                 std::pow(u.max_abs() / (g.h * g.h), 2.0);
            const double thresh = 0.5 * g.h * det_scale + noise;
            ctx.add(basic_row("nonneg_det", std::max(0.0, -nd.min_value), thresh,
                              nd.min_value >= -thresh, g, eps));
        }
        {
            const double f_det = estimates::functional_pairing(u, eps, phi,
                                                               estimates::PairingForm::det);
            const double f_weak = estimates::functional_pairing(u, eps, phi,
                                                                estimates::PairingForm::weak);
            const double f_div = estimates::functional_pairing(u, eps, phi,
                                                               estimates::PairingForm::divergence);
            const double f_pw = estimates::functional_pairing(u, eps, phi,
                                                              estimates::PairingForm::pointwise,
                                                              cfg.delta);
            // Richardson-style floor for the weak form: its integrand does
            // not vanish pointwise, so its quadrature error is estimated by
            // re-evaluating on the 2h restriction of the same samples.
            double quad_floor = 0.0;
            if ((g.nx - 1) % 2 == 0 && (g.ny - 1) % 2 == 0 && g.nx >= 17) {
                const GridSpec g2 = GridSpec::make(g.origin_x, g.origin_y, g.extent_x, g.extent_y,
                                                   (g.nx - 1) / 2 + 1, (g.ny - 1) / 2 + 1);
                ScalarField u2(g2);
                for (int j = 0; j < g2.ny; ++j)
                    for (int i = 0; i < g2.nx; ++i)
                        u2.v[g2.idx(i, j)] = u.v[g.idx(2 * i, 2 * j)];
                const double f_weak2 = estimates::functional_pairing(
                    u2, eps, phi, estimates::PairingForm::weak);
                quad_floor = 2.0 * std::abs(f_weak2 - f_weak);
            }
            const double scale = std::max({std::abs(f_det), 1e-9});
            const double tol_weak = 0.05 * scale + quad_floor + 1e-9;
            ctx.add(basic_row("form_weak_vs_det", std::abs(f_weak - f_det), tol_weak,
                              std::abs(f_weak - f_det) <= tol_weak, g, eps));
            ctx.add(basic_row("form_div_vs_det", std::abs(f_div - f_det), 0.05 * scale + 1e-9,
                              std::abs(f_div - f_det) <= 0.05 * scale + 1e-9, g, eps));
            ctx.add(basic_row("form_pointwise_vs_det", std::abs(f_pw - f_det),
                              0.10 * scale + 1e-9, std::abs(f_pw - f_det) <= 0.10 * scale + 1e-9,
                              g, eps));
        }
        for (double alpha : cfg.alphas) {
            const auto defect = estimates::orthogonality_defect(u, eps, alpha, margin, cfg.delta);
            // paper-side size of the defect: alpha * eps * \int |Du|^{a-2} |lap u|
            long floored = 0;
            const double core = integrate_nodes(g, margin, [&](long k) {
                if (sp.v[k] <= delta_eff) {
                    ++floored;
                    return 0.0;
                }
                return alpha * eps * std::pow(sp.v[k], alpha - 2.0) * std::abs(lap.v[k]);
            });
            ctx.add(basic_row("orthogonality_defect", defect.value, core + 1e-12,
                              defect.value <= 3.0 * core + 1e-9, g, eps, alpha));

            estimates::EstimateParams ep;
            ep.epsilon = eps;
            ep.alpha = alpha;
            ep.delta = cfg.delta;
            ctx.add(estimates::inequality_report(estimates::InequalityKind::caccioppoli, u, ep,
                                                 pair));
            ctx.add(estimates::inequality_report(estimates::InequalityKind::w12_limit, u, ep,
                                                 pair));
            for (double kp : cfg.kappas) {
                ep.kappa = kp;
                ctx.add(estimates::inequality_report(estimates::InequalityKind::sobolev_u, u, ep,
                                                     pair));
            }
            ep.kappa = 0.0;
        }
        {
            estimates::EstimateParams ep;
            ep.epsilon = eps;
            ctx.add(estimates::inequality_report(estimates::InequalityKind::apriori, u, ep, pair));
            for (double p : cfg.ps) {
                ep.p = p;
                ctx.add(estimates::inequality_report(estimates::InequalityKind::lp_gradient, u, ep,
                                                     pair));
            }
        }
    }
}

inline void run_sweep(RunContext& ctx) {
    const ScenarioConfig& cfg = ctx.cfg;
    std::vector<int> nodes = cfg.node_counts;
    if (nodes.empty()) nodes = {cfg.grid.nx};
    const solver::BoundaryData bd = boundary_for(cfg, cfg.grid);

    const analytic::ReferenceFunction ref = analytic::make_reference(
        cfg.boundary.rfind("csv:", 0) == 0 ? "linear:1,0,0" : cfg.boundary);
    const bool exact_ref = cfg.boundary == "aronsson" || cfg.boundary.rfind("linear", 0) == 0;
    const auto table = estimates::convergence_study(cfg.grid, bd, exact_ref ? &ref : nullptr,
                                                    cfg.epsilons, nodes, cfg.ps, cfg.solver_cfg);
    {
        std::ofstream out(ctx.path("convergence.csv"));
        out << "epsilon,h,sup_error";
        for (double p : table.p_list) out << ",grad_lp_error_p" << p;
        out << "\n";
        for (const auto& r : table.rows) {
            out << num17(r.epsilon) << ',' << num17(r.h) << ',' << num17(r.sup_error);
            for (double e : r.grad_lp_errors) out << ',' << num17(e);
            out << "\n";
        }
    }
    ctx.add(basic_row("convergence_monotone", table.pass ? 1.0 : 0.0, 1.0, table.pass, cfg.grid));

    // ratio stability across the h x eps sweep per estimate kind
    struct Family {
        std::string name;
        double alpha;
        std::vector<double> ratios;
    };
    std::vector<Family> families;
    for (double a : cfg.alphas) {
        families.push_back({"stability_caccioppoli", a, {}});
        families.push_back({"stability_w12_limit", a, {}});
        families.push_back({"stability_sobolev_u", a, {}});
    }
    for (double p : cfg.ps) families.push_back({"stability_lp_gradient", p, {}});
    families.push_back({"stability_apriori", 0.0, {}});

    for (int n : nodes) {
        const GridSpec g = GridSpec::make(cfg.grid.origin_x, cfg.grid.origin_y, cfg.grid.extent_x,
                                          cfg.grid.extent_y, n, n);
        const solver::BoundaryData bdn = boundary_for(cfg, g);
        const estimates::SubdomainPair pair = default_pair(g);
        for (double eps : cfg.epsilons) {
            solver::RegularizationParams rp{eps, cfg.kappa_default, cfg.delta};
            const ScalarField u = solver::solve_dirichlet(g, bdn, rp, cfg.solver_cfg);
            size_t fi = 0;
            for (double a : cfg.alphas) {
                estimates::EstimateParams ep;
                ep.epsilon = eps;
                ep.alpha = a;
                ep.delta = cfg.delta;
                families[fi++].ratios.push_back(
                    estimates::inequality_report(estimates::InequalityKind::caccioppoli, u, ep, pair)
                        .ratio);
                families[fi++].ratios.push_back(
                    estimates::inequality_report(estimates::InequalityKind::w12_limit, u, ep, pair)
                        .ratio);
                ep.kappa = cfg.kappas.empty() ? 1e-4 : cfg.kappas.front();
                families[fi++].ratios.push_back(
                    estimates::inequality_report(estimates::InequalityKind::sobolev_u, u, ep, pair)
                        .ratio);
            }
            for (double p : cfg.ps) {
                estimates::EstimateParams ep;
                ep.epsilon = eps;
                ep.p = p;
                families[fi++].ratios.push_back(
                    estimates::inequality_report(estimates::InequalityKind::lp_gradient, u, ep, pair)
                        .ratio);
            }
            estimates::EstimateParams ep;
            ep.epsilon = eps;
            families[fi++].ratios.push_back(
                estimates::inequality_report(estimates::InequalityKind::apriori, u, ep, pair).ratio);
        }
    }
    for (const auto& fam : families) {
        double lo = INFINITY, hi = 0.0;
        for (double r : fam.ratios) {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const bool ok = estimates::ratios_stable(fam.ratios, 2.0);
        ctx.add(basic_row(fam.name, hi, std::isfinite(lo) ? lo : 0.0, ok, cfg.grid, 0.0, fam.alpha));
    }
}

inline void run_sharpness(RunContext& ctx) {
    const ScenarioConfig& cfg = ctx.cfg;
    const int levels = 6;
    for (double a : cfg.alphas) {
        const auto mode = (a < 1.0 || a >= 3.0) ? analytic::SingularityMode::origin
                                                : analytic::SingularityMode::axis;
        const auto fit = analytic::critical_exponent_estimate(a, mode, levels);
        const bool sentinel = std::isinf(fit.target_p_alpha);
        const bool pass = sentinel ? std::isinf(fit.fitted_critical_p)
                                   : std::abs(fit.fitted_critical_p - fit.target_p_alpha) <= 0.1;
        auto row = basic_row("sharpness_alpha", fit.fitted_critical_p, fit.target_p_alpha, pass,
                             cfg.grid, 0.0, a);
        row.ratio = sentinel ? 1.0 : fit.fitted_critical_p / fit.target_p_alpha;
        ctx.add(row);
    }
    const auto log_fit = analytic::log_speed_exponent_estimate(levels);
    ctx.add(basic_row("sharpness_log_speed", log_fit.fitted_critical_p, 2.0,
                      std::abs(log_fit.fitted_critical_p - 2.0) <= 0.1, cfg.grid));
}

inline capacity::Quadrilateral quad_from_config(const ScenarioConfig& cfg) {
    const std::string& q = cfg.quad;
    auto parse_two = [](const std::string& s) {
        const auto comma = s.find(',');
        if (comma == std::string::npos) throw ConfigError("quad spec needs two numbers");
        return std::pair<double, double>{std::stod(s.substr(0, comma)),
                                         std::stod(s.substr(comma + 1))};
    };
    if (q.rfind("rectangle:", 0) == 0) {
        const auto [w, h] = parse_two(q.substr(10));
        return capacity::Quadrilateral::rectangle(w, h, cfg.quad_spacing);
    }
    if (q == "unit_square") return capacity::Quadrilateral::rectangle(1.0, 1.0, cfg.quad_spacing);
    if (q.rfind("l_shape:", 0) == 0)
        return capacity::Quadrilateral::l_shape(std::stod(q.substr(8)), cfg.quad_spacing);
    if (q == "l_shape") return capacity::Quadrilateral::l_shape(2.0, cfg.quad_spacing);
    // otherwise: path to a JSON geometry document
    std::ifstream in(q);
    if (!in) throw ConfigError("quad '" + q + "' is neither a builtin nor a readable file");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("quad file: " + std::string(e.what()));
    }
    const auto verts = detail::get_or<std::vector<std::vector<double>>>(doc, "vertices", {});
    const auto starts = detail::get_or<std::vector<int>>(doc, "arc_starts", {0, 1, 2, 3});
    if (verts.size() < 4 || starts.size() != 4)
        throw ConfigError("quad file needs >= 4 vertices and 4 arc_starts");
    std::vector<std::array<double, 2>> vs;
    double x0 = INFINITY, y0 = INFINITY, x1 = -INFINITY, y1 = -INFINITY;
    for (const auto& v : verts) {
        if (v.size() != 2) throw ConfigError("vertex needs 2 coordinates");
        vs.push_back({v[0], v[1]});
        x0 = std::min(x0, v[0]);
        x1 = std::max(x1, v[0]);
        y0 = std::min(y0, v[1]);
        y1 = std::max(y1, v[1]);
    }
    const int nx = static_cast<int>(std::lround((x1 - x0) / cfg.quad_spacing)) + 1;
    const int ny = static_cast<int>(std::lround((y1 - y0) / cfg.quad_spacing)) + 1;
    return capacity::Quadrilateral::make(vs, {starts[0], starts[1], starts[2], starts[3]},
                                         GridSpec::make(x0, y0, x1 - x0, y1 - y0, nx, ny));
}

inline void run_capacity(RunContext& ctx) {
    const ScenarioConfig& cfg = ctx.cfg;
    const capacity::Quadrilateral quad = quad_from_config(cfg);
    for (double p : cfg.ps) {
        const double q = p / (p - 1.0);
        const auto cp = capacity::p_capacity(quad, 0, 2, p, cfg.solver_cfg);
        const auto cq = capacity::p_capacity(quad, 1, 3, q, cfg.solver_cfg);
        const double product = std::pow(cp.value, 1.0 / p) * std::pow(cq.value, 1.0 / q);
        auto row = basic_row("capacity_p", cp.value, cq.value, true, quad.grid, 0.0, p);
        row.ratio = product;
        ctx.add(row);
        const double tol = 3.0 * std::sqrt(quad.grid.h);
        ctx.add(basic_row("duality_product", product, 1.0, std::abs(product - 1.0) <= tol,
                          quad.grid, 0.0, p));
    }
}

inline void run_dual(RunContext& ctx) {
    const ScenarioConfig& cfg = ctx.cfg;
    const GridSpec& g = cfg.grid;
    const Region all = Region::full_interior(0.0);
    {
        const ScalarField res = capacity::dual_equation_residual_analytic(g, all);
        const double sup = sup_norm(res, all);
        ctx.add(basic_row("dual_analytic_residual", sup, 1e-10, sup <= 1e-10, g));
    }
    {
        // discrete-stencil decay order across one halving
        auto sup_at = [&](int n) {
            const GridSpec gr = GridSpec::make(g.origin_x, g.origin_y, g.extent_x, g.extent_y, n, n);
            ScalarField v = ScalarField::sample(gr, [](double x, double y) {
                const double s = analytic::aronsson_speed(x, y);
                return 0.5 * s * s;
            });
            const ScalarField res = capacity::dual_equation_residual(v, interior_margin(gr, 2));
            return sup_norm(res, interior_margin(gr, 2));
        };
        const double r1 = sup_at(g.nx);
        const double r2 = sup_at(2 * (g.nx - 1) + 1);
        const double order = std::log2(r1 / r2);
        ctx.add(basic_row("dual_discrete_order", order, 1.0, order >= 1.0, g));
    }
    const std::vector<estimates::TestFunction> phis = {
        estimates::TestFunction(1.0, 0.0, 0.5, 3),   // crosses the x1 axis only
        estimates::TestFunction(1.0, 1.0, 0.4, 3),   // clear of both axes
        estimates::TestFunction(0.0, 0.0, 0.5, 3)};  // crosses both axes
    for (size_t i = 0; i < phis.size(); ++i) {
        const auto r = capacity::singular_measure_check(phis[i]);
        const double tol = 0.02 * std::max(std::abs(r.line_value), 0.1);
        ctx.add(basic_row("singular_measure_phi" + std::to_string(i), r.f_value, r.line_value,
                          std::abs(r.f_value - r.line_value) <= tol, g));
    }
}

}  // namespace detail

/// Executes a scenario, writes artifacts + manifest, returns the exit status
/// (0 iff every emitted report passes).
inline int run(const ScenarioConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    detail::RunContext ctx(cfg);
    if (cfg.scenario == "solve")
        detail::run_solve(ctx);
    else if (cfg.scenario == "verify")
        detail::run_verify(ctx);
    else if (cfg.scenario == "sweep")
        detail::run_sweep(ctx);
    else if (cfg.scenario == "sharpness")
        detail::run_sharpness(ctx);
    else if (cfg.scenario == "capacity")
        detail::run_capacity(ctx);
    else if (cfg.scenario == "dual")
        detail::run_dual(ctx);
    else
        throw ConfigError("unknown scenario '" + cfg.scenario + "'");

    write_reports_csv(ctx.rows, ctx.path("reports.csv"));
    write_reports_json(ctx.rows, ctx.path("reports.json"));

    // manifest last, so its artifact list is complete
    {
        std::ofstream out((ctx.dir / "manifest.json").string());
        json manifest;
        manifest["config"] = cfg.echo;
        manifest["version"] = INFLAB_VERSION;
        manifest["all_pass"] = ctx.all_pass();
        manifest["artifacts"] = ctx.artifacts;
        if (!cfg.deterministic) {
            const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
            manifest["wall_time_seconds"] = dt.count();
        }
        out << manifest.dump(2) << "\n";
    }
    return ctx.all_pass() ? 0 : 1;
}

}  // namespace inflab::cli

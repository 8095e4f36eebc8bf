#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "inflab/scenario.hpp"

using namespace inflab;
using namespace inflab::cli;
namespace fs = std::filesystem;

namespace {

json base_config(const std::string& scenario) {
    json j;
    j["scenario"] = scenario;
    j["grid"] = {{"origin", {0.5, 0.5}}, {"extent", {1.0, 1.0}}, {"nodes", {33, 33}}};
    j["boundary"] = "linear:1,0,0";
    j["epsilons"] = {1e-1, 1e-2};
    j["alphas"] = {1.0};
    j["kappas"] = {1e-4};
    j["ps"] = {3.0};
    j["deterministic"] = true;
    j["solver"] = {{"residual_tolerance", 1e-8}, {"max_outer_iterations", 5000}};
    return j;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("config diagnostics") {
    CHECK_THROWS_AS(parse_config(json::parse("[1,2]")), ConfigError);
    CHECK_THROWS_AS(parse_config(json::parse("{}")), ConfigError);  // missing scenario
    json bad = base_config("verify");
    bad["scenario"] = "florp";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base_config("verify");
    bad["boundary"] = "unknown-name";
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base_config("verify");
    bad["typo_field"] = 1;
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base_config("sweep");
    bad["epsilons"] = json::array();
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
    bad = base_config("verify");
    bad["grid"] = {{"origin", {0.0}}, {"extent", {1.0, 1.0}}, {"nodes", {9, 9}}};
    CHECK_THROWS_AS(parse_config(bad), ConfigError);
}

TEST_CASE("verify scenario with linear data passes and writes artifacts") {
    json j = base_config("verify");
    j["out_dir"] = "scen_verify_out";
    const ScenarioConfig cfg = parse_config(j);
    CHECK(run(cfg) == 0);
    CHECK(fs::exists("scen_verify_out/reports.csv"));
    CHECK(fs::exists("scen_verify_out/reports.json"));
    CHECK(fs::exists("scen_verify_out/manifest.json"));
    const std::string csv = slurp("scen_verify_out/reports.csv");
    CHECK(csv.rfind("name,lhs,rhs_core,ratio,pass,h,epsilon,alpha,kappa\n", 0) == 0);
    CHECK(csv.find("false") == std::string::npos);
    // deterministic manifest omits the wall time
    const json manifest = json::parse(slurp("scen_verify_out/manifest.json"));
    CHECK(!manifest.contains("wall_time_seconds"));
    CHECK(manifest["all_pass"] == true);
    fs::remove_all("scen_verify_out");
}

TEST_CASE("deterministic reruns of one config are byte-identical") {
    json j = base_config("verify");
    j["out_dir"] = "scen_det";
    const ScenarioConfig cfg = parse_config(j);
    run(cfg);
    const std::string a_csv = slurp("scen_det/reports.csv");
    const std::string a_json = slurp("scen_det/reports.json");
    const std::string a_manifest = slurp("scen_det/manifest.json");
    fs::remove_all("scen_det");
    run(cfg);
    CHECK(slurp("scen_det/reports.csv") == a_csv);
    CHECK(slurp("scen_det/reports.json") == a_json);
    CHECK(slurp("scen_det/manifest.json") == a_manifest);
    fs::remove_all("scen_det");
}

TEST_CASE("solve scenario dumps fields") {
    json j = base_config("solve");
    j["epsilons"] = {1e-2};
    j["out_dir"] = "scen_solve_out";
    CHECK(run(parse_config(j)) == 0);
    CHECK(fs::exists("scen_solve_out/u_eps0_01.csv"));
    const std::string dump = slurp("scen_solve_out/u_eps0_01.csv");
    CHECK(dump.rfind("x,y,value\n", 0) == 0);
    fs::remove_all("scen_solve_out");
}

TEST_CASE("sharpness scenario hits the paper exponents") {
    json j = base_config("sharpness");
    j["alphas"] = {0.5, 1.0, 3.0};
    j["out_dir"] = "scen_sharp_out";
    CHECK(run(parse_config(j)) == 0);
    const std::string csv = slurp("scen_sharp_out/reports.csv");
    CHECK(csv.find("sharpness_alpha") != std::string::npos);
    CHECK(csv.find("inf") != std::string::npos);  // alpha = 3 sentinel
    CHECK(csv.find("sharpness_log_speed") != std::string::npos);
    fs::remove_all("scen_sharp_out");
}

TEST_CASE("capacity scenario on the rectangle") {
    json j = base_config("capacity");
    j["quad"] = "rectangle:2,1";
    j["quad_spacing"] = 1.0 / 32.0;
    j["ps"] = {2.0};
    j["out_dir"] = "scen_cap_out";
    CHECK(run(parse_config(j)) == 0);
    const std::string csv = slurp("scen_cap_out/reports.csv");
    CHECK(csv.find("duality_product") != std::string::npos);
    fs::remove_all("scen_cap_out");
}

TEST_CASE("quad geometry document round trip") {
    {
        std::ofstream out("quad_test.json");
        out << R"({"vertices": [[0,0],[2,0],[2,1],[1,1],[1,2],[0,2]], "arc_starts": [0,1,4,5]})";
    }
    json j = base_config("capacity");
    j["quad"] = "quad_test.json";
    j["quad_spacing"] = 1.0 / 16.0;
    j["ps"] = {2.0};
    j["out_dir"] = "scen_quadfile_out";
    CHECK(run(parse_config(j)) == 0);
    fs::remove_all("scen_quadfile_out");
    fs::remove("quad_test.json");
}

TEST_CASE("dual scenario") {
    json j = base_config("dual");
    j["grid"] = {{"origin", {0.5, 0.5}}, {"extent", {1.0, 1.0}}, {"nodes", {33, 33}}};
    j["out_dir"] = "scen_dual_out";
    CHECK(run(parse_config(j)) == 0);
    const std::string csv = slurp("scen_dual_out/reports.csv");
    CHECK(csv.find("dual_analytic_residual") != std::string::npos);
    CHECK(csv.find("singular_measure_phi0") != std::string::npos);
    fs::remove_all("scen_dual_out");
}

TEST_CASE("a failing row flips the aggregate and lands in the csv as false") {
    json j = base_config("verify");
    j["out_dir"] = "scen_agg_out";
    cli::detail::RunContext ctx(parse_config(j));
    ctx.add(cli::detail::basic_row("ok_row", 1.0, 2.0, true, GridSpec::square(0, 1, 9)));
    CHECK(ctx.all_pass());
    ctx.add(cli::detail::basic_row("bad_row", 3.0, 2.0, false, GridSpec::square(0, 1, 9)));
    CHECK(!ctx.all_pass());
    write_reports_csv(ctx.rows, "scen_agg_out/reports.csv");
    const std::string csv = slurp("scen_agg_out/reports.csv");
    CHECK(csv.find("bad_row,3,2,1.5,false") != std::string::npos);
    fs::remove_all("scen_agg_out");
}

TEST_CASE("solver failures propagate out of run()") {
    json j = base_config("solve");
    j["boundary"] = "aronsson";
    j["out_dir"] = "scen_nonconv_out";
    j["solver"] = {{"residual_tolerance", 1e-14}, {"max_outer_iterations", 2},
                   {"max_inner_sweeps", 2}};
    CHECK_THROWS_AS(run(parse_config(j)), NonConvergence);
    fs::remove_all("scen_nonconv_out");
}

TEST_CASE("sweep scenario with aronsson data") {
    json j = base_config("sweep");
    j["boundary"] = "aronsson";
    j["epsilons"] = {1e-1, 1e-2};
    j["nodes"] = {33, 65};
    j["alphas"] = {1.0};
    j["ps"] = {3.0};
    j["solver"] = {{"residual_tolerance", 1e-7}, {"max_outer_iterations", 20000}};
    j["out_dir"] = "scen_sweep_out";
    CHECK(run(parse_config(j)) == 0);
    CHECK(fs::exists("scen_sweep_out/convergence.csv"));
    const std::string csv = slurp("scen_sweep_out/reports.csv");
    CHECK(csv.find("stability_caccioppoli") != std::string::npos);
    CHECK(csv.find("convergence_monotone") != std::string::npos);
    fs::remove_all("scen_sweep_out");
}

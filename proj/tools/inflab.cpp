// inflab: numerical laboratory for the regularized infinity-Laplace problem.
//
//   inflab run --config scenario.json [--out dir] [--deterministic]
//   inflab list-references
//   inflab version

#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "inflab/scenario.hpp"
#include "inflab/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for planar infinity-harmonic estimates"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    bool deterministic = false;
    CLI::App* run_cmd = app.add_subcommand("run", "execute a scenario config");
    run_cmd->add_option("--config", config_path, "scenario JSON document")->required();
    run_cmd->add_option("--out", out_override, "override the output directory");
    run_cmd->add_flag("--deterministic", deterministic,
                      "byte-stable artifacts (omits timing from the manifest)");

    CLI::App* list_cmd = app.add_subcommand("list-references", "print the reference registry");
    CLI::App* ver_cmd = app.add_subcommand("version", "print the version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ver_cmd->parsed()) {
            std::cout << "inflab " << INFLAB_VERSION << "\n";
            return 0;
        }
        if (list_cmd->parsed()) {
            for (const auto& name : inflab::analytic::reference_names()) std::cout << name << "\n";
            return 0;
        }
        inflab::cli::ScenarioConfig cfg = inflab::cli::parse_config_file(config_path);
        if (!out_override.empty()) cfg.out_dir = out_override;
        if (deterministic) cfg.deterministic = true;
        const int status = inflab::cli::run(cfg);
        std::cout << (status == 0 ? "all reports pass" : "some reports FAILED") << " (see "
                  << cfg.out_dir << "/reports.csv)\n";
        return status;
    } catch (const inflab::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const inflab::NonConvergence& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

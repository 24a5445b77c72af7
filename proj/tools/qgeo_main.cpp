// qgeo command line: propagation, trajectory ensembles, geodesics, curvature and self-checks.
//
// Exit codes: 0 success, 1 validation checks failed, 2 configuration error, 3 numerical failure.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <utility>

#include "json.hpp"

#include "qgeo/errors.hpp"
#include "qgeo/experiment.hpp"
#include "qgeo/exports.hpp"
#include "qgeo/parallel.hpp"
#include "qgeo/validation.hpp"
#include "qgeo/version.hpp"

namespace fs = std::filesystem;
using namespace qgeo;
using namespace qgeo::experiment;

namespace {

struct CommonArgs {
    std::string config;
    std::string out_dir;
    std::string format;
    std::size_t threads = 0;
    double snapshot_every = 0.0;
    bool quiet = false;
};

void add_common(CLI::App* sub, CommonArgs& args)
{
    sub->add_option("--config", args.config, "key=value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", args.out_dir, "output directory (overrides output.dir)");
    sub->add_option("--format", args.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--threads", args.threads, "worker threads (QGEO_THREADS wins)");
    sub->add_flag("--quiet", args.quiet, "no progress messages");
}

ExperimentConfig resolve(const CommonArgs& args)
{
    ExperimentConfig cfg = args.config.empty() ? ExperimentConfig{} : load_config(args.config);
    if (!args.out_dir.empty()) {
        cfg.out_dir = args.out_dir;
    }
    if (!args.format.empty()) {
        cfg.format = args.format == "json" ? OutputFormat::json : OutputFormat::csv;
    }
    if (args.threads > 0) {
        cfg.threads = args.threads;
    }
    if (args.snapshot_every > 0.0) {
        cfg.snapshot_every = args.snapshot_every;
    }
    cfg.threads = resolve_threads(cfg.threads);
    cfg.validate();
    return cfg;
}

void write_residuals(const FieldRun& field, const ExperimentConfig& cfg, Manifest& manifest)
{
    const std::string name = std::string("residuals") + (cfg.format == OutputFormat::csv ? ".csv" : ".json");
    TableWriter w(cfg.out_dir / name, {"t", "hj", "continuity", "hj_x", "hj_relative_amplitude"}, cfg.format);
    for (const auto& r : field.residuals) {
        w.row({r.t, r.hj, r.continuity, r.hj_x, r.hj_relative_amplitude});
    }
    w.close();
    manifest.add_file(cfg.out_dir, name, "residuals");
}

nlohmann::json field_summary(const FieldRun& field)
{
    return {{"max_norm_error", field.max_norm_error},
            {"max_hj_residual", field.max_hj},
            {"max_continuity_residual", field.max_continuity},
            {"steps", field.steps}};
}

int run_command(const std::string& command, const CommonArgs& args)
{
    ExperimentConfig cfg;
    try {
        cfg = resolve(args);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    fs::create_directories(cfg.out_dir);
    Manifest manifest(command, cfg);
    const auto start = std::chrono::steady_clock::now();
    Progress progress;
    if (!args.quiet) {
        progress = [](const std::string& msg) { std::cerr << "qgeo: " << msg << "\n"; };
    }
    auto finish = [&](const std::string& status, const std::string& error) {
        manifest.set_status(status, error);
        manifest.set_wall_time(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
        manifest.write(cfg.out_dir);
    };

    int exit_code = 0;
    try {
        if (command == "propagate") {
            RunStages none{false, false, false, false};
            auto opts = field_options(cfg, none);
            if (progress) {
                progress("propagating field");
            }
            ExperimentResult result;
            result.config = cfg;
            result.field = propagate_field(cfg, opts);
            export_snapshots(result, cfg.out_dir, manifest);
            write_residuals(result.field, cfg, manifest);
            manifest.extra()["field"] = field_summary(result.field);
        } else if (command == "validate") {
            validation::SuiteOptions opts;
            const auto checks = validation::run_suite(cfg, opts, progress);
            nlohmann::json report = nlohmann::json::array();
            bool all = true;
            for (const auto& c : checks) {
                std::cout << validation::format_check(c) << "\n";
                nlohmann::json metrics = nlohmann::json::object();
                for (const auto& [k, v] : c.metrics) {
                    metrics[k] = v;
                }
                report.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"metrics", metrics}});
                all = all && c.passed;
            }
            const auto path = cfg.out_dir / "validation.json";
            std::ofstream(path) << report.dump(2) << "\n";
            manifest.add_file(cfg.out_dir, "validation.json", "validation_report");
            exit_code = all ? 0 : 1;
        } else {
            RunStages stages;
            stages.trajectories = command == "trajectories" || command == "run-experiment";
            stages.geodesics = command != "trajectories";
            stages.curvature = command == "curvature" || command == "run-experiment";
            stages.fronts = command == "geodesics" || command == "run-experiment";
            const auto result = run_experiment(cfg, stages, progress);
            if (command == "run-experiment") {
                export_snapshots(result, cfg.out_dir, manifest);
                write_residuals(result.field, cfg, manifest);
            }
            if (stages.trajectories) {
                export_trajectories(result, cfg.out_dir, manifest);
            }
            if (stages.geodesics) {
                export_geodesics(result, cfg.out_dir, manifest);
            }
            if (stages.curvature) {
                export_curvature(result, cfg.out_dir, manifest);
            }
            if (stages.fronts) {
                export_fronts_files(result, cfg.out_dir, manifest);
            }
            manifest.extra()["field"] = field_summary(result.field);
            const auto summary = run_summary(result);
            for (const auto& [k, v] : summary.items()) {
                manifest.extra()[k] = v;
            }
        }
        finish(exit_code == 0 ? "ok" : "checks_failed", {});
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        finish("failed", e.what());
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        finish("failed", e.what());
        return 2;
    }
    return exit_code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Bohmian trajectories as geodesics of a quantum-potential Finsler metric"};
    app.set_version_flag("--version", std::string(version_string));
    app.require_subcommand(1);

    CommonArgs args;
    std::string chosen;
    const std::pair<const char*, const char*> commands[] = {
        {"propagate", "field snapshots, polar tables and residuals"},
        {"trajectories", "first- and second-order Bohmian ensembles"},
        {"geodesics", "extended-space geodesics and fronts"},
        {"curvature", "scalar curvature along the geodesics"},
        {"run-experiment", "everything above in one run"},
        {"validate", "property checks; exit 1 when one fails"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        add_common(sub, args);
        if (std::string(name) == "propagate") {
            sub->add_option("--snapshot-every", args.snapshot_every, "spacing of kept snapshots")
                ->check(CLI::PositiveNumber);
        }
        sub->callback([&chosen, name] { chosen = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return run_command(chosen, args);
}

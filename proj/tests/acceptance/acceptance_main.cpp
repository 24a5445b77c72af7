// Acceptance run on the default Eckart configuration: one line per criterion.
//
// Exit status is 0 once every criterion has been evaluated; --strict makes it 1 when any fails.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "qgeo/experiment.hpp"
#include "qgeo/validation.hpp"

namespace fs = std::filesystem;
using namespace qgeo;

namespace {

validation::SuiteOptions pinned_options()
{
    validation::SuiteOptions o;
    o.se.norm = 1e-10;
    o.se.residual = 1e-3;
    o.se.halving = 0.5;
    o.se.max_seconds = 120.0;
    o.residual_every = 0.0;

    o.identities.euler1 = 1e-8;
    o.identities.euler2 = 1e-6;
    o.identities.reconstruction = 1e-9;
    o.identities.momentum = 1e-8;
    o.identities.cartan = 1e-6;
    o.identities.homogeneity = 1e-10;
    o.identities.fd_metric = 1e-6;
    o.identities.determinant = 1e-9;
    o.identity_states = 1000;
    o.identity_seed = 20240611;

    o.flat_tolerance = 1e-10;
    o.proposition_members = 50;
    o.proposition_tolerance = 1e-3;
    o.curvature_early_end = 400.0;
    o.curvature_late_start = 2000.0;
    o.front_contraction = 0.95;
    o.front_late_fraction = 0.5;
    o.equivariance_times = {500.0, 1000.0, 2000.0};
    o.max_ks = 0.08;
    return o;
}

const std::map<std::string, std::string> criterion_labels{
    {"se_integrity", "SE integrity"},
    {"finsler_identities", "Finsler identity suite"},
    {"proposition_equivalence", "geodesic / Bohmian equivalence"},
    {"flat_space", "flat-space exactness"},
    {"curvature_signs", "curvature sign pattern"},
    {"front_shapes", "front contraction and dilation"},
    {"equivariance", "equivariance"},
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qgeo acceptance"};
    fs::path out_dir = "acceptance_out";
    bool strict = false;
    bool quiet = false;
    app.add_option("--out-dir", out_dir, "directory for the JSON report");
    app.add_flag("--strict", strict, "exit 1 when a criterion fails");
    app.add_flag("--quiet", quiet, "no progress messages");
    CLI11_PARSE(app, argc, argv);

    experiment::ExperimentConfig config;
    config.out_dir = out_dir;
    config.validate();
    fs::create_directories(out_dir);

    experiment::Progress progress;
    if (!quiet) {
        progress = [](const std::string& msg) { std::cerr << "acceptance: " << msg << "\n"; };
    }

    const auto start = std::chrono::steady_clock::now();
    std::vector<validation::Check> checks;
    try {
        checks = validation::run_suite(config, pinned_options(), progress);
    } catch (const std::exception& e) {
        std::cout << "ERROR acceptance suite aborted: " << e.what() << "\n";
        return 2;
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::json report = nlohmann::json::array();
    std::size_t passed = 0;
    for (const auto& c : checks) {
        const auto it = criterion_labels.find(c.name);
        const std::string label = it == criterion_labels.end() ? c.name : it->second;
        std::cout << fmt::format("{} [{}] {}: {}", c.passed ? "PASS" : "FAIL", c.name, label, c.detail) << "\n";
        nlohmann::json metrics = nlohmann::json::object();
        for (const auto& [k, v] : c.metrics) {
            metrics[k] = v;
        }
        report.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"metrics", metrics}});
        passed += c.passed ? 1 : 0;
    }
    std::cout << fmt::format("SUMMARY {}/{} criteria passed in {:.1f} s", passed, checks.size(), seconds) << "\n";
    std::ofstream(out_dir / "acceptance.json") << report.dump(2) << "\n";

    if (checks.size() != criterion_labels.size()) {
        return 2;
    }
    return strict && passed != checks.size() ? 1 : 0;
}

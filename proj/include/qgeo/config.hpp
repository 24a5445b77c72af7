#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "qgeo/field_solver.hpp"
#include "qgeo/finsler.hpp"
#include "qgeo/grid.hpp"

namespace qgeo::experiment {

enum class Sampling { quantile, seeded_random };
enum class InitMode { bohmian_consistent, paper_literal };
enum class OutputFormat { csv, json };

struct ExperimentConfig {
    Grid1D grid = Grid1D{4096, -20.0, 40.0};
    double beta = 4.0;
    double k = 10.8842;
    double q_c = 2.0;
    field::PotentialSpec barrier = field::PotentialSpec{};
    double mass = 2000.0;
    double dt = 0.5;
    double t_final = 2100.0;
    std::size_t n_traj = 200;
    Sampling sampling = Sampling::quantile;
    std::uint64_t seed = 12345;
    InitMode init_mode = InitMode::bohmian_consistent;
    double snapshot_start = 50.0;
    double snapshot_every = 100.0;
    double front_every = 50.0;
    double tau_front_every = 1.0;
    double curvature_every = 50.0;
    double table_every = 1.0;
    double trajectory_dt = 0.5;
    double node_threshold = 1e-6;
    double fd_step = 1e-4;
    finsler::GeodesicOptions geodesic;
    std::filesystem::path out_dir = "out";
    OutputFormat format = OutputFormat::csv;
    double export_every = 5.0;
    double hj_tolerance = 1e-3;
    std::size_t threads = 1;

    // Every key=value pair that was read, after defaults, for the manifest echo.
    std::map<std::string, std::string> echo() const;
    void validate() const;

    std::vector<double> snapshot_times() const;
    std::vector<double> front_times() const;
    std::vector<double> curvature_times() const;
};

// Flat key=value with dotted sections; '#' starts a comment. Unknown keys and bad values
// throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string to_string(Sampling s);
std::string to_string(InitMode m);
std::string to_string(OutputFormat f);

} // namespace qgeo::experiment

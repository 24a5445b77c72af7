#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "qgeo/experiment.hpp"
#include "qgeo/field_solver.hpp"
#include "qgeo/polar.hpp"

namespace qgeo::testing_util {

// Ground state of 0.5 m w^2 x^2: exp(-m w x^2 / 2), energy w/2.
inline ComplexField harmonic_ground_state(const Grid1D& grid, double mass, double omega)
{
    return field::init_packet(grid, 0.5 * mass * omega, 0.0, 0.0);
}

inline double second_moment(const ComplexField& f, double& mean)
{
    double norm = 0.0, m1 = 0.0, m2 = 0.0;
    const double dx = f.grid.dx();
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double rho = std::norm(f.values[i]) * dx;
        const double x = f.grid.x(i);
        norm += rho;
        m1 += rho * x;
        m2 += rho * x * x;
    }
    mean = m1 / norm;
    return m2 / norm - mean * mean;
}

// Small free-packet configuration: heavy particle, no barrier, short run.
inline experiment::ExperimentConfig free_config(double t_final = 200.0)
{
    experiment::ExperimentConfig c;
    c.grid = Grid1D::make(1024, -10.0, 20.0);
    c.barrier = field::PotentialSpec::free_particle();
    c.t_final = t_final;
    c.n_traj = 20;
    c.snapshot_start = 0.0;
    c.snapshot_every = 50.0;
    c.front_every = 50.0;
    c.curvature_every = 50.0;
    return c;
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto p = std::filesystem::temp_directory_path() / ("qgeo_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace qgeo::testing_util

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qgeo/field_history.hpp"
#include "qgeo/field_solver.hpp"
#include "qgeo/polar.hpp"

namespace qgeo::bohmian {

enum class TrajectoryStatus { completed, left_grid, non_finite };

std::string to_string(TrajectoryStatus status);

struct TrajectorySample {
    double t = 0.0;
    double x = 0.0;
    double v = 0.0;
    bool node_flag = false;
};

struct TrajectoryRecord {
    int id = 0;
    std::vector<TrajectorySample> samples;
    TrajectoryStatus status = TrajectoryStatus::completed;

    // Cubic Hermite in t using the recorded velocities. Throws OutOfRange outside the record.
    double position_at(double t) const;
    bool flagged_near(double t) const;
};

// grad S / m at x by interpolation of the snapshot's S_x. Throws NodeRegion on a masked stencil.
double velocity_field(const polar::PolarSnapshot& snap, double x, double mass);

struct IntegrationOptions {
    double dt = 0.5;
    double t_final = 0.0;
    std::size_t threads = 1;
};

// dx/dt = S_x/m with classical RK4. A trajectory that leaves the grid stops with status left_grid.
std::vector<TrajectoryRecord> integrate_first_order(std::span<const double> x0, const polar::FieldHistory& fields,
                                                    const IntegrationOptions& options);

// m x'' = -d(V + Q)/dx with RK4 on (x, v).
std::vector<TrajectoryRecord> integrate_second_order(std::span<const double> x0, std::span<const double> v0,
                                                     const field::PotentialSpec& potential,
                                                     const polar::FieldHistory& fields,
                                                     const IntegrationOptions& options);

} // namespace qgeo::bohmian

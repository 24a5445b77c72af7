#pragma once

#include <cstdint>
#include <vector>

#include "qgeo/grid.hpp"
#include "qgeo/polar.hpp"

namespace qgeo::polar {

// Time-ordered store of everything the trajectory integrators read from the field:
// the Q table with its derivatives and the velocity field S_x/m. Each frame keeps only
// the unmasked support plus a margin; reads outside it come back flagged.
class FieldHistory {
public:
    struct Sample {
        double q = 0.0;
        double q_t = 0.0;
        double q_x = 0.0;
        double q_tt = 0.0;
        double q_xt = 0.0;
        double q_xx = 0.0;
        double velocity = 0.0;
        double velocity_x = 0.0;
        bool flagged = false;
    };

    FieldHistory(const Grid1D& grid, double mass);

    // Frames must arrive in increasing, equally spaced time order with time derivatives filled.
    void append(const PolarSnapshot& snap, const QuantumPotentialTable& table);

    // Linear in time between frames, cubic in space. Throws OutOfRange outside the grid
    // or the stored time span.
    Sample sample(double t, double x) const;

    const Grid1D& grid() const { return grid_; }
    double mass() const { return mass_; }
    std::size_t size() const { return frames_.size(); }
    double t_begin() const;
    double t_end() const;
    double spacing() const { return spacing_; }
    std::size_t stored_points() const;

private:
    struct Frame {
        double time = 0.0;
        std::size_t offset = 0;
        std::size_t length = 0;
        std::vector<double> q, q_t, q_x, q_tt, q_xt, q_xx, velocity, velocity_x;
        std::vector<std::uint8_t> node_mask;
    };

    Sample sample_frame(const Frame& frame, double x) const;

    Grid1D grid_;
    double mass_;
    double spacing_ = 0.0;
    std::vector<Frame> frames_;
};

} // namespace qgeo::polar

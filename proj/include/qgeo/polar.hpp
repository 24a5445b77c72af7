#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "qgeo/fft.hpp"
#include "qgeo/grid.hpp"

namespace qgeo::polar {

inline constexpr double default_node_threshold = 1e-6;

struct PolarSnapshot {
    Grid1D grid;
    double time = 0.0;
    double node_threshold = default_node_threshold;
    std::vector<double> amplitude;
    // hbar * arg(phi), unwrapped left to right and aligned in time at the amplitude peak.
    std::vector<double> action;
    // d^k A/dx^k for k = 1..4 and d^k S/dx^k for k = 1..2.
    std::array<std::vector<double>, 4> amplitude_derivs;
    std::array<std::vector<double>, 2> action_derivs;
    // 1 where A < node_threshold * max(A).
    std::vector<std::uint8_t> node_mask;
};

// `previous` (may be null) is used only to align the 2*pi*hbar offset of S in time.
// Throws UnwrapAmbiguous when adjacent unmasked phases differ by pi*hbar.
PolarSnapshot decompose_polar(const ComplexField& field, const PolarSnapshot* previous = nullptr,
                              double node_threshold = default_node_threshold);
PolarSnapshot decompose_polar(const ComplexField& field, const Fft& fft, const PolarSnapshot* previous = nullptr,
                              double node_threshold = default_node_threshold);

struct QuantumPotentialTable {
    Grid1D grid;
    double time = 0.0;
    std::vector<double> q;
    std::vector<double> q_x;
    std::vector<double> q_xx;
    std::vector<double> q_t;
    std::vector<double> q_tt;
    std::vector<double> q_xt;
    std::vector<std::uint8_t> node_mask;
    bool has_time_derivatives = false;
};

// Q = -(hbar^2 / 2m) A''/A with spatial derivatives from the spectral A-derivatives.
// Masked points are filled by linear inter/extrapolation from the nearest unmasked neighbours.
QuantumPotentialTable quantum_potential(const PolarSnapshot& snap, double mass,
                                        double node_threshold = default_node_threshold);

// Three-deep ring that fills in Q_t, Q_tt and Q_xt. Interior tables get centered
// differences; the first and last tables of a run get one-sided second-order ones.
class TemporalRing {
public:
    // Returns the tables completed by this push, in time order.
    std::vector<QuantumPotentialTable> push(QuantumPotentialTable table);
    // Completes the final table. Requires at least three pushes in total.
    std::vector<QuantumPotentialTable> finish();

private:
    std::deque<QuantumPotentialTable> window_;
    std::size_t pushed_ = 0;
};

struct ResidualProfile {
    std::vector<double> values;
    std::vector<std::uint8_t> node_mask;
    double max_abs_unmasked = 0.0;
};

// Quantum Hamilton-Jacobi residual at mid.time from three equally spaced snapshots.
// Temporal differences of S are taken modulo 2*pi*hbar.
ResidualProfile hj_residual(const PolarSnapshot& prev, const PolarSnapshot& mid, const PolarSnapshot& next,
                            std::span<const double> potential, double mass);
// Continuity residual d(A^2)/dt + d/dx(A^2 S_x / m) at mid.time.
ResidualProfile continuity_residual(const PolarSnapshot& prev, const PolarSnapshot& mid,
                                    const PolarSnapshot& next, double mass);

struct FieldSample {
    double q = 0.0;
    double q_x = 0.0;
    double q_t = 0.0;
    double q_xx = 0.0;
    double q_xt = 0.0;
    double q_tt = 0.0;
    bool flagged = false;
};

// Cubic interpolation on the 4-point stencil around x; flagged if any stencil point is masked.
// Throws OutOfRange outside [x_min, x_max].
FieldSample sample_field(const QuantumPotentialTable& table, double x);

} // namespace qgeo::polar

#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qgeo {

// Atomic units throughout.
inline constexpr double hbar = 1.0;

// Uniform periodic grid. Point i sits at x_min + i*dx and x_max is identified with x_min.
struct Grid1D {
    std::size_t n_points = 0;
    double x_min = 0.0;
    double x_max = 0.0;

    // Throws std::invalid_argument unless n is a power of two >= 16 and x_max > x_min.
    static Grid1D make(std::size_t n_points, double x_min, double x_max);

    double length() const { return x_max - x_min; }
    double dx() const { return length() / static_cast<double>(n_points); }
    double x(std::size_t i) const { return x_min + dx() * static_cast<double>(i); }
    std::vector<double> coordinates() const;
    // Angular wavenumbers in FFT order.
    std::vector<double> wavenumbers() const;

    bool operator==(const Grid1D&) const = default;
};

struct ComplexField {
    Grid1D grid;
    double time = 0.0;
    std::vector<std::complex<double>> values;
};

} // namespace qgeo

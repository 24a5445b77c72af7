#include "qgeo/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qgeo {

Grid1D Grid1D::make(std::size_t n_points, double x_min, double x_max)
{
    if (n_points < 16 || (n_points & (n_points - 1)) != 0) {
        throw std::invalid_argument("grid.n must be a power of two >= 16");
    }
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_max > x_min)) {
        throw std::invalid_argument("grid requires finite x_min < x_max");
    }
    return Grid1D{n_points, x_min, x_max};
}

std::vector<double> Grid1D::coordinates() const
{
    std::vector<double> xs(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        xs[i] = x(i);
    }
    return xs;
}

std::vector<double> Grid1D::wavenumbers() const
{
    std::vector<double> k(n_points);
    const double dk = 2.0 * std::numbers::pi / length();
    const auto n = static_cast<long>(n_points);
    for (long i = 0; i < n; ++i) {
        const long j = i < n / 2 ? i : i - n;
        k[static_cast<std::size_t>(i)] = dk * static_cast<double>(j);
    }
    return k;
}

} // namespace qgeo

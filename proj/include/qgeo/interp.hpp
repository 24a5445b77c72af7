#pragma once

namespace qgeo::interp {

// Cubic Hermite on [0, h] with values f0, f1 and slopes d0, d1; u in [0, 1].
inline double hermite(double f0, double f1, double d0, double d1, double h, double u)
{
    const double u2 = u * u;
    const double u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * h * d0 + (-2 * u3 + 3 * u2) * f1 +
           (u3 - u2) * h * d1;
}

inline double hermite_slope(double f0, double f1, double d0, double d1, double h, double u)
{
    const double u2 = u * u;
    return ((6 * u2 - 6 * u) * f0 + (3 * u2 - 4 * u + 1) * h * d0 + (-6 * u2 + 6 * u) * f1 +
            (3 * u2 - 2 * u) * h * d1) /
           h;
}

// Catmull-Rom between p1 and p2; u in [0, 1].
inline double catmull_rom(double p0, double p1, double p2, double p3, double u)
{
    return hermite(p1, p2, 0.5 * (p2 - p0), 0.5 * (p3 - p1), 1.0, u);
}

} // namespace qgeo::interp

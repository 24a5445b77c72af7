#pragma once

#include <array>
#include <span>
#include <vector>

#include "qgeo/finsler.hpp"

namespace qgeo::curvature {

using finsler::max_dim;

struct Tensor4 {
    int d = 0;
    std::array<double, max_dim * max_dim * max_dim * max_dim> data{};
    double& operator()(int a, int b, int c, int e) { return data[static_cast<std::size_t>(((a * d + b) * d + c) * d + e)]; }
    double operator()(int a, int b, int c, int e) const
    {
        return data[static_cast<std::size_t>(((a * d + b) * d + c) * d + e)];
    }
};

struct CurvatureSample {
    finsler::ExtendedState at;
    // riemann(delta, alpha, beta, gamma) = R^delta_{alpha beta gamma}
    Tensor4 riemann;
    // R_{alpha beta} = R^gamma_{alpha beta gamma}
    finsler::Mat ricci;
    // g^{alpha beta} R_{alpha beta}
    double scalar = 0.0;
    bool trusted = true;
};

// R^d_{abc} = d_b Gamma^d_{ac} - d_c Gamma^d_{ab} + Gamma^l_{ac} Gamma^d_{lb} - Gamma^l_{ab} Gamma^d_{lc},
// with Gamma differentiated by central differences in the positions (velocities held fixed) and
// step max(h, h|q^b|). Untrusted when any stencil point is node-flagged or near-singular.
CurvatureSample riemann(const finsler::ExtendedState& state, const finsler::FieldProbe& probe, double mass,
                        double h = 1e-4, finsler::MetricVariant variant = finsler::MetricVariant::literal);

struct CurvatureRow {
    double t = 0.0;
    int id = 0;
    double q1 = 0.0;
    double r = 0.0;
    bool trusted = false;
};

// Scalar curvature of each trajectory at each requested coordinate time (sorted by t, then id).
std::vector<CurvatureRow> curvature_along(std::span<const finsler::ExtendedTrajectory> trajectories,
                                          const finsler::FieldProbe& probe, double mass, std::span<const double> times,
                                          double h = 1e-4, std::size_t threads = 1,
                                          finsler::MetricVariant variant = finsler::MetricVariant::literal);

} // namespace qgeo::curvature

#include "qgeo/curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qgeo/errors.hpp"
#include "qgeo/parallel.hpp"

namespace qgeo::curvature {

using finsler::ChristoffelSample;
using finsler::ExtendedState;

CurvatureSample riemann(const ExtendedState& state, const finsler::FieldProbe& probe, double mass, double h,
                        finsler::MetricVariant variant)
{
    const int d = state.dim();
    CurvatureSample out;
    out.at = state;
    out.riemann.d = d;

    const ChristoffelSample g0 = finsler::christoffel(state, probe, mass, h, variant);
    const finsler::MetricSample m0 = finsler::metric(state, probe, mass, variant);
    bool trusted = !g0.flagged;

    // dgamma[b](a, c, e) = d_b Gamma^a_{ce}
    std::array<finsler::Tensor3, max_dim> dgamma;
    for (int b = 0; b < d; ++b) {
        const double hb = std::max(h, h * std::abs(state.q[b]));
        ExtendedState p = state, m = state;
        p.q[b] += hb;
        m.q[b] -= hb;
        const ChristoffelSample gp = finsler::christoffel(p, probe, mass, h, variant);
        const ChristoffelSample gm = finsler::christoffel(m, probe, mass, h, variant);
        trusted = trusted && !gp.flagged && !gm.flagged;
        auto& t = dgamma[static_cast<std::size_t>(b)];
        t.d = d;
        for (std::size_t k = 0; k < t.data.size(); ++k) {
            t.data[k] = (gp.gamma.data[k] - gm.gamma.data[k]) / (2.0 * hb);
        }
    }

    const auto& G = g0.gamma;
    for (int dl = 0; dl < d; ++dl) {
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                for (int c = 0; c < d; ++c) {
                    double r = dgamma[static_cast<std::size_t>(b)](dl, a, c) -
                               dgamma[static_cast<std::size_t>(c)](dl, a, b);
                    for (int l = 0; l < d; ++l) {
                        r += G(l, a, c) * G(dl, l, b) - G(l, a, b) * G(dl, l, c);
                    }
                    out.riemann(dl, a, b, c) = r;
                }
            }
        }
    }
    out.ricci = finsler::Mat::Zero(d, d);
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            double sum = 0.0;
            for (int c = 0; c < d; ++c) {
                sum += out.riemann(c, a, b, c);
            }
            out.ricci(a, b) = sum;
        }
    }
    out.scalar = (m0.g_inv.cwiseProduct(out.ricci)).sum();
    out.trusted = trusted && std::isfinite(out.scalar);
    return out;
}

std::vector<CurvatureRow> curvature_along(std::span<const finsler::ExtendedTrajectory> trajectories,
                                          const finsler::FieldProbe& probe, double mass, std::span<const double> times,
                                          double h, std::size_t threads, finsler::MetricVariant variant)
{
    const std::size_t nt = trajectories.size();
    std::vector<std::vector<CurvatureRow>> per_time(times.size());
    parallel_for(times.size(), threads, [&](std::size_t k) {
        auto& rows = per_time[k];
        for (std::size_t j = 0; j < nt; ++j) {
            const auto& traj = trajectories[j];
            std::uint8_t flags = 0;
            const auto state = traj.state_at_time(times[k], &flags);
            if (!state) {
                continue;
            }
            CurvatureRow row;
            row.t = times[k];
            row.id = traj.id;
            row.q1 = state->q[1];
            try {
                const CurvatureSample c = riemann(*state, probe, mass, h, variant);
                row.r = c.scalar;
                row.trusted = c.trusted && flags == 0;
            } catch (const SingularMetric&) {
                row.r = std::numeric_limits<double>::quiet_NaN();
                row.trusted = false;
            }
            rows.push_back(row);
        }
    });
    std::vector<CurvatureRow> out;
    for (auto& rows : per_time) {
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

} // namespace qgeo::curvature

#include "qgeo/bohmian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qgeo/errors.hpp"
#include "qgeo/interp.hpp"
#include "qgeo/parallel.hpp"

namespace qgeo::bohmian {

std::string to_string(TrajectoryStatus status)
{
    switch (status) {
    case TrajectoryStatus::completed:
        return "completed";
    case TrajectoryStatus::left_grid:
        return "left_grid";
    case TrajectoryStatus::non_finite:
        return "non_finite";
    }
    return "unknown";
}

namespace {

std::size_t bracket(const std::vector<TrajectorySample>& s, double t)
{
    if (s.size() < 2 || t < s.front().t || t > s.back().t) {
        throw OutOfRange("time outside the trajectory record");
    }
    auto it = std::upper_bound(s.begin(), s.end(), t, [](double v, const TrajectorySample& a) { return v < a.t; });
    auto k = static_cast<std::size_t>(it - s.begin());
    return std::min(k, s.size() - 1) - 1;
}

std::size_t step_count(double t0, double t_final, double dt)
{
    if (!(dt > 0.0)) {
        throw std::invalid_argument("trajectory dt must be positive");
    }
    return static_cast<std::size_t>(std::llround(std::max(0.0, t_final - t0) / dt));
}

bool inside(const Grid1D& g, double x)
{
    return std::isfinite(x) && x >= g.x_min && x <= g.x_max;
}

} // namespace

double TrajectoryRecord::position_at(double t) const
{
    const std::size_t k = bracket(samples, t);
    const auto& a = samples[k];
    const auto& b = samples[k + 1];
    const double h = b.t - a.t;
    return interp::hermite(a.x, b.x, a.v, b.v, h, (t - a.t) / h);
}

bool TrajectoryRecord::flagged_near(double t) const
{
    const std::size_t k = bracket(samples, t);
    return samples[k].node_flag || samples[k + 1].node_flag;
}

double velocity_field(const polar::PolarSnapshot& snap, double x, double mass)
{
    const Grid1D& g = snap.grid;
    if (!(x >= g.x_min && x <= g.x_max)) {
        throw OutOfRange("x outside the grid");
    }
    const double dx = g.dx();
    const double u = (x - g.x_min) / dx;
    const auto n = static_cast<long>(g.n_points);
    long i = std::min(static_cast<long>(std::floor(u)), n - 1);
    const double f = u - static_cast<double>(i);
    auto at = [n](long k) { return static_cast<std::size_t>(((k % n) + n) % n); };
    for (long k = -1; k <= 2; ++k) {
        if (snap.node_mask[at(i + k)]) {
            throw NodeRegion("velocity requested in a node region at x=" + std::to_string(x));
        }
    }
    const auto& s1 = snap.action_derivs[0];
    const auto& s2 = snap.action_derivs[1];
    return interp::hermite(s1[at(i)], s1[at(i + 1)], s2[at(i)], s2[at(i + 1)], dx, f) / mass;
}

std::vector<TrajectoryRecord> integrate_first_order(std::span<const double> x0, const polar::FieldHistory& fields,
                                                    const IntegrationOptions& options)
{
    const double t0 = fields.t_begin();
    const std::size_t steps = step_count(t0, options.t_final, options.dt);
    const double h = options.dt;
    std::vector<TrajectoryRecord> out(x0.size());
    parallel_for(x0.size(), options.threads, [&](std::size_t id) {
        TrajectoryRecord rec;
        rec.id = static_cast<int>(id);
        rec.samples.reserve(steps + 1);
        double x = x0[id];
        auto s0 = fields.sample(t0, x);
        rec.samples.push_back({t0, x, s0.velocity, s0.flagged});
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = t0 + static_cast<double>(k) * h;
            bool flagged = false;
            auto vel = [&](double tt, double xx) {
                if (!inside(fields.grid(), xx)) {
                    throw LeftGrid("trajectory left the grid");
                }
                const auto s = fields.sample(tt, xx);
                flagged = flagged || s.flagged;
                return s.velocity;
            };
            try {
                const double k1 = vel(t, x);
                const double k2 = vel(t + 0.5 * h, x + 0.5 * h * k1);
                const double k3 = vel(t + 0.5 * h, x + 0.5 * h * k2);
                const double k4 = vel(t + h, x + h * k3);
                x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                const double t_next = t0 + static_cast<double>(k + 1) * h;
                const double v = vel(t_next, x);
                rec.samples.push_back({t_next, x, v, flagged});
            } catch (const LeftGrid&) {
                rec.status = TrajectoryStatus::left_grid;
                break;
            }
            if (!std::isfinite(x)) {
                rec.status = TrajectoryStatus::non_finite;
                break;
            }
        }
        out[id] = std::move(rec);
    });
    return out;
}

std::vector<TrajectoryRecord> integrate_second_order(std::span<const double> x0, std::span<const double> v0,
                                                     const field::PotentialSpec& potential,
                                                     const polar::FieldHistory& fields,
                                                     const IntegrationOptions& options)
{
    if (x0.size() != v0.size()) {
        throw std::invalid_argument("x0 and v0 sizes differ");
    }
    const double t0 = fields.t_begin();
    const std::size_t steps = step_count(t0, options.t_final, options.dt);
    const double h = options.dt;
    const double m = fields.mass();
    std::vector<TrajectoryRecord> out(x0.size());
    parallel_for(x0.size(), options.threads, [&](std::size_t id) {
        TrajectoryRecord rec;
        rec.id = static_cast<int>(id);
        rec.samples.reserve(steps + 1);
        double x = x0[id];
        double v = v0[id];
        rec.samples.push_back({t0, x, v, fields.sample(t0, x).flagged});
        for (std::size_t k = 0; k < steps; ++k) {
            const double t = t0 + static_cast<double>(k) * h;
            bool flagged = false;
            auto acc = [&](double tt, double xx) {
                if (!inside(fields.grid(), xx)) {
                    throw LeftGrid("trajectory left the grid");
                }
                const auto s = fields.sample(tt, xx);
                flagged = flagged || s.flagged;
                return -(potential.gradient(xx) + s.q_x) / m;
            };
            try {
                const double ax1 = v, av1 = acc(t, x);
                const double ax2 = v + 0.5 * h * av1, av2 = acc(t + 0.5 * h, x + 0.5 * h * ax1);
                const double ax3 = v + 0.5 * h * av2, av3 = acc(t + 0.5 * h, x + 0.5 * h * ax2);
                const double ax4 = v + h * av3, av4 = acc(t + h, x + h * ax3);
                x += h / 6.0 * (ax1 + 2.0 * ax2 + 2.0 * ax3 + ax4);
                v += h / 6.0 * (av1 + 2.0 * av2 + 2.0 * av3 + av4);
                const double t_next = t0 + static_cast<double>(k + 1) * h;
                if (!inside(fields.grid(), x)) {
                    throw LeftGrid("trajectory left the grid");
                }
                flagged = flagged || fields.sample(t_next, x).flagged;
                rec.samples.push_back({t_next, x, v, flagged});
            } catch (const LeftGrid&) {
                rec.status = TrajectoryStatus::left_grid;
                break;
            }
            if (!std::isfinite(x) || !std::isfinite(v)) {
                rec.status = TrajectoryStatus::non_finite;
                break;
            }
        }
        out[id] = std::move(rec);
    });
    return out;
}

} // namespace qgeo::bohmian

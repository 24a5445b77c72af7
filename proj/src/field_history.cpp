#include "qgeo/field_history.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qgeo/errors.hpp"
#include "qgeo/interp.hpp"

namespace qgeo::polar {

namespace {

constexpr std::size_t crop_margin = 8;

}

FieldHistory::FieldHistory(const Grid1D& grid, double mass) : grid_(grid), mass_(mass)
{
    if (!(mass > 0.0)) {
        throw std::invalid_argument("mass must be positive");
    }
}

double FieldHistory::t_begin() const
{
    return frames_.empty() ? 0.0 : frames_.front().time;
}

double FieldHistory::t_end() const
{
    return frames_.empty() ? 0.0 : frames_.back().time;
}

std::size_t FieldHistory::stored_points() const
{
    std::size_t total = 0;
    for (const auto& f : frames_) {
        total += f.length;
    }
    return total;
}

void FieldHistory::append(const PolarSnapshot& snap, const QuantumPotentialTable& table)
{
    if (!(snap.grid == grid_) || !(table.grid == grid_)) {
        throw std::invalid_argument("frame grid does not match history grid");
    }
    if (!table.has_time_derivatives) {
        throw std::invalid_argument("table is missing its time derivatives");
    }
    if (std::abs(snap.time - table.time) > 1e-9) {
        throw std::invalid_argument("snapshot and table times differ");
    }
    if (!frames_.empty()) {
        const double step = table.time - frames_.back().time;
        if (frames_.size() == 1) {
            if (!(step > 0.0)) {
                throw std::invalid_argument("frames must be increasing in time");
            }
            spacing_ = step;
        } else if (std::abs(step - spacing_) > 1e-9 * std::max(1.0, spacing_)) {
            throw std::invalid_argument("frames must be equally spaced in time");
        }
    }

    const std::size_t n = grid_.n_points;
    std::size_t first = n;
    std::size_t last = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!table.node_mask[i]) {
            first = std::min(first, i);
            last = i;
        }
    }
    Frame frame;
    frame.time = table.time;
    if (first == n || first < crop_margin || last + crop_margin + 1 > n) {
        frame.offset = 0;
        frame.length = n;
    } else {
        frame.offset = first - crop_margin;
        frame.length = last + crop_margin + 1 - frame.offset;
    }
    auto slice = [&](const std::vector<double>& v) {
        return std::vector<double>(v.begin() + static_cast<long>(frame.offset),
                                   v.begin() + static_cast<long>(frame.offset + frame.length));
    };
    frame.q = slice(table.q);
    frame.q_t = slice(table.q_t);
    frame.q_x = slice(table.q_x);
    frame.q_tt = slice(table.q_tt);
    frame.q_xt = slice(table.q_xt);
    frame.q_xx = slice(table.q_xx);
    frame.velocity = slice(snap.action_derivs[0]);
    frame.velocity_x = slice(snap.action_derivs[1]);
    for (std::size_t i = 0; i < frame.length; ++i) {
        frame.velocity[i] /= mass_;
        frame.velocity_x[i] /= mass_;
    }
    frame.node_mask.assign(table.node_mask.begin() + static_cast<long>(frame.offset),
                           table.node_mask.begin() + static_cast<long>(frame.offset + frame.length));
    frames_.push_back(std::move(frame));
}

FieldHistory::Sample FieldHistory::sample_frame(const Frame& frame, double x) const
{
    const double dx = grid_.dx();
    const double u = (x - grid_.x_min) / dx;
    const auto n = static_cast<long>(grid_.n_points);
    long i = static_cast<long>(std::floor(u));
    double f = u - static_cast<double>(i);
    if (i >= n) {
        i = n - 1;
        f = 1.0;
    }
    Sample s;
    std::size_t idx[4];
    for (long k = 0; k < 4; ++k) {
        const long wrapped = (((i - 1 + k) % n) + n) % n;
        long local = wrapped - static_cast<long>(frame.offset);
        if (local < 0 || local >= static_cast<long>(frame.length)) {
            s.flagged = true;
            local = std::clamp(local, 0L, static_cast<long>(frame.length) - 1);
        }
        idx[k] = static_cast<std::size_t>(local);
        if (frame.node_mask[idx[k]]) {
            s.flagged = true;
        }
    }
    auto herm = [&](const std::vector<double>& v, const std::vector<double>& dv) {
        return interp::hermite(v[idx[1]], v[idx[2]], dv[idx[1]], dv[idx[2]], dx, f);
    };
    auto cr = [&](const std::vector<double>& v) {
        return interp::catmull_rom(v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]], f);
    };
    s.q = herm(frame.q, frame.q_x);
    s.q_x = herm(frame.q_x, frame.q_xx);
    s.q_xx = cr(frame.q_xx);
    s.q_t = herm(frame.q_t, frame.q_xt);
    s.q_xt = cr(frame.q_xt);
    s.q_tt = cr(frame.q_tt);
    s.velocity = herm(frame.velocity, frame.velocity_x);
    s.velocity_x = cr(frame.velocity_x);
    return s;
}

FieldHistory::Sample FieldHistory::sample(double t, double x) const
{
    if (frames_.empty()) {
        throw OutOfRange("field history is empty");
    }
    if (!(x >= grid_.x_min && x <= grid_.x_max)) {
        throw OutOfRange("x=" + std::to_string(x) + " outside the grid");
    }
    const double slack = 1e-9 * std::max(1.0, spacing_);
    if (!(t >= t_begin() - slack && t <= t_end() + slack)) {
        throw OutOfRange("t=" + std::to_string(t) + " outside the stored time span");
    }
    if (frames_.size() == 1) {
        return sample_frame(frames_.front(), x);
    }
    const double pos = (t - t_begin()) / spacing_;
    auto k = static_cast<std::size_t>(std::clamp(std::floor(pos), 0.0, static_cast<double>(frames_.size() - 2)));
    const double w = std::clamp(pos - static_cast<double>(k), 0.0, 1.0);
    const Sample a = sample_frame(frames_[k], x);
    if (w == 0.0) {
        return a;
    }
    const Sample b = sample_frame(frames_[k + 1], x);
    auto mix = [w](double p, double q) { return (1.0 - w) * p + w * q; };
    Sample s;
    s.q = mix(a.q, b.q);
    s.q_t = mix(a.q_t, b.q_t);
    s.q_x = mix(a.q_x, b.q_x);
    s.q_tt = mix(a.q_tt, b.q_tt);
    s.q_xt = mix(a.q_xt, b.q_xt);
    s.q_xx = mix(a.q_xx, b.q_xx);
    s.velocity = mix(a.velocity, b.velocity);
    s.velocity_x = mix(a.velocity_x, b.velocity_x);
    s.flagged = a.flagged || b.flagged;
    return s;
}

} // namespace qgeo::polar

#include "qgeo/polar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include "qgeo/errors.hpp"
#include "qgeo/interp.hpp"

namespace qgeo::polar {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double wrap_phase(double d)
{
    // into (-pi, pi]
    d = std::remainder(d, two_pi);
    if (d <= -std::numbers::pi) {
        d += two_pi;
    }
    return d;
}

double finite_or_zero(double v)
{
    return std::isfinite(v) ? v : 0.0;
}

std::vector<std::uint8_t> node_mask_for(const std::vector<double>& amplitude, double threshold)
{
    const double peak = amplitude.empty() ? 0.0 : *std::max_element(amplitude.begin(), amplitude.end());
    std::vector<std::uint8_t> mask(amplitude.size());
    for (std::size_t i = 0; i < amplitude.size(); ++i) {
        mask[i] = !(amplitude[i] >= threshold * peak) || !(peak > 0.0) ? 1 : 0;
    }
    return mask;
}

// Linear inter/extrapolation of masked entries from the nearest unmasked neighbours.
void fill_masked(std::vector<double>& f, const std::vector<std::uint8_t>& mask)
{
    const std::size_t n = f.size();
    std::vector<long> prev(n, -1);
    std::vector<long> next(n, -1);
    long last = -1;
    for (std::size_t i = 0; i < n; ++i) {
        prev[i] = last;
        if (!mask[i]) {
            last = static_cast<long>(i);
        }
    }
    last = -1;
    for (std::size_t i = n; i-- > 0;) {
        next[i] = last;
        if (!mask[i]) {
            last = static_cast<long>(i);
        }
    }
    auto line = [&](long i0, long i1, long at) {
        const double slope = (f[i1] - f[i0]) / static_cast<double>(i1 - i0);
        return f[i1] + slope * static_cast<double>(at - i1);
    };
    std::vector<double> out = f;
    for (std::size_t i = 0; i < n; ++i) {
        if (!mask[i]) {
            continue;
        }
        const long at = static_cast<long>(i);
        const long l = prev[i];
        const long r = next[i];
        if (l >= 0 && r >= 0) {
            out[i] = line(l, r, at);
        } else if (l >= 0) {
            const long l2 = prev[static_cast<std::size_t>(l)];
            out[i] = l2 >= 0 ? line(l2, l, at) : f[l];
        } else if (r >= 0) {
            const long r2 = next[static_cast<std::size_t>(r)];
            out[i] = r2 >= 0 ? line(r2, r, at) : f[r];
        }
    }
    f = std::move(out);
}

void require_same_grid(const PolarSnapshot& a, const PolarSnapshot& b)
{
    if (!(a.grid == b.grid)) {
        throw std::invalid_argument("snapshots live on different grids");
    }
}

double centered_spacing(double t0, double t1, double t2)
{
    const double d0 = t1 - t0;
    const double d1 = t2 - t1;
    if (!(d0 > 0.0) || std::abs(d1 - d0) > 1e-9 * std::max(1.0, std::abs(d0))) {
        throw std::invalid_argument("time derivative needs three equally spaced, increasing times");
    }
    return 0.5 * (d0 + d1);
}

} // namespace

PolarSnapshot decompose_polar(const ComplexField& field, const PolarSnapshot* previous, double node_threshold)
{
    Fft fft(field.grid.n_points);
    return decompose_polar(field, fft, previous, node_threshold);
}

PolarSnapshot decompose_polar(const ComplexField& field, const Fft& fft, const PolarSnapshot* previous,
                              double node_threshold)
{
    const Grid1D& grid = field.grid;
    const std::size_t n = grid.n_points;
    const auto& phi = field.values;
    const auto d = spectral_derivatives(grid, phi, 4, fft);

    PolarSnapshot snap;
    snap.grid = grid;
    snap.time = field.time;
    snap.node_threshold = node_threshold;
    snap.amplitude.resize(n);
    snap.action.resize(n);
    for (auto& a : snap.amplitude_derivs) {
        a.assign(n, 0.0);
    }
    for (auto& s : snap.action_derivs) {
        s.assign(n, 0.0);
    }

    // Derivatives of rho = |phi|^2 by Leibniz, then of A = sqrt(rho) by the chain rule.
    // This avoids differentiating A itself, which has kinks where phi vanishes.
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> p[5] = {phi[i], d[0][i], d[1][i], d[2][i], d[3][i]};
        auto re = [&](int a, int b) { return (p[a] * std::conj(p[b])).real(); };
        const double rho0 = std::norm(p[0]);
        const double rho1 = 2.0 * re(1, 0);
        const double rho2 = 2.0 * re(2, 0) + 2.0 * re(1, 1);
        const double rho3 = 2.0 * re(3, 0) + 6.0 * re(2, 1);
        const double rho4 = 2.0 * re(4, 0) + 8.0 * re(3, 1) + 6.0 * re(2, 2);
        const double amp = std::sqrt(rho0);
        snap.amplitude[i] = amp;
        if (!(amp > 0.0)) {
            continue;
        }
        const double a1 = rho1 / (2.0 * amp);
        const double a2 = (rho2 - 2.0 * a1 * a1) / (2.0 * amp);
        const double a3 = (rho3 - 6.0 * a1 * a2) / (2.0 * amp);
        const double a4 = (rho4 - 8.0 * a1 * a3 - 6.0 * a2 * a2) / (2.0 * amp);
        snap.amplitude_derivs[0][i] = finite_or_zero(a1);
        snap.amplitude_derivs[1][i] = finite_or_zero(a2);
        snap.amplitude_derivs[2][i] = finite_or_zero(a3);
        snap.amplitude_derivs[3][i] = finite_or_zero(a4);

        const double j1 = (std::conj(p[0]) * p[1]).imag();
        const double j2 = (std::conj(p[0]) * p[2]).imag();
        snap.action_derivs[0][i] = finite_or_zero(hbar * j1 / rho0);
        snap.action_derivs[1][i] = finite_or_zero(hbar * (j2 * rho0 - j1 * rho1) / (rho0 * rho0));
    }
    snap.node_mask = node_mask_for(snap.amplitude, node_threshold);

    double running = std::arg(phi[0]);
    snap.action[0] = hbar * running;
    for (std::size_t i = 1; i < n; ++i) {
        const double step = wrap_phase(std::arg(phi[i]) - std::arg(phi[i - 1]));
        if (!snap.node_mask[i] && !snap.node_mask[i - 1] && std::abs(step) >= std::numbers::pi * (1.0 - 1e-9)) {
            throw UnwrapAmbiguous("phase jump of pi between x=" + std::to_string(grid.x(i - 1)) + " and x=" +
                                  std::to_string(grid.x(i)));
        }
        running += step;
        snap.action[i] = hbar * running;
    }

    if (previous != nullptr) {
        require_same_grid(*previous, snap);
        const auto peak = static_cast<std::size_t>(
            std::max_element(snap.amplitude.begin(), snap.amplitude.end()) - snap.amplitude.begin());
        const double turns = std::round((previous->action[peak] - snap.action[peak]) / (two_pi * hbar));
        if (turns != 0.0) {
            for (auto& s : snap.action) {
                s += turns * two_pi * hbar;
            }
        }
    }
    return snap;
}

QuantumPotentialTable quantum_potential(const PolarSnapshot& snap, double mass, double node_threshold)
{
    if (!(mass > 0.0)) {
        throw std::invalid_argument("mass must be positive");
    }
    const std::size_t n = snap.grid.n_points;
    QuantumPotentialTable table;
    table.grid = snap.grid;
    table.time = snap.time;
    table.node_mask = node_mask_for(snap.amplitude, node_threshold);
    if (std::all_of(table.node_mask.begin(), table.node_mask.end(), [](auto m) { return m != 0; })) {
        throw AllMasked("every grid point is below the node threshold at t=" + std::to_string(snap.time));
    }
    table.q.assign(n, 0.0);
    table.q_x.assign(n, 0.0);
    table.q_xx.assign(n, 0.0);
    table.q_t.assign(n, 0.0);
    table.q_tt.assign(n, 0.0);
    table.q_xt.assign(n, 0.0);

    const double c = -hbar * hbar / (2.0 * mass);
    for (std::size_t i = 0; i < n; ++i) {
        if (table.node_mask[i]) {
            continue;
        }
        const double a = snap.amplitude[i];
        const double r1 = snap.amplitude_derivs[0][i] / a;
        const double r2 = snap.amplitude_derivs[1][i] / a;
        const double r3 = snap.amplitude_derivs[2][i] / a;
        const double r4 = snap.amplitude_derivs[3][i] / a;
        table.q[i] = c * r2;
        table.q_x[i] = c * (r3 - r2 * r1);
        table.q_xx[i] = c * (r4 - 2.0 * r3 * r1 - r2 * r2 + 2.0 * r2 * r1 * r1);
    }
    fill_masked(table.q, table.node_mask);
    fill_masked(table.q_x, table.node_mask);
    fill_masked(table.q_xx, table.node_mask);
    return table;
}

namespace {

QuantumPotentialTable with_time_derivatives(const QuantumPotentialTable& t0, const QuantumPotentialTable& t1,
                                            const QuantumPotentialTable& t2, int which)
{
    const double h = centered_spacing(t0.time, t1.time, t2.time);
    QuantumPotentialTable out = which == 0 ? t0 : (which == 1 ? t1 : t2);
    const std::size_t n = out.q.size();
    out.q_t.resize(n);
    out.q_tt.resize(n);
    out.q_xt.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double q0 = t0.q[i], q1 = t1.q[i], q2 = t2.q[i];
        const double x0 = t0.q_x[i], x1 = t1.q_x[i], x2 = t2.q_x[i];
        out.q_tt[i] = (q0 - 2.0 * q1 + q2) / (h * h);
        switch (which) {
        case 0:
            out.q_t[i] = (-3.0 * q0 + 4.0 * q1 - q2) / (2.0 * h);
            out.q_xt[i] = (-3.0 * x0 + 4.0 * x1 - x2) / (2.0 * h);
            break;
        case 1:
            out.q_t[i] = (q2 - q0) / (2.0 * h);
            out.q_xt[i] = (x2 - x0) / (2.0 * h);
            break;
        default:
            out.q_t[i] = (3.0 * q2 - 4.0 * q1 + q0) / (2.0 * h);
            out.q_xt[i] = (3.0 * x2 - 4.0 * x1 + x0) / (2.0 * h);
            break;
        }
    }
    out.has_time_derivatives = true;
    return out;
}

} // namespace

std::vector<QuantumPotentialTable> TemporalRing::push(QuantumPotentialTable table)
{
    if (!window_.empty() && !(table.grid == window_.back().grid)) {
        throw std::invalid_argument("tables pushed into one ring must share a grid");
    }
    window_.push_back(std::move(table));
    if (window_.size() > 3) {
        window_.pop_front();
    }
    ++pushed_;
    std::vector<QuantumPotentialTable> done;
    if (pushed_ == 3) {
        done.push_back(with_time_derivatives(window_[0], window_[1], window_[2], 0));
    }
    if (pushed_ >= 3) {
        done.push_back(with_time_derivatives(window_[0], window_[1], window_[2], 1));
    }
    return done;
}

std::vector<QuantumPotentialTable> TemporalRing::finish()
{
    if (pushed_ < 3) {
        throw std::invalid_argument("time derivatives need at least three tables");
    }
    std::vector<QuantumPotentialTable> done;
    done.push_back(with_time_derivatives(window_[0], window_[1], window_[2], 2));
    window_.clear();
    pushed_ = 0;
    return done;
}

ResidualProfile hj_residual(const PolarSnapshot& prev, const PolarSnapshot& mid, const PolarSnapshot& next,
                            std::span<const double> potential, double mass)
{
    require_same_grid(prev, mid);
    require_same_grid(mid, next);
    if (potential.size() != mid.grid.n_points) {
        throw std::invalid_argument("potential size does not match grid");
    }
    const double h = centered_spacing(prev.time, mid.time, next.time);
    ResidualProfile out;
    out.node_mask = mid.node_mask;
    out.values.assign(mid.grid.n_points, 0.0);
    for (std::size_t i = 0; i < mid.grid.n_points; ++i) {
        const double a = mid.amplitude[i];
        if (!(a > 0.0)) {
            continue;
        }
        const double s_t = hbar * wrap_phase((next.action[i] - prev.action[i]) / hbar) / (2.0 * h);
        const double s_x = mid.action_derivs[0][i];
        const double r = s_t + s_x * s_x / (2.0 * mass) - hbar * hbar / (2.0 * mass) * mid.amplitude_derivs[1][i] / a +
                         potential[i];
        out.values[i] = r;
        if (!mid.node_mask[i]) {
            out.max_abs_unmasked = std::max(out.max_abs_unmasked, std::abs(r));
        }
    }
    return out;
}

ResidualProfile continuity_residual(const PolarSnapshot& prev, const PolarSnapshot& mid, const PolarSnapshot& next,
                                    double mass)
{
    require_same_grid(prev, mid);
    require_same_grid(mid, next);
    const double h = centered_spacing(prev.time, mid.time, next.time);
    ResidualProfile out;
    out.node_mask = mid.node_mask;
    out.values.assign(mid.grid.n_points, 0.0);
    for (std::size_t i = 0; i < mid.grid.n_points; ++i) {
        const double a = mid.amplitude[i];
        const double rho_t = (next.amplitude[i] * next.amplitude[i] - prev.amplitude[i] * prev.amplitude[i]) / (2.0 * h);
        const double flux_x =
            (2.0 * a * mid.amplitude_derivs[0][i] * mid.action_derivs[0][i] + a * a * mid.action_derivs[1][i]) / mass;
        const double r = rho_t + flux_x;
        out.values[i] = r;
        if (!mid.node_mask[i]) {
            out.max_abs_unmasked = std::max(out.max_abs_unmasked, std::abs(r));
        }
    }
    return out;
}

FieldSample sample_field(const QuantumPotentialTable& table, double x)
{
    const Grid1D& g = table.grid;
    if (!(x >= g.x_min && x <= g.x_max)) {
        throw OutOfRange("sample point x=" + std::to_string(x) + " outside the grid");
    }
    const double dx = g.dx();
    const double u = (x - g.x_min) / dx;
    const auto n = static_cast<long>(g.n_points);
    long i = static_cast<long>(std::floor(u));
    double f = u - static_cast<double>(i);
    // grid nodes reproduce the stored values
    if (std::abs(u - std::round(u)) < 1e-9) {
        i = std::lround(u);
        f = 0.0;
    }
    if (i >= n) {
        i = n - 1;
        f = 1.0;
    }
    auto at = [n](long k) { return static_cast<std::size_t>(((k % n) + n) % n); };
    const std::size_t im = at(i - 1), i0 = at(i), i1 = at(i + 1), i2 = at(i + 2);

    FieldSample s;
    s.flagged = table.node_mask[im] || table.node_mask[i0] || table.node_mask[i1] || table.node_mask[i2];
    auto herm = [&](const std::vector<double>& v, const std::vector<double>& dv) {
        return interp::hermite(v[i0], v[i1], dv[i0], dv[i1], dx, f);
    };
    auto cr = [&](const std::vector<double>& v) { return interp::catmull_rom(v[im], v[i0], v[i1], v[i2], f); };
    s.q = herm(table.q, table.q_x);
    s.q_x = herm(table.q_x, table.q_xx);
    s.q_xx = cr(table.q_xx);
    if (table.has_time_derivatives) {
        s.q_t = herm(table.q_t, table.q_xt);
        s.q_xt = cr(table.q_xt);
        s.q_tt = cr(table.q_tt);
    }
    return s;
}

} // namespace qgeo::polar

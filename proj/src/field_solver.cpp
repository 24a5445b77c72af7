#include "qgeo/field_solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qgeo/errors.hpp"

namespace qgeo::field {

PotentialKind parse_potential_kind(const std::string& name)
{
    if (name == "eckart") {
        return PotentialKind::eckart;
    }
    if (name == "harmonic") {
        return PotentialKind::harmonic;
    }
    if (name == "free") {
        return PotentialKind::free;
    }
    if (name == "tabulated") {
        return PotentialKind::tabulated;
    }
    throw std::invalid_argument("unknown potential kind '" + name + "'");
}

std::string to_string(PotentialKind kind)
{
    switch (kind) {
    case PotentialKind::eckart:
        return "eckart";
    case PotentialKind::harmonic:
        return "harmonic";
    case PotentialKind::free:
        return "free";
    case PotentialKind::tabulated:
        return "tabulated";
    }
    return "unknown";
}

PotentialSpec PotentialSpec::eckart(double v0, double a, double q_p)
{
    PotentialSpec spec;
    spec.kind = PotentialKind::eckart;
    spec.v0 = v0;
    spec.a = a;
    spec.q_p = q_p;
    spec.validate();
    return spec;
}

PotentialSpec PotentialSpec::harmonic(double omega, double mass, double center)
{
    PotentialSpec spec;
    spec.kind = PotentialKind::harmonic;
    spec.omega = omega;
    spec.mass = mass;
    spec.center = center;
    spec.validate();
    return spec;
}

PotentialSpec PotentialSpec::free_particle()
{
    PotentialSpec spec;
    spec.kind = PotentialKind::free;
    return spec;
}

PotentialSpec PotentialSpec::tabulated(const Grid1D& grid, std::vector<double> values)
{
    PotentialSpec spec;
    spec.kind = PotentialKind::tabulated;
    spec.table_grid = grid;
    spec.table = std::move(values);
    spec.validate();
    return spec;
}

void PotentialSpec::validate() const
{
    switch (kind) {
    case PotentialKind::eckart:
        if (!(v0 >= 0.0) || !(a > 0.0) || !std::isfinite(q_p)) {
            throw std::invalid_argument("eckart barrier needs V0 >= 0, a > 0 and finite q_p");
        }
        break;
    case PotentialKind::harmonic:
        if (!(omega >= 0.0) || !(mass > 0.0)) {
            throw std::invalid_argument("harmonic potential needs omega >= 0 and mass > 0");
        }
        break;
    case PotentialKind::free:
        break;
    case PotentialKind::tabulated:
        if (table.size() != table_grid.n_points || table.empty()) {
            throw std::invalid_argument("tabulated potential size does not match its grid");
        }
        break;
    }
}

double PotentialSpec::value(double x) const
{
    switch (kind) {
    case PotentialKind::eckart: {
        const double c = std::cosh(a * (x - q_p));
        return v0 / (c * c);
    }
    case PotentialKind::harmonic:
        return 0.5 * mass * omega * omega * (x - center) * (x - center);
    case PotentialKind::free:
        return 0.0;
    case PotentialKind::tabulated: {
        const double u = (x - table_grid.x_min) / table_grid.dx();
        const double n = static_cast<double>(table_grid.n_points);
        const double w = u - n * std::floor(u / n);
        const auto i = static_cast<std::size_t>(w) % table_grid.n_points;
        const double f = w - std::floor(w);
        return (1.0 - f) * table[i] + f * table[(i + 1) % table_grid.n_points];
    }
    }
    return 0.0;
}

double PotentialSpec::gradient(double x) const
{
    switch (kind) {
    case PotentialKind::eckart: {
        const double z = a * (x - q_p);
        const double c = std::cosh(z);
        return -2.0 * a * v0 * std::tanh(z) / (c * c);
    }
    case PotentialKind::harmonic:
        return mass * omega * omega * (x - center);
    case PotentialKind::free:
        return 0.0;
    case PotentialKind::tabulated: {
        const double h = table_grid.dx();
        return (value(x + 0.5 * h) - value(x - 0.5 * h)) / h;
    }
    }
    return 0.0;
}

std::vector<double> PotentialSpec::on_grid(const Grid1D& grid) const
{
    std::vector<double> v(grid.n_points);
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        v[i] = value(grid.x(i));
    }
    return v;
}

std::vector<double> eckart_potential(const Grid1D& grid, double v0, double a, double q_p)
{
    return PotentialSpec::eckart(v0, a, q_p).on_grid(grid);
}

ComplexField init_packet(const Grid1D& grid, double beta, double k, double q_c)
{
    if (!(beta > 0.0)) {
        throw std::invalid_argument("packet width parameter beta must be positive");
    }
    ComplexField field{grid, 0.0, std::vector<std::complex<double>>(grid.n_points)};
    double peak = 0.0;
    for (std::size_t i = 0; i < grid.n_points; ++i) {
        const double x = grid.x(i);
        const double amp = std::exp(-beta * (x - q_c) * (x - q_c));
        field.values[i] = std::polar(amp, k * x);
        peak = std::max(peak, amp);
    }
    const double edge = std::max(std::abs(field.values.front()), std::abs(field.values.back()));
    const double at_x_max = std::exp(-beta * (grid.x_max - q_c) * (grid.x_max - q_c));
    if (!(peak > 0.0) || std::max(edge, at_x_max) > 1e-12 * peak) {
        throw PacketTruncated("initial packet is not contained in the grid");
    }
    const double scale = 1.0 / std::sqrt(norm(field));
    for (auto& v : field.values) {
        v *= scale;
    }
    return field;
}

double norm(const ComplexField& state)
{
    double sum = 0.0;
    for (const auto& v : state.values) {
        sum += std::norm(v);
    }
    return sum * state.grid.dx();
}

SplitOperator::SplitOperator(const Grid1D& grid, std::vector<double> potential, double mass, double dt)
    : grid_(grid), potential_(std::move(potential)), mass_(mass), dt_(dt)
{
    if (potential_.size() != grid_.n_points) {
        throw std::invalid_argument("potential size does not match grid");
    }
    if (!(mass_ > 0.0)) {
        throw std::invalid_argument("mass must be positive");
    }
    if (!std::isfinite(dt_) || dt_ == 0.0) {
        throw std::invalid_argument("time step must be finite and non-zero");
    }
    half_kick_.resize(grid_.n_points);
    drift_.resize(grid_.n_points);
    const auto k = grid_.wavenumbers();
    for (std::size_t i = 0; i < grid_.n_points; ++i) {
        half_kick_[i] = std::polar(1.0, -0.5 * dt_ * potential_[i] / hbar);
        drift_[i] = std::polar(1.0, -dt_ * hbar * k[i] * k[i] / (2.0 * mass_));
    }
    fft_ = std::make_shared<Fft>(grid_.n_points);
}

void SplitOperator::step(ComplexField& state) const
{
    if (!(state.grid == grid_)) {
        throw std::invalid_argument("field grid does not match propagator grid");
    }
    auto& psi = state.values;
    for (std::size_t i = 0; i < psi.size(); ++i) {
        psi[i] *= half_kick_[i];
    }
    fft_->forward(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) {
        psi[i] *= drift_[i];
    }
    fft_->backward(psi);
    for (std::size_t i = 0; i < psi.size(); ++i) {
        psi[i] *= half_kick_[i];
        if (!std::isfinite(psi[i].real()) || !std::isfinite(psi[i].imag())) {
            throw NonFiniteField("field became non-finite at t=" + std::to_string(state.time + dt_));
        }
    }
    state.time += dt_;
}

ComplexField split_step(const ComplexField& state, std::span<const double> potential, double dt, double mass)
{
    SplitOperator op(state.grid, std::vector<double>(potential.begin(), potential.end()), mass, dt);
    ComplexField next = state;
    op.step(next);
    return next;
}

} // namespace qgeo::field

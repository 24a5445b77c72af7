#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qgeo/fft.hpp"
#include "qgeo/grid.hpp"

namespace qgeo::field {

enum class PotentialKind { eckart, harmonic, free, tabulated };

PotentialKind parse_potential_kind(const std::string& name);
std::string to_string(PotentialKind kind);

struct PotentialSpec {
    PotentialKind kind = PotentialKind::eckart;
    // eckart: V0 sech^2(a (x - q_p))
    double v0 = 0.0365;
    double a = 0.4;
    double q_p = 7.0;
    // harmonic: 0.5 mass omega^2 (x - center)^2
    double omega = 0.0;
    double mass = 0.0;
    double center = 0.0;
    // tabulated: values on `table_grid`, linearly interpolated
    Grid1D table_grid;
    std::vector<double> table;

    static PotentialSpec eckart(double v0, double a, double q_p);
    static PotentialSpec harmonic(double omega, double mass, double center = 0.0);
    static PotentialSpec free_particle();
    static PotentialSpec tabulated(const Grid1D& grid, std::vector<double> values);

    void validate() const;
    double value(double x) const;
    double gradient(double x) const;
    std::vector<double> on_grid(const Grid1D& grid) const;
};

std::vector<double> eckart_potential(const Grid1D& grid, double v0, double a, double q_p);

// Gaussian exp(-beta (x - q_c)^2) e^{ikx}, normalized on the grid.
// Throws PacketTruncated when the edge amplitude exceeds 1e-12 of the peak.
ComplexField init_packet(const Grid1D& grid, double beta, double k, double q_c);

double norm(const ComplexField& state);

// Strang split: half potential kick, exact kinetic drift in k-space, half kick.
class SplitOperator {
public:
    SplitOperator(const Grid1D& grid, std::vector<double> potential, double mass, double dt);

    // Advances in place by dt; throws NonFiniteField on inf/nan.
    void step(ComplexField& state) const;
    double dt() const { return dt_; }
    const Grid1D& grid() const { return grid_; }
    const std::vector<double>& potential() const { return potential_; }

private:
    Grid1D grid_;
    std::vector<double> potential_;
    double mass_;
    double dt_;
    std::vector<std::complex<double>> half_kick_;
    std::vector<std::complex<double>> drift_;
    std::shared_ptr<Fft> fft_;
};

// One step. dt may be negative (time reversal) but not zero.
ComplexField split_step(const ComplexField& state, std::span<const double> potential, double dt,
                        double mass);

} // namespace qgeo::field

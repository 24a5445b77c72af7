#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "helpers.hpp"
#include "qgeo/errors.hpp"
#include "qgeo/field_solver.hpp"
#include "qgeo/polar.hpp"

using namespace qgeo;
using qgeo::testing_util::harmonic_ground_state;

namespace {

struct Triple {
    polar::PolarSnapshot prev, mid, next;
};

Triple evolve_triple(ComplexField f, const std::vector<double>& v, double mass, double dt, int steps_to_mid)
{
    const field::SplitOperator op(f.grid, v, mass, dt);
    for (int n = 0; n < steps_to_mid - 1; ++n) {
        op.step(f);
    }
    Triple t;
    t.prev = polar::decompose_polar(f);
    op.step(f);
    t.mid = polar::decompose_polar(f, &t.prev);
    op.step(f);
    t.next = polar::decompose_polar(f, &t.mid);
    return t;
}

double max_unmasked(const std::vector<double>& v, const std::vector<std::uint8_t>& mask)
{
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!mask[i]) {
            m = std::max(m, std::abs(v[i]));
        }
    }
    return m;
}

} // namespace

TEST(DecomposePolar, LinearPhaseGivesWavenumber)
{
    const auto g = Grid1D::make(4096, -20.0, 40.0);
    const auto f = field::init_packet(g, 4.0, 10.8842, 2.0);
    const auto s = polar::decompose_polar(f);
    for (std::size_t i = 0; i < g.n_points; ++i) {
        if (!s.node_mask[i]) {
            EXPECT_NEAR(s.action_derivs[0][i], 10.8842, 1e-6) << "x=" << g.x(i);
        }
    }
}

TEST(DecomposePolar, RealGaussianHasZeroAction)
{
    const auto g = Grid1D::make(512, -10.0, 10.0);
    const auto s = polar::decompose_polar(field::init_packet(g, 4.0, 0.0, 1.0));
    for (std::size_t i = 0; i < g.n_points; ++i) {
        EXPECT_EQ(s.action[i], 0.0);
    }
}

TEST(DecomposePolar, RoundTrip)
{
    const auto g = Grid1D::make(1024, -20.0, 40.0);
    const auto f = field::init_packet(g, 4.0, 10.8842, 2.0);
    const auto s = polar::decompose_polar(f);
    // the unwrapped action reaches a few hundred, so cos/sin of it carry ~1e-13 rounding
    for (std::size_t i = 0; i < g.n_points; ++i) {
        EXPECT_NEAR(std::abs(std::polar(s.amplitude[i], s.action[i]) - f.values[i]), 0.0, 1e-12);
    }
}

TEST(DecomposePolar, GlobalPhaseOnlyShiftsAction)
{
    const auto g = Grid1D::make(1024, -20.0, 40.0);
    auto f = field::init_packet(g, 4.0, 10.8842, 2.0);
    const auto a = polar::decompose_polar(f);
    const auto a_table = polar::quantum_potential(a, 2000.0);
    const auto phase = std::polar(1.0, 0.7);
    for (auto& v : f.values) {
        v *= phase;
    }
    const auto b = polar::decompose_polar(f);
    const auto b_table = polar::quantum_potential(b, 2000.0);
    for (std::size_t i = 0; i < g.n_points; ++i) {
        if (a.node_mask[i]) {
            continue;
        }
        EXPECT_NEAR(b.amplitude[i], a.amplitude[i], 1e-14);
        EXPECT_NEAR(std::remainder(b.action[i] - a.action[i] - 0.7, 2.0 * std::numbers::pi), 0.0, 1e-12);
        EXPECT_NEAR(b.action_derivs[0][i], a.action_derivs[0][i], 1e-9);
        EXPECT_NEAR(b_table.q[i], a_table.q[i], 1e-10);
    }
}

TEST(DecomposePolar, HarmonicGroundStatePhase)
{
    const auto g = Grid1D::make(256, -10.0, 10.0);
    const double mass = 1.0, omega = 1.0, dt = 1e-4;
    auto f = harmonic_ground_state(g, mass, omega);
    const field::SplitOperator op(g, field::PotentialSpec::harmonic(omega, mass).on_grid(g), mass, dt);
    for (int n = 0; n < 10000; ++n) {
        op.step(f);
    }
    const auto s = polar::decompose_polar(f);
    const double expected = -0.5 * omega * 1.0;
    const double peak = *std::max_element(s.amplitude.begin(), s.amplitude.end());
    for (std::size_t i = 0; i < g.n_points; ++i) {
        if (s.node_mask[i]) {
            continue;
        }
        // rounding in the far tail grows like 1/A
        const bool core = s.amplitude[i] > 1e-3 * peak;
        EXPECT_NEAR(std::remainder(s.action[i] - expected, 2.0 * std::numbers::pi), 0.0, core ? 1e-8 : 1e-6);
        EXPECT_NEAR(s.action_derivs[0][i], 0.0, core ? 1e-8 : 1e-6);
    }
}

TEST(QuantumPotential, GaussianCentreAndZeros)
{
    const auto g = Grid1D::make(4096, -20.0, 40.0);
    const double beta = 4.0, mass = 2000.0;
    const auto s = polar::decompose_polar(field::init_packet(g, beta, 10.8842, 2.0));
    const auto table = polar::quantum_potential(s, mass);
    // A''/A = 4 beta^2 (x - q_c)^2 - 2 beta
    auto analytic = [&](double x) { return -(4 * beta * beta * (x - 2.0) * (x - 2.0) - 2 * beta) / (2 * mass); };
    EXPECT_NEAR(analytic(2.0), 0.002, 1e-15);
    EXPECT_NEAR(polar::sample_field(table, 2.0).q, 0.002, 1e-6);
    const double root = 1.0 / std::sqrt(2.0 * beta);
    EXPECT_NEAR(root, 0.35355339, 1e-8);
    for (double x : {2.0 - root, 2.0 + root}) {
        EXPECT_NEAR(polar::sample_field(table, x).q, 0.0, 1e-9);
    }
    for (std::size_t i = 0; i < g.n_points; ++i) {
        if (!s.node_mask[i]) {
            EXPECT_NEAR(table.q[i], analytic(g.x(i)), 1e-9 * (1.0 + std::abs(analytic(g.x(i))) * 1e3));
        }
    }
}

TEST(QuantumPotential, ConstantAmplitudeGivesZero)
{
    const auto g = Grid1D::make(128, 0.0, 10.0);
    ComplexField f{g, 0.0, std::vector<std::complex<double>>(g.n_points, {0.3, 0.0})};
    const auto table = polar::quantum_potential(polar::decompose_polar(f), 1.0);
    for (double q : table.q) {
        EXPECT_NEAR(q, 0.0, 1e-14);
    }
}

TEST(QuantumPotential, HarmonicGroundStateQPlusV)
{
    const auto g = Grid1D::make(256, -10.0, 10.0);
    const double mass = 1.0, omega = 1.0;
    const auto v = field::PotentialSpec::harmonic(omega, mass);
    const auto s = polar::decompose_polar(harmonic_ground_state(g, mass, omega));
    const auto table = polar::quantum_potential(s, mass);
    // A''/A in the far tail carries rounding of order 1e-14 / A
    const double peak = *std::max_element(s.amplitude.begin(), s.amplitude.end());
    for (std::size_t i = 0; i < g.n_points; ++i) {
        if (!s.node_mask[i]) {
            const bool core = s.amplitude[i] > 1e-3 * peak;
            EXPECT_NEAR(table.q[i] + v.value(g.x(i)), 0.5 * omega, core ? 1e-8 : 1e-6) << "x=" << g.x(i);
        }
    }
}

TEST(QuantumPotential, AllMaskedThrows)
{
    const auto g = Grid1D::make(64, 0.0, 1.0);
    ComplexField f{g, 0.0, std::vector<std::complex<double>>(g.n_points, {0.0, 0.0})};
    EXPECT_THROW(polar::quantum_potential(polar::decompose_polar(f), 1.0), AllMasked);
}

TEST(Residuals, HarmonicGroundState)
{
    const auto g = Grid1D::make(256, -10.0, 10.0);
    const double mass = 1.0, omega = 1.0;
    const auto v = field::PotentialSpec::harmonic(omega, mass).on_grid(g);
    const auto t = evolve_triple(harmonic_ground_state(g, mass, omega), v, mass, 1e-4, 1000);
    EXPECT_LT(polar::hj_residual(t.prev, t.mid, t.next, v, mass).max_abs_unmasked, 1e-6);
    EXPECT_LT(polar::continuity_residual(t.prev, t.mid, t.next, mass).max_abs_unmasked, 1e-6);
}

TEST(Residuals, FreeGaussian)
{
    const auto g = Grid1D::make(2048, -40.0, 40.0);
    const double mass = 1.0;
    const std::vector<double> v(g.n_points, 0.0);
    const auto t = evolve_triple(field::init_packet(g, 1.0, 1.0, -5.0), v, mass, 1e-3, 1000);
    EXPECT_LT(polar::hj_residual(t.prev, t.mid, t.next, v, mass).max_abs_unmasked, 1e-4);
    EXPECT_LT(polar::continuity_residual(t.prev, t.mid, t.next, mass).max_abs_unmasked, 1e-4);
}

TEST(Residuals, ShrinkUnderStepRefinement)
{
    const auto g = Grid1D::make(1024, -20.0, 40.0);
    const auto v = field::eckart_potential(g, 0.0365, 0.4, 7.0);
    const auto packet = field::init_packet(g, 4.0, 10.8842, 2.0);
    const auto coarse = evolve_triple(packet, v, 2000.0, 0.5, 400);
    const auto fine = evolve_triple(packet, v, 2000.0, 0.25, 800);
    const double hj_c = polar::hj_residual(coarse.prev, coarse.mid, coarse.next, v, 2000.0).max_abs_unmasked;
    const double hj_f = polar::hj_residual(fine.prev, fine.mid, fine.next, v, 2000.0).max_abs_unmasked;
    const double c_c = polar::continuity_residual(coarse.prev, coarse.mid, coarse.next, 2000.0).max_abs_unmasked;
    const double c_f = polar::continuity_residual(fine.prev, fine.mid, fine.next, 2000.0).max_abs_unmasked;
    EXPECT_LT(hj_f, 0.5 * hj_c);
    EXPECT_LT(c_f, 0.5 * c_c);
}

TEST(SampleField, NodesExactAndLinearDataBounded)
{
    const auto g = Grid1D::make(64, 0.0, 6.4);
    polar::QuantumPotentialTable t;
    t.grid = g;
    t.node_mask.assign(g.n_points, 0);
    for (auto* v : {&t.q, &t.q_x, &t.q_xx, &t.q_t, &t.q_tt, &t.q_xt}) {
        v->assign(g.n_points, 0.0);
    }
    t.has_time_derivatives = true;
    for (std::size_t i = 0; i < g.n_points; ++i) {
        t.q[i] = 0.5 - 0.25 * g.x(i);
        t.q_x[i] = -0.25;
        t.q_t[i] = std::sin(g.x(i));
        t.q_xt[i] = std::cos(g.x(i));
    }
    for (std::size_t i = 2; i < 60; ++i) {
        const auto s = polar::sample_field(t, g.x(i));
        EXPECT_EQ(s.q, t.q[i]);
        EXPECT_EQ(s.q_t, t.q_t[i]);
        const double x = g.x(i) + 0.37 * g.dx();
        const auto m = polar::sample_field(t, x);
        EXPECT_LE(m.q, t.q[i]);
        EXPECT_GE(m.q, t.q[i + 1]);
        EXPECT_NEAR(m.q, 0.5 - 0.25 * x, 1e-14);
    }
    t.node_mask[30] = 1;
    EXPECT_TRUE(polar::sample_field(t, g.x(29) + 0.5 * g.dx()).flagged);
    EXPECT_FALSE(polar::sample_field(t, g.x(20) + 0.5 * g.dx()).flagged);
    EXPECT_THROW(polar::sample_field(t, 7.0), OutOfRange);
}

TEST(TemporalRing, QuadraticInTimeIsExact)
{
    const auto g = Grid1D::make(16, 0.0, 1.0);
    auto make = [&](double t) {
        polar::QuantumPotentialTable table;
        table.grid = g;
        table.time = t;
        table.node_mask.assign(g.n_points, 0);
        table.q.resize(g.n_points);
        table.q_x.resize(g.n_points);
        table.q_xx.assign(g.n_points, 0.0);
        for (std::size_t i = 0; i < g.n_points; ++i) {
            table.q[i] = 1.0 + 2.0 * t - 0.5 * t * t + g.x(i) * t;
            table.q_x[i] = t;
        }
        return table;
    };
    polar::TemporalRing ring;
    std::vector<polar::QuantumPotentialTable> done;
    for (int n = 0; n < 6; ++n) {
        for (auto& table : ring.push(make(0.5 * n))) {
            done.push_back(std::move(table));
        }
    }
    for (auto& table : ring.finish()) {
        done.push_back(std::move(table));
    }
    ASSERT_EQ(done.size(), 6u);
    for (const auto& table : done) {
        ASSERT_TRUE(table.has_time_derivatives);
        for (std::size_t i = 0; i < g.n_points; ++i) {
            EXPECT_NEAR(table.q_t[i], 2.0 - table.time + g.x(i), 1e-12);
            EXPECT_NEAR(table.q_tt[i], -1.0, 1e-12);
            EXPECT_NEAR(table.q_xt[i], 1.0, 1e-12);
        }
    }
}

#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "helpers.hpp"
#include "qgeo/errors.hpp"
#include "qgeo/field_solver.hpp"

using namespace qgeo;
using qgeo::testing_util::harmonic_ground_state;
using qgeo::testing_util::second_moment;

TEST(Grid, RejectsBadSizes)
{
    EXPECT_THROW(Grid1D::make(1000, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid1D::make(8, 0.0, 1.0), std::invalid_argument);
    EXPECT_THROW(Grid1D::make(64, 1.0, 1.0), std::invalid_argument);
    const auto g = Grid1D::make(64, -1.0, 3.0);
    EXPECT_DOUBLE_EQ(g.dx(), 4.0 / 64.0);
    EXPECT_DOUBLE_EQ(g.x(0), -1.0);
}

TEST(EckartPotential, PeakAndSymmetry)
{
    const auto v = field::PotentialSpec::eckart(0.0365, 0.4, 7.0);
    EXPECT_DOUBLE_EQ(v.value(7.0), 0.0365);
    for (double d : {0.3, 1.7, 4.0, 11.0}) {
        EXPECT_NEAR(v.value(7.0 + d), v.value(7.0 - d), 1e-16);
    }
    EXPECT_LT(v.value(7.0 + 80.0), 1e-25);
}

TEST(EckartPotential, ValueAtNinePointFive)
{
    // sech^2(1) from its definition.
    const double sech = 2.0 / (std::exp(1.0) + std::exp(-1.0));
    EXPECT_NEAR(sech * sech, 0.4199743, 1e-7);
    const auto v = field::PotentialSpec::eckart(0.0365, 0.4, 7.0);
    EXPECT_NEAR(v.value(9.5), 0.0365 * sech * sech, 1e-15);
    EXPECT_NEAR(v.value(9.5), 0.0153291, 1e-7);
}

TEST(EckartPotential, GradientMatchesDifference)
{
    const auto v = field::PotentialSpec::eckart(0.0365, 0.4, 7.0);
    for (double x : {2.0, 6.5, 7.0, 9.5}) {
        const double h = 1e-5;
        EXPECT_NEAR(v.gradient(x), (v.value(x + h) - v.value(x - h)) / (2 * h), 1e-10);
    }
}

TEST(InitPacket, NormalizedGaussianCentred)
{
    const auto g = Grid1D::make(4096, -20.0, 40.0);
    const auto f = field::init_packet(g, 4.0, 10.8842, 2.0);
    EXPECT_NEAR(field::norm(f), 1.0, 1e-13);
    double mean = 0.0;
    const double var = second_moment(f, mean);
    EXPECT_NEAR(mean, 2.0, 1e-10);
    // exp(-2 beta x^2) has variance 1/(4 beta)
    EXPECT_NEAR(std::sqrt(var), 0.25, 1e-10);
}

TEST(InitPacket, ZeroWavenumberIsReal)
{
    const auto g = Grid1D::make(512, -10.0, 10.0);
    const auto f = field::init_packet(g, 4.0, 0.0, 0.5);
    for (const auto& v : f.values) {
        EXPECT_EQ(v.imag(), 0.0);
        EXPECT_GE(v.real(), 0.0);
    }
}

TEST(InitPacket, TruncatedPacketThrows)
{
    const auto g = Grid1D::make(256, -1.0, 1.0);
    EXPECT_THROW(field::init_packet(g, 4.0, 0.0, 0.0), PacketTruncated);
}

TEST(Norm, Quadratic)
{
    const auto g = Grid1D::make(512, -10.0, 10.0);
    auto f = field::init_packet(g, 2.0, 1.0, 0.0);
    EXPECT_NEAR(field::norm(f), 1.0, 1e-13);
    for (auto& v : f.values) {
        v *= 2.0;
    }
    EXPECT_NEAR(field::norm(f), 4.0, 1e-12);
}

TEST(SplitOperator, PlaneWavePhase)
{
    const auto g = Grid1D::make(128, 0.0, 2.0 * std::numbers::pi * 4.0);
    const double k = 2.0;  // 8 periods on the box
    const double mass = 1.5, dt = 0.01;
    ComplexField f{g, 0.0, {}};
    for (std::size_t i = 0; i < g.n_points; ++i) {
        f.values.push_back(std::polar(1.0, k * g.x(i)));
    }
    const std::vector<double> zero(g.n_points, 0.0);
    const auto out = field::split_step(f, zero, dt, mass);
    const auto factor = std::polar(1.0, -k * k * dt / (2.0 * mass));
    for (std::size_t i = 0; i < g.n_points; ++i) {
        EXPECT_NEAR(std::abs(out.values[i]), 1.0, 1e-13);
        EXPECT_NEAR(std::abs(out.values[i] - f.values[i] * factor), 0.0, 1e-12);
    }
}

TEST(SplitOperator, FreeGaussianWidthLaw)
{
    const auto g = Grid1D::make(2048, -40.0, 40.0);
    const double mass = 1.0, beta = 1.0, t = 2.0, dt = 0.01;
    auto f = field::init_packet(g, beta, 0.0, 0.0);
    double mean = 0.0;
    const double s0sq = second_moment(f, mean);
    const field::SplitOperator op(g, std::vector<double>(g.n_points, 0.0), mass, dt);
    for (int n = 0; n < 200; ++n) {
        op.step(f);
    }
    const double tau = 2.0 * mass * s0sq;
    const double expected = s0sq * (1.0 + (t / tau) * (t / tau));
    EXPECT_NEAR(second_moment(f, mean) / expected, 1.0, 1e-6);
}

TEST(SplitOperator, HarmonicGroundStateStationary)
{
    const auto g = Grid1D::make(256, -10.0, 10.0);
    const double mass = 1.0, omega = 1.0;
    const auto psi0 = harmonic_ground_state(g, mass, omega);
    auto f = psi0;
    const auto v = field::PotentialSpec::harmonic(omega, mass).on_grid(g);
    const field::SplitOperator op(g, v, mass, 1e-4);
    for (int n = 0; n < 10000; ++n) {
        op.step(f);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < g.n_points; ++i) {
        worst = std::max(worst, std::abs(std::abs(f.values[i]) - std::abs(psi0.values[i])));
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(SplitOperator, UnitaryOverTenThousandSteps)
{
    const auto g = Grid1D::make(1024, -20.0, 40.0);
    const auto v = field::eckart_potential(g, 0.0365, 0.4, 7.0);
    auto f = field::init_packet(g, 4.0, 10.8842, 2.0);
    const field::SplitOperator op(g, v, 2000.0, 0.5);
    double worst = 0.0;
    for (int n = 0; n < 10000; ++n) {
        op.step(f);
        worst = std::max(worst, std::abs(field::norm(f) - 1.0));
    }
    EXPECT_LT(worst, 1e-10);
}

TEST(SplitOperator, TimeReversalRecoversInitialField)
{
    const auto g = Grid1D::make(512, -20.0, 40.0);
    const auto v = field::eckart_potential(g, 0.0365, 0.4, 7.0);
    const auto psi0 = field::init_packet(g, 4.0, 10.8842, 2.0);
    auto f = psi0;
    for (int n = 0; n < 200; ++n) {
        f = field::split_step(f, v, 0.5, 2000.0);
    }
    for (int n = 0; n < 200; ++n) {
        f = field::split_step(f, v, -0.5, 2000.0);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < g.n_points; ++i) {
        worst = std::max(worst, std::abs(f.values[i] - psi0.values[i]));
    }
    EXPECT_LT(worst, 1e-11);
    EXPECT_THROW(field::split_step(f, v, 0.0, 2000.0), std::invalid_argument);
}

TEST(SplitOperator, NonFiniteFieldThrows)
{
    const auto g = Grid1D::make(64, -10.0, 10.0);
    auto f = field::init_packet(g, 1.0, 0.0, 0.0);
    f.values[3] = {std::nan(""), 0.0};
    const field::SplitOperator op(g, std::vector<double>(g.n_points, 0.0), 1.0, 0.1);
    EXPECT_THROW(op.step(f), NonFiniteField);
}

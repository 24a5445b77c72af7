#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "helpers.hpp"
#include "qgeo/bohmian.hpp"
#include "qgeo/errors.hpp"
#include "qgeo/experiment.hpp"

using namespace qgeo;
using qgeo::testing_util::free_config;

namespace {

// Frames every dt from a split-operator run, with the Q time derivatives filled in.
polar::FieldHistory build_history(ComplexField f, const std::vector<double>& v, double mass, double dt, int frames)
{
    polar::FieldHistory history(f.grid, mass);
    const field::SplitOperator op(f.grid, v, mass, dt);
    polar::TemporalRing ring;
    std::vector<polar::PolarSnapshot> snaps;
    std::size_t next = 0;
    auto take = [&](std::vector<polar::QuantumPotentialTable> done) {
        for (auto& t : done) {
            history.append(snaps[next++], t);
        }
    };
    for (int n = 0; n < frames; ++n) {
        if (n > 0) {
            op.step(f);
            f.time = n * dt;
        }
        snaps.push_back(polar::decompose_polar(f, snaps.empty() ? nullptr : &snaps.back()));
        take(ring.push(polar::quantum_potential(snaps.back(), mass)));
    }
    take(ring.finish());
    return history;
}

struct FreeRun {
    experiment::ExperimentConfig config;
    experiment::FieldRun field;
};

const FreeRun& free_run()
{
    static const FreeRun run = [] {
        FreeRun r;
        r.config = free_config(500.0);
        experiment::FieldRunOptions o;
        o.keep_times = {0.0, 300.0};
        r.field = experiment::propagate_field(r.config, o);
        return r;
    }();
    return run;
}

} // namespace

TEST(VelocityField, InitialPacketMovesAtGroupVelocity)
{
    const auto& run = free_run();
    const auto& snap = run.field.kept.at(0).polar;
    const double v = 10.8842 / 2000.0;
    EXPECT_NEAR(v, 0.0054421, 1e-7);
    for (double x : {1.5, 2.0, 2.3, 2.6}) {
        EXPECT_NEAR(bohmian::velocity_field(snap, x, 2000.0), v, 1e-9);
    }
}

TEST(VelocityField, FreeGaussianAnalytic)
{
    const auto& run = free_run();
    const auto& snap = run.field.kept.at(1).polar;
    const double t = 300.0, m = 2000.0, s0 = 0.25, vc = 10.8842 / m;
    const double tau = 2.0 * m * s0 * s0;
    const double rate = (t / (tau * tau)) / (1.0 + (t / tau) * (t / tau));
    const double xc = 2.0 + vc * t;
    for (double x : {xc - 0.6, xc - 0.2, xc, xc + 0.4, xc + 0.8}) {
        EXPECT_NEAR(bohmian::velocity_field(snap, x, m), vc + (x - xc) * rate, 1e-6);
    }
}

TEST(VelocityField, NodeRegionThrows)
{
    const auto& snap = free_run().field.kept.at(0).polar;
    EXPECT_THROW(bohmian::velocity_field(snap, 15.0, 2000.0), NodeRegion);
    EXPECT_THROW(bohmian::velocity_field(snap, 25.0, 2000.0), OutOfRange);
}

TEST(FirstOrder, FreeGaussianTrajectories)
{
    const auto& run = free_run();
    const std::vector<double> x0{1.6, 1.9, 2.0, 2.2, 2.5};
    const auto recs = bohmian::integrate_first_order(x0, *run.field.history, {0.5, 500.0, 2});
    const double m = 2000.0, s0 = 0.25, vc = 10.8842 / m, tau = 2.0 * m * s0 * s0;
    for (std::size_t j = 0; j < x0.size(); ++j) {
        ASSERT_EQ(recs[j].status, bohmian::TrajectoryStatus::completed);
        for (const auto& s : recs[j].samples) {
            const double sigma_ratio = std::sqrt(1.0 + (s.t / tau) * (s.t / tau));
            EXPECT_NEAR(s.x, 2.0 + vc * s.t + (x0[j] - 2.0) * sigma_ratio, 1e-4);
        }
    }
    // the centre member rides the packet centre
    EXPECT_NEAR(recs[2].samples.back().x, 2.0 + vc * 500.0, 1e-5);
    EXPECT_NEAR(recs[2].position_at(250.25), 2.0 + vc * 250.25, 1e-5);
    EXPECT_THROW(recs[2].position_at(600.0), OutOfRange);
}

TEST(SecondOrder, MatchesFirstOrderForConsistentStart)
{
    const auto& run = free_run();
    const std::vector<double> x0{1.7, 2.1, 2.4};
    std::vector<double> v0;
    for (double x : x0) {
        v0.push_back(bohmian::velocity_field(run.field.kept.at(0).polar, x, 2000.0));
    }
    const auto first = bohmian::integrate_first_order(x0, *run.field.history, {0.5, 500.0, 1});
    const auto second =
        bohmian::integrate_second_order(x0, v0, run.config.barrier, *run.field.history, {0.5, 500.0, 1});
    for (std::size_t j = 0; j < x0.size(); ++j) {
        ASSERT_EQ(first[j].samples.size(), second[j].samples.size());
        for (std::size_t k = 0; k < first[j].samples.size(); ++k) {
            EXPECT_NEAR(first[j].samples[k].x, second[j].samples[k].x, 1e-4);
        }
    }
}

TEST(Trajectories, StationaryStateStaysPut)
{
    const auto g = Grid1D::make(256, -10.0, 10.0);
    const double mass = 1.0, omega = 1.0;
    const auto pot = field::PotentialSpec::harmonic(omega, mass);
    const auto history =
        build_history(testing_util::harmonic_ground_state(g, mass, omega), pot.on_grid(g), mass, 1e-3, 2001);
    const std::vector<double> x0{-1.0, 0.0, 0.4, 1.3};
    const std::vector<double> v0(x0.size(), 0.0);
    const auto first = bohmian::integrate_first_order(x0, history, {0.01, 2.0, 1});
    const auto second = bohmian::integrate_second_order(x0, v0, pot, history, {0.01, 2.0, 1});
    for (std::size_t j = 0; j < x0.size(); ++j) {
        // the Strang error of the ground state leaves S_x ~ dt^2 away from zero
        for (const auto& s : first[j].samples) {
            EXPECT_NEAR(s.x, x0[j], 5e-7);
        }
        for (const auto& s : second[j].samples) {
            EXPECT_NEAR(s.x, x0[j], 1e-6);
        }
    }
}

TEST(SecondOrder, ForceFreeUniformMotion)
{
    const auto g = Grid1D::make(128, 0.0, 2.0 * std::numbers::pi * 4.0);
    const double mass = 1.0, k = 0.5;
    ComplexField f{g, 0.0, {}};
    for (std::size_t i = 0; i < g.n_points; ++i) {
        f.values.push_back(std::polar(1.0 / std::sqrt(g.length()), k * g.x(i)));
    }
    const auto history = build_history(f, std::vector<double>(g.n_points, 0.0), mass, 0.05, 41);
    const std::vector<double> x0{3.0, 10.0};
    const std::vector<double> v0{0.2, -0.3};
    const auto second = bohmian::integrate_second_order(x0, v0, field::PotentialSpec::free_particle(), history,
                                                        {0.05, 2.0, 1});
    for (std::size_t j = 0; j < x0.size(); ++j) {
        for (const auto& s : second[j].samples) {
            EXPECT_NEAR(s.x, x0[j] + v0[j] * s.t, 1e-12);
        }
    }
}

TEST(FirstOrder, LeavingTheGridStopsTheMember)
{
    const auto& run = free_run();
    const std::vector<double> x0{2.0, 19.99};
    const auto recs = bohmian::integrate_first_order(x0, *run.field.history, {0.5, 100.0, 1});
    EXPECT_EQ(recs[0].status, bohmian::TrajectoryStatus::completed);
    EXPECT_EQ(recs[1].status, bohmian::TrajectoryStatus::left_grid);
}

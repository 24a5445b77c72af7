#include <gtest/gtest.h>

#include <cmath>

#include "qgeo/experiment.hpp"
#include "qgeo/field_solver.hpp"
#include "qgeo/validation.hpp"

using namespace qgeo;
using namespace qgeo::validation;

namespace {

experiment::LineFront front(double label, const std::vector<double>& q1, const std::vector<double>& values)
{
    experiment::LineFront f;
    f.label = label;
    for (std::size_t i = 0; i < q1.size(); ++i) {
        f.points.push_back({static_cast<int>(i), q1[i], values[i], 0});
    }
    return f;
}

// Twenty members whose qdot1 spread is scaled by `width`.
experiment::LineFront width_front(double t, double width)
{
    std::vector<double> q1, v;
    for (int i = 0; i < 20; ++i) {
        q1.push_back(i);
        v.push_back(width * (i - 9.5) / 10.0);
    }
    return front(t, q1, v);
}

} // namespace

TEST(KsDistance, QuantilesOfTheFieldAreClose)
{
    const auto g = Grid1D::make(4096, -20.0, 40.0);
    const auto f = field::init_packet(g, 4.0, 10.8842, 2.0);
    const auto x = experiment::sample_initial_positions(200, experiment::Sampling::quantile, 2.0, 4.0, 0);
    // Midpoint quantiles sit half a step from the CDF.
    EXPECT_NEAR(ks_distance(x, f), 0.5 / 200.0, 1e-6);
    auto shifted = x;
    for (double& v : shifted) {
        v += 0.25;
    }
    EXPECT_GT(ks_distance(shifted, f), 0.3);
    EXPECT_THROW(ks_distance({}, f), std::invalid_argument);
}

TEST(CurvatureSigns, Classification)
{
    std::vector<curvature::CurvatureRow> rows{
        {0.0, 0, 1.0, 0.2, true},     {350.0, 1, 2.0, 0.1, true},  {1000.0, 0, 3.0, 0.1, true},
        {1000.0, 1, 4.0, -0.1, true}, {2050.0, 0, 9.0, -0.3, true}, {2050.0, 1, 3.0, 0.4, true},
        {100.0, 2, 1.0, -5.0, false}};
    auto c = curvature_signs(rows, 7.0);
    EXPECT_TRUE(c.passed) << c.detail;
    rows[4].r = 0.3;
    c = curvature_signs(rows, 7.0);
    EXPECT_FALSE(c.passed);
    rows[4].r = -0.3;
    rows[1].r = -0.1;
    EXPECT_FALSE(curvature_signs(rows, 7.0).passed);
}

TEST(FrontShapes, ContractThenSpreadAndDilation)
{
    experiment::Fronts fr;
    for (double w : {1.0, 0.8, 0.5, 0.7, 1.2, 1.6}) {
        fr.q1_qdot1.push_back(width_front(fr.q1_qdot1.size() * 50.0, w));
    }
    std::vector<double> q1(20);
    for (int i = 0; i < 20; ++i) {
        q1[i] = i;
    }
    for (int j = 0; j < 4; ++j) {
        std::vector<double> q0(20);
        for (int i = 0; i < 20; ++i) {
            q0[i] = 1000.0 * j + (1.0 + 0.05 * i) * 100.0 * j;
        }
        fr.q1_q0.push_back(front(j, q1, q0));
    }
    auto c = front_shapes(fr, 0.0);
    EXPECT_TRUE(c.passed) << c.detail;
    // IQR of 20 evenly spaced values spanning 1.9 w is 0.95 w
    for (const auto& [k, v] : c.metrics) {
        if (k == "width_min_after") {
            EXPECT_NEAR(v, 0.95 * 0.5, 1e-12);
        }
    }

    // spreading first, contracting later
    experiment::Fronts rev = fr;
    rev.q1_qdot1.clear();
    for (double w : {0.5, 1.0, 1.6, 0.9, 0.6}) {
        rev.q1_qdot1.push_back(width_front(rev.q1_qdot1.size() * 50.0, w));
    }
    EXPECT_FALSE(front_shapes(rev, 0.0).passed);

    const auto gaps = decile_gaps(fr.q1_q0);
    ASSERT_EQ(gaps.size(), 3u);
    for (const auto& g : gaps) {
        EXPECT_GT(g.right_gap, g.left_gap);
    }
}

TEST(FlatSpace, Passes)
{
    const auto c = flat_space();
    EXPECT_TRUE(c.passed) << c.detail;
    EXPECT_EQ(format_check(c).rfind("PASS flat_space", 0), 0u);
}

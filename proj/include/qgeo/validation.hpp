#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qgeo/curvature.hpp"
#include "qgeo/experiment.hpp"
#include "qgeo/finsler.hpp"

namespace qgeo::validation {

struct Check {
    std::string name;
    bool passed = false;
    std::string detail;
    std::vector<std::pair<std::string, double>> metrics;
    double seconds = 0.0;

    void metric(const std::string& key, double value) { metrics.emplace_back(key, value); }
};

struct SeTolerances {
    double norm = 1e-10;
    double residual = 1e-3;
    // residual(dt/2) <= halving * residual(dt)
    double halving = 0.5;
    double max_seconds = 120.0;
};

// Propagates at dt and dt/2 without building Q tables and compares norm drift and residuals.
Check se_integrity(const experiment::ExperimentConfig& config, double residual_every,
                   const SeTolerances& tol = {});

struct IdentityTolerances {
    double euler1 = 1e-8;       // relative
    double euler2 = 1e-6;       // absolute
    double reconstruction = 1e-9;
    double momentum = 1e-8;
    double cartan = 1e-6;       // absolute
    double homogeneity = 1e-10;
    double fd_metric = 1e-6;
    double determinant = 1e-9;
};

struct IdentityState {
    finsler::ExtendedState state;
    finsler::ProbeSample field;
};

// Random extended states on the unmasked support of a propagated field with velocities
// scattered around the local Bohmian velocity.
std::vector<IdentityState> draw_identity_states(const finsler::GridFieldProbe& probe, double mass, std::size_t n,
                                                std::uint64_t seed);

// d/dqdot^c of the closed-form metric by a five-point stencil.
std::array<finsler::Mat, finsler::max_dim> metric_velocity_gradient(const finsler::ExtendedState& state,
                                                                    const finsler::ProbeSample& field, double mass,
                                                                    double h);

Check finsler_identities(const finsler::GridFieldProbe& probe, double mass, std::size_t n_states,
                         std::uint64_t seed, const IdentityTolerances& tol = {});

Check flat_space(double tol = 1e-10);

// Geodesic projections and first-order trajectories against second-order Bohmian trajectories.
Check proposition_equivalence(const experiment::ExperimentResult& result, double rel_tol = 1e-3);

// Signs of trusted curvature samples early, mid-run and late to the right of the barrier.
Check curvature_signs(const std::vector<curvature::CurvatureRow>& rows, double q_p, double early_end = 400.0,
                      double late_start = 2000.0);

struct FrontWidth {
    double t = 0.0;
    double width = 0.0;
    std::size_t points = 0;
};

// Interquartile range of qdot^1 over the unflagged points of each fixed-time front.
std::vector<FrontWidth> front_widths(const std::vector<experiment::LineFront>& fronts);

struct GapComparison {
    double label = 0.0;
    double left_gap = 0.0;
    double right_gap = 0.0;
};

// Mean q^0 advance between successive fixed-parameter fronts for the leftmost and rightmost
// deciles in q^1 of the earlier front.
std::vector<GapComparison> decile_gaps(const std::vector<experiment::LineFront>& q0_fronts);

Check front_shapes(const experiment::Fronts& fronts, double late_start, double contraction = 0.95);

// Two-sided Kolmogorov-Smirnov distance between sorted samples and the CDF of |psi|^2 on the grid.
double ks_distance(std::vector<double> samples, const ComplexField& field);

Check equivariance(const experiment::ExperimentResult& result, const std::vector<double>& times,
                   double max_ks = 0.08);

std::string format_check(const Check& c);

struct SuiteOptions {
    SeTolerances se;
    // 0 evaluates the residuals at every step
    double residual_every = 0.0;
    IdentityTolerances identities;
    std::size_t identity_states = 1000;
    std::uint64_t identity_seed = 20240611;
    double flat_tolerance = 1e-10;
    std::size_t proposition_members = 50;
    double proposition_tolerance = 1e-3;
    double curvature_early_end = 400.0;
    double curvature_late_start = 2000.0;
    double front_contraction = 0.95;
    // fraction of t_final after which fixed-parameter fronts count as late
    double front_late_fraction = 0.5;
    std::vector<double> equivariance_times{500.0, 1000.0, 2000.0};
    double max_ks = 0.08;
};

// Every check on one configuration: two bare propagations, one field with Q tables, the full
// ensemble and a smaller ensemble for the trajectory comparison.
std::vector<Check> run_suite(const experiment::ExperimentConfig& config, const SuiteOptions& options,
                             const experiment::Progress& progress = {});

} // namespace qgeo::validation

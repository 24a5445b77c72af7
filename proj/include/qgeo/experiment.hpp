#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qgeo/bohmian.hpp"
#include "qgeo/config.hpp"
#include "qgeo/curvature.hpp"
#include "qgeo/field_history.hpp"
#include "qgeo/finsler.hpp"
#include "qgeo/polar.hpp"

namespace qgeo::experiment {

// |phi_0|^2 ~ exp(-2 beta (x - q_c)^2) has standard deviation 1/(2 sqrt(beta)). Quantile sampling places
// x_i = q_c + sigma Phi^-1((i - 1/2)/n); seeded_random draws from the same normal.
std::vector<double> sample_initial_positions(std::size_t n, Sampling sampling, double q_c, double beta,
                                             std::uint64_t seed);

struct ResidualPoint {
    double t = 0.0;
    double hj = 0.0;
    double continuity = 0.0;
    // where the HJ residual peaks, and A there relative to max A
    double hj_x = 0.0;
    double hj_relative_amplitude = 0.0;
};

struct KeptSnapshot {
    ComplexField field;
    polar::PolarSnapshot polar;
    polar::QuantumPotentialTable table;
};

struct FieldRunOptions {
    // Solver times at which the full field, its polar form and Q are kept.
    std::vector<double> keep_times;
    bool build_history = true;
    // Residual triples every this many time units (0 disables).
    double residual_every = 0.0;
};

struct FieldRun {
    std::shared_ptr<polar::FieldHistory> history;
    std::vector<KeptSnapshot> kept;
    std::vector<double> potential;
    double max_norm_error = 0.0;
    std::size_t steps = 0;
    std::vector<ResidualPoint> residuals;
    double max_hj = 0.0;
    double max_continuity = 0.0;
};

// Propagates the configured packet to t_final, co-building the Q tables frame by frame.
FieldRun propagate_field(const ExperimentConfig& config, const FieldRunOptions& options);

struct FrontPoint {
    int id = 0;
    double q1 = 0.0;
    double value = 0.0;
    std::uint8_t flags = 0;
};

// One iso-line through the ensemble: fixed coordinate time or fixed parameter value.
struct LineFront {
    double label = 0.0;
    std::vector<FrontPoint> points;
};

struct Fronts {
    std::vector<LineFront> q1_qdot1;  // fixed t, value = qdot^1
    std::vector<LineFront> q1_tau;    // fixed t, value = s
    std::vector<LineFront> q1_q0;     // fixed s, value = q^0
};

Fronts export_fronts(std::span<const finsler::ExtendedTrajectory> trajectories, std::span<const double> times,
                     std::span<const double> taus);

// Evenly spaced parameter labels covering the range reached by any trajectory.
std::vector<double> tau_labels(std::span<const finsler::ExtendedTrajectory> trajectories, double every);

struct RunStages {
    bool trajectories = true;
    bool geodesics = true;
    bool curvature = true;
    bool fronts = true;
};

struct ExperimentResult {
    ExperimentConfig config;
    FieldRun field;
    std::vector<double> x0;
    std::vector<double> v0;
    std::vector<bohmian::TrajectoryRecord> first_order;
    std::vector<bohmian::TrajectoryRecord> second_order;
    std::vector<finsler::ExtendedTrajectory> geodesics;
    std::vector<curvature::CurvatureRow> curvature;
    Fronts fronts;
    double wall_seconds = 0.0;
};

using Progress = std::function<void(const std::string&)>;

FieldRunOptions field_options(const ExperimentConfig& config, const RunStages& stages);

ExperimentResult run_experiment(const ExperimentConfig& config, const RunStages& stages = {},
                                const Progress& progress = {});

// Ensemble stages on an already propagated field. The field must carry a history unless only
// snapshots are wanted.
ExperimentResult run_ensemble(const ExperimentConfig& config, FieldRun field, const RunStages& stages = {},
                              const Progress& progress = {});

// Initial extended state of one ensemble member per init_mode.
finsler::ExtendedState initial_extended_state(const ExperimentConfig& config, double x0, double v0);

finsler::GeodesicOptions geodesic_options(const ExperimentConfig& config);

} // namespace qgeo::experiment

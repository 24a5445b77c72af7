#include "qgeo/experiment.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>

#include "qgeo/errors.hpp"
#include "qgeo/field_solver.hpp"
#include "qgeo/parallel.hpp"

namespace qgeo::experiment {

std::vector<double> sample_initial_positions(std::size_t n, Sampling sampling, double q_c, double beta,
                                             std::uint64_t seed)
{
    if (!(beta > 0.0)) {
        throw std::invalid_argument("beta must be positive");
    }
    const double sigma = 1.0 / (2.0 * std::sqrt(beta));
    std::vector<double> xs(n);
    if (sampling == Sampling::quantile) {
        const boost::math::normal_distribution<double> unit(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
            xs[i] = q_c + sigma * boost::math::quantile(unit, p);
        }
    } else {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> dist(q_c, sigma);
        for (auto& x : xs) {
            x = dist(rng);
        }
        std::sort(xs.begin(), xs.end());
    }
    return xs;
}

namespace {

bool same_time(double a, double b)
{
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a));
}

long steps_for(double span, double dt)
{
    return std::lround(span / dt);
}

} // namespace

FieldRun propagate_field(const ExperimentConfig& config, const FieldRunOptions& options)
{
    FieldRun run;
    const Grid1D& grid = config.grid;
    run.potential = config.barrier.on_grid(grid);
    const field::SplitOperator op(grid, run.potential, config.mass, config.dt);
    const Fft fft(grid.n_points);

    ComplexField cur = field::init_packet(grid, config.beta, config.k, config.q_c);
    const long total = steps_for(config.t_final, config.dt);
    const long table_stride = std::max(1L, steps_for(config.table_every, config.dt));
    const long residual_stride = options.residual_every > 0.0 ? std::max(1L, steps_for(options.residual_every, config.dt)) : 0;

    if (options.build_history) {
        run.history = std::make_shared<polar::FieldHistory>(grid, config.mass);
    }
    polar::TemporalRing ring;
    std::deque<polar::PolarSnapshot> pending;
    polar::PolarSnapshot last_polar;
    bool have_last = false;
    // decompositions of steps n-2, n-1, n around each residual centre
    std::deque<std::pair<long, polar::PolarSnapshot>> window;

    auto take_completed = [&](std::vector<polar::QuantumPotentialTable> done) {
        for (auto& table : done) {
            while (!pending.empty() && pending.front().time < table.time - 1e-9) {
                pending.pop_front();
            }
            if (pending.empty() || !same_time(pending.front().time, table.time)) {
                throw std::logic_error("polar snapshot queue out of step with the Q ring");
            }
            run.history->append(pending.front(), table);
            pending.pop_front();
        }
    };

    auto near_residual = [&](long n) {
        if (residual_stride == 0) {
            return false;
        }
        for (long c = n - 1; c <= n + 1; ++c) {
            if (c >= 1 && c % residual_stride == 0) {
                return true;
            }
        }
        return false;
    };

    auto record_residual = [&]() {
        const auto& a = window[0].second;
        const auto& b = window[1].second;
        const auto& c = window[2].second;
        ResidualPoint r;
        r.t = b.time;
        const auto hj = polar::hj_residual(a, b, c, run.potential, config.mass);
        r.hj = hj.max_abs_unmasked;
        const double peak = *std::max_element(b.amplitude.begin(), b.amplitude.end());
        for (std::size_t i = 0; i < hj.values.size(); ++i) {
            if (!hj.node_mask[i] && std::abs(hj.values[i]) == r.hj) {
                r.hj_x = grid.x(i);
                r.hj_relative_amplitude = b.amplitude[i] / peak;
                break;
            }
        }
        r.continuity = polar::continuity_residual(a, b, c, config.mass).max_abs_unmasked;
        run.max_hj = std::max(run.max_hj, r.hj);
        run.max_continuity = std::max(run.max_continuity, r.continuity);
        run.residuals.push_back(r);
    };

    auto handle_step = [&](long n) {
        const double t = static_cast<double>(n) * config.dt;
        cur.time = t;
        run.max_norm_error = std::max(run.max_norm_error, std::abs(field::norm(cur) - 1.0));
        std::optional<polar::PolarSnapshot> snap;
        if (options.build_history && n % table_stride == 0) {
            snap = polar::decompose_polar(cur, fft, have_last ? &last_polar : nullptr, config.node_threshold);
            auto table = polar::quantum_potential(*snap, config.mass, config.node_threshold);
            last_polar = *snap;
            have_last = true;
            pending.push_back(*snap);
            take_completed(ring.push(std::move(table)));
        }
        for (double keep : options.keep_times) {
            if (same_time(keep, t)) {
                KeptSnapshot k;
                k.field = cur;
                k.polar = polar::decompose_polar(cur, fft, have_last ? &last_polar : nullptr, config.node_threshold);
                k.table = polar::quantum_potential(k.polar, config.mass, config.node_threshold);
                run.kept.push_back(std::move(k));
            }
        }
        if (near_residual(n)) {
            if (!snap) {
                snap = polar::decompose_polar(cur, fft, nullptr, config.node_threshold);
            }
            window.emplace_back(n, std::move(*snap));
            while (!window.empty() && window.front().first < n - 2) {
                window.pop_front();
            }
            if (window.size() == 3 && window.front().first == n - 2 && (n - 1) % residual_stride == 0) {
                record_residual();
            }
        }
    };

    handle_step(0);
    for (long n = 1; n <= total; ++n) {
        op.step(cur);
        handle_step(n);
    }
    run.steps = static_cast<std::size_t>(total);
    if (options.build_history) {
        take_completed(ring.finish());
    }
    return run;
}

finsler::ExtendedState initial_extended_state(const ExperimentConfig& config, double x0, double v0)
{
    if (config.init_mode == InitMode::paper_literal) {
        return finsler::ExtendedState::make(0.0, x0, 1.0, 1.0);
    }
    return finsler::ExtendedState::make(0.0, x0, 1.0, v0);
}

finsler::GeodesicOptions geodesic_options(const ExperimentConfig& config)
{
    finsler::GeodesicOptions o = config.geodesic;
    o.t_max = config.t_final;
    o.x_min = config.grid.x_min;
    o.x_max = config.grid.x_max;
    return o;
}

std::vector<double> tau_labels(std::span<const finsler::ExtendedTrajectory> trajectories, double every)
{
    double s_max = 0.0;
    for (const auto& t : trajectories) {
        if (!t.samples.empty()) {
            s_max = std::max(s_max, t.samples.back().s);
        }
    }
    std::vector<double> out;
    for (long j = 0;; ++j) {
        const double s = static_cast<double>(j) * every;
        if (s > s_max) {
            break;
        }
        out.push_back(s);
    }
    return out;
}

Fronts export_fronts(std::span<const finsler::ExtendedTrajectory> trajectories, std::span<const double> times,
                     std::span<const double> taus)
{
    Fronts fronts;
    for (double t : times) {
        LineFront qd{t, {}};
        LineFront tau{t, {}};
        for (const auto& traj : trajectories) {
            std::uint8_t flags = 0;
            const auto s = traj.state_at_time(t, &flags);
            if (!s) {
                continue;
            }
            qd.points.push_back({traj.id, s->q[1], s->qdot[1], flags});
            tau.points.push_back({traj.id, s->q[1], s->param, flags});
        }
        fronts.q1_qdot1.push_back(std::move(qd));
        fronts.q1_tau.push_back(std::move(tau));
    }
    for (double s : taus) {
        LineFront q0{s, {}};
        for (const auto& traj : trajectories) {
            std::uint8_t flags = 0;
            const auto st = traj.state_at_param(s, &flags);
            if (!st) {
                continue;
            }
            q0.points.push_back({traj.id, st->q[1], st->q[0], flags});
        }
        fronts.q1_q0.push_back(std::move(q0));
    }
    return fronts;
}

FieldRunOptions field_options(const ExperimentConfig& config, const RunStages& stages)
{
    FieldRunOptions o;
    o.keep_times = config.snapshot_times();
    o.build_history = stages.trajectories || stages.geodesics || stages.curvature || stages.fronts;
    o.residual_every = config.snapshot_every;
    return o;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunStages& stages, const Progress& progress)
{
    config.validate();
    if (progress) {
        progress("propagating field");
    }
    const auto start = std::chrono::steady_clock::now();
    FieldRun field = propagate_field(config, field_options(config, stages));
    auto result = run_ensemble(config, std::move(field), stages, progress);
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

ExperimentResult run_ensemble(const ExperimentConfig& config, FieldRun field, const RunStages& stages,
                              const Progress& progress)
{
    const auto start = std::chrono::steady_clock::now();
    auto note = [&](const std::string& msg) {
        if (progress) {
            progress(msg);
        }
    };
    config.validate();
    ExperimentResult result;
    result.config = config;
    result.field = std::move(field);

    if (result.field.history) {
        const auto& history = *result.field.history;
        result.x0 = sample_initial_positions(config.n_traj, config.sampling, config.q_c, config.beta, config.seed);
        result.v0.resize(result.x0.size());
        for (std::size_t i = 0; i < result.x0.size(); ++i) {
            const auto s = history.sample(history.t_begin(), result.x0[i]);
            if (s.flagged) {
                throw NodeRegion("initial position in a node region");
            }
            result.v0[i] = s.velocity;
        }
        const std::size_t threads = config.threads;

        if (stages.trajectories) {
            note("integrating Bohmian trajectories");
            bohmian::IntegrationOptions bopts{config.trajectory_dt, config.t_final, threads};
            result.first_order = bohmian::integrate_first_order(result.x0, history, bopts);
            result.second_order =
                bohmian::integrate_second_order(result.x0, result.v0, config.barrier, history, bopts);
        }

        if (stages.geodesics || stages.curvature || stages.fronts) {
            note("integrating geodesics");
            const finsler::GridFieldProbe probe(result.field.history, config.barrier);
            const auto gopts = geodesic_options(config);
            result.geodesics.resize(result.x0.size());
            parallel_for(result.x0.size(), threads, [&](std::size_t i) {
                auto traj = finsler::integrate_geodesic(initial_extended_state(config, result.x0[i], result.v0[i]),
                                                        probe, config.mass, gopts);
                traj.id = static_cast<int>(i);
                result.geodesics[i] = std::move(traj);
            });
            if (stages.curvature) {
                note("evaluating curvature");
                const auto times = config.curvature_times();
                result.curvature = curvature::curvature_along(result.geodesics, probe, config.mass, times,
                                                              config.fd_step, threads, config.geodesic.variant);
            }
            if (stages.fronts) {
                const auto times = config.front_times();
                const auto taus = tau_labels(result.geodesics, config.tau_front_every);
                result.fronts = export_fronts(result.geodesics, times, taus);
            }
        }
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

} // namespace qgeo::experiment

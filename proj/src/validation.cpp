#include "qgeo/validation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

#include "qgeo/errors.hpp"

namespace qgeo::validation {

using finsler::ExtendedState;
using finsler::Mat;
using finsler::Vec;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point start)
{
    return std::chrono::duration<double>(clock_type::now() - start).count();
}

double max_abs(const Mat& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

} // namespace

Check se_integrity(const experiment::ExperimentConfig& config, double residual_every, const SeTolerances& tol)
{
    Check c;
    c.name = "se_integrity";
    const auto start = clock_type::now();
    auto run = [&](double dt, double& wall) {
        experiment::ExperimentConfig cfg = config;
        cfg.dt = dt;
        experiment::FieldRunOptions o;
        o.build_history = false;
        o.residual_every = residual_every;
        const auto t0 = clock_type::now();
        auto r = experiment::propagate_field(cfg, o);
        wall = seconds_since(t0);
        return r;
    };
    double wall_full = 0.0, wall_half = 0.0;
    const auto full = run(config.dt, wall_full);
    const auto half = run(0.5 * config.dt, wall_half);

    c.metric("norm_error_dt", full.max_norm_error);
    c.metric("norm_error_half_dt", half.max_norm_error);
    c.metric("hj_dt", full.max_hj);
    c.metric("hj_half_dt", half.max_hj);
    c.metric("continuity_dt", full.max_continuity);
    c.metric("continuity_half_dt", half.max_continuity);
    c.metric("hj_ratio", half.max_hj / full.max_hj);
    c.metric("continuity_ratio", half.max_continuity / full.max_continuity);
    c.metric("wall_seconds_dt", wall_full);

    std::vector<std::string> failures;
    if (!(full.max_norm_error < tol.norm && half.max_norm_error < tol.norm)) {
        failures.push_back("norm drift");
    }
    if (!(full.max_hj < tol.residual && full.max_continuity < tol.residual)) {
        failures.push_back("residual above tolerance");
    }
    if (!(half.max_hj <= tol.halving * full.max_hj)) {
        failures.push_back("HJ residual does not halve");
    }
    if (!(half.max_continuity <= tol.halving * full.max_continuity)) {
        failures.push_back("continuity residual does not halve");
    }
    if (!(wall_full < tol.max_seconds)) {
        failures.push_back("runtime");
    }
    c.passed = failures.empty();
    c.detail = fmt::format("|norm-1| {:.2e}/{:.2e}, HJ {:.2e}->{:.2e}, continuity {:.2e}->{:.2e}, {:.1f} s",
                           full.max_norm_error, half.max_norm_error, full.max_hj, half.max_hj, full.max_continuity,
                           half.max_continuity, wall_full);
    for (const auto& f : failures) {
        c.detail += "; " + f;
    }
    c.seconds = seconds_since(start);
    return c;
}

std::vector<IdentityState> draw_identity_states(const finsler::GridFieldProbe& probe, double mass, std::size_t n,
                                                std::uint64_t seed)
{
    const auto& history = probe.history();
    const Grid1D& grid = history.grid();
    // one frame spacing away from the ends so the time stencil stays inside
    const double t_lo = history.t_begin() + history.spacing();
    const double t_hi = history.t_end() - history.spacing();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ut(t_lo, t_hi);
    std::uniform_real_distribution<double> ux(grid.x_min, grid.x_max - grid.dx());
    std::uniform_real_distribution<double> ua(0.5, 2.0);
    std::uniform_real_distribution<double> uf(-1.0, 1.0);

    std::vector<IdentityState> out;
    out.reserve(n);
    const std::size_t max_attempts = 2000 * n + 10000;
    for (std::size_t attempt = 0; out.size() < n && attempt < max_attempts; ++attempt) {
        const double t = ut(rng);
        const double x = ux(rng);
        const auto h = history.sample(t, x);
        if (h.flagged) {
            continue;
        }
        const double a = ua(rng);
        const double u = h.velocity * (1.0 + 0.5 * uf(rng)) + 0.002 * uf(rng);
        IdentityState s;
        s.state = ExtendedState::make(t, x, a, a * u);
        s.field = probe.sample(s.state.q);
        if (s.field.flagged) {
            continue;
        }
        // stay away from the Lambda = 0 cone where the metric degenerates
        if (std::abs(0.5 * mass * u * u - s.field.q) < 1e-4 * std::max(std::abs(s.field.q), 0.5 * mass * u * u)) {
            continue;
        }
        out.push_back(std::move(s));
    }
    if (out.size() < n) {
        throw NumericalError("could not draw enough unmasked identity states");
    }
    return out;
}

std::array<Mat, finsler::max_dim> metric_velocity_gradient(const ExtendedState& state,
                                                           const finsler::ProbeSample& field, double mass, double h)
{
    const int d = state.dim();
    const double scale = state.qdot.cwiseAbs().maxCoeff();
    std::array<Mat, finsler::max_dim> out;
    for (int c = 0; c < d; ++c) {
        const double step = h * std::max(std::abs(state.qdot[c]), 1e-3 * scale);
        auto g_at = [&](double k) {
            ExtendedState s = state;
            s.qdot[c] += k * step;
            return finsler::metric(s, field, mass).g;
        };
        out[static_cast<std::size_t>(c)] =
            (-g_at(2.0) + 8.0 * g_at(1.0) - 8.0 * g_at(-1.0) + g_at(-2.0)) / (12.0 * step);
    }
    return out;
}

Check finsler_identities(const finsler::GridFieldProbe& probe, double mass, std::size_t n_states, std::uint64_t seed,
                         const IdentityTolerances& tol)
{
    Check c;
    c.name = "finsler_identities";
    const auto start = clock_type::now();
    const auto states = draw_identity_states(probe, mass, n_states, seed);

    double e_euler1 = 0, e_euler2 = 0, e_rec = 0, e_mom = 0, e_cartan = 0, e_hom = 0, e_fd = 0, e_det = 0;
    for (const auto& is : states) {
        const auto& s = is.state;
        const double q = is.field.q;
        const int d = s.dim();
        const double lambda = finsler::lambda_value(s, q, mass);

        const Vec grad = finsler::lambda_velocity_gradient_fd(s, q, mass, 1e-5);
        e_euler1 = std::max(e_euler1, std::abs(grad.dot(s.qdot) - lambda) / std::abs(lambda));

        const Mat hess = finsler::lambda_velocity_hessian_fd(s, q, mass, 1e-3);
        e_euler2 = std::max(e_euler2, (hess * s.qdot).cwiseAbs().maxCoeff());

        const auto m = finsler::metric(s, is.field, mass);
        e_rec = std::max(e_rec, std::abs(s.qdot.dot(m.g * s.qdot) - lambda * lambda) / (lambda * lambda));

        const Vec p = m.g * s.qdot;
        const Vec lp = lambda * grad;
        e_mom = std::max(e_mom, (p - lp).cwiseAbs().maxCoeff() / lp.cwiseAbs().maxCoeff());

        const auto xi = metric_velocity_gradient(s, is.field, mass, 1e-3);
        Mat contraction = Mat::Zero(d, d);
        for (int k = 0; k < d; ++k) {
            contraction += xi[static_cast<std::size_t>(k)] * s.qdot[k];
        }
        e_cartan = std::max(e_cartan, max_abs(contraction));

        for (double k : {0.5, 3.0}) {
            ExtendedState scaled = s;
            scaled.qdot *= k;
            const auto ms = finsler::metric(scaled, is.field, mass);
            e_hom = std::max(e_hom, max_abs(ms.g - m.g) / max_abs(m.g));
        }

        const auto fd = finsler::metric_fd_oracle(s, probe, mass, 1e-4);
        e_fd = std::max(e_fd, max_abs(fd.g - m.g) / max_abs(m.g));

        const double a = s.qdot[0];
        double t = 0.0;
        for (int i = 1; i < d; ++i) {
            t += 0.5 * mass * s.qdot[i] * s.qdot[i];
        }
        const double law = mass * std::pow(t / (a * a) - q, 3);
        e_det = std::max(e_det, std::abs(m.g.determinant() - law) / std::abs(law));
    }

    c.metric("states", static_cast<double>(states.size()));
    c.metric("euler1_rel", e_euler1);
    c.metric("euler2_abs", e_euler2);
    c.metric("reconstruction_rel", e_rec);
    c.metric("momentum_rel", e_mom);
    c.metric("cartan_abs", e_cartan);
    c.metric("homogeneity_rel", e_hom);
    c.metric("fd_metric_rel", e_fd);
    c.metric("determinant_rel", e_det);

    std::vector<std::string> failures;
    auto require = [&](double v, double limit, const char* what) {
        if (!(v < limit)) {
            failures.push_back(fmt::format("{} {:.2e} >= {:.0e}", what, v, limit));
        }
    };
    require(e_euler1, tol.euler1, "euler1");
    require(e_euler2, tol.euler2, "euler2");
    require(e_rec, tol.reconstruction, "reconstruction");
    require(e_mom, tol.momentum, "momentum");
    require(e_cartan, tol.cartan, "cartan");
    require(e_hom, tol.homogeneity, "homogeneity");
    require(e_fd, tol.fd_metric, "fd metric");
    require(e_det, tol.determinant, "determinant");
    c.passed = failures.empty();
    c.detail = fmt::format("{} states; euler1 {:.1e}, euler2 {:.1e}, g.qdot.qdot {:.1e}, momentum {:.1e}, "
                           "Xi.qdot {:.1e}, homogeneity {:.1e}, FD metric {:.1e}, det {:.1e}",
                           states.size(), e_euler1, e_euler2, e_rec, e_mom, e_cartan, e_hom, e_fd, e_det);
    for (const auto& f : failures) {
        c.detail += "; " + f;
    }
    c.seconds = seconds_since(start);
    return c;
}

Check flat_space(double tol)
{
    Check c;
    c.name = "flat_space";
    const auto start = clock_type::now();
    const double mass = 2000.0;
    double worst_gamma = 0.0, worst_riemann = 0.0, worst_scalar = 0.0, worst_line = 0.0;
    for (double qconst : {0.0, 0.0123, -0.004}) {
        const finsler::ConstantQProbe probe(qconst);
        const auto init = ExtendedState::make(3.0, 1.5, 1.3, 0.07 * 1.3);
        for (auto mode : {finsler::PositionDerivative::chain_rule, finsler::PositionDerivative::central_difference}) {
            const auto g = finsler::christoffel(init, probe, mass, 1e-4, finsler::MetricVariant::literal, mode);
            for (double v : g.gamma.data) {
                worst_gamma = std::max(worst_gamma, std::abs(v));
            }
        }
        const auto r = curvature::riemann(init, probe, mass);
        for (double v : r.riemann.data) {
            worst_riemann = std::max(worst_riemann, std::abs(v));
        }
        worst_riemann = std::max(worst_riemann, max_abs(r.ricci));
        worst_scalar = std::max(worst_scalar, std::abs(r.scalar));

        finsler::GeodesicOptions o;
        o.ds = 0.05;
        o.s_max = 20.0;
        const auto traj = finsler::integrate_geodesic(init, probe, mass, o);
        const auto& first = traj.samples.front();
        for (const auto& smp : traj.samples) {
            const Vec line = first.q + first.qdot * (smp.s - first.s);
            worst_line = std::max(worst_line, (smp.q - line).cwiseAbs().maxCoeff() / (1.0 + line.cwiseAbs().maxCoeff()));
            worst_line = std::max(worst_line, (smp.qdot - first.qdot).cwiseAbs().maxCoeff());
        }
    }
    c.metric("max_abs_gamma", worst_gamma);
    c.metric("max_abs_riemann_ricci", worst_riemann);
    c.metric("max_abs_scalar", worst_scalar);
    c.metric("max_line_deviation", worst_line);
    c.passed = worst_gamma < tol && worst_riemann < tol && worst_scalar < tol && worst_line < tol;
    c.detail = fmt::format("|Gamma| {:.1e}, |Riemann| {:.1e}, |R| {:.1e}, line deviation {:.1e}", worst_gamma,
                           worst_riemann, worst_scalar, worst_line);
    c.seconds = seconds_since(start);
    return c;
}

Check proposition_equivalence(const experiment::ExperimentResult& result, double rel_tol)
{
    Check c;
    c.name = "proposition_equivalence";
    const auto start = clock_type::now();
    double x_lo = std::numeric_limits<double>::infinity();
    double x_hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : result.second_order) {
        for (const auto& s : r.samples) {
            x_lo = std::min(x_lo, s.x);
            x_hi = std::max(x_hi, s.x);
        }
    }
    const double range = x_hi - x_lo;

    double worst_geo = 0.0, worst_first = 0.0;
    std::size_t compared_geo = 0, compared_first = 0, skipped_flagged = 0, skipped_span = 0, bridged = 0;
    int worst_geo_id = -1;
    for (std::size_t i = 0; i < result.second_order.size(); ++i) {
        const auto& second = result.second_order[i];
        const auto* geo = i < result.geodesics.size() ? &result.geodesics[i] : nullptr;
        const auto* first = i < result.first_order.size() ? &result.first_order[i] : nullptr;
        for (std::size_t k = 0; k < second.samples.size(); ++k) {
            const auto& s2 = second.samples[k];
            if (s2.node_flag) {
                ++skipped_flagged;
                continue;
            }
            if (first && k < first->samples.size() && !first->samples[k].node_flag) {
                worst_first = std::max(worst_first, std::abs(first->samples[k].x - s2.x));
                ++compared_first;
            }
            if (geo) {
                std::uint8_t flags = 0;
                const auto st = geo->state_at_time(s2.t, &flags);
                if (!st) {
                    ++skipped_span;
                    continue;
                }
                if (flags & finsler::flag_node) {
                    ++skipped_flagged;
                    continue;
                }
                bridged += (flags & finsler::flag_bridge) ? 1 : 0;
                const double dev = std::abs(st->q[1] - s2.x);
                if (dev > worst_geo) {
                    worst_geo = dev;
                    worst_geo_id = geo->id;
                }
                ++compared_geo;
            }
        }
    }
    const double limit = rel_tol * range;
    c.metric("x_range", range);
    c.metric("max_dev_geodesic", worst_geo);
    c.metric("max_dev_first_order", worst_first);
    c.metric("limit", limit);
    c.metric("compared_geodesic", static_cast<double>(compared_geo));
    c.metric("compared_first_order", static_cast<double>(compared_first));
    c.metric("skipped_node_flagged", static_cast<double>(skipped_flagged));
    c.metric("skipped_outside_span", static_cast<double>(skipped_span));
    c.metric("bridged_samples", static_cast<double>(bridged));
    c.passed = compared_geo > 0 && compared_first > 0 && worst_geo < limit && worst_first < limit;
    c.detail = fmt::format("{} members, range {:.2f}: geodesic {:.2e} (id {}), first-order {:.2e}, limit {:.2e}; "
                           "{} skipped flagged, {} outside span, {} bridged",
                           result.second_order.size(), range, worst_geo, worst_geo_id, worst_first, limit,
                           skipped_flagged, skipped_span, bridged);
    c.seconds = seconds_since(start);
    return c;
}

Check curvature_signs(const std::vector<curvature::CurvatureRow>& rows, double q_p, double early_end,
                      double late_start)
{
    Check c;
    c.name = "curvature_signs";
    std::size_t early = 0, early_pos = 0, mid_pos = 0, mid_neg = 0, late = 0, late_neg = 0, untrusted = 0;
    for (const auto& r : rows) {
        if (!r.trusted || !std::isfinite(r.r)) {
            ++untrusted;
            continue;
        }
        if (r.t < early_end) {
            ++early;
            early_pos += r.r > 0.0 ? 1 : 0;
        } else if (r.t < late_start) {
            mid_pos += r.r > 0.0 ? 1 : 0;
            mid_neg += r.r < 0.0 ? 1 : 0;
        } else if (r.q1 > q_p) {
            ++late;
            late_neg += r.r < 0.0 ? 1 : 0;
        }
    }
    const bool early_ok = early > 0 && early_pos == early;
    const bool mid_ok = mid_pos > 0 && mid_neg > 0;
    const bool late_ok = late > 0 && late_neg == late;
    c.metric("early_samples", static_cast<double>(early));
    c.metric("early_positive", static_cast<double>(early_pos));
    c.metric("mid_positive", static_cast<double>(mid_pos));
    c.metric("mid_negative", static_cast<double>(mid_neg));
    c.metric("late_right_samples", static_cast<double>(late));
    c.metric("late_right_negative", static_cast<double>(late_neg));
    c.metric("untrusted", static_cast<double>(untrusted));
    c.passed = early_ok && mid_ok && late_ok;
    c.detail = fmt::format("t<{:g}: {}/{} positive; mid-run: {} positive, {} negative; t>={:g}, q1>{:g}: {}/{} negative; "
                           "{} untrusted",
                           early_end, early_pos, early, mid_pos, mid_neg, late_start, q_p, late_neg, late, untrusted);
    return c;
}

std::vector<FrontWidth> front_widths(const std::vector<experiment::LineFront>& fronts)
{
    std::vector<FrontWidth> out;
    for (const auto& f : fronts) {
        std::vector<double> v;
        for (const auto& p : f.points) {
            if (p.flags == 0 && std::isfinite(p.value)) {
                v.push_back(p.value);
            }
        }
        FrontWidth w;
        w.t = f.label;
        w.points = v.size();
        if (v.size() >= 4) {
            std::sort(v.begin(), v.end());
            auto quantile = [&](double p) {
                const double pos = p * static_cast<double>(v.size() - 1);
                const auto lo = static_cast<std::size_t>(std::floor(pos));
                const auto hi = std::min(lo + 1, v.size() - 1);
                return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
            };
            w.width = quantile(0.75) - quantile(0.25);
        } else {
            w.width = std::numeric_limits<double>::quiet_NaN();
        }
        out.push_back(w);
    }
    return out;
}

std::vector<GapComparison> decile_gaps(const std::vector<experiment::LineFront>& q0_fronts)
{
    std::vector<GapComparison> out;
    for (std::size_t j = 0; j + 1 < q0_fronts.size(); ++j) {
        const auto& a = q0_fronts[j];
        const auto& b = q0_fronts[j + 1];
        struct Pair {
            double q1, gap;
        };
        std::vector<Pair> pairs;
        for (const auto& p : a.points) {
            if (p.flags != 0) {
                continue;
            }
            const auto it = std::find_if(b.points.begin(), b.points.end(), [&](const auto& o) { return o.id == p.id; });
            if (it == b.points.end() || it->flags != 0) {
                continue;
            }
            pairs.push_back({p.q1, it->value - p.value});
        }
        if (pairs.size() < 10) {
            continue;
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.q1 < y.q1; });
        const std::size_t decile = pairs.size() / 10;
        double left = 0.0, right = 0.0;
        for (std::size_t i = 0; i < decile; ++i) {
            left += pairs[i].gap;
            right += pairs[pairs.size() - 1 - i].gap;
        }
        out.push_back({a.label, left / static_cast<double>(decile), right / static_cast<double>(decile)});
    }
    return out;
}

Check front_shapes(const experiment::Fronts& fronts, double late_start, double contraction)
{
    Check c;
    c.name = "front_shapes";
    const auto widths = front_widths(fronts.q1_qdot1);
    // contraction then spreading of the (q1, qdot1) fronts
    std::size_t first_max = 0;
    while (first_max + 1 < widths.size() && !(widths[first_max + 1].width < widths[first_max].width)) {
        ++first_max;
    }
    double min_after = std::numeric_limits<double>::infinity();
    std::size_t min_index = first_max;
    for (std::size_t i = first_max; i < widths.size(); ++i) {
        if (widths[i].width < min_after) {
            min_after = widths[i].width;
            min_index = i;
        }
    }
    const double w_max = widths.empty() ? 0.0 : widths[first_max].width;
    const double w_final = widths.empty() ? 0.0 : widths.back().width;
    const bool contracts = !widths.empty() && min_after < contraction * w_max;
    const bool spreads = !widths.empty() && w_final > w_max;

    // time dilation on fixed-parameter fronts in the (q1, q0) plane
    const auto gaps = decile_gaps(fronts.q1_q0);
    double left = 0.0, right = 0.0;
    std::size_t late = 0, right_wins = 0;
    for (const auto& g : gaps) {
        // label is the parameter value; late means the earlier front has mean q0 past late_start
        const auto it = std::find_if(fronts.q1_q0.begin(), fronts.q1_q0.end(),
                                     [&](const auto& f) { return f.label == g.label; });
        double mean_t = 0.0;
        for (const auto& p : it->points) {
            mean_t += p.value;
        }
        mean_t /= static_cast<double>(std::max<std::size_t>(1, it->points.size()));
        if (mean_t < late_start) {
            continue;
        }
        ++late;
        left += g.left_gap;
        right += g.right_gap;
        right_wins += g.right_gap > g.left_gap ? 1 : 0;
    }
    const bool dilation = late > 0 && right > left;

    c.metric("width_first_max", w_max);
    c.metric("width_first_max_t", widths.empty() ? 0.0 : widths[first_max].t);
    c.metric("width_min_after", min_after);
    c.metric("width_min_t", widths.empty() ? 0.0 : widths[min_index].t);
    c.metric("width_final", w_final);
    c.metric("late_front_pairs", static_cast<double>(late));
    c.metric("mean_left_gap", late ? left / static_cast<double>(late) : 0.0);
    c.metric("mean_right_gap", late ? right / static_cast<double>(late) : 0.0);
    c.metric("pairs_right_larger", static_cast<double>(right_wins));
    c.passed = contracts && spreads && dilation;
    c.detail = fmt::format("qdot1 IQR {:.3g} at t={:g} -> {:.3g} at t={:g} -> {:.3g} final ({}); "
                           "late q0 gaps left {:.4g} right {:.4g} over {} pairs ({})",
                           w_max, widths.empty() ? 0.0 : widths[first_max].t, min_after,
                           widths.empty() ? 0.0 : widths[min_index].t, w_final,
                           contracts && spreads ? "contract then spread" : "no contraction/spread",
                           late ? left / static_cast<double>(late) : 0.0,
                           late ? right / static_cast<double>(late) : 0.0, late,
                           dilation ? "right runs faster" : "right does not run faster");
    return c;
}

double ks_distance(std::vector<double> samples, const ComplexField& field)
{
    if (samples.empty()) {
        throw std::invalid_argument("no samples");
    }
    const Grid1D& grid = field.grid;
    const std::size_t n = grid.n_points;
    const double dx = grid.dx();
    std::vector<double> rho(n), slope(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        rho[i] = std::norm(field.values[i]);
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        slope[i] = (rho[i + 1] - rho[i - 1]) / (2.0 * dx);
    }
    // integral over [0, w] of the cubic Hermite density on cell i
    auto cell = [&](std::size_t i, double w) {
        const double w2 = w * w, w3 = w2 * w, w4 = w3 * w;
        return dx * (rho[i] * (w - w3 + 0.5 * w4) + dx * slope[i] * (0.5 * w2 - 2.0 * w3 / 3.0 + 0.25 * w4) +
                     rho[i + 1] * (w3 - 0.5 * w4) + dx * slope[i + 1] * (0.25 * w4 - w3 / 3.0));
    };
    std::vector<double> cdf(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        cdf[i] = cdf[i - 1] + cell(i - 1, 1.0);
    }
    const double total = cdf.back();
    auto cdf_at = [&](double x) {
        if (x <= grid.x_min) {
            return 0.0;
        }
        const double r = (x - grid.x_min) / dx;
        const auto i = static_cast<std::size_t>(r);
        if (i + 1 >= n) {
            return 1.0;
        }
        return (cdf[i] + cell(i, r - static_cast<double>(i))) / total;
    };
    std::sort(samples.begin(), samples.end());
    const double m = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf_at(samples[i]);
        d = std::max({d, std::abs(f - static_cast<double>(i) / m), std::abs(static_cast<double>(i + 1) / m - f)});
    }
    return d;
}

Check equivariance(const experiment::ExperimentResult& result, const std::vector<double>& times, double max_ks)
{
    Check c;
    c.name = "equivariance";
    bool ok = !times.empty();
    std::string detail;
    for (double t : times) {
        const auto snap = std::find_if(result.field.kept.begin(), result.field.kept.end(),
                                       [&](const auto& k) { return std::abs(k.field.time - t) < 1e-9; });
        if (snap == result.field.kept.end()) {
            throw std::invalid_argument(fmt::format("no kept snapshot at t={}", t));
        }
        std::vector<double> xs;
        for (const auto& r : result.first_order) {
            for (const auto& s : r.samples) {
                if (std::abs(s.t - t) < 1e-9) {
                    xs.push_back(s.x);
                    break;
                }
            }
        }
        const double d = ks_distance(xs, snap->field);
        c.metric(fmt::format("ks_t{:g}", t), d);
        c.metric(fmt::format("members_t{:g}", t), static_cast<double>(xs.size()));
        ok = ok && d < max_ks && xs.size() == result.first_order.size();
        detail += fmt::format("{}t={:g}: D={:.4f} ({} members)", detail.empty() ? "" : ", ", t, d, xs.size());
    }
    c.passed = ok;
    c.detail = detail + fmt::format("; limit {:g}", max_ks);
    return c;
}

std::string format_check(const Check& c)
{
    return fmt::format("{} {}: {}", c.passed ? "PASS" : "FAIL", c.name, c.detail);
}

std::vector<Check> run_suite(const experiment::ExperimentConfig& config, const SuiteOptions& options,
                             const experiment::Progress& progress)
{
    auto note = [&](const std::string& msg) {
        if (progress) {
            progress(msg);
        }
    };
    config.validate();
    std::vector<Check> checks;

    note("propagating at dt and dt/2");
    checks.push_back(se_integrity(config, options.residual_every > 0.0 ? options.residual_every : config.dt, options.se));

    note("flat-space probe");
    checks.push_back(flat_space(options.flat_tolerance));

    note("propagating with Q tables");
    const experiment::RunStages all;
    auto fopts = experiment::field_options(config, all);
    for (double t : options.equivariance_times) {
        fopts.keep_times.push_back(t);
    }
    const auto field = experiment::propagate_field(config, fopts);

    note("identity suite");
    {
        const finsler::GridFieldProbe probe(field.history, config.barrier);
        checks.push_back(finsler_identities(probe, config.mass, options.identity_states, options.identity_seed,
                                            options.identities));
    }

    note("trajectory comparison ensemble");
    {
        auto small = config;
        small.n_traj = options.proposition_members;
        experiment::RunStages stages;
        stages.curvature = false;
        stages.fronts = false;
        const auto r = experiment::run_ensemble(small, field, stages, progress);
        checks.push_back(proposition_equivalence(r, options.proposition_tolerance));
    }

    note("full ensemble");
    const auto full = experiment::run_ensemble(config, field, all, progress);
    checks.push_back(curvature_signs(full.curvature, config.barrier.q_p, options.curvature_early_end,
                                     options.curvature_late_start));
    checks.push_back(front_shapes(full.fronts, options.front_late_fraction * config.t_final,
                                  options.front_contraction));
    checks.push_back(equivariance(full, options.equivariance_times, options.max_ks));
    return checks;
}

} // namespace qgeo::validation

#include "qgeo/finsler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qgeo/errors.hpp"
#include "qgeo/interp.hpp"

namespace qgeo::finsler {

ParamKind parse_param_kind(const std::string& s)
{
    if (s == "tau") {
        return ParamKind::tau;
    }
    if (s == "arclength") {
        return ParamKind::arclength;
    }
    if (s == "coordinate_time") {
        return ParamKind::coordinate_time;
    }
    throw std::invalid_argument("unknown parametrization '" + s + "'");
}

Forcing parse_forcing(const std::string& s)
{
    if (s == "variational") {
        return Forcing::variational;
    }
    if (s == "paper_literal") {
        return Forcing::paper_literal;
    }
    throw std::invalid_argument("unknown forcing '" + s + "'");
}

MetricVariant parse_metric_variant(const std::string& s)
{
    if (s == "zero" || s == "literal") {
        return MetricVariant::literal;
    }
    if (s == "dQdt") {
        return MetricVariant::dqdt;
    }
    throw std::invalid_argument("unknown appendixC_Q0 value '" + s + "'");
}

LambdaCrossing parse_lambda_crossing(const std::string& s)
{
    if (s == "bridge") {
        return LambdaCrossing::bridge;
    }
    if (s == "truncate") {
        return LambdaCrossing::truncate;
    }
    throw std::invalid_argument("unknown lambda_crossing '" + s + "'");
}

std::string to_string(ParamKind v)
{
    switch (v) {
    case ParamKind::tau:
        return "tau";
    case ParamKind::arclength:
        return "arclength";
    case ParamKind::coordinate_time:
        return "coordinate_time";
    }
    return "unknown";
}

std::string to_string(Forcing v)
{
    return v == Forcing::variational ? "variational" : "paper_literal";
}

std::string to_string(MetricVariant v)
{
    return v == MetricVariant::literal ? "zero" : "dQdt";
}

std::string to_string(LambdaCrossing v)
{
    return v == LambdaCrossing::bridge ? "bridge" : "truncate";
}

std::string to_string(GeodesicStatus status)
{
    switch (status) {
    case GeodesicStatus::completed:
        return "completed";
    case GeodesicStatus::reached_s_max:
        return "reached_s_max";
    case GeodesicStatus::left_grid:
        return "left_grid";
    case GeodesicStatus::truncated_lambda:
        return "truncated_lambda";
    case GeodesicStatus::singular_metric:
        return "singular_metric";
    case GeodesicStatus::non_finite:
        return "non_finite";
    }
    return "unknown";
}

ExtendedState ExtendedState::make(double t, double x, double qdot0, double qdot1, ParamKind kind)
{
    ExtendedState s;
    s.q = Vec(2);
    s.q << t, x;
    s.qdot = Vec(2);
    s.qdot << qdot0, qdot1;
    s.param_kind = kind;
    return s;
}

// ---------------------------------------------------------------- probes

GridFieldProbe::GridFieldProbe(std::shared_ptr<const polar::FieldHistory> history, field::PotentialSpec potential)
    : history_(std::move(history)), potential_(std::move(potential))
{
    if (!history_ || history_->size() == 0) {
        throw std::invalid_argument("GridFieldProbe needs a non-empty field history");
    }
}

ProbeSample GridFieldProbe::sample(const Vec& position) const
{
    double t = position[0];
    const double x = position[1];
    // Final RK stages may overshoot the last frame by a fraction of a step.
    const double slack = std::max(history_->spacing(), 1e-9);
    if (t > history_->t_end() && t <= history_->t_end() + slack) {
        t = history_->t_end();
    } else if (t < history_->t_begin() && t >= history_->t_begin() - slack) {
        t = history_->t_begin();
    }
    const auto s = history_->sample(t, x);
    ProbeSample out;
    out.q = s.q;
    out.dq = Vec(2);
    out.dq << s.q_t, s.q_x;
    out.d2q = Mat(2, 2);
    out.d2q << s.q_tt, s.q_xt, s.q_xt, s.q_xx;
    out.v = potential_.value(x);
    out.dv = Vec(2);
    out.dv << 0.0, potential_.gradient(x);
    out.flagged = s.flagged;
    return out;
}

ConstantQProbe::ConstantQProbe(double q, field::PotentialSpec potential) : q_(q), potential_(std::move(potential)) {}

ProbeSample ConstantQProbe::sample(const Vec& position) const
{
    ProbeSample out;
    out.q = q_;
    out.dq = Vec::Zero(2);
    out.d2q = Mat::Zero(2, 2);
    out.v = potential_.value(position[1]);
    out.dv = Vec(2);
    out.dv << 0.0, potential_.gradient(position[1]);
    return out;
}

FreeGaussianProbe::FreeGaussianProbe(double mass, double sigma0, double q_c, double velocity)
    : mass_(mass), sigma0_(sigma0), q_c_(q_c), velocity_(velocity), tau_(2.0 * mass * sigma0 * sigma0 / hbar)
{
    if (!(mass > 0.0) || !(sigma0 > 0.0)) {
        throw std::invalid_argument("FreeGaussianProbe needs positive mass and width");
    }
}

double FreeGaussianProbe::sigma(double t) const
{
    const double s = t / tau_;
    return sigma0_ * std::sqrt(1.0 + s * s);
}

double FreeGaussianProbe::bohmian_position(double x0, double t) const
{
    return q_c_ + velocity_ * t + (x0 - q_c_) * sigma(t) / sigma0_;
}

double FreeGaussianProbe::bohmian_velocity(double x0, double t) const
{
    const double s = t / tau_;
    return velocity_ + (x0 - q_c_) * (s / tau_) / std::sqrt(1.0 + s * s);
}

ProbeSample FreeGaussianProbe::sample(const Vec& position) const
{
    const double t = position[0];
    const double xi = position[1] - q_c_ - velocity_ * t;
    const double v = velocity_;
    const double s = t / tau_;
    const double c = 1.0 / (sigma0_ * sigma0_);
    const double d = 1.0 + s * s;
    // w = 1/sigma_t^2 and its time derivatives
    const double w = c / d;
    const double w1 = -c * 2.0 * s / (tau_ * d * d);
    const double w2 = -(2.0 * c / (tau_ * tau_)) * (1.0 - 3.0 * s * s) / (d * d * d);
    const double k = hbar * hbar / (2.0 * mass_);

    const double f_t = -2.0 * xi * v * w * w + 2.0 * xi * xi * w * w1;
    const double f_tt = 2.0 * v * v * w * w - 8.0 * xi * v * w * w1 + 2.0 * xi * xi * (w1 * w1 + w * w2);

    ProbeSample out;
    out.q = k * (0.5 * w - 0.25 * xi * xi * w * w);
    out.dq = Vec(2);
    out.dq << k * (0.5 * w1 - 0.25 * f_t), k * (-0.5 * xi * w * w);
    const double q_xx = k * (-0.5 * w * w);
    const double q_tt = k * (0.5 * w2 - 0.25 * f_tt);
    const double q_xt = k * (-0.5 * (-v * w * w + 2.0 * xi * w * w1));
    out.d2q = Mat(2, 2);
    out.d2q << q_tt, q_xt, q_xt, q_xx;
    out.dv = Vec::Zero(2);
    return out;
}

// ---------------------------------------------------------------- Lambda and metric

namespace {

double kinetic(const Vec& qdot, double mass)
{
    double sum = 0.0;
    for (int i = 1; i < qdot.size(); ++i) {
        sum += qdot[i] * qdot[i];
    }
    return 0.5 * mass * sum;
}

void check_state(const ExtendedState& state)
{
    if (state.q.size() != state.qdot.size() || state.q.size() < 2 || state.q.size() > max_dim) {
        throw std::invalid_argument("extended state has inconsistent dimension");
    }
}

double step_for(double value, double h)
{
    return std::max(h, h * std::abs(value));
}

} // namespace

double lambda_value(const ExtendedState& state, double q, double mass)
{
    check_state(state);
    const double a = state.qdot[0];
    if (a == 0.0) {
        throw SingularMetric("Lambda is undefined at qdot^0 = 0");
    }
    return kinetic(state.qdot, mass) / a - q * a;
}

double lambda_value(const ExtendedState& state, const FieldProbe& probe, double mass)
{
    return lambda_value(state, probe.sample(state.q).q, mass);
}

MetricSample metric(const ExtendedState& state, const ProbeSample& field, double mass, MetricVariant variant)
{
    check_state(state);
    const int d = state.dim();
    const double a = state.qdot[0];
    if (a == 0.0) {
        throw SingularMetric("metric is undefined at qdot^0 = 0");
    }
    const double t = kinetic(state.qdot, mass);
    const double q = field.q;
    const double a2 = a * a;
    const double a3 = a2 * a;

    MetricSample out;
    out.at = state;
    out.g = Mat::Zero(d, d);
    out.g(0, 0) = 3.0 * t * t / (a2 * a2) + q * q;
    double q0 = 0.0;
    if (variant == MetricVariant::dqdt) {
        q0 = field.dq[0];
        const double q00 = field.d2q(0, 0);
        out.g(0, 0) += 4.0 * q * q0 * a + 2.0 * q0 * q0 * a2 - t * q00 + q * q00 * a2;
    }
    for (int i = 1; i < d; ++i) {
        const double g0i = -mass * state.qdot[i] * (2.0 * t / a3 + q0);
        out.g(0, i) = g0i;
        out.g(i, 0) = g0i;
        for (int j = 1; j < d; ++j) {
            out.g(i, j) = mass * mass * state.qdot[i] * state.qdot[j] / a2 + (i == j ? (t / a2 - q) * mass : 0.0);
        }
    }
    if (d == 2) {
        // Kahan's 2x2 determinant keeps the cancellation near T/a^2 = Q accurate
        const double w = out.g(0, 1) * out.g(1, 0);
        const double e = std::fma(-out.g(0, 1), out.g(1, 0), w);
        out.det = std::fma(out.g(0, 0), out.g(1, 1), -w) + e;
    } else {
        out.det = out.g.determinant();
    }
    if (!(std::abs(out.det) >= singular_det)) {
        throw SingularMetric("metric determinant " + std::to_string(out.det) + " below threshold");
    }
    out.g_inv = out.g.partialPivLu().solve(Mat::Identity(d, d));
    return out;
}

MetricSample metric(const ExtendedState& state, const FieldProbe& probe, double mass, MetricVariant variant)
{
    return metric(state, probe.sample(state.q), mass, variant);
}

namespace {

double half_lambda_sq(const Vec& qdot, double q, double mass)
{
    const double l = kinetic(qdot, mass) / qdot[0] - q * qdot[0];
    return 0.5 * l * l;
}

Vec velocity_steps(const Vec& qdot, double h)
{
    const double scale = qdot.cwiseAbs().maxCoeff();
    Vec steps(qdot.size());
    for (int i = 0; i < qdot.size(); ++i) {
        steps[i] = h * std::max(std::abs(qdot[i]), 1e-3 * scale);
    }
    return steps;
}

template <class F>
Mat fd_hessian(const Vec& x, const Vec& steps, F&& f)
{
    const int d = static_cast<int>(x.size());
    Mat h(d, d);
    const double f0 = f(x);
    for (int a = 0; a < d; ++a) {
        Vec xp = x, xm = x;
        xp[a] += steps[a];
        xm[a] -= steps[a];
        h(a, a) = (f(xp) - 2.0 * f0 + f(xm)) / (steps[a] * steps[a]);
        for (int b = a + 1; b < d; ++b) {
            Vec pp = x, pm = x, mp = x, mm = x;
            pp[a] += steps[a];
            pp[b] += steps[b];
            pm[a] += steps[a];
            pm[b] -= steps[b];
            mp[a] -= steps[a];
            mp[b] += steps[b];
            mm[a] -= steps[a];
            mm[b] -= steps[b];
            h(a, b) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * steps[a] * steps[b]);
            h(b, a) = h(a, b);
        }
    }
    return h;
}

// Richardson combination of the central stencils at steps and 2 steps: O(h^4).
template <class F>
Mat fd_hessian4(const Vec& x, const Vec& steps, F&& f)
{
    const Vec wide = 2.0 * steps;
    return (4.0 * fd_hessian(x, steps, f) - fd_hessian(x, wide, f)) / 3.0;
}

} // namespace

MetricSample metric_fd_oracle(const ExtendedState& state, const FieldProbe& probe, double mass, double h)
{
    check_state(state);
    const double q = probe.sample(state.q).q;
    MetricSample out;
    out.at = state;
    out.g = fd_hessian4(state.qdot, velocity_steps(state.qdot, h),
                       [&](const Vec& v) { return half_lambda_sq(v, q, mass); });
    out.det = out.g.determinant();
    out.g_inv = out.g.partialPivLu().solve(Mat::Identity(state.dim(), state.dim()));
    return out;
}

Vec lambda_velocity_gradient_fd(const ExtendedState& state, double q, double mass, double h)
{
    check_state(state);
    const Vec steps = velocity_steps(state.qdot, h);
    Vec grad(state.dim());
    for (int a = 0; a < state.dim(); ++a) {
        ExtendedState p = state, m = state;
        p.qdot[a] += steps[a];
        m.qdot[a] -= steps[a];
        grad[a] = (lambda_value(p, q, mass) - lambda_value(m, q, mass)) / (2.0 * steps[a]);
    }
    return grad;
}

Mat lambda_velocity_hessian_fd(const ExtendedState& state, double q, double mass, double h)
{
    check_state(state);
    return fd_hessian4(state.qdot, velocity_steps(state.qdot, h), [&](const Vec& v) {
        ExtendedState s = state;
        s.qdot = v;
        return lambda_value(s, q, mass);
    });
}

std::array<Mat, max_dim> metric_position_gradient(const ExtendedState& state, const FieldProbe& probe, double mass,
                                                  double h, PositionDerivative mode, MetricVariant variant)
{
    check_state(state);
    const int d = state.dim();
    std::array<Mat, max_dim> dg;
    if (mode == PositionDerivative::chain_rule && variant == MetricVariant::literal) {
        // g depends on position only through Q: dg/dQ = diag(2Q, -m, ..., -m).
        const ProbeSample f = probe.sample(state.q);
        for (int c = 0; c < d; ++c) {
            dg[static_cast<std::size_t>(c)] = Mat::Zero(d, d);
            dg[static_cast<std::size_t>(c)](0, 0) = 2.0 * f.q * f.dq[c];
            for (int i = 1; i < d; ++i) {
                dg[static_cast<std::size_t>(c)](i, i) = -mass * f.dq[c];
            }
        }
        return dg;
    }
    for (int c = 0; c < d; ++c) {
        const double hc = step_for(state.q[c], h);
        ExtendedState p = state, m = state;
        p.q[c] += hc;
        m.q[c] -= hc;
        dg[static_cast<std::size_t>(c)] =
            (metric(p, probe, mass, variant).g - metric(m, probe, mass, variant).g) / (2.0 * hc);
    }
    return dg;
}

ChristoffelSample christoffel(const ExtendedState& state, const FieldProbe& probe, double mass, double h,
                              MetricVariant variant, PositionDerivative mode)
{
    const int d = state.dim();
    const ProbeSample f = probe.sample(state.q);
    const MetricSample g = metric(state, f, mass, variant);
    const auto dg = metric_position_gradient(state, probe, mass, h, mode, variant);
    ChristoffelSample out;
    out.at = state;
    out.flagged = f.flagged;
    out.gamma.d = d;
    for (int b = 0; b < d; ++b) {
        for (int c = b; c < d; ++c) {
            for (int a = 0; a < d; ++a) {
                double sum = 0.0;
                for (int e = 0; e < d; ++e) {
                    sum += g.g_inv(a, e) * (dg[static_cast<std::size_t>(b)](e, c) +
                                            dg[static_cast<std::size_t>(c)](e, b) -
                                            dg[static_cast<std::size_t>(e)](b, c));
                }
                out.gamma(a, b, c) = 0.5 * sum;
                out.gamma(a, c, b) = 0.5 * sum;
            }
        }
    }
    return out;
}

Vec geodesic_rhs(const ExtendedState& state, const FieldProbe& probe, double mass, Forcing forcing,
                 MetricVariant variant)
{
    check_state(state);
    const int d = state.dim();
    Vec acc = Vec::Zero(d);
    if (state.param_kind == ParamKind::coordinate_time) {
        // Euler-Lagrange equations of Lambda - V at qdot^0 = 1: the velocity Hessian is m*I and
        // dLambda/dq^i = -dQ/dq^i, so m x'' = -d(Q + V)/dx.
        const ProbeSample f = probe.sample(state.q);
        for (int i = 1; i < d; ++i) {
            acc[i] = -(f.dq[i] + f.dv[i]) / mass;
        }
        return acc;
    }
    const ProbeSample f = probe.sample(state.q);
    const MetricSample g = metric(state, f, mass, variant);
    const ChristoffelSample gamma = christoffel(state, probe, mass, 1e-4, variant);
    const Vec& v = state.qdot;
    for (int a = 0; a < d; ++a) {
        double sum = 0.0;
        for (int b = 0; b < d; ++b) {
            for (int c = 0; c < d; ++c) {
                sum += gamma.gamma(a, b, c) * v[b] * v[c];
            }
        }
        acc[a] = -sum;
    }
    if (forcing == Forcing::variational) {
        const double lambda = lambda_value(state, f.q, mass);
        Vec e(d);
        e[0] = 0.0;
        for (int i = 1; i < d; ++i) {
            e[0] += v[i] * f.dv[i];
            e[i] = -v[0] * f.dv[i];
        }
        acc += lambda * (g.g_inv * e);
    } else {
        acc -= g.g_inv * f.dv;
    }
    return acc;
}

// ---------------------------------------------------------------- integration

namespace {

struct Derivative {
    Vec dq;
    Vec dqdot;
};

Derivative rhs(const ExtendedState& s, const FieldProbe& probe, double mass, const GeodesicOptions& o)
{
    return {s.qdot, geodesic_rhs(s, probe, mass, o.forcing, o.variant)};
}

ExtendedState advance(const ExtendedState& s, const Derivative& k, double h)
{
    ExtendedState out = s;
    out.q += h * k.dq;
    out.qdot += h * k.dqdot;
    return out;
}

ExtendedState rk4(const ExtendedState& s, double h, const FieldProbe& probe, double mass, const GeodesicOptions& o)
{
    const Derivative k1 = rhs(s, probe, mass, o);
    const Derivative k2 = rhs(advance(s, k1, 0.5 * h), probe, mass, o);
    const Derivative k3 = rhs(advance(s, k2, 0.5 * h), probe, mass, o);
    const Derivative k4 = rhs(advance(s, k3, h), probe, mass, o);
    ExtendedState out = s;
    out.q += h / 6.0 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    out.qdot += h / 6.0 * (k1.dqdot + 2.0 * k2.dqdot + 2.0 * k3.dqdot + k4.dqdot);
    out.param += h;
    return out;
}

bool finite_state(const ExtendedState& s)
{
    return s.q.allFinite() && s.qdot.allFinite();
}

bool inside(const ExtendedState& s, const GeodesicOptions& o)
{
    for (int i = 1; i < s.dim(); ++i) {
        if (!(s.q[i] >= o.x_min && s.q[i] <= o.x_max)) {
            return false;
        }
    }
    return true;
}

} // namespace

ExtendedTrajectory integrate_geodesic(const ExtendedState& init, const FieldProbe& probe, double mass,
                                      const GeodesicOptions& options)
{
    check_state(init);
    if (!(options.ds > 0.0) || !(options.max_dt > 0.0)) {
        throw std::invalid_argument("geodesic steps must be positive");
    }
    if (init.qdot[0] <= 0.0) {
        throw std::invalid_argument("geodesics start with qdot^0 > 0");
    }
    const int d = init.dim();
    ExtendedTrajectory traj;
    ExtendedState state = init;
    const ParamKind base_kind = init.param_kind;

    const ProbeSample f0 = probe.sample(state.q);
    const double lambda_init = lambda_value(state, f0.q, mass);
    traj.lambda0 = lambda_init;
    if (base_kind == ParamKind::arclength) {
        if (!(std::abs(lambda_init) > 0.0)) {
            throw SingularMetric("cannot normalize a null initial velocity");
        }
        traj.scale_factor = 1.0 / std::abs(lambda_init);
        state.qdot *= traj.scale_factor;
    } else if (base_kind == ParamKind::coordinate_time) {
        traj.scale_factor = 1.0 / state.qdot[0];
        state.qdot *= traj.scale_factor;
    }
    const double l_start = lambda_init / init.qdot[0];
    const double enter = options.bridge_threshold * std::abs(l_start);
    const double exit = 2.0 * enter;
    const double target_lambda = std::abs(lambda_value(state, f0.q, mass));

    auto reduced_l = [&](const ExtendedState& s, const ProbeSample& f) { return lambda_value(s, f.q, mass) / s.qdot[0]; };

    auto record = [&](const ExtendedState& s, bool bridging, bool flagged_step) {
        GeodesicSample gs;
        const ProbeSample f = probe.sample(s.q);
        gs.s = s.param;
        gs.q = s.q;
        gs.qdot = s.qdot;
        gs.qddot = geodesic_rhs(s, probe, mass, options.forcing, options.variant);
        gs.lambda = lambda_value(s, f.q, mass);
        gs.param_rate = bridging ? std::abs(gs.lambda / s.qdot[0]) : 1.0 / s.qdot[0];
        gs.kind = s.param_kind;
        gs.flags = static_cast<std::uint8_t>((f.flagged || flagged_step ? flag_node : 0) |
                                             (bridging ? flag_bridge : 0));
        traj.samples.push_back(gs);
        return gs;
    };

    bool bridging = false;
    double segment_lambda = lambda_value(state, f0.q, mass);
    std::size_t bridge_steps = 0;
    const double t_tol = 1e-9 * std::max(1.0, std::abs(options.t_max));

    try {
        record(state, false, false);
        while (true) {
            const double t = state.q[0];
            if (!(t < options.t_max - t_tol)) {
                traj.status = GeodesicStatus::completed;
                break;
            }
            if (state.param >= options.s_max) {
                traj.status = GeodesicStatus::reached_s_max;
                break;
            }
            const ProbeSample f = probe.sample(state.q);
            const double l = reduced_l(state, f);
            // the reduced coordinate-time equations stay regular where Lambda vanishes
            const bool regular = base_kind == ParamKind::coordinate_time;
            if (!regular && !bridging && std::abs(l) < enter) {
                if (options.crossing == LambdaCrossing::truncate) {
                    traj.status = GeodesicStatus::truncated_lambda;
                    break;
                }
                bridging = true;
                bridge_steps = 0;
                ++traj.bridges;
                state.qdot /= state.qdot[0];
                state.param_kind = ParamKind::coordinate_time;
            } else if (bridging && bridge_steps > 0 && std::abs(l) > exit) {
                bridging = false;
                state.qdot *= target_lambda / std::abs(l);
                state.param_kind = base_kind;
                segment_lambda = lambda_value(state, f.q, mass);
            }

            ExtendedState next;
            if (bridging) {
                const double dt = std::min(options.max_dt, options.t_max - t);
                next = rk4(state, dt, probe, mass, options);
                const ProbeSample fn = probe.sample(next.q);
                next.param = state.param + 0.5 * (std::abs(l) + std::abs(reduced_l(next, fn))) * dt;
                ++bridge_steps;
            } else {
                double h = std::min(options.ds, options.max_dt / state.qdot[0]);
                if (t + h * state.qdot[0] > options.t_max) {
                    h = (options.t_max - t) / state.qdot[0];
                }
                next = rk4(state, h, probe, mass, options);
            }
            if (!finite_state(next)) {
                traj.status = GeodesicStatus::non_finite;
                break;
            }
            if (!inside(next, options)) {
                traj.status = GeodesicStatus::left_grid;
                break;
            }
            state = next;
            const GeodesicSample gs = record(state, bridging, false);
            if (!bridging) {
                traj.max_lambda_drift = std::max(traj.max_lambda_drift, std::abs(gs.lambda - segment_lambda));
            }
        }
    } catch (const SingularMetric&) {
        traj.status = GeodesicStatus::singular_metric;
    } catch (const OutOfRange&) {
        traj.status = GeodesicStatus::left_grid;
    }
    (void)d;
    return traj;
}

// ---------------------------------------------------------------- trajectory interpolation

double ExtendedTrajectory::t_first() const
{
    return samples.empty() ? 0.0 : samples.front().q[0];
}

double ExtendedTrajectory::t_last() const
{
    return samples.empty() ? 0.0 : samples.back().q[0];
}

namespace {

double spatial_velocity(const GeodesicSample& s, int i)
{
    return s.qdot[i] / s.qdot[0];
}

double spatial_acceleration(const GeodesicSample& s, int i)
{
    const double a = s.qdot[0];
    return (s.qddot[i] * a - s.qdot[i] * s.qddot[0]) / (a * a * a);
}

ExtendedState build_state(const GeodesicSample& a, const GeodesicSample& b, double w, double dt, double t,
                          ParamKind kind)
{
    const int d = static_cast<int>(a.q.size());
    ExtendedState s;
    s.q = Vec(d);
    s.qdot = Vec(d);
    s.q[0] = t;
    const double rate = (1.0 - w) * a.param_rate + w * b.param_rate;
    s.qdot[0] = 1.0 / rate;
    for (int i = 1; i < d; ++i) {
        const double ua = spatial_velocity(a, i), ub = spatial_velocity(b, i);
        s.q[i] = interp::hermite(a.q[i], b.q[i], ua, ub, dt, w);
        const double u = interp::hermite(ua, ub, spatial_acceleration(a, i), spatial_acceleration(b, i), dt, w);
        s.qdot[i] = u * s.qdot[0];
    }
    s.param = interp::hermite(a.s, b.s, a.param_rate, b.param_rate, dt, w);
    s.param_kind = kind;
    return s;
}

} // namespace

std::optional<ExtendedState> ExtendedTrajectory::state_at_time(double t, std::uint8_t* flags, double* lambda) const
{
    // the last RK4 step lands on t_max only to within the loop tolerance
    const double slack = 1e-6 * std::max(1.0, std::abs(t));
    if (samples.size() < 2 || t < t_first() - slack || t > t_last() + slack) {
        return std::nullopt;
    }
    auto it = std::upper_bound(samples.begin(), samples.end(), t,
                               [](double v, const GeodesicSample& s) { return v < s.q[0]; });
    std::size_t k = static_cast<std::size_t>(it - samples.begin());
    k = std::clamp<std::size_t>(k, 1, samples.size() - 1) - 1;
    const auto& a = samples[k];
    const auto& b = samples[k + 1];
    const double dt = b.q[0] - a.q[0];
    const double w = dt > 0.0 ? (t - a.q[0]) / dt : 0.0;
    if (flags) {
        *flags = static_cast<std::uint8_t>(a.flags | b.flags);
    }
    if (lambda) {
        *lambda = (1.0 - w) * a.lambda + w * b.lambda;
    }
    const ParamKind kind = samples.front().kind;
    return build_state(a, b, w, dt, t, kind);
}

std::optional<ExtendedState> ExtendedTrajectory::state_at_param(double s, std::uint8_t* flags) const
{
    if (samples.size() < 2 || s < samples.front().s || s > samples.back().s) {
        return std::nullopt;
    }
    auto it = std::upper_bound(samples.begin(), samples.end(), s,
                               [](double v, const GeodesicSample& g) { return v < g.s; });
    std::size_t k = static_cast<std::size_t>(it - samples.begin());
    k = std::clamp<std::size_t>(k, 1, samples.size() - 1) - 1;
    const auto& a = samples[k];
    const auto& b = samples[k + 1];
    const double hs = b.s - a.s;
    const double w = hs > 0.0 ? (s - a.s) / hs : 0.0;
    const double t = interp::hermite(a.q[0], b.q[0], 1.0 / a.param_rate, 1.0 / b.param_rate, hs, w);
    if (flags) {
        *flags = static_cast<std::uint8_t>(a.flags | b.flags);
    }
    const double dt = b.q[0] - a.q[0];
    const double wt = dt > 0.0 ? std::clamp((t - a.q[0]) / dt, 0.0, 1.0) : 0.0;
    ExtendedState out = build_state(a, b, wt, dt, t, samples.front().kind);
    out.param = s;
    return out;
}

} // namespace qgeo::finsler

#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qgeo/field_history.hpp"
#include "qgeo/field_solver.hpp"

namespace qgeo::finsler {

// Extended configuration space (q^0 = t, q^1..q^n). One particle in up to three dimensions.
inline constexpr int max_dim = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, max_dim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, max_dim, max_dim>;

enum class ParamKind { tau, arclength, coordinate_time };
// variational: forcing from the Euler-Lagrange equations of Lambda - V qdot^0; keeps Lambda constant.
// paper_literal: qddot + Gamma qdot qdot = -g^{mu nu} d_nu V, kept for comparison.
enum class Forcing { variational, paper_literal };
// literal: Q_0 = Q_00 = 0 in the metric. dqdt: Q_0 = dQ/dt, Q_00 = d2Q/dt2 (sensitivity only).
enum class MetricVariant { literal, dqdt };
enum class LambdaCrossing { bridge, truncate };

ParamKind parse_param_kind(const std::string& s);
Forcing parse_forcing(const std::string& s);
MetricVariant parse_metric_variant(const std::string& s);
LambdaCrossing parse_lambda_crossing(const std::string& s);
std::string to_string(ParamKind v);
std::string to_string(Forcing v);
std::string to_string(MetricVariant v);
std::string to_string(LambdaCrossing v);

struct ExtendedState {
    Vec q;
    Vec qdot;
    double param = 0.0;
    ParamKind param_kind = ParamKind::arclength;

    int dim() const { return static_cast<int>(q.size()); }
    static ExtendedState make(double t, double x, double qdot0, double qdot1,
                              ParamKind kind = ParamKind::arclength);
};

// Q, V and their position derivatives at one point of extended space.
struct ProbeSample {
    double q = 0.0;
    Vec dq;   // dQ/dq^alpha
    Mat d2q;  // d2Q/dq^alpha dq^beta
    double v = 0.0;
    Vec dv;   // dV/dq^alpha, with dV/dq^0 = 0
    bool flagged = false;
};

class FieldProbe {
public:
    virtual ~FieldProbe() = default;
    virtual int dim() const = 0;
    virtual ProbeSample sample(const Vec& position) const = 0;
};

// Grid fields from a propagation run (d = 2).
class GridFieldProbe : public FieldProbe {
public:
    GridFieldProbe(std::shared_ptr<const polar::FieldHistory> history, field::PotentialSpec potential);
    int dim() const override { return 2; }
    ProbeSample sample(const Vec& position) const override;
    const polar::FieldHistory& history() const { return *history_; }

private:
    std::shared_ptr<const polar::FieldHistory> history_;
    field::PotentialSpec potential_;
};

// Constant Q with an optional one-dimensional potential (d = 2).
class ConstantQProbe : public FieldProbe {
public:
    explicit ConstantQProbe(double q, field::PotentialSpec potential = field::PotentialSpec::free_particle());
    int dim() const override { return 2; }
    ProbeSample sample(const Vec& position) const override;

private:
    double q_;
    field::PotentialSpec potential_;
};

// Closed-form Q of a freely spreading Gaussian packet |phi|^2 ~ exp(-(x - q_c - v t)^2 / (2 sigma_t^2)).
class FreeGaussianProbe : public FieldProbe {
public:
    FreeGaussianProbe(double mass, double sigma0, double q_c, double velocity);
    int dim() const override { return 2; }
    ProbeSample sample(const Vec& position) const override;
    double sigma(double t) const;
    // Exact Bohmian path starting at x0.
    double bohmian_position(double x0, double t) const;
    double bohmian_velocity(double x0, double t) const;

private:
    double mass_, sigma0_, q_c_, velocity_, tau_;
};

struct MetricSample {
    Mat g;
    Mat g_inv;
    double det = 0.0;
    ExtendedState at;
};

struct Tensor3 {
    int d = 0;
    std::array<double, max_dim * max_dim * max_dim> data{};
    double& operator()(int a, int b, int c) { return data[static_cast<std::size_t>((a * d + b) * d + c)]; }
    double operator()(int a, int b, int c) const { return data[static_cast<std::size_t>((a * d + b) * d + c)]; }
};

struct ChristoffelSample {
    // gamma(alpha, beta, gamma) = Gamma^alpha_{beta gamma}
    Tensor3 gamma;
    ExtendedState at;
    bool flagged = false;
};

inline constexpr double singular_det = 1e-12;

// Lambda = T / qdot^0 - Q qdot^0 with T = (m/2) sum_i (qdot^i)^2.
double lambda_value(const ExtendedState& state, const FieldProbe& probe, double mass);
double lambda_value(const ExtendedState& state, double q, double mass);

// Closed-form Hessian of Lambda^2/2 in the velocities (Q_0 and Q_00 dropped unless variant is dqdt).
// Throws SingularMetric when |det g| < 1e-12.
MetricSample metric(const ExtendedState& state, const FieldProbe& probe, double mass,
                    MetricVariant variant = MetricVariant::literal);
MetricSample metric(const ExtendedState& state, const ProbeSample& field, double mass,
                    MetricVariant variant = MetricVariant::literal);

// Central-difference Hessian of Lambda^2/2 with relative velocity step h.
MetricSample metric_fd_oracle(const ExtendedState& state, const FieldProbe& probe, double mass, double h);

// Velocity derivatives of Lambda by central differences (Hessian Richardson-extrapolated); used by the identity checks.
Vec lambda_velocity_gradient_fd(const ExtendedState& state, double q, double mass, double h);
Mat lambda_velocity_hessian_fd(const ExtendedState& state, double q, double mass, double h);

enum class PositionDerivative { chain_rule, central_difference };

// dg_{ab}/dq^c at fixed velocities. chain_rule uses the probe's dQ and is exact for the literal metric.
std::array<Mat, max_dim> metric_position_gradient(const ExtendedState& state, const FieldProbe& probe, double mass,
                                                  double h, PositionDerivative mode,
                                                  MetricVariant variant = MetricVariant::literal);

// Gamma^a_{bc} = g^{ad} (d_b g_{dc} + d_c g_{db} - d_d g_{bc}) / 2 for the literal metric, whose
// Cartan tensor contracts to zero against qdot.
ChristoffelSample christoffel(const ExtendedState& state, const FieldProbe& probe, double mass, double h = 1e-4,
                              MetricVariant variant = MetricVariant::literal,
                              PositionDerivative mode = PositionDerivative::chain_rule);

// Second derivative of the extended coordinates. For coordinate_time states this is the reduced
// Euler-Lagrange system with qdot^0 = 1.
Vec geodesic_rhs(const ExtendedState& state, const FieldProbe& probe, double mass,
                 Forcing forcing = Forcing::variational, MetricVariant variant = MetricVariant::literal);

enum class GeodesicStatus { completed, reached_s_max, left_grid, truncated_lambda, singular_metric, non_finite };
std::string to_string(GeodesicStatus status);

enum SampleFlag : std::uint8_t { flag_node = 1, flag_bridge = 2 };

struct GeodesicSample {
    double s = 0.0;
    Vec q;
    Vec qdot;
    Vec qddot;
    double lambda = 0.0;
    // ds/dt along the curve; 1/qdot^0 in arclength or tau gauge, |Lambda/qdot^0| while bridging.
    double param_rate = 0.0;
    std::uint8_t flags = 0;
    ParamKind kind = ParamKind::arclength;
};

struct ExtendedTrajectory {
    int id = 0;
    std::vector<GeodesicSample> samples;
    GeodesicStatus status = GeodesicStatus::completed;
    double scale_factor = 1.0;
    double lambda0 = 0.0;
    std::size_t bridges = 0;
    // Largest |Lambda - Lambda_segment_start| over gauge segments.
    double max_lambda_drift = 0.0;

    double t_first() const;
    double t_last() const;
    // Interpolated state at coordinate time t with |Lambda| = 1 velocities (arclength trajectories).
    // `lambda` receives the recorded Lambda interpolated linearly.
    std::optional<ExtendedState> state_at_time(double t, std::uint8_t* flags = nullptr,
                                               double* lambda = nullptr) const;
    // Interpolated state at parameter value s.
    std::optional<ExtendedState> state_at_param(double s, std::uint8_t* flags = nullptr) const;
};

struct GeodesicOptions {
    double ds = 0.05;
    double s_max = std::numeric_limits<double>::infinity();
    double t_max = std::numeric_limits<double>::infinity();
    double max_dt = 0.5;
    Forcing forcing = Forcing::variational;
    MetricVariant variant = MetricVariant::literal;
    LambdaCrossing crossing = LambdaCrossing::bridge;
    // Enter the coordinate-time bridge when |Lambda/qdot^0| drops below this fraction of its start value.
    double bridge_threshold = 0.002;
    double x_min = -std::numeric_limits<double>::infinity();
    double x_max = std::numeric_limits<double>::infinity();
};

// RK4 in the state's parameter. Arclength states are rescaled to |Lambda| = 1 first.
ExtendedTrajectory integrate_geodesic(const ExtendedState& init, const FieldProbe& probe, double mass,
                                      const GeodesicOptions& options);

} // namespace qgeo::finsler

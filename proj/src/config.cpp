#include "qgeo/config.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "qgeo/errors.hpp"

namespace qgeo::experiment {

std::string to_string(Sampling s)
{
    return s == Sampling::quantile ? "quantile" : "seeded_random";
}

std::string to_string(InitMode m)
{
    return m == InitMode::bohmian_consistent ? "bohmian-consistent" : "paper-literal";
}

std::string to_string(OutputFormat f)
{
    return f == OutputFormat::csv ? "csv" : "json";
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
        throw ConfigError("config key '" + key + "': '" + v + "' is not a finite number");
    }
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError("config key '" + key + "': '" + v + "' is not a non-negative integer");
    }
    return out;
}

template <class F>
auto wrap(const std::string& key, F&& f)
{
    try {
        return f();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

std::string num(double v)
{
    return fmt::format("{}", v);
}

bool is_multiple(double value, double step)
{
    const double r = value / step;
    return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, std::abs(r));
}

std::vector<double> schedule(double start, double every, double end)
{
    std::vector<double> out;
    if (!(every > 0.0)) {
        return out;
    }
    for (long j = 0;; ++j) {
        const double t = start + static_cast<double>(j) * every;
        if (t > end + 1e-9 * std::max(1.0, end)) {
            break;
        }
        out.push_back(t);
    }
    return out;
}

} // namespace

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig c;
    double barrier_omega = 0.0;
    double barrier_center = 0.0;
    std::string barrier_kind = "eckart";
    std::size_t grid_n = c.grid.n_points;
    double x_min = c.grid.x_min;
    double x_max = c.grid.x_max;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    auto dbl = [](double& target) { return Setter([&target](const std::string& k, const std::string& v) { target = to_double(k, v); }); };
    auto size = [](std::size_t& target) {
        return Setter([&target](const std::string& k, const std::string& v) { target = static_cast<std::size_t>(to_uint(k, v)); });
    };
    const std::map<std::string, Setter> setters = {
        {"grid.n", size(grid_n)},
        {"grid.x_min", dbl(x_min)},
        {"grid.x_max", dbl(x_max)},
        {"packet.beta", dbl(c.beta)},
        {"packet.k", dbl(c.k)},
        {"packet.q_c", dbl(c.q_c)},
        {"barrier.kind", [&](const std::string&, const std::string& v) { barrier_kind = v; }},
        {"barrier.V0", dbl(c.barrier.v0)},
        {"barrier.a", dbl(c.barrier.a)},
        {"barrier.q_p", dbl(c.barrier.q_p)},
        {"barrier.omega", dbl(barrier_omega)},
        {"barrier.center", dbl(barrier_center)},
        {"mass", dbl(c.mass)},
        {"dt", dbl(c.dt)},
        {"t_final", dbl(c.t_final)},
        {"ensemble.n_traj", size(c.n_traj)},
        {"ensemble.sampling",
         [&](const std::string& k, const std::string& v) {
             if (v == "quantile") {
                 c.sampling = Sampling::quantile;
             } else if (v == "seeded_random") {
                 c.sampling = Sampling::seeded_random;
             } else {
                 throw ConfigError("config key '" + k + "': expected quantile or seeded_random");
             }
         }},
        {"ensemble.seed", [&](const std::string& k, const std::string& v) { c.seed = to_uint(k, v); }},
        {"init_mode",
         [&](const std::string& k, const std::string& v) {
             if (v == "bohmian-consistent") {
                 c.init_mode = InitMode::bohmian_consistent;
             } else if (v == "paper-literal") {
                 c.init_mode = InitMode::paper_literal;
             } else {
                 throw ConfigError("config key '" + k + "': expected bohmian-consistent or paper-literal");
             }
         }},
        {"snapshot_start", dbl(c.snapshot_start)},
        {"snapshot_every", dbl(c.snapshot_every)},
        {"front_every", dbl(c.front_every)},
        {"fronts.tau_every", dbl(c.tau_front_every)},
        {"curvature.every", dbl(c.curvature_every)},
        {"field.table_every", dbl(c.table_every)},
        {"trajectory.dt", dbl(c.trajectory_dt)},
        {"polar.node_threshold", dbl(c.node_threshold)},
        {"finsler.fd_step", dbl(c.fd_step)},
        {"finsler.appendixC_Q0",
         [&](const std::string& k, const std::string& v) {
             c.geodesic.variant = wrap(k, [&] { return finsler::parse_metric_variant(v); });
         }},
        {"geodesic.ds", dbl(c.geodesic.ds)},
        {"geodesic.max_dt", dbl(c.geodesic.max_dt)},
        {"geodesic.bridge_threshold", dbl(c.geodesic.bridge_threshold)},
        {"geodesic.forcing",
         [&](const std::string& k, const std::string& v) {
             c.geodesic.forcing = wrap(k, [&] { return finsler::parse_forcing(v); });
         }},
        {"geodesic.lambda_crossing",
         [&](const std::string& k, const std::string& v) {
             c.geodesic.crossing = wrap(k, [&] { return finsler::parse_lambda_crossing(v); });
         }},
        {"output.dir", [&](const std::string&, const std::string& v) { c.out_dir = v; }},
        {"output.format",
         [&](const std::string& k, const std::string& v) {
             if (v == "csv") {
                 c.format = OutputFormat::csv;
             } else if (v == "json") {
                 c.format = OutputFormat::json;
             } else {
                 throw ConfigError("config key '" + k + "': expected csv or json");
             }
         }},
        {"output.export_every", dbl(c.export_every)},
        {"validation.hj_tolerance", dbl(c.hj_tolerance)},
        {"threads", size(c.threads)},
    };
    const std::map<std::string, std::string> aliases = {
        {"n_traj", "ensemble.n_traj"}, {"sampling", "ensemble.sampling"}, {"seed", "ensemble.seed"},
        {"appendixC_Q0", "finsler.appendixC_Q0"}, {"output", "output.dir"},
    };

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (const auto a = aliases.find(key); a != aliases.end()) {
            key = a->second;
        }
        const auto it = setters.find(key);
        if (it == setters.end()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
        if (value.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty value for '" + key + "'");
        }
        it->second(key, value);
    }

    c.grid = wrap("grid", [&] { return Grid1D::make(grid_n, x_min, x_max); });
    const auto kind = wrap("barrier.kind", [&] { return field::parse_potential_kind(barrier_kind); });
    switch (kind) {
    case field::PotentialKind::eckart:
        c.barrier = wrap("barrier", [&] { return field::PotentialSpec::eckart(c.barrier.v0, c.barrier.a, c.barrier.q_p); });
        break;
    case field::PotentialKind::harmonic:
        c.barrier = wrap("barrier", [&] { return field::PotentialSpec::harmonic(barrier_omega, c.mass, barrier_center); });
        break;
    case field::PotentialKind::free:
        c.barrier = field::PotentialSpec::free_particle();
        break;
    case field::PotentialKind::tabulated:
        throw ConfigError("barrier.kind=tabulated is only available through the library API");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void ExperimentConfig::validate() const
{
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) {
            throw ConfigError(msg);
        }
    };
    require(beta > 0.0, "packet.beta must be positive");
    require(mass > 0.0, "mass must be positive");
    require(dt > 0.0, "dt must be positive");
    require(t_final > 0.0, "t_final must be positive");
    require(t_final >= snapshot_every, "t_final must be at least snapshot_every");
    require(n_traj >= 1, "n_traj must be at least 1");
    require(snapshot_every > 0.0 && snapshot_start >= 0.0, "snapshot schedule must be positive");
    require(front_every > 0.0 && tau_front_every > 0.0 && curvature_every > 0.0, "front and curvature spacing must be positive");
    require(table_every > 0.0 && is_multiple(table_every, dt), "field.table_every must be a positive multiple of dt");
    require(is_multiple(t_final, table_every), "t_final must be a multiple of field.table_every");
    require(t_final >= 2.0 * table_every, "t_final must cover at least three field tables");
    require(is_multiple(snapshot_start, dt) && is_multiple(snapshot_every, dt), "snapshot times must fall on solver steps");
    require(trajectory_dt > 0.0 && is_multiple(t_final, trajectory_dt), "t_final must be a multiple of trajectory.dt");
    require(node_threshold > 0.0 && node_threshold < 1.0, "polar.node_threshold must lie in (0, 1)");
    require(fd_step > 0.0 && fd_step < 1.0, "finsler.fd_step must lie in (0, 1)");
    require(geodesic.ds > 0.0 && geodesic.max_dt > 0.0, "geodesic steps must be positive");
    require(geodesic.bridge_threshold > 0.0 && geodesic.bridge_threshold < 0.5,
            "geodesic.bridge_threshold must lie in (0, 0.5)");
    require(export_every > 0.0, "output.export_every must be positive");
    require(hj_tolerance > 0.0, "validation.hj_tolerance must be positive");
    require(threads >= 1, "threads must be at least 1");
}

std::map<std::string, std::string> ExperimentConfig::echo() const
{
    std::map<std::string, std::string> e;
    e["grid.n"] = std::to_string(grid.n_points);
    e["grid.x_min"] = num(grid.x_min);
    e["grid.x_max"] = num(grid.x_max);
    e["packet.beta"] = num(beta);
    e["packet.k"] = num(k);
    e["packet.q_c"] = num(q_c);
    e["barrier.kind"] = field::to_string(barrier.kind);
    if (barrier.kind == field::PotentialKind::eckart) {
        e["barrier.V0"] = num(barrier.v0);
        e["barrier.a"] = num(barrier.a);
        e["barrier.q_p"] = num(barrier.q_p);
    } else if (barrier.kind == field::PotentialKind::harmonic) {
        e["barrier.omega"] = num(barrier.omega);
        e["barrier.center"] = num(barrier.center);
    }
    e["mass"] = num(mass);
    e["dt"] = num(dt);
    e["t_final"] = num(t_final);
    e["ensemble.n_traj"] = std::to_string(n_traj);
    e["ensemble.sampling"] = to_string(sampling);
    e["ensemble.seed"] = std::to_string(seed);
    e["init_mode"] = to_string(init_mode);
    e["snapshot_start"] = num(snapshot_start);
    e["snapshot_every"] = num(snapshot_every);
    e["front_every"] = num(front_every);
    e["fronts.tau_every"] = num(tau_front_every);
    e["curvature.every"] = num(curvature_every);
    e["field.table_every"] = num(table_every);
    e["trajectory.dt"] = num(trajectory_dt);
    e["polar.node_threshold"] = num(node_threshold);
    e["finsler.fd_step"] = num(fd_step);
    e["finsler.appendixC_Q0"] = finsler::to_string(geodesic.variant);
    e["geodesic.ds"] = num(geodesic.ds);
    e["geodesic.max_dt"] = num(geodesic.max_dt);
    e["geodesic.bridge_threshold"] = num(geodesic.bridge_threshold);
    e["geodesic.forcing"] = finsler::to_string(geodesic.forcing);
    e["geodesic.lambda_crossing"] = finsler::to_string(geodesic.crossing);
    e["output.dir"] = out_dir.string();
    e["output.format"] = to_string(format);
    e["output.export_every"] = num(export_every);
    e["validation.hj_tolerance"] = num(hj_tolerance);
    e["threads"] = std::to_string(threads);
    return e;
}

std::vector<double> ExperimentConfig::snapshot_times() const
{
    return schedule(snapshot_start, snapshot_every, t_final);
}

std::vector<double> ExperimentConfig::front_times() const
{
    return schedule(0.0, front_every, t_final);
}

std::vector<double> ExperimentConfig::curvature_times() const
{
    return schedule(curvature_every, curvature_every, t_final);
}

} // namespace qgeo::experiment

#include "qgeo/exports.hpp"

#include <fftw3.h>
#include <fmt/format.h>
#include <openssl/evp.h>

#include <Eigen/Core>

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "qgeo/errors.hpp"
#include "qgeo/version.hpp"

namespace qgeo::experiment {

std::string format_number(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return fmt::format("{}", v);
}

TableWriter::TableWriter(const std::filesystem::path& path, std::vector<std::string> columns, OutputFormat format)
    : columns_(columns.size()), format_(format)
{
    file_ = std::fopen(path.string().c_str(), "wb");
    if (!file_) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    if (format_ == OutputFormat::csv) {
        std::string header;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            header += (i ? "," : "") + columns[i];
        }
        std::fputs((header + "\n").c_str(), file_);
    } else {
        std::fputs(("{\"columns\":" + nlohmann::json(columns).dump() + ",\"rows\":[").c_str(), file_);
    }
}

TableWriter::~TableWriter()
{
    if (file_) {
        close();
    }
}

void TableWriter::row(std::span<const double> values)
{
    if (values.size() != columns_) {
        throw std::invalid_argument("row width does not match header");
    }
    std::string line;
    if (format_ == OutputFormat::csv) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            line += (i ? "," : "") + format_number(values[i]);
        }
        line += "\n";
    } else {
        line = rows_ ? ",\n[" : "\n[";
        for (std::size_t i = 0; i < values.size(); ++i) {
            line += (i ? "," : "") + (std::isfinite(values[i]) ? format_number(values[i]) : std::string("null"));
        }
        line += "]";
    }
    std::fputs(line.c_str(), file_);
    ++rows_;
}

void TableWriter::close()
{
    if (!file_) {
        return;
    }
    if (format_ == OutputFormat::json) {
        std::fputs("\n]}\n", file_);
    }
    std::fclose(file_);
    file_ = nullptr;
}

std::string sha256_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read " + path.string());
    }
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex += fmt::format("{:02x}", digest[i]);
    }
    return hex;
}

nlohmann::json version_info()
{
    return {
        {"qgeo", std::string(version_string)},
        {"fftw", std::string(fftw_version)},
        {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION)},
        {"compiler", std::string(__VERSION__)},
    };
}

Manifest::Manifest(std::string command, const ExperimentConfig& config)
    : command_(std::move(command)), config_(config)
{
}

void Manifest::add_file(const std::filesystem::path& out_dir, const std::string& relative, const std::string& kind)
{
    (void)out_dir;
    files_.push_back({relative, kind});
}

void Manifest::set_status(const std::string& status, const std::string& error)
{
    status_ = status;
    error_ = error;
}

std::filesystem::path Manifest::write(const std::filesystem::path& out_dir) const
{
    nlohmann::json j;
    j["command"] = command_;
    j["status"] = status_;
    if (!error_.empty()) {
        j["error"] = error_;
    }
    j["config"] = config_.echo();
    j["versions"] = version_info();
    j["wall_time_seconds"] = wall_seconds_;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : files_) {
        const auto full = out_dir / f.path;
        nlohmann::json entry{{"path", f.path}, {"kind", f.kind}};
        if (std::filesystem::exists(full)) {
            entry["bytes"] = std::filesystem::file_size(full);
            entry["sha256"] = sha256_file(full);
        } else {
            entry["missing"] = true;
        }
        files.push_back(entry);
    }
    j["files"] = files;
    for (const auto& [k, v] : extra_.items()) {
        j[k] = v;
    }
    const auto path = out_dir / "manifest.json";
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << j.dump(2) << "\n";
    return path;
}

namespace {

std::string ext(OutputFormat f)
{
    return f == OutputFormat::csv ? ".csv" : ".json";
}

std::string time_tag(double t)
{
    return fmt::format("{:07.1f}", t);
}

bool on_export_grid(double t, double every)
{
    const double r = t / every;
    return std::abs(r - std::round(r)) < 1e-9 * std::max(1.0, r);
}

} // namespace

void export_snapshots(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest)
{
    const auto& cfg = result.config;
    const auto echo = cfg.echo();
    for (const auto& kept : result.field.kept) {
        const auto& f = kept.field;
        const std::string tag = time_tag(f.time);
        const std::string psi_name = "psi_t" + tag + ext(cfg.format);
        {
            TableWriter w(out_dir / psi_name, {"x", "re_psi", "im_psi", "abs_psi"}, cfg.format);
            for (std::size_t i = 0; i < f.grid.n_points; ++i) {
                w.row({f.grid.x(i), f.values[i].real(), f.values[i].imag(), std::abs(f.values[i])});
            }
        }
        manifest.add_file(out_dir, psi_name, "field_snapshot");

        double n = 0.0;
        for (const auto& v : f.values) {
            n += std::norm(v);
        }
        nlohmann::json side{{"time", f.time},
                            {"file", psi_name},
                            {"grid", {{"n", f.grid.n_points}, {"x_min", f.grid.x_min}, {"x_max", f.grid.x_max}}},
                            {"norm", n * f.grid.dx()},
                            {"parameters", echo}};
        const std::string side_name = "psi_t" + tag + ".meta.json";
        std::ofstream(out_dir / side_name) << side.dump(2) << "\n";
        manifest.add_file(out_dir, side_name, "field_snapshot_meta");

        const std::string polar_name = "polar_t" + tag + ext(cfg.format);
        {
            TableWriter w(out_dir / polar_name, {"x", "A", "S", "Q", "node_mask"}, cfg.format);
            for (std::size_t i = 0; i < f.grid.n_points; ++i) {
                w.row({f.grid.x(i), kept.polar.amplitude[i], kept.polar.action[i], kept.table.q[i],
                       static_cast<double>(kept.table.node_mask[i])});
            }
        }
        manifest.add_file(out_dir, polar_name, "polar_snapshot");
    }
}

void export_trajectories(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest)
{
    const auto& cfg = result.config;
    auto write = [&](const std::vector<bohmian::TrajectoryRecord>& recs, const std::string& stem, const std::string& kind) {
        const std::string name = stem + ext(cfg.format);
        TableWriter w(out_dir / name, {"id", "t", "x", "v", "node_flag"}, cfg.format);
        for (const auto& r : recs) {
            for (const auto& s : r.samples) {
                if (on_export_grid(s.t, cfg.export_every)) {
                    w.row({static_cast<double>(r.id), s.t, s.x, s.v, s.node_flag ? 1.0 : 0.0});
                }
            }
        }
        w.close();
        manifest.add_file(out_dir, name, kind);
    };
    write(result.first_order, "trajectories_first_order", "bohmian_first_order");
    write(result.second_order, "trajectories_second_order", "bohmian_second_order");
}

void export_geodesics(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest)
{
    const auto& cfg = result.config;
    const std::string name = "geodesics" + ext(cfg.format);
    TableWriter w(out_dir / name, {"id", "s", "t", "q1", "qdot0", "qdot1", "lambda", "node_flag"}, cfg.format);
    for (const auto& traj : result.geodesics) {
        if (traj.samples.empty()) {
            continue;
        }
        // Rows at the export spacing in coordinate time.
        const double t0 = traj.t_first();
        const double t1 = traj.t_last();
        for (long j = 0;; ++j) {
            const double t = t0 + static_cast<double>(j) * cfg.export_every;
            if (t > t1 + 1e-6 * std::max(1.0, t1)) {
                break;
            }
            std::uint8_t flags = 0;
            double lambda = 0.0;
            const auto s = traj.state_at_time(t, &flags, &lambda);
            if (!s) {
                continue;
            }
            w.row({static_cast<double>(traj.id), s->param, s->q[0], s->q[1], s->qdot[0], s->qdot[1], lambda,
                   static_cast<double>(flags)});
        }
    }
    w.close();
    manifest.add_file(out_dir, name, "geodesics");
}

void export_curvature(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest)
{
    const auto& cfg = result.config;
    const std::string name = "curvature" + ext(cfg.format);
    TableWriter w(out_dir / name, {"t", "id", "q1", "R", "trusted"}, cfg.format);
    for (const auto& row : result.curvature) {
        w.row({row.t, static_cast<double>(row.id), row.q1, row.r, row.trusted ? 1.0 : 0.0});
    }
    w.close();
    manifest.add_file(out_dir, name, "curvature");
}

void export_fronts_files(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest)
{
    const auto& cfg = result.config;
    auto write = [&](const std::vector<LineFront>& fronts, const std::string& stem,
                     std::vector<std::string> columns, const std::string& kind) {
        const std::string name = stem + ext(cfg.format);
        TableWriter w(out_dir / name, std::move(columns), cfg.format);
        for (const auto& f : fronts) {
            for (const auto& p : f.points) {
                w.row({f.label, static_cast<double>(p.id), p.q1, p.value, static_cast<double>(p.flags)});
            }
        }
        w.close();
        manifest.add_file(out_dir, name, kind);
    };
    write(result.fronts.q1_qdot1, "fronts_q1_qdot1", {"t", "id", "q1", "qdot1", "node_flag"}, "fronts_q1_qdot1");
    write(result.fronts.q1_tau, "fronts_q1_tau", {"t", "id", "q1", "tau", "node_flag"}, "fronts_q1_tau");
    write(result.fronts.q1_q0, "fronts_q1_q0", {"tau", "id", "q1", "q0", "node_flag"}, "fronts_q1_q0");
}

nlohmann::json run_summary(const ExperimentResult& result)
{
    nlohmann::json j;
    j["field"] = {{"max_norm_error", result.field.max_norm_error},
                  {"steps", result.field.steps},
                  {"frames", result.field.history ? result.field.history->size() : 0},
                  {"stored_points", result.field.history ? result.field.history->stored_points() : 0}};

    auto count_flags = [](const std::vector<bohmian::TrajectoryRecord>& recs) {
        std::size_t n = 0;
        for (const auto& r : recs) {
            for (const auto& s : r.samples) {
                n += s.node_flag ? 1 : 0;
            }
        }
        return n;
    };
    std::size_t geo_node = 0, geo_bridge = 0;
    double drift_max = 0.0, drift_sum = 0.0;
    std::size_t bridges = 0;
    std::map<std::string, std::size_t> status;
    nlohmann::json scale = nlohmann::json::array();
    for (const auto& g : result.geodesics) {
        for (const auto& s : g.samples) {
            geo_node += (s.flags & finsler::flag_node) ? 1 : 0;
            geo_bridge += (s.flags & finsler::flag_bridge) ? 1 : 0;
        }
        drift_max = std::max(drift_max, g.max_lambda_drift);
        drift_sum += g.max_lambda_drift;
        bridges += g.bridges;
        ++status[finsler::to_string(g.status)];
        scale.push_back(g.scale_factor);
    }
    std::size_t untrusted = 0;
    for (const auto& row : result.curvature) {
        untrusted += row.trusted ? 0 : 1;
    }
    std::map<std::string, std::size_t> bstatus;
    for (const auto& r : result.first_order) {
        ++bstatus["first_order." + bohmian::to_string(r.status)];
    }
    for (const auto& r : result.second_order) {
        ++bstatus["second_order." + bohmian::to_string(r.status)];
    }
    j["node_flags"] = {{"first_order_samples", count_flags(result.first_order)},
                       {"second_order_samples", count_flags(result.second_order)},
                       {"geodesic_node_samples", geo_node},
                       {"geodesic_bridge_samples", geo_bridge},
                       {"curvature_untrusted_rows", untrusted}};
    j["lambda_drift"] = {{"max", drift_max},
                         {"mean", result.geodesics.empty() ? 0.0 : drift_sum / static_cast<double>(result.geodesics.size())}};
    j["geodesics"] = {{"status_counts", status}, {"bridges", bridges}, {"arclength_scale_factors", scale}};
    j["trajectories"] = {{"status_counts", bstatus}};
    return j;
}

} // namespace qgeo::experiment

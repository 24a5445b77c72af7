#pragma once

#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "qgeo/config.hpp"
#include "qgeo/experiment.hpp"

namespace qgeo::experiment {

// Streams one table as CSV (header line + rows) or as JSON {"columns": [...], "rows": [[...], ...]}.
// Numbers use the shortest round-trip representation, so identical runs give identical bytes.
class TableWriter {
public:
    TableWriter(const std::filesystem::path& path, std::vector<std::string> columns, OutputFormat format);
    ~TableWriter();
    TableWriter(const TableWriter&) = delete;
    TableWriter& operator=(const TableWriter&) = delete;

    void row(std::span<const double> values);
    void row(std::initializer_list<double> values) { row(std::span<const double>(values.begin(), values.size())); }
    void close();

private:
    std::FILE* file_ = nullptr;
    std::size_t columns_ = 0;
    std::size_t rows_ = 0;
    OutputFormat format_;
};

std::string sha256_file(const std::filesystem::path& path);
std::string format_number(double v);

struct ExportedFile {
    std::string path;  // relative to the output directory
    std::string kind;
};

class Manifest {
public:
    Manifest(std::string command, const ExperimentConfig& config);

    void add_file(const std::filesystem::path& out_dir, const std::string& relative, const std::string& kind);
    nlohmann::json& extra() { return extra_; }
    void set_status(const std::string& status, const std::string& error = {});
    void set_wall_time(double seconds) { wall_seconds_ = seconds; }
    // Hashes every registered file and writes manifest.json into out_dir.
    std::filesystem::path write(const std::filesystem::path& out_dir) const;

private:
    std::string command_;
    ExperimentConfig config_;
    std::vector<ExportedFile> files_;
    nlohmann::json extra_ = nlohmann::json::object();
    std::string status_ = "ok";
    std::string error_;
    double wall_seconds_ = 0.0;
};

nlohmann::json version_info();

// Writers for each export family; each registers what it wrote with the manifest.
void export_snapshots(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest);
void export_trajectories(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest);
void export_geodesics(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest);
void export_curvature(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest);
void export_fronts_files(const ExperimentResult& result, const std::filesystem::path& out_dir, Manifest& manifest);
// Lambda drift, node-flag counts and geodesic status counts.
nlohmann::json run_summary(const ExperimentResult& result);

} // namespace qgeo::experiment

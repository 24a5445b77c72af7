#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "helpers.hpp"
#include "json.hpp"
#include "qgeo/exports.hpp"

using namespace qgeo;
using namespace qgeo::experiment;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& p)
{
    return nlohmann::json::parse(slurp(p));
}

ExperimentConfig small_config(const fs::path& out)
{
    auto c = testing_util::free_config(200.0);
    c.barrier = field::PotentialSpec::eckart(0.0365, 0.4, 7.0);
    c.n_traj = 8;
    c.out_dir = out;
    return c;
}

void export_all(const ExperimentResult& r, Manifest& m)
{
    const auto& out = r.config.out_dir;
    export_snapshots(r, out, m);
    export_trajectories(r, out, m);
    export_geodesics(r, out, m);
    export_curvature(r, out, m);
    export_fronts_files(r, out, m);
    m.write(out);
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(QGEO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream(p) << text;
}

} // namespace

TEST(Sha256, KnownVector)
{
    const auto dir = testing_util::scratch_dir("sha");
    write_text(dir / "abc.txt", "abc");
    EXPECT_EQ(sha256_file(dir / "abc.txt"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FormatNumber, RoundTrips)
{
    for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 4.9e-324, -1e-300, 2100.0}) {
        EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v) << format_number(v);
    }
    EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(TableWriter, CsvAndJson)
{
    const auto dir = testing_util::scratch_dir("table");
    {
        TableWriter w(dir / "t.csv", {"a", "b"}, OutputFormat::csv);
        w.row({1.0, 0.5});
        w.row({-2.0, 1e-20});
    }
    EXPECT_EQ(slurp(dir / "t.csv"), "a,b\n1,0.5\n-2,1e-20\n");
    {
        TableWriter w(dir / "t.json", {"a", "b"}, OutputFormat::json);
        w.row({1.0, 0.5});
        w.row({-2.0, 1e-20});
    }
    const auto j = read_json(dir / "t.json");
    EXPECT_EQ(j["columns"], nlohmann::json({"a", "b"}));
    ASSERT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["rows"][1][1].get<double>(), 1e-20);
    TableWriter w(dir / "bad.csv", {"a", "b"}, OutputFormat::csv);
    EXPECT_THROW(w.row({1.0}), std::invalid_argument);
}

TEST(Manifest, HashesMatchFiles)
{
    const auto out = testing_util::scratch_dir("manifest");
    const auto cfg = small_config(out);
    const auto r = run_experiment(cfg);
    Manifest m("run-experiment", cfg);
    export_all(r, m);

    const auto j = read_json(out / "manifest.json");
    EXPECT_EQ(j["command"], "run-experiment");
    EXPECT_EQ(j["status"], "ok");
    EXPECT_EQ(j["config"]["mass"], "2000");
    EXPECT_TRUE(j["versions"].contains("fftw"));
    std::size_t snapshots = 0;
    for (const auto& f : j["files"]) {
        const auto path = out / f["path"].get<std::string>();
        ASSERT_TRUE(fs::exists(path)) << path;
        EXPECT_EQ(f["sha256"], sha256_file(path));
        EXPECT_EQ(f["bytes"].get<std::uintmax_t>(), fs::file_size(path));
        snapshots += f["kind"] == "field_snapshot";
    }
    EXPECT_EQ(snapshots, cfg.snapshot_times().size());

    // one front file row per member and front time
    std::ifstream fronts(out / "fronts_q1_qdot1.csv");
    std::string line;
    std::size_t rows = 0;
    std::getline(fronts, line);
    EXPECT_EQ(line, "t,id,q1,qdot1,node_flag");
    while (std::getline(fronts, line)) {
        ++rows;
    }
    EXPECT_EQ(rows, cfg.front_times().size() * cfg.n_traj);
}

TEST(Manifest, RunsAreBitIdentical)
{
    const auto a_dir = testing_util::scratch_dir("det_a");
    const auto b_dir = testing_util::scratch_dir("det_b");
    auto a_cfg = small_config(a_dir);
    auto b_cfg = small_config(b_dir);
    b_cfg.threads = 3;
    Manifest ma("run-experiment", a_cfg), mb("run-experiment", b_cfg);
    export_all(run_experiment(a_cfg), ma);
    export_all(run_experiment(b_cfg), mb);
    const auto ja = read_json(a_dir / "manifest.json");
    const auto jb = read_json(b_dir / "manifest.json");
    ASSERT_EQ(ja["files"].size(), jb["files"].size());
    for (std::size_t i = 0; i < ja["files"].size(); ++i) {
        // snapshot metadata echoes the thread count
        if (ja["files"][i]["path"].get<std::string>().ends_with(".meta.json")) {
            continue;
        }
        EXPECT_EQ(ja["files"][i]["sha256"], jb["files"][i]["sha256"]) << ja["files"][i]["path"];
    }
}

TEST(Cli, ExitCodes)
{
    const auto dir = testing_util::scratch_dir("cli");
    EXPECT_EQ(run_cli(""), 2);
    EXPECT_EQ(run_cli("propagate --format xml"), 2);
    EXPECT_EQ(run_cli("propagate --config " + (dir / "missing.cfg").string()), 2);

    write_text(dir / "bad.cfg", "mass = 2000\nwhatever = 3\n");
    EXPECT_EQ(run_cli("propagate --quiet --config " + (dir / "bad.cfg").string()), 2);

    write_text(dir / "small.cfg", "grid.n = 1024\ngrid.x_min = -10\ngrid.x_max = 20\nbarrier.V0 = 0\n"
                                  "t_final = 100\nsnapshot_start = 0\nsnapshot_every = 50\n");
    EXPECT_EQ(run_cli("propagate --quiet --config " + (dir / "small.cfg").string() + " --out-dir " +
                      (dir / "ok").string()),
              0);
    const auto ok = read_json(dir / "ok" / "manifest.json");
    EXPECT_EQ(ok["status"], "ok");
    EXPECT_TRUE(fs::exists(dir / "ok" / "residuals.csv"));
    EXPECT_TRUE(fs::exists(dir / "ok" / "psi_t00100.0.csv"));

    write_text(dir / "cramped.cfg", "grid.n = 256\ngrid.x_min = -1\ngrid.x_max = 3\n");
    EXPECT_EQ(run_cli("propagate --quiet --config " + (dir / "cramped.cfg").string() + " --out-dir " +
                      (dir / "failed").string()),
              3);
    EXPECT_EQ(read_json(dir / "failed" / "manifest.json")["status"], "failed");
}

#include <doctest.h>

#include <algorithm>
#include <set>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mv2/errors.hpp"
#include "mv2/experiment.hpp"

using namespace mv2;
namespace fs = std::filesystem;

namespace {

nlohmann::json base_doc(const std::string& kind, const std::string& out) {
    return nlohmann::json{
        {"kind", kind},
        {"model",
         {{"v1", {0.0, 0.0, -0.5, 0.0, 0.25}},
          {"v2", {0.0, 0.0, -0.5, 0.0, 0.25}},
          {"interaction", {{"quadratic", {{0.1, 0.1}, {0.1, 0.1}}}}},
          {"a", 0.5},
          {"sigma", 0.5}}},
        {"output_dir", out},
        {"master_seed", 20260810}};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("mv2_test_" + tag)) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("schema violations name the offending field") {
    auto doc = base_doc("simulate", "unused");
    doc["model"]["a"] = 1.5;
    try {
        parse_experiment(doc);
        CHECK(false);
    } catch (const SchemaError& e) {
        CHECK(e.path == "model.a");
    }

    doc = base_doc("poc", "unused");
    doc["poc"] = {{"schedule_n", {100}}};
    try {
        parse_experiment(doc);
        CHECK(false);
    } catch (const SchemaError& e) {
        CHECK(e.path == "poc.schedule_n");
    }

    doc = base_doc("nonsense", "unused");
    CHECK_THROWS_AS(parse_experiment(doc), SchemaError);

    doc = base_doc("simulate", "unused");
    doc.erase("master_seed");
    CHECK_THROWS_AS(parse_experiment(doc), SchemaError);

    doc = base_doc("fpde", "unused");
    doc["fpde"] = {{"init", {{"type", "banana"}}}};
    CHECK_THROWS_AS(parse_experiment(doc), SchemaError);
}

TEST_CASE("poc requires a to match the schedule ratio") {
    auto doc = base_doc("poc", "unused");
    doc["model"]["a"] = 0.3;
    doc["poc"] = {{"schedule_n", {10, 20, 40, 80}}, {"replicas", 2}, {"horizon", 0.1}, {"dt", 0.01}};
    try {
        parse_experiment(doc);
        CHECK(false);
    } catch (const SchemaError& e) {
        CHECK(e.path == "poc.schedule_n");
    }
}

TEST_CASE("describe is a pure plan") {
    TempDir tmp("describe");
    auto doc = base_doc("poc", (tmp.path / "out").string());
    doc["poc"] = {{"schedule_n", {50, 100, 200, 400}},
                  {"replicas", 50},
                  {"horizon", 2.0},
                  {"dt", 0.001}};
    const ExperimentSpec spec = parse_experiment(doc);
    const std::string plan1 = describe_experiment(spec);
    const std::string plan2 = describe_experiment(spec);
    CHECK(plan1 == plan2);
    CHECK(plan1.find("4 x 50 = 200 coupled runs") != std::string::npos);
    CHECK(plan1.find("results.csv") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.path / "out"));
}

TEST_CASE("laplace experiment writes the documented report") {
    TempDir tmp("laplace");
    auto doc = base_doc("laplace", (tmp.path / "out").string());
    doc["laplace"] = {{"m_star", 1.0}};
    const ExperimentSpec spec = parse_experiment(doc);
    const nlohmann::json summary = run_experiment(spec);
    CHECK(summary["k1"].get<double>() == doctest::Approx(6.0 / (4.0 * 2.1 * 2.1)));
    CHECK(summary["e_sigma_decreasing"].get<bool>());

    nlohmann::json manifest;
    std::ifstream(tmp.path / "out" / "manifest.json") >> manifest;
    CHECK(manifest["artifact_version"].is_string());
    CHECK(manifest["spec"]["kind"] == "laplace");
    bool has_expansion = false;
    std::set<std::string> listed{"manifest.json"};
    for (const auto& f : manifest["outputs"]) {
        CHECK(fs::exists(tmp.path / "out" / f["file"].get<std::string>()));
        CHECK(f.contains("fnv1a64"));
        listed.insert(f["file"].get<std::string>());
        if (f["file"] == "expansion.json") has_expansion = true;
    }
    CHECK(has_expansion);
    // completeness: everything in the directory is listed
    for (const auto& entry : fs::directory_iterator(tmp.path / "out"))
        CHECK(listed.count(entry.path().filename().string()) == 1);

    nlohmann::json expansion;
    std::ifstream(tmp.path / "out" / "expansion.json") >> expansion;
    for (const char* key : {"m_star", "k1", "k2", "rho_threshold", "tau1", "tau2"})
        CHECK(expansion.contains(key));
}

TEST_CASE("invariant experiment finds the three double-well roots") {
    TempDir tmp("invariant");
    auto doc = base_doc("invariant", (tmp.path / "out").string());
    doc["model"]["sigma"] = 0.3;
    doc["invariant"] = {{"tol", 1e-9}, {"export_densities", false}};
    const ExperimentSpec spec = parse_experiment(doc);
    const nlohmann::json summary = run_experiment(spec);
    CHECK(summary["root_count"].get<int>() >= 3);
    const std::string roots = slurp(tmp.path / "out" / "roots.csv");
    CHECK(roots.rfind("sigma,m1,m2,residual,classification", 0) == 0);
}

TEST_CASE("identical specs produce byte-identical result csvs") {
    TempDir tmp("repro");
    auto doc = base_doc("simulate", (tmp.path / "a").string());
    doc["simulate"] = {{"n_x", 32}, {"n_y", 32}, {"horizon", 0.2}, {"dt", 0.01},
                       {"record_stride", 5}};
    run_experiment(parse_experiment(doc));
    doc["output_dir"] = (tmp.path / "b").string();
    run_experiment(parse_experiment(doc));
    const std::string traj = slurp(tmp.path / "a" / "trajectory.csv");
    const std::string moments = slurp(tmp.path / "a" / "moments.csv");
    CHECK(traj == slurp(tmp.path / "b" / "trajectory.csv"));
    CHECK(moments == slurp(tmp.path / "b" / "moments.csv"));
    CHECK(traj.rfind("t,species,index,position", 0) == 0);
    CHECK(moments.rfind("t,species,m0,m1,m2,m3,m4", 0) == 0);
}

TEST_CASE("fpde experiment conserves mass") {
    TempDir tmp("fpde");
    auto doc = base_doc("fpde", (tmp.path / "out").string());
    doc["fpde"] = {{"x_min", -3.0}, {"x_max", 3.0}, {"n_cells", 64},
                   {"horizon", 0.05}, {"record_stride", 50}};
    const nlohmann::json summary = run_experiment(parse_experiment(doc));
    CHECK(summary["final_mass_mu"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(fs::exists(tmp.path / "out" / "snapshots.csv"));
    CHECK(fs::exists(tmp.path / "out" / "masslog.csv"));
}

TEST_CASE("fpde residual study writes the refinement report") {
    TempDir tmp("fpde_res");
    auto doc = base_doc("fpde", (tmp.path / "out").string());
    doc["model"]["sigma"] = 0.3;
    doc["fpde"] = {{"x_min", -3.0}, {"x_max", 3.0}, {"n_cells", 128},
                   {"horizon", 0.01}, {"record_stride", 100},
                   {"init", {{"type", "stationary"}, {"m1", 0.0}, {"m2", 0.0}}},
                   {"residual_study", true}};
    run_experiment(parse_experiment(doc));
    const std::string report = slurp(tmp.path / "out" / "residual_report.csv");
    CHECK(report.rfind("grid_h,res_mu,res_nu", 0) == 0);
    CHECK(std::count(report.begin(), report.end(), '\n') == 4); // header + 3 grids
}

TEST_CASE("picard experiment logs iterations") {
    TempDir tmp("picard");
    auto doc = base_doc("picard", (tmp.path / "out").string());
    doc["picard"] = {{"horizon", 0.25}, {"dt", 0.01}, {"n_particles", 400},
                     {"segments", 5}, {"tol", 1e-3}, {"max_iter", 25}};
    const nlohmann::json summary = run_experiment(parse_experiment(doc));
    CHECK(summary["converged"].get<bool>());
    const std::string log = slurp(tmp.path / "out" / "iterations.csv");
    CHECK(log.rfind("iter,norm_diff,contraction_ratio,wall_time_ms", 0) == 0);
    CHECK(fs::exists(tmp.path / "out" / "drift.json"));
}

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mv2/fokker_planck.hpp"
#include "mv2/invariant.hpp"
#include "mv2/model.hpp"
#include "mv2/picard.hpp"
#include "mv2/poc.hpp"
#include "mv2/sde.hpp"

namespace mv2 {

class NonConvergenceError : public std::runtime_error {
public:
    explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct SimulateParams {
    int n_x = 100, n_y = 100;
    double horizon = 1.0, dt = 1e-3;
    int record_stride = 100;
    InitialCondition init_x = GaussianInit{};
    InitialCondition init_y = GaussianInit{};
    std::string drift_json; // nonempty: external mode under this drift tuple
};

struct PicardRunParams {
    double horizon = 1.0, dt = 1e-3;
    int n_particles = 4000;
    int segments = 20;
    double tol = 1e-3;
    int max_iter = 30;
    InitialCondition init_x = GaussianInit{};
    InitialCondition init_y = GaussianInit{};
    bool antithetic = false;
    double norm_radius = 8.0;
    int norm_points = 2001;
    double k_ball = 0.0;
};

struct PocParams {
    std::vector<int> schedule_n;
    double m_over_n = 1.0;
    int replicas = 50;
    double horizon = 2.0, dt = 1e-3;
    InitialCondition init_x = GaussianInit{};
    InitialCondition init_y = GaussianInit{};
    PicardRunParams picard;
};

struct InvariantParams {
    int n_nodes = 4097;
    double start_extent = 2.0;
    int start_points = 7;
    double damping = 0.5;
    double tol = 1e-10;
    int max_iter = 500;
    std::vector<double> sigma_list; // empty: single run at model sigma
    bool export_densities = true;
};

struct FpdeGaussianInit {
    double mean_mu = 0.0, var_mu = 1.0, mean_nu = 0.0, var_nu = 1.0;
};
struct FpdeStationaryInit {
    double m1 = 0.0, m2 = 0.0;
};

struct FpdeParams {
    double x_min = -4.0, x_max = 4.0;
    int n_cells = 256;
    double horizon = 1.0;
    double dt = 0.0; // <= 0: auto from the CFL bound with a factor-2 margin
    int record_stride = 100;
    FluxScheme scheme = FluxScheme::chang_cooper;
    std::variant<FpdeGaussianInit, FpdeStationaryInit> init = FpdeGaussianInit{};
    bool residual_study = false; // residual_report.csv at n/4, n/2, n cells
};

struct LaplaceParams {
    double m_star = 1.0;
    double rho1 = 0.0, rho2 = 0.0;
    std::vector<double> sigma_list{0.4, 0.3, 0.2, 0.15};
};

using KindParams =
    std::variant<SimulateParams, PicardRunParams, PocParams, InvariantParams, FpdeParams, LaplaceParams>;

struct ExperimentSpec {
    std::string kind;
    ModelConfig model;
    std::string output_dir;
    std::uint64_t master_seed = 0;
    int threads = 0; // 0: hardware
    KindParams params;
    nlohmann::json resolved; // full spec with defaults filled, echoed in the manifest
};

// Validates the document against the published schema; throws SchemaError
// with a path-precise message.
ExperimentSpec parse_experiment(const nlohmann::json& doc);

// Runs the experiment and writes result files plus manifest.json and
// summary.json into spec.output_dir. Numerical failures propagate as
// exceptions after any partial artifacts are written.
nlohmann::json run_experiment(const ExperimentSpec& spec);

// Dry run: the resolved plan as text; writes nothing.
std::string describe_experiment(const ExperimentSpec& spec);

} // namespace mv2

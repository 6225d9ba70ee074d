#include "mv2/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mv2/errors.hpp"
#include "mv2/model_json.hpp"
#include "mv2/util.hpp"

namespace mv2 {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kArtifactVersion = "0.2.0";

// --- schema helpers ------------------------------------------------------

const json& require_field(const json& j, const std::string& path, const std::string& key) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    if (!j.contains(key)) throw SchemaError(path + "." + key, "missing field");
    return j.at(key);
}

double get_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "must be finite");
    return v;
}

double get_number(const json& j, const std::string& path, const std::string& key, double fallback) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    if (!j.contains(key)) return fallback;
    return get_number(j.at(key), path + "." + key);
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw SchemaError(path, "expected an integer");
    return j.get<int>();
}

int get_int(const json& j, const std::string& path, const std::string& key, int fallback) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    if (!j.contains(key)) return fallback;
    return get_int(j.at(key), path + "." + key);
}

bool get_bool(const json& j, const std::string& path, const std::string& key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw SchemaError(path + "." + key, "expected a boolean");
    return j.at(key).get<bool>();
}

void check_positive(double v, const std::string& path) {
    if (!(v > 0.0)) throw SchemaError(path, "must be > 0");
}

InitialCondition parse_init(const json& j, const std::string& path) {
    if (!j.is_object() || !j.contains("type")) throw SchemaError(path + ".type", "missing field");
    const std::string type = j.at("type").is_string() ? j.at("type").get<std::string>() : "";
    if (type == "point") return PointMass{get_number(j, path, "x0", 0.0)};
    if (type == "gaussian") {
        const double var = get_number(j, path, "var", 1.0);
        if (var < 0.0) throw SchemaError(path + ".var", "must be >= 0");
        return GaussianInit{get_number(j, path, "mean", 0.0), var};
    }
    if (type == "uniform") {
        const double lo = get_number(j, path, "lo", -1.0);
        const double hi = get_number(j, path, "hi", 1.0);
        if (!(hi > lo)) throw SchemaError(path + ".hi", "must be > lo");
        return UniformInit{lo, hi};
    }
    throw SchemaError(path + ".type", "must be one of point|gaussian|uniform");
}

json init_to_json(const InitialCondition& ic) {
    if (std::holds_alternative<PointMass>(ic))
        return json{{"type", "point"}, {"x0", std::get<PointMass>(ic).x0}};
    if (std::holds_alternative<GaussianInit>(ic)) {
        const auto& g = std::get<GaussianInit>(ic);
        return json{{"type", "gaussian"}, {"mean", g.mean}, {"var", g.var}};
    }
    const auto& u = std::get<UniformInit>(ic);
    return json{{"type", "uniform"}, {"lo", u.lo}, {"hi", u.hi}};
}

InitialCondition parse_init_or(const json& j, const std::string& path, const std::string& key,
                               const InitialCondition& fallback) {
    if (!j.contains(key)) return fallback;
    return parse_init(j.at(key), path + "." + key);
}

// --- kind parsers --------------------------------------------------------

void require_step_multiple(double horizon, double dt, const std::string& path) {
    const double steps = horizon / dt;
    if (std::abs(steps - std::llround(steps)) > 1e-9 * std::max(1.0, steps))
        throw SchemaError(path, "horizon must be an integer multiple of dt");
}

SimulateParams parse_simulate(const json& j, const std::string& path) {
    SimulateParams p;
    p.n_x = get_int(j, path, "n_x", p.n_x);
    p.n_y = get_int(j, path, "n_y", p.n_y);
    if (p.n_x < 1) throw SchemaError(path + ".n_x", "must be >= 1");
    if (p.n_y < 1) throw SchemaError(path + ".n_y", "must be >= 1");
    p.horizon = get_number(j, path, "horizon", p.horizon);
    check_positive(p.horizon, path + ".horizon");
    p.dt = get_number(j, path, "dt", p.dt);
    check_positive(p.dt, path + ".dt");
    require_step_multiple(p.horizon, p.dt, path + ".horizon");
    p.record_stride = get_int(j, path, "record_stride", p.record_stride);
    if (p.record_stride < 1) throw SchemaError(path + ".record_stride", "must be >= 1");
    p.init_x = parse_init_or(j, path, "init_x", p.init_x);
    p.init_y = parse_init_or(j, path, "init_y", p.init_y);
    if (j.contains("drift_json")) {
        if (!j.at("drift_json").is_string())
            throw SchemaError(path + ".drift_json", "expected a file path string");
        p.drift_json = j.at("drift_json").get<std::string>();
    }
    return p;
}

PicardRunParams parse_picard(const json& j, const std::string& path) {
    PicardRunParams p;
    p.horizon = get_number(j, path, "horizon", p.horizon);
    check_positive(p.horizon, path + ".horizon");
    p.dt = get_number(j, path, "dt", p.dt);
    check_positive(p.dt, path + ".dt");
    require_step_multiple(p.horizon, p.dt, path + ".horizon");
    p.n_particles = get_int(j, path, "n_particles", p.n_particles);
    if (p.n_particles < 2) throw SchemaError(path + ".n_particles", "must be >= 2");
    p.segments = get_int(j, path, "segments", p.segments);
    if (p.segments < 1) throw SchemaError(path + ".segments", "must be >= 1");
    p.tol = get_number(j, path, "tol", p.tol);
    check_positive(p.tol, path + ".tol");
    p.max_iter = get_int(j, path, "max_iter", p.max_iter);
    if (p.max_iter < 1) throw SchemaError(path + ".max_iter", "must be >= 1");
    p.init_x = parse_init_or(j, path, "init_x", p.init_x);
    p.init_y = parse_init_or(j, path, "init_y", p.init_y);
    p.antithetic = get_bool(j, path, "antithetic", p.antithetic);
    p.norm_radius = get_number(j, path, "norm_radius", p.norm_radius);
    check_positive(p.norm_radius, path + ".norm_radius");
    p.norm_points = get_int(j, path, "norm_points", p.norm_points);
    if (p.norm_points < 3) throw SchemaError(path + ".norm_points", "must be >= 3");
    p.k_ball = get_number(j, path, "k_ball", p.k_ball);
    return p;
}

PocParams parse_poc(const json& j, const std::string& path, const ModelConfig& model) {
    PocParams p;
    const json& sched = require_field(j, path, "schedule_n");
    if (!sched.is_array()) throw SchemaError(path + ".schedule_n", "expected an array");
    for (std::size_t i = 0; i < sched.size(); ++i) {
        const int n = get_int(sched[i], path + ".schedule_n[" + std::to_string(i) + "]");
        if (n < 2) throw SchemaError(path + ".schedule_n[" + std::to_string(i) + "]", "must be >= 2");
        p.schedule_n.push_back(n);
    }
    std::vector<int> uniq = p.schedule_n;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < 4)
        throw SchemaError(path + ".schedule_n", "rate fitting needs >= 4 distinct particle counts");
    p.m_over_n = get_number(j, path, "m_over_n", p.m_over_n);
    check_positive(p.m_over_n, path + ".m_over_n");
    p.replicas = get_int(j, path, "replicas", p.replicas);
    if (p.replicas < 2) throw SchemaError(path + ".replicas", "must be >= 2");
    p.horizon = get_number(j, path, "horizon", p.horizon);
    check_positive(p.horizon, path + ".horizon");
    p.dt = get_number(j, path, "dt", p.dt);
    check_positive(p.dt, path + ".dt");
    require_step_multiple(p.horizon, p.dt, path + ".horizon");
    p.init_x = parse_init_or(j, path, "init_x", p.init_x);
    p.init_y = parse_init_or(j, path, "init_y", p.init_y);
    // The mean-field weight must match the schedule so the finite-n weight
    // 1/(N+M) carries no systematic mismatch against a.
    for (int n : p.schedule_n) {
        const int m = static_cast<int>(std::llround(p.m_over_n * n));
        const double a_n = static_cast<double>(n) / (n + m);
        if (std::abs(model.a - a_n) > 1e-9)
            throw SchemaError(path + ".schedule_n",
                              "model.a must equal N/(N+M) of the schedule (got a=" +
                                  format_double(model.a) + ", N/(N+M)=" + format_double(a_n) + ")");
    }
    p.picard = j.contains("picard") ? parse_picard(j.at("picard"), path + ".picard") : PicardRunParams{};
    if (!j.contains("picard") || !j.at("picard").contains("horizon")) p.picard.horizon = p.horizon;
    if (!j.contains("picard") || !j.at("picard").contains("dt")) p.picard.dt = p.dt;
    if (std::abs(p.picard.horizon - p.horizon) > 1e-12)
        throw SchemaError(path + ".picard.horizon", "must equal poc.horizon");
    p.picard.init_x = p.init_x;
    p.picard.init_y = p.init_y;
    return p;
}

InvariantParams parse_invariant(const json& j, const std::string& path) {
    InvariantParams p;
    p.n_nodes = get_int(j, path, "n_nodes", p.n_nodes);
    if (p.n_nodes < 16) throw SchemaError(path + ".n_nodes", "must be >= 16");
    p.start_extent = get_number(j, path, "start_extent", p.start_extent);
    check_positive(p.start_extent, path + ".start_extent");
    p.start_points = get_int(j, path, "start_points", p.start_points);
    if (p.start_points < 1) throw SchemaError(path + ".start_points", "must be >= 1");
    p.damping = get_number(j, path, "damping", p.damping);
    if (!(p.damping > 0.0 && p.damping <= 1.0)) throw SchemaError(path + ".damping", "must be in (0,1]");
    p.tol = get_number(j, path, "tol", p.tol);
    check_positive(p.tol, path + ".tol");
    p.max_iter = get_int(j, path, "max_iter", p.max_iter);
    if (p.max_iter < 1) throw SchemaError(path + ".max_iter", "must be >= 1");
    if (j.contains("sigma_list")) {
        const json& sl = j.at("sigma_list");
        if (!sl.is_array()) throw SchemaError(path + ".sigma_list", "expected an array");
        for (std::size_t i = 0; i < sl.size(); ++i) {
            const double s = get_number(sl[i], path + ".sigma_list[" + std::to_string(i) + "]");
            check_positive(s, path + ".sigma_list[" + std::to_string(i) + "]");
            p.sigma_list.push_back(s);
        }
        for (std::size_t i = 1; i < p.sigma_list.size(); ++i)
            if (!(p.sigma_list[i] < p.sigma_list[i - 1]))
                throw SchemaError(path + ".sigma_list", "must be strictly decreasing");
    }
    p.export_densities = get_bool(j, path, "export_densities", p.export_densities);
    return p;
}

FpdeParams parse_fpde(const json& j, const std::string& path) {
    FpdeParams p;
    p.x_min = get_number(j, path, "x_min", p.x_min);
    p.x_max = get_number(j, path, "x_max", p.x_max);
    if (!(p.x_max > p.x_min)) throw SchemaError(path + ".x_max", "must be > x_min");
    p.n_cells = get_int(j, path, "n_cells", p.n_cells);
    if (p.n_cells < 16) throw SchemaError(path + ".n_cells", "must be >= 16");
    p.horizon = get_number(j, path, "horizon", p.horizon);
    check_positive(p.horizon, path + ".horizon");
    p.dt = get_number(j, path, "dt", p.dt);
    p.record_stride = get_int(j, path, "record_stride", p.record_stride);
    if (p.record_stride < 1) throw SchemaError(path + ".record_stride", "must be >= 1");
    if (j.contains("scheme")) {
        const std::string s = j.at("scheme").is_string() ? j.at("scheme").get<std::string>() : "";
        if (s == "chang_cooper") p.scheme = FluxScheme::chang_cooper;
        else if (s == "central") p.scheme = FluxScheme::central;
        else throw SchemaError(path + ".scheme", "must be chang_cooper|central");
    }
    if (j.contains("init")) {
        const json& init = j.at("init");
        const std::string type =
            init.contains("type") && init.at("type").is_string() ? init.at("type").get<std::string>() : "";
        if (type == "gaussian") {
            FpdeGaussianInit g;
            g.mean_mu = get_number(init, path + ".init", "mean_mu", g.mean_mu);
            g.var_mu = get_number(init, path + ".init", "var_mu", g.var_mu);
            g.mean_nu = get_number(init, path + ".init", "mean_nu", g.mean_nu);
            g.var_nu = get_number(init, path + ".init", "var_nu", g.var_nu);
            check_positive(g.var_mu, path + ".init.var_mu");
            check_positive(g.var_nu, path + ".init.var_nu");
            p.init = g;
        } else if (type == "stationary") {
            FpdeStationaryInit s;
            s.m1 = get_number(init, path + ".init", "m1", s.m1);
            s.m2 = get_number(init, path + ".init", "m2", s.m2);
            p.init = s;
        } else {
            throw SchemaError(path + ".init.type", "must be gaussian|stationary");
        }
    }
    p.residual_study = get_bool(j, path, "residual_study", p.residual_study);
    if (p.residual_study && !std::holds_alternative<FpdeStationaryInit>(p.init))
        throw SchemaError(path + ".residual_study", "requires a stationary init");
    if (p.residual_study && p.n_cells % 4 != 0)
        throw SchemaError(path + ".n_cells", "residual study needs n_cells divisible by 4");
    return p;
}

LaplaceParams parse_laplace(const json& j, const std::string& path) {
    LaplaceParams p;
    p.m_star = get_number(require_field(j, path, "m_star"), path + ".m_star");
    p.rho1 = get_number(j, path, "rho1", p.rho1);
    p.rho2 = get_number(j, path, "rho2", p.rho2);
    if (j.contains("sigma_list")) {
        p.sigma_list.clear();
        const json& sl = j.at("sigma_list");
        if (!sl.is_array()) throw SchemaError(path + ".sigma_list", "expected an array");
        for (std::size_t i = 0; i < sl.size(); ++i) {
            const double s = get_number(sl[i], path + ".sigma_list[" + std::to_string(i) + "]");
            check_positive(s, path + ".sigma_list[" + std::to_string(i) + "]");
            p.sigma_list.push_back(s);
        }
    }
    return p;
}

json params_to_json(const ExperimentSpec& spec);

} // namespace

ExperimentSpec parse_experiment(const json& doc) {
    if (!doc.is_object()) throw SchemaError("", "config must be a JSON object");
    ExperimentSpec spec;
    const json& kind = require_field(doc, "", "kind");
    if (!kind.is_string()) throw SchemaError("kind", "expected a string");
    spec.kind = kind.get<std::string>();

    spec.model = model_from_json(require_field(doc, "", "model"), "model");

    const json& out = require_field(doc, "", "output_dir");
    if (!out.is_string() || out.get<std::string>().empty())
        throw SchemaError("output_dir", "expected a nonempty string");
    spec.output_dir = out.get<std::string>();

    const json& seed = require_field(doc, "", "master_seed");
    if (!seed.is_number_integer() || seed.get<long long>() < 0)
        throw SchemaError("master_seed", "expected a nonnegative integer");
    spec.master_seed = seed.get<std::uint64_t>();

    spec.threads = get_int(doc, "", "threads", 0);
    if (spec.threads < 0) throw SchemaError("threads", "must be >= 0");

    const json params = doc.contains(spec.kind) ? doc.at(spec.kind) : json::object();
    if (!params.is_object()) throw SchemaError(spec.kind, "expected an object");
    if (spec.kind == "simulate") spec.params = parse_simulate(params, spec.kind);
    else if (spec.kind == "picard") spec.params = parse_picard(params, spec.kind);
    else if (spec.kind == "poc") spec.params = parse_poc(params, spec.kind, spec.model);
    else if (spec.kind == "invariant") spec.params = parse_invariant(params, spec.kind);
    else if (spec.kind == "fpde") spec.params = parse_fpde(params, spec.kind);
    else if (spec.kind == "laplace") spec.params = parse_laplace(params, spec.kind);
    else throw SchemaError("kind", "must be one of simulate|picard|poc|invariant|fpde|laplace");

    spec.resolved = json{{"kind", spec.kind},
                         {"model", model_to_json(spec.model)},
                         {"output_dir", spec.output_dir},
                         {"master_seed", spec.master_seed},
                         {"threads", spec.threads},
                         {spec.kind, params_to_json(spec)}};
    return spec;
}

namespace {

json params_to_json(const ExperimentSpec& spec) {
    json j;
    if (const auto* p = std::get_if<SimulateParams>(&spec.params)) {
        j = json{{"n_x", p->n_x},       {"n_y", p->n_y},
                 {"horizon", p->horizon}, {"dt", p->dt},
                 {"record_stride", p->record_stride},
                 {"init_x", init_to_json(p->init_x)},
                 {"init_y", init_to_json(p->init_y)}};
        if (!p->drift_json.empty()) j["drift_json"] = p->drift_json;
    } else if (const auto* p = std::get_if<PicardRunParams>(&spec.params)) {
        j = json{{"horizon", p->horizon},   {"dt", p->dt},
                 {"n_particles", p->n_particles}, {"segments", p->segments},
                 {"tol", p->tol},           {"max_iter", p->max_iter},
                 {"init_x", init_to_json(p->init_x)}, {"init_y", init_to_json(p->init_y)},
                 {"antithetic", p->antithetic}, {"norm_radius", p->norm_radius},
                 {"norm_points", p->norm_points}, {"k_ball", p->k_ball}};
    } else if (const auto* p = std::get_if<PocParams>(&spec.params)) {
        j = json{{"schedule_n", p->schedule_n}, {"m_over_n", p->m_over_n},
                 {"replicas", p->replicas},     {"horizon", p->horizon},
                 {"dt", p->dt},                 {"init_x", init_to_json(p->init_x)},
                 {"init_y", init_to_json(p->init_y)}};
        j["picard"] = json{{"horizon", p->picard.horizon}, {"dt", p->picard.dt},
                           {"n_particles", p->picard.n_particles},
                           {"segments", p->picard.segments}, {"tol", p->picard.tol},
                           {"max_iter", p->picard.max_iter}};
    } else if (const auto* p = std::get_if<InvariantParams>(&spec.params)) {
        j = json{{"n_nodes", p->n_nodes},   {"start_extent", p->start_extent},
                 {"start_points", p->start_points}, {"damping", p->damping},
                 {"tol", p->tol},           {"max_iter", p->max_iter},
                 {"export_densities", p->export_densities}};
        if (!p->sigma_list.empty()) j["sigma_list"] = p->sigma_list;
    } else if (const auto* p = std::get_if<FpdeParams>(&spec.params)) {
        j = json{{"x_min", p->x_min}, {"x_max", p->x_max}, {"n_cells", p->n_cells},
                 {"horizon", p->horizon}, {"dt", p->dt}, {"record_stride", p->record_stride},
                 {"scheme", p->scheme == FluxScheme::chang_cooper ? "chang_cooper" : "central"},
                 {"residual_study", p->residual_study}};
        if (const auto* g = std::get_if<FpdeGaussianInit>(&p->init))
            j["init"] = json{{"type", "gaussian"}, {"mean_mu", g->mean_mu}, {"var_mu", g->var_mu},
                             {"mean_nu", g->mean_nu}, {"var_nu", g->var_nu}};
        else {
            const auto& s = std::get<FpdeStationaryInit>(p->init);
            j["init"] = json{{"type", "stationary"}, {"m1", s.m1}, {"m2", s.m2}};
        }
    } else if (const auto* p = std::get_if<LaplaceParams>(&spec.params)) {
        j = json{{"m_star", p->m_star}, {"rho1", p->rho1}, {"rho2", p->rho2},
                 {"sigma_list", p->sigma_list}};
    }
    return j;
}

// --- output plumbing -----------------------------------------------------

class OutputDir {
public:
    explicit OutputDir(const std::string& dir) : dir_(dir) {
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) throw std::runtime_error("cannot create output directory " + dir);
    }

    std::string path(const std::string& name) {
        files_.push_back(name);
        return (fs::path(dir_) / name).string();
    }

    void write_json(const std::string& name, const json& j) {
        std::ofstream out(path(name));
        if (!out) throw std::runtime_error("cannot open " + name);
        out << j.dump(2) << '\n';
    }

    // Manifest: resolved spec, artifact version, and a content hash per file.
    void finalize(const json& resolved_spec, const json& summary) {
        write_json("summary.json", summary);
        json manifest;
        manifest["artifact_version"] = kArtifactVersion;
        manifest["spec"] = resolved_spec;
        json outputs = json::array();
        for (const std::string& name : files_) {
            const std::string full = (fs::path(dir_) / name).string();
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%016llx",
                          static_cast<unsigned long long>(fnv1a64_file(full)));
            outputs.push_back(json{{"file", name},
                                   {"bytes", fs::file_size(full)},
                                   {"fnv1a64", std::string(buf)}});
        }
        manifest["outputs"] = outputs;
        std::ofstream out((fs::path(dir_) / "manifest.json").string());
        if (!out) throw std::runtime_error("cannot open manifest.json");
        out << manifest.dump(2) << '\n';
    }

private:
    std::string dir_;
    std::vector<std::string> files_;
};

GammaMcParams to_gamma_mc(const PicardRunParams& p, std::uint64_t seed) {
    GammaMcParams mc;
    mc.n_particles = p.n_particles;
    mc.dt = p.dt;
    mc.seed = seed;
    mc.init_x = p.init_x;
    mc.init_y = p.init_y;
    mc.antithetic = p.antithetic;
    return mc;
}

PicardOptions to_picard_options(const PicardRunParams& p) {
    PicardOptions opts;
    opts.tol = p.tol;
    opts.max_iter = p.max_iter;
    opts.n_segments = p.segments;
    opts.norm_grid = GridSpec{p.norm_radius, p.norm_points};
    opts.k_ball = p.k_ball;
    return opts;
}

// --- runners -------------------------------------------------------------

json run_simulate(const ExperimentSpec& spec, OutputDir& out) {
    const auto& p = std::get<SimulateParams>(spec.params);
    const Ensemble ens = make_ensemble(spec.model, p.n_x, p.n_y, p.init_x, p.init_y,
                                       derive_stream(spec.master_seed, "simulate", 0));
    SimParams sim;
    sim.dt = p.dt;
    sim.n_steps = static_cast<int>(std::llround(p.horizon / p.dt));
    sim.seed = derive_stream(spec.master_seed, "simulate", 0);
    sim.record_stride = p.record_stride;
    DriftPair external;
    SimMode mode = InteractingMode{};
    if (!p.drift_json.empty()) {
        external = read_drift_json(p.drift_json);
        mode = ExternalMode{&external};
    }
    const Trajectory traj = simulate(ens, spec.model, sim, mode);
    write_trajectory_csv(out.path("trajectory.csv"), traj);
    write_moments_csv(out.path("moments.csv"), traj);
    const MomentVector& mx = traj.x_moments.back();
    const MomentVector& my = traj.y_moments.back();
    return json{{"final_time", traj.times.back()},
                {"x_mean", mx[1]}, {"x_m2", mx[2]}, {"x_m4", mx[4]},
                {"y_mean", my[1]}, {"y_m2", my[2]}, {"y_m4", my[4]}};
}

json run_picard(const ExperimentSpec& spec, OutputDir& out) {
    const auto& p = std::get<PicardRunParams>(spec.params);
    const GammaMcParams mc = to_gamma_mc(p, derive_stream(spec.master_seed, "picard", 0));
    const PicardResult res = picard_solve(spec.model, p.horizon, mc, to_picard_options(p));
    write_iteration_log_csv(out.path("iterations.csv"), res.log);
    write_drift_json(out.path("drift.json"), res.drift);
    const json summary{{"converged", res.converged},
                       {"iterations", res.log.size()},
                       {"final_norm_diff", res.log.empty() ? 0.0 : res.log.back().norm_diff}};
    if (!res.converged) {
        out.finalize(spec.resolved, summary);
        throw NonConvergenceError("picard_solve did not converge in " +
                                  std::to_string(p.max_iter) + " iterations");
    }
    return summary;
}

json run_poc(const ExperimentSpec& spec, OutputDir& out) {
    const auto& p = std::get<PocParams>(spec.params);
    const int threads = spec.threads > 0 ? spec.threads : hardware_threads();

    const GammaMcParams mc = to_gamma_mc(p.picard, derive_stream(spec.master_seed, "poc-picard", 0));
    const PicardResult hat = picard_solve(spec.model, p.horizon, mc, to_picard_options(p.picard));
    if (!hat.converged)
        throw NonConvergenceError("poc: hat-drift Picard iteration did not converge");

    std::vector<std::pair<int, ErrorStats>> schedule;
    std::vector<ErrorStats> all_stats;
    for (std::size_t ni = 0; ni < p.schedule_n.size(); ++ni) {
        const int N = p.schedule_n[ni];
        const int M = static_cast<int>(std::llround(p.m_over_n * N));
        std::vector<CouplingRun> runs(static_cast<std::size_t>(p.replicas));
        const std::string purpose = "poc-replica-N" + std::to_string(N);
        parallel_for(p.replicas, threads, [&](int r) {
            const std::uint64_t seed = derive_stream(spec.master_seed, purpose, static_cast<std::uint64_t>(r));
            const Ensemble ens = make_ensemble(spec.model, N, M, p.init_x, p.init_y, seed);
            runs[static_cast<std::size_t>(r)] =
                coupled_run(spec.model, ens, ens, p.horizon, p.dt, seed, hat.drift, static_cast<int>(ni));
        });
        ErrorStats st = error_stats(runs);
        all_stats.push_back(st);
        schedule.emplace_back(N, std::move(st));
    }
    const auto fits = rate_fit(schedule);
    write_error_stats_csv(out.path("results.csv"), all_stats);
    write_rate_fit_csv(out.path("ratefit.csv"), fits);

    json summary;
    for (const auto& [name, f] : fits)
        summary["slopes"][name] = json{{"slope", f.slope}, {"ci_halfwidth", f.ci_halfwidth}, {"r2", f.r2}};
    summary["replicas"] = p.replicas;
    summary["schedule_n"] = p.schedule_n;
    return summary;
}

json run_invariant(const ExperimentSpec& spec, OutputDir& out) {
    const auto& p = std::get<InvariantParams>(spec.params);
    FixedPointOptions opts;
    opts.damping = p.damping;
    opts.tol = p.tol;
    opts.max_iter = p.max_iter;
    opts.n_threads = spec.threads > 0 ? spec.threads : hardware_threads();
    const std::vector<MeanPair> starts = default_start_grid(p.start_extent, p.start_points);

    std::vector<SigmaScanRow> rows;
    if (p.sigma_list.empty()) {
        const QuadratureRule rule =
            QuadratureRule::for_model(spec.model, p.start_extent + 1.0, p.n_nodes);
        const FixedPointResult res = fixed_points(spec.model, rule, starts, opts);
        rows.push_back(SigmaScanRow{spec.model.sigma, static_cast<int>(res.roots.size()), res.roots});
    } else {
        rows = sigma_scan(spec.model, p.sigma_list, starts, opts, p.n_nodes);
    }
    write_roots_csv(out.path("roots.csv"), rows);

    if (p.export_densities && !rows.empty()) {
        ModelConfig cfg = spec.model;
        cfg.sigma = rows.back().sigma;
        const QuadratureRule rule = QuadratureRule::for_model(cfg, p.start_extent + 1.0, p.n_nodes);
        int k = 0;
        for (const RootInfo& r : rows.back().roots) {
            std::vector<double> grid;
            const int n_export = 1025;
            for (int i = 0; i < n_export; ++i)
                grid.push_back(-rule.radius() + 2.0 * rule.radius() * i / (n_export - 1));
            write_density_csv(out.path("density_root" + std::to_string(k++) + ".csv"),
                              stationary_density(r.m, cfg, grid));
        }
    }

    json summary;
    json counts = json::array();
    for (const auto& row : rows)
        counts.push_back(json{{"sigma", row.sigma}, {"root_count", row.root_count}});
    summary["root_counts"] = counts;
    summary["root_count"] = rows.back().root_count;
    return summary;
}

json run_fpde(const ExperimentSpec& spec, OutputDir& out) {
    const auto& p = std::get<FpdeParams>(spec.params);
    const Grid1D grid = Grid1D::uniform(p.x_min, p.x_max, p.n_cells);
    DensityPair dp0;
    if (const auto* g = std::get_if<FpdeGaussianInit>(&p.init))
        dp0 = gaussian_density_pair(grid, g->mean_mu, g->var_mu, g->mean_nu, g->var_nu);
    else {
        const auto& s = std::get<FpdeStationaryInit>(p.init);
        dp0 = density_from_root(MeanPair{s.m1, s.m2}, spec.model, grid);
    }
    double dt = p.dt;
    if (!(dt > 0.0)) dt = 0.5 * cfl_dt_bound(dp0, spec.model, grid);

    std::vector<DensityPair> snapshots{dp0};
    DensityPair dp = dp0;
    EvolveLog log;
    const int n_steps = static_cast<int>(std::ceil(p.horizon / dt - 1e-12));
    auto record = [&](const DensityPair& d) {
        log.t.push_back(d.t);
        log.mass_mu.push_back(cell_mass(d.mu, grid));
        log.mass_nu.push_back(cell_mass(d.nu, grid));
        log.mean_mu.push_back(cell_mean(d.mu, grid));
        log.mean_nu.push_back(cell_mean(d.nu, grid));
    };
    record(dp);
    for (int s = 0; s < n_steps; ++s) {
        dp = fp_step(dp, spec.model, grid, std::min(dt, p.horizon - s * dt), p.scheme);
        if ((s + 1) % p.record_stride == 0 || s + 1 == n_steps) {
            record(dp);
            snapshots.push_back(dp);
        }
    }
    if (p.residual_study) {
        const auto& si = std::get<FpdeStationaryInit>(p.init);
        std::vector<std::tuple<double, double, double>> rows;
        for (int n : {p.n_cells / 4, p.n_cells / 2, p.n_cells}) {
            const Grid1D g = Grid1D::uniform(p.x_min, p.x_max, n);
            const auto [rmu, rnu] =
                fp_residual(density_from_root(MeanPair{si.m1, si.m2}, spec.model, g), spec.model, g,
                            p.scheme);
            rows.emplace_back(g.h, rmu, rnu);
        }
        write_residual_report_csv(out.path("residual_report.csv"), rows);
    }
    write_density_snapshots_csv(out.path("snapshots.csv"), snapshots, grid);
    {
        std::ofstream mass(out.path("masslog.csv"));
        mass << "t,mass_mu,mass_nu,mean_mu,mean_nu\n";
        for (std::size_t i = 0; i < log.t.size(); ++i)
            mass << format_double(log.t[i]) << ',' << format_double(log.mass_mu[i]) << ','
                 << format_double(log.mass_nu[i]) << ',' << format_double(log.mean_mu[i]) << ','
                 << format_double(log.mean_nu[i]) << '\n';
    }
    return json{{"dt", dt},
                {"steps", n_steps},
                {"final_mass_mu", log.mass_mu.back()},
                {"final_mass_nu", log.mass_nu.back()},
                {"final_mean_mu", log.mean_mu.back()},
                {"final_mean_nu", log.mean_nu.back()},
                {"l1_drift_mu", l1_distance(dp.mu, dp0.mu, grid)},
                {"l1_drift_nu", l1_distance(dp.nu, dp0.nu, grid)}};
}

json run_laplace(const ExperimentSpec& spec, OutputDir& out) {
    const auto& p = std::get<LaplaceParams>(spec.params);
    const LaplaceExpansion ex = laplace_expand(spec.model, p.m_star, p.rho1, p.rho2);
    out.write_json("expansion.json", json{{"m_star", ex.m_star},
                                          {"k1", ex.k1},
                                          {"k2", ex.k2},
                                          {"rho_threshold", ex.rho_threshold},
                                          {"tau1", ex.tau1},
                                          {"tau2", ex.tau2}});
    json summary{{"k1", ex.k1}, {"k2", ex.k2}, {"rho_threshold", ex.rho_threshold}};
    if (!p.sigma_list.empty()) {
        std::ofstream csv(out.path("esigma.csv"));
        csv << "sigma,phi1,e\n";
        std::vector<double> errs;
        for (double sigma : p.sigma_list) {
            ModelConfig cfg = spec.model;
            cfg.sigma = sigma;
            const double mbox = std::abs(p.m_star) + std::max(std::abs(p.rho1), std::abs(p.rho2)) + 1.0;
            const QuadratureRule rule = QuadratureRule::for_model(cfg, mbox, 8193);
            const MeanPair m{p.m_star + p.rho1 * sigma * sigma, p.m_star + p.rho2 * sigma * sigma};
            const MeanPair phi = phi_map(m, cfg, rule);
            const double e = std::abs(phi.m1 - (p.m_star - ex.k1 * sigma * sigma)) / (sigma * sigma);
            errs.push_back(e);
            csv << format_double(sigma) << ',' << format_double(phi.m1) << ',' << format_double(e)
                << '\n';
        }
        bool decreasing = true;
        for (std::size_t i = 1; i < errs.size(); ++i)
            if (!(errs[i] < errs[i - 1])) decreasing = false;
        summary["e_sigma_decreasing"] = decreasing;
    }
    return summary;
}

} // namespace

json run_experiment(const ExperimentSpec& spec) {
    OutputDir out(spec.output_dir);
    json summary;
    if (spec.kind == "simulate") summary = run_simulate(spec, out);
    else if (spec.kind == "picard") summary = run_picard(spec, out);
    else if (spec.kind == "poc") summary = run_poc(spec, out);
    else if (spec.kind == "invariant") summary = run_invariant(spec, out);
    else if (spec.kind == "fpde") summary = run_fpde(spec, out);
    else summary = run_laplace(spec, out);
    out.finalize(spec.resolved, summary);
    return summary;
}

std::string describe_experiment(const ExperimentSpec& spec) {
    std::ostringstream os;
    os << "kind: " << spec.kind << "\n";
    os << "output_dir: " << spec.output_dir << "\n";
    os << "master_seed: " << spec.master_seed << "\n";
    os << "threads: " << (spec.threads > 0 ? spec.threads : hardware_threads()) << "\n";
    std::vector<std::string> files;
    if (const auto* p = std::get_if<SimulateParams>(&spec.params)) {
        const int steps = static_cast<int>(std::llround(p->horizon / p->dt));
        os << "plan: interacting run, N=" << p->n_x << " M=" << p->n_y << ", " << steps
           << " steps of dt=" << p->dt << "\n";
        os << "seed(simulate,0) = " << derive_stream(spec.master_seed, "simulate", 0) << "\n";
        const double tape_mb = static_cast<double>(p->n_x + p->n_y) * steps * 8.0 / 1048576.0;
        os << "estimated memory: noise tape " << tape_mb << " MiB\n";
        files = {"trajectory.csv", "moments.csv"};
    } else if (const auto* p = std::get_if<PicardRunParams>(&spec.params)) {
        os << "plan: picard iteration, T=" << p->horizon << ", up to " << p->max_iter
           << " Gamma evaluations with " << p->n_particles << " particles per species\n";
        os << "seed(picard,0) = " << derive_stream(spec.master_seed, "picard", 0) << "\n";
        const int steps = static_cast<int>(std::llround(p->horizon / p->dt));
        const double tape_mb = 2.0 * p->n_particles * steps * 8.0 / 1048576.0;
        os << "estimated memory: noise tape " << tape_mb << " MiB\n";
        files = {"iterations.csv", "drift.json"};
    } else if (const auto* p = std::get_if<PocParams>(&spec.params)) {
        os << "plan: " << p->schedule_n.size() << " x " << p->replicas << " = "
           << p->schedule_n.size() * static_cast<std::size_t>(p->replicas) << " coupled runs, T="
           << p->horizon << ", dt=" << p->dt << "\n";
        os << "schedule:";
        for (int n : p->schedule_n)
            os << " (N=" << n << ",M=" << static_cast<int>(std::llround(p->m_over_n * n)) << ")";
        os << "\n";
        os << "hat drift: picard with " << p->picard.n_particles << " particles, tol "
           << p->picard.tol << "\n";
        os << "seed(poc-picard,0) = " << derive_stream(spec.master_seed, "poc-picard", 0) << "\n";
        for (int n : p->schedule_n)
            os << "seed(poc-replica-N" << n << ",0) = "
               << derive_stream(spec.master_seed, "poc-replica-N" + std::to_string(n), 0) << "\n";
        const int maxn = *std::max_element(p->schedule_n.begin(), p->schedule_n.end());
        const int steps = static_cast<int>(std::llround(p->horizon / p->dt));
        const double tape_mb = (1.0 + p->m_over_n) * maxn * steps * 8.0 / 1048576.0;
        os << "estimated memory: largest noise tape " << tape_mb << " MiB per worker\n";
        files = {"results.csv", "ratefit.csv"};
    } else if (const auto* p = std::get_if<InvariantParams>(&spec.params)) {
        os << "plan: fixed-point search from " << p->start_points << "x" << p->start_points
           << " starts over [-" << p->start_extent << "," << p->start_extent << "]^2, "
           << p->n_nodes << "-node quadrature\n";
        if (!p->sigma_list.empty()) {
            os << "sigma scan:";
            for (double s : p->sigma_list) os << " " << s;
            os << "\n";
        }
        os << "estimated memory: quadrature tables " << p->n_nodes * 8.0 * 3 / 1048576.0 << " MiB\n";
        files = {"roots.csv"};
        if (p->export_densities) files.push_back("density_root<k>.csv");
    } else if (const auto* p = std::get_if<FpdeParams>(&spec.params)) {
        os << "plan: finite-volume evolution on [" << p->x_min << "," << p->x_max << "], "
           << p->n_cells << " cells, T=" << p->horizon
           << (p->dt > 0.0 ? ", dt=" + format_double(p->dt) : ", dt=auto") << "\n";
        os << "estimated memory: " << p->n_cells * 8.0 * 6 / 1048576.0 << " MiB of cell arrays\n";
        files = {"snapshots.csv", "masslog.csv"};
    } else if (const auto* p = std::get_if<LaplaceParams>(&spec.params)) {
        os << "plan: laplace expansion about m*=" << p->m_star << ", rho=(" << p->rho1 << ","
           << p->rho2 << "), " << p->sigma_list.size() << " sigma samples\n";
        os << "estimated memory: negligible\n";
        files = {"expansion.json"};
        if (!p->sigma_list.empty()) files.push_back("esigma.csv");
    }
    os << "files:";
    for (const auto& f : files) os << " " << f;
    os << " summary.json manifest.json\n";
    return os.str();
}

} // namespace mv2

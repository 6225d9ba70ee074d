#include "mv2/sde.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "mv2/util.hpp"

namespace mv2 {

namespace {

// Deterministic standard normals: raw mt19937_64 words -> (0,1] uniforms ->
// Box-Muller. std::normal_distribution is implementation-defined, so it is
// avoided on purpose.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace

void NoiseTape::fill(std::vector<double>& block, std::uint64_t seed, int n_particles, bool antithetic) {
    block.resize(static_cast<std::size_t>(n_particles) * static_cast<std::size_t>(n_steps_));
    if (antithetic && n_particles % 2 != 0)
        throw std::invalid_argument("NoiseTape: antithetic pairing needs an even particle count");
    GaussianStream g(seed);
    const double scale = std::sqrt(dt_);
    for (int p = 0; p < n_particles; ++p) {
        double* row = block.data() + static_cast<std::size_t>(p) * static_cast<std::size_t>(n_steps_);
        if (antithetic && p % 2 == 1) {
            const double* prev = row - n_steps_;
            for (int s = 0; s < n_steps_; ++s) row[s] = -prev[s];
        } else {
            for (int s = 0; s < n_steps_; ++s) row[s] = scale * g.next();
        }
    }
}

NoiseTape::NoiseTape(std::uint64_t seed, int n_x, int n_y, int n_steps, double dt, bool antithetic_pairs)
    : NoiseTape(derive_stream(seed, "noise-x", 0), derive_stream(seed, "noise-y", 0), n_x, n_y,
                n_steps, dt, antithetic_pairs, true) {}

NoiseTape::NoiseTape(std::uint64_t seed_x, std::uint64_t seed_y, int n_x, int n_y, int n_steps,
                     double dt, bool antithetic_pairs, bool)
    : n_x_(n_x), n_y_(n_y), n_steps_(n_steps), dt_(dt) {
    if (n_x < 1 || n_y < 0 || n_steps < 1 || !(dt > 0.0))
        throw std::invalid_argument("NoiseTape: need n_x >= 1, n_y >= 0, n_steps >= 1, dt > 0");
    fill(wx_, seed_x, n_x_, antithetic_pairs);
    fill(wy_, seed_y, n_y_, antithetic_pairs);
}

std::vector<double> sample_initial(const InitialCondition& ic, int n, std::uint64_t seed,
                                   bool antithetic) {
    if (n < 1) throw std::invalid_argument("sample_initial: n must be >= 1");
    if (antithetic && n % 2 != 0)
        throw std::invalid_argument("sample_initial: antithetic pairing needs even n");
    std::vector<double> xs(static_cast<std::size_t>(n));
    if (std::holds_alternative<PointMass>(ic)) {
        const double x0 = std::get<PointMass>(ic).x0;
        if (antithetic && x0 != 0.0)
            throw std::invalid_argument("sample_initial: antithetic point mass must sit at 0");
        for (double& v : xs) v = x0;
        return xs;
    }
    std::mt19937_64 engine(seed);
    GaussianStream g(seed);
    auto uniform01 = [&engine] { return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53; };
    const int step = antithetic ? 2 : 1;
    for (int i = 0; i < n; i += step) {
        double v;
        if (std::holds_alternative<GaussianInit>(ic)) {
            const auto& p = std::get<GaussianInit>(ic);
            if (p.var < 0.0) throw std::invalid_argument("sample_initial: variance must be >= 0");
            v = p.mean + std::sqrt(p.var) * g.next();
            if (antithetic && p.mean != 0.0)
                throw std::invalid_argument("sample_initial: antithetic Gaussian must have mean 0");
        } else {
            const auto& p = std::get<UniformInit>(ic);
            if (!(p.hi > p.lo)) throw std::invalid_argument("sample_initial: need hi > lo");
            if (antithetic && p.lo != -p.hi)
                throw std::invalid_argument("sample_initial: antithetic uniform must be symmetric");
            v = p.lo + (p.hi - p.lo) * uniform01();
        }
        xs[static_cast<std::size_t>(i)] = v;
        if (antithetic) xs[static_cast<std::size_t>(i) + 1] = -v;
    }
    return xs;
}

Ensemble make_ensemble(const ModelConfig& cfg, int n_x, int n_y, const InitialCondition& init_x,
                       const InitialCondition& init_y, std::uint64_t seed, bool antithetic) {
    if (n_x < 1 || n_y < 1) throw std::invalid_argument("make_ensemble: need N >= 1 and M >= 1");
    Ensemble ens;
    ens.x = sample_initial(init_x, n_x, derive_stream(seed, "init-x", 0), antithetic);
    ens.y = sample_initial(init_y, n_y, derive_stream(seed, "init-y", 0), antithetic);
    ens.sigma = cfg.sigma;
    ens.seed = seed;
    return ens;
}

namespace {

void check_finite(const Ensemble& ens, int step) {
    for (std::size_t i = 0; i < ens.x.size(); ++i)
        if (!std::isfinite(ens.x[i])) throw BlowUpError(Species::X, static_cast<int>(i), step, ens.t);
    for (std::size_t i = 0; i < ens.y.size(); ++i)
        if (!std::isfinite(ens.y[i])) throw BlowUpError(Species::Y, static_cast<int>(i), step, ens.t);
}

int required_moment_order(const InteractionSpec& inter) {
    int d = 1;
    for (const Polynomial* g : {&inter.grad_f11, &inter.grad_f12, &inter.grad_f21, &inter.grad_f22})
        d = std::max(d, g->is_zero() ? 1 : g->degree());
    return d;
}

} // namespace

Ensemble em_step_interacting(Ensemble ens, const ModelConfig& cfg, double dt, const NoiseTape& noise,
                             int step, PairwiseMode mode) {
    if (!(dt > 0.0)) throw std::invalid_argument("em_step_interacting: dt must be > 0");
    const int n = static_cast<int>(ens.x.size());
    const int m = static_cast<int>(ens.y.size());
    if (noise.count(Species::X) < n || noise.count(Species::Y) < m || step >= noise.steps())
        throw std::invalid_argument("em_step_interacting: noise slice too small");
    const auto& inter = cfg.interactions;
    if (mode == PairwiseMode::automatic)
        mode = inter.q <= 3 ? PairwiseMode::moment_expansion : PairwiseMode::direct;

    const double wx = static_cast<double>(n) / (n + m);
    const double wy = static_cast<double>(m) / (n + m);
    const Polynomial v1p = cfg.v1.derivative();
    const Polynomial v2p = cfg.v2.derivative();

    std::vector<double> new_x(ens.x.size()), new_y(ens.y.size());
    if (mode == PairwiseMode::moment_expansion) {
        const int order = required_moment_order(inter);
        const MomentVector mx = empirical_moments(ens.x, order);
        const MomentVector my = empirical_moments(ens.y, order);
        // (1/(N+M)) sum_j g(x - z_j) = weight * (g * empirical law)(x)
        const Polynomial sx_self = convolve_with_moments(inter.grad_f11, mx) * wx;
        const Polynomial sx_cross = convolve_with_moments(inter.grad_f12, my) * wy;
        const Polynomial sy_cross = convolve_with_moments(inter.grad_f21, mx) * wx;
        const Polynomial sy_self = convolve_with_moments(inter.grad_f22, my) * wy;
        for (int i = 0; i < n; ++i) {
            const double xi = ens.x[static_cast<std::size_t>(i)];
            const double drift = -v1p(xi) - sx_self(xi) - sx_cross(xi);
            new_x[static_cast<std::size_t>(i)] = xi + drift * dt + ens.sigma * noise.dw(Species::X, i, step);
        }
        for (int i = 0; i < m; ++i) {
            const double yi = ens.y[static_cast<std::size_t>(i)];
            // self term first, mirroring the X update exactly
            const double drift = -v2p(yi) - sy_self(yi) - sy_cross(yi);
            new_y[static_cast<std::size_t>(i)] = yi + drift * dt + ens.sigma * noise.dw(Species::Y, i, step);
        }
    } else {
        const double inv = 1.0 / (n + m);
        for (int i = 0; i < n; ++i) {
            const double xi = ens.x[static_cast<std::size_t>(i)];
            double s_self = 0.0, s_cross = 0.0;
            for (int j = 0; j < n; ++j) s_self += inter.grad_f11(xi - ens.x[static_cast<std::size_t>(j)]);
            for (int k = 0; k < m; ++k) s_cross += inter.grad_f12(xi - ens.y[static_cast<std::size_t>(k)]);
            const double drift = -v1p(xi) - inv * s_self - inv * s_cross;
            new_x[static_cast<std::size_t>(i)] = xi + drift * dt + ens.sigma * noise.dw(Species::X, i, step);
        }
        for (int i = 0; i < m; ++i) {
            const double yi = ens.y[static_cast<std::size_t>(i)];
            double s_cross = 0.0, s_self = 0.0;
            for (int j = 0; j < n; ++j) s_cross += inter.grad_f21(yi - ens.x[static_cast<std::size_t>(j)]);
            for (int k = 0; k < m; ++k) s_self += inter.grad_f22(yi - ens.y[static_cast<std::size_t>(k)]);
            const double drift = -v2p(yi) - inv * s_self - inv * s_cross;
            new_y[static_cast<std::size_t>(i)] = yi + drift * dt + ens.sigma * noise.dw(Species::Y, i, step);
        }
    }
    ens.x = std::move(new_x);
    ens.y = std::move(new_y);
    ens.t += dt;
    check_finite(ens, step);
    return ens;
}

Ensemble em_step_external(Ensemble ens, const ModelConfig& cfg, const DriftPair& drift, double dt,
                          const NoiseTape& noise, int step) {
    if (!(dt > 0.0)) throw std::invalid_argument("em_step_external: dt must be > 0");
    const int n = static_cast<int>(ens.x.size());
    const int m = static_cast<int>(ens.y.size());
    if (noise.count(Species::X) < n || noise.count(Species::Y) < m || step >= noise.steps())
        throw std::invalid_argument("em_step_external: noise slice too small");
    const double t = ens.t;
    // Validates [0, t+dt] lies inside the drift's domain up front.
    const Polynomial b1 = drift.poly_at(0, t);
    const Polynomial b2 = drift.poly_at(1, t);
    const Polynomial b3 = drift.poly_at(2, t);
    const Polynomial b4 = drift.poly_at(3, t);
    drift.poly_at(0, t + dt);
    const Polynomial v1p = cfg.v1.derivative();
    const Polynomial v2p = cfg.v2.derivative();
    // identical grouping to the interacting update so coupled runs with a
    // degenerate drift coincide bitwise
    for (int i = 0; i < n; ++i) {
        double& xi = ens.x[static_cast<std::size_t>(i)];
        const double d = -v1p(xi) - b1(xi) - b2(xi);
        xi = xi + d * dt + ens.sigma * noise.dw(Species::X, i, step);
    }
    for (int i = 0; i < m; ++i) {
        double& yi = ens.y[static_cast<std::size_t>(i)];
        // b4 (the within-species component) first, mirroring the X update
        const double d = -v2p(yi) - b4(yi) - b3(yi);
        yi = yi + d * dt + ens.sigma * noise.dw(Species::Y, i, step);
    }
    ens.t = t + dt;
    check_finite(ens, step);
    return ens;
}

Trajectory simulate(const Ensemble& ens0, const ModelConfig& cfg, const SimParams& params,
                    const SimMode& mode) {
    if (params.n_steps < 1 || !(params.dt > 0.0) || params.record_stride < 1)
        throw std::invalid_argument("simulate: need n_steps >= 1, dt > 0, record_stride >= 1");
    check_finite(ens0, 0);

    const int order = std::max(2 * cfg.interactions.q - 1, 4);
    NoiseTape tape(params.seed, static_cast<int>(ens0.x.size()), static_cast<int>(ens0.y.size()),
                   params.n_steps, params.dt);

    Trajectory traj;
    traj.moment_order = order;
    auto record_moments = [&](const Ensemble& e) {
        traj.times.push_back(e.t);
        traj.x_moments.push_back(empirical_moments(e.x, order));
        traj.y_moments.push_back(empirical_moments(e.y, order));
    };
    auto record_positions = [&](const Ensemble& e, int step) {
        traj.recorded_steps.push_back(step);
        traj.x_snapshots.push_back(e.x);
        traj.y_snapshots.push_back(e.y);
    };

    Ensemble ens = ens0;
    record_moments(ens);
    record_positions(ens, 0);
    for (int s = 0; s < params.n_steps; ++s) {
        if (std::holds_alternative<InteractingMode>(mode)) {
            ens = em_step_interacting(std::move(ens), cfg, params.dt, tape, s,
                                      std::get<InteractingMode>(mode).pairwise);
        } else {
            ens = em_step_external(std::move(ens), cfg, *std::get<ExternalMode>(mode).drift,
                                   params.dt, tape, s);
        }
        record_moments(ens);
        if ((s + 1) % params.record_stride == 0 || s + 1 == params.n_steps)
            record_positions(ens, s + 1);
    }
    return traj;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,species,index,position\n";
    for (std::size_t r = 0; r < traj.recorded_steps.size(); ++r) {
        const double t = traj.times[static_cast<std::size_t>(traj.recorded_steps[r])];
        for (std::size_t i = 0; i < traj.x_snapshots[r].size(); ++i)
            out << format_double(t) << ",x," << i << ',' << format_double(traj.x_snapshots[r][i]) << '\n';
        for (std::size_t i = 0; i < traj.y_snapshots[r].size(); ++i)
            out << format_double(t) << ",y," << i << ',' << format_double(traj.y_snapshots[r][i]) << '\n';
    }
}

void write_moments_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,species,m0,m1,m2,m3,m4\n";
    auto row = [&](double t, const char* sp, const MomentVector& m) {
        out << format_double(t) << ',' << sp;
        for (int k = 0; k <= 4; ++k) out << ',' << format_double(m[k]);
        out << '\n';
    };
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
        row(traj.times[s], "x", traj.x_moments[s]);
        row(traj.times[s], "y", traj.y_moments[s]);
    }
}

} // namespace mv2

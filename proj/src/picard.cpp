#include "mv2/picard.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mv2/util.hpp"

namespace mv2 {

std::vector<double> aligned_time_grid(double T, double dt, int n_segments) {
    if (!(T > 0.0) || !(dt > 0.0) || n_segments < 1)
        throw std::invalid_argument("aligned_time_grid: need T > 0, dt > 0, n_segments >= 1");
    const double steps_real = T / dt;
    const int n_steps = static_cast<int>(std::llround(steps_real));
    if (n_steps < 1 || std::abs(steps_real - n_steps) > 1e-9 * std::max(1.0, steps_real))
        throw std::invalid_argument("aligned_time_grid: T must be an integer multiple of dt");
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n_segments) + 1);
    int prev = -1;
    for (int l = 0; l <= n_segments; ++l) {
        int idx = static_cast<int>(std::llround(static_cast<double>(l) * n_steps / n_segments));
        if (idx <= prev) idx = prev + 1; // keep strictly increasing on coarse step grids
        if (idx > n_steps) break;
        grid.push_back(idx * dt);
        prev = idx;
    }
    if (std::llround(grid.back() / dt) != n_steps) grid.push_back(n_steps * dt);
    return grid;
}

DriftPair gamma_map(const DriftPair& b, const ModelConfig& cfg, const GammaMcParams& mc) {
    const AssumptionReport rep = validate_assumptions(cfg);
    if (rep.hypothesis(7).verdict != Verdict::satisfied ||
        rep.hypothesis(8).verdict != Verdict::satisfied)
        throw std::invalid_argument("gamma_map: config must satisfy H7 and H8");
    if (mc.n_particles < 2) throw std::invalid_argument("gamma_map: need n_particles >= 2");

    const double T = b.horizon();
    const double steps_real = T / mc.dt;
    const int n_steps = static_cast<int>(std::llround(steps_real));
    if (n_steps < 1 || std::abs(steps_real - n_steps) > 1e-9 * std::max(1.0, steps_real))
        throw std::invalid_argument("gamma_map: drift horizon must be an integer multiple of dt");
    std::vector<int> node_steps;
    node_steps.reserve(b.time_grid.size());
    for (double t : b.time_grid) {
        const int idx = static_cast<int>(std::llround(t / mc.dt));
        if (std::abs(idx * mc.dt - t) > 1e-9 * std::max(1.0, T))
            throw std::invalid_argument("gamma_map: drift grid node off the dt grid");
        node_steps.push_back(idx);
    }

    const int q = cfg.interactions.q;
    const int order = 2 * q - 1;

    Ensemble ens = make_ensemble(cfg, mc.n_particles, mc.n_particles, mc.init_x, mc.init_y,
                                 derive_stream(mc.seed, "gamma-init", 0), mc.antithetic);
    NoiseTape tape(derive_stream(mc.seed, "gamma-noise", 0), mc.n_particles, mc.n_particles, n_steps,
                   mc.dt, mc.antithetic);

    DriftPair out = DriftPair::zero(b.time_grid);
    const auto& g = cfg.interactions;
    std::size_t node = 0;
    auto capture = [&](const Ensemble& e) {
        const MomentVector mx = empirical_moments(e.x, order);
        const MomentVector my = empirical_moments(e.y, order);
        out.components[0][node] = cfg.a * convolve_with_moments(g.grad_f11, mx);
        out.components[1][node] = (1.0 - cfg.a) * convolve_with_moments(g.grad_f12, my);
        out.components[2][node] = cfg.a * convolve_with_moments(g.grad_f21, mx);
        out.components[3][node] = (1.0 - cfg.a) * convolve_with_moments(g.grad_f22, my);
        // Gamma outputs inherit the monotone class from the odd increasing
        // self gradients: nonzero components keep a positive leading coefficient.
        for (int c : {0, 3})
            if (!out.components[static_cast<std::size_t>(c)][node].is_zero() &&
                out.components[static_cast<std::size_t>(c)][node].leading() <= 0.0)
                throw std::logic_error("gamma_map: output lost the increasing-drift class");
        ++node;
    };

    if (node_steps[0] == 0) capture(ens);
    for (int s = 0; s < n_steps; ++s) {
        ens = em_step_external(std::move(ens), cfg, b, mc.dt, tape, s);
        while (node < node_steps.size() && node_steps[node] == s + 1) capture(ens);
    }
    if (node != node_steps.size()) throw std::logic_error("gamma_map: grid nodes left uncaptured");
    return out;
}

PicardResult picard_solve(const ModelConfig& cfg, double T, const GammaMcParams& mc,
                          const PicardOptions& opts) {
    if (!(opts.tol > 0.0)) throw std::invalid_argument("picard_solve: tol must be > 0");
    PicardResult res;
    res.drift = DriftPair::zero(aligned_time_grid(T, mc.dt, opts.n_segments));
    const int q = cfg.interactions.q;

    double prev_diff = 0.0;
    for (int p = 1; p <= opts.max_iter; ++p) {
        const auto t0 = std::chrono::steady_clock::now();
        DriftPair next = gamma_map(res.drift, cfg, mc);
        const double diff = norm_T(next - res.drift, q, opts.norm_grid).total;
        const auto t1 = std::chrono::steady_clock::now();

        PicardIteration it;
        it.iter = p;
        it.norm_diff = diff;
        it.contraction_ratio = (p > 1 && prev_diff > 0.0) ? diff / prev_diff : 0.0;
        it.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        if (opts.k_ball > 0.0) {
            const DriftNorms norms = norm_T(next, q, opts.norm_grid);
            for (double c : norms.component)
                if (c > opts.k_ball) it.within_k_ball = false;
        }
        res.log.push_back(it);

        res.drift = std::move(next);
        prev_diff = diff;
        if (diff < opts.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

double contraction_diagnostic(const ModelConfig& cfg, double T, const GammaMcParams& mc,
                              const DriftPair& b, const DriftPair& c, const GridSpec& grid) {
    if (b.horizon() != c.horizon() || std::abs(b.horizon() - T) > 1e-12 * std::max(1.0, T))
        throw std::invalid_argument("contraction_diagnostic: drifts must live on [0,T]");
    const int q = cfg.interactions.q;
    const double denom = norm_T(b - c, q, grid).total;
    if (denom == 0.0) throw std::invalid_argument("contraction_diagnostic: b and c coincide under the norm");
    const DriftPair gb = gamma_map(b, cfg, mc);
    const DriftPair gc = gamma_map(c, cfg, mc);
    return norm_T(gb - gc, q, grid).total / denom;
}

void write_iteration_log_csv(const std::string& path, const std::vector<PicardIteration>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "iter,norm_diff,contraction_ratio,wall_time_ms\n";
    for (const auto& it : log)
        out << it.iter << ',' << format_double(it.norm_diff) << ','
            << format_double(it.contraction_ratio) << ',' << format_double(it.wall_time_ms) << '\n';
}

void write_drift_json(const std::string& path, const DriftPair& b) {
    nlohmann::json j;
    j["time_grid"] = b.time_grid;
    auto coeffs = [](const Polynomial& p) {
        return p.is_zero() ? std::vector<double>{0.0} : p.coeffs();
    };
    for (int c = 0; c < 4; ++c) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& p : b.components[static_cast<std::size_t>(c)]) nodes.push_back(coeffs(p));
        j["components"]["b" + std::to_string(c + 1)] = std::move(nodes);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << j.dump(2) << '\n';
}

DriftPair read_drift_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    in >> j;
    DriftPair b = DriftPair::zero(j.at("time_grid").get<std::vector<double>>());
    for (int c = 0; c < 4; ++c) {
        const auto& nodes = j.at("components").at("b" + std::to_string(c + 1));
        if (nodes.size() != b.time_grid.size())
            throw std::runtime_error("drift json: node count mismatch");
        for (std::size_t l = 0; l < nodes.size(); ++l)
            b.components[static_cast<std::size_t>(c)][l] =
                Polynomial(nodes[l].get<std::vector<double>>());
    }
    return b;
}

} // namespace mv2

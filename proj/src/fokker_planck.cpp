#include "mv2/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mv2/errors.hpp"
#include "mv2/moments.hpp"
#include "mv2/util.hpp"

namespace mv2 {

Grid1D Grid1D::uniform(double x_min, double x_max, int n_cells) {
    if (!(x_max > x_min) || n_cells < 16)
        throw std::invalid_argument("Grid1D: need x_max > x_min and n_cells >= 16");
    Grid1D g;
    g.x_min = x_min;
    g.x_max = x_max;
    g.n_cells = n_cells;
    g.h = (x_max - x_min) / n_cells;
    g.centers.resize(static_cast<std::size_t>(n_cells));
    for (int i = 0; i < n_cells; ++i) g.centers[static_cast<std::size_t>(i)] = x_min + (i + 0.5) * g.h;
    return g;
}

double cell_mass(const std::vector<double>& dens, const Grid1D& grid) {
    double s = 0.0;
    for (double v : dens) s += v;
    return s * grid.h;
}

double cell_mean(const std::vector<double>& dens, const Grid1D& grid) {
    double s = 0.0;
    for (std::size_t i = 0; i < dens.size(); ++i) s += dens[i] * grid.centers[i];
    return s * grid.h / cell_mass(dens, grid);
}

DensityPair gaussian_density_pair(const Grid1D& grid, double mean_mu, double var_mu, double mean_nu,
                                  double var_nu) {
    auto fill = [&grid](double mean, double var) {
        std::vector<double> d(grid.centers.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double z = grid.centers[i] - mean;
            d[i] = std::exp(-z * z / (2.0 * var));
        }
        const double mass = cell_mass(d, grid);
        for (double& v : d) v /= mass;
        return d;
    };
    return DensityPair{fill(mean_mu, var_mu), fill(mean_nu, var_nu), 0.0};
}

DensityPair density_from_root(const MeanPair& m, const ModelConfig& cfg, const Grid1D& grid) {
    StationaryPair on_grid = stationary_density(m, cfg, grid.centers);
    DensityPair dp{std::move(on_grid.mu), std::move(on_grid.nu), 0.0};
    const double mx = cell_mass(dp.mu, grid);
    const double my = cell_mass(dp.nu, grid);
    for (double& v : dp.mu) v /= mx;
    for (double& v : dp.nu) v /= my;
    return dp;
}

namespace {

int moment_order_for(const InteractionSpec& inter) {
    int d = 1;
    for (const Polynomial* g : {&inter.grad_f11, &inter.grad_f12, &inter.grad_f21, &inter.grad_f22})
        d = std::max(d, g->is_zero() ? 1 : g->degree());
    return d;
}

// Raw moments of the cell measure h * dens (mass included, not renormalized).
MomentVector grid_moments(const std::vector<double>& dens, const Grid1D& grid, int order) {
    std::vector<double> m(static_cast<std::size_t>(order) + 1, 0.0);
    for (std::size_t i = 0; i < dens.size(); ++i) {
        double p = dens[i] * grid.h;
        for (int k = 0; k <= order; ++k) {
            m[static_cast<std::size_t>(k)] += p;
            p *= grid.centers[i];
        }
    }
    return MomentVector{std::move(m)};
}

} // namespace

DriftField assemble_drift_field(const DensityPair& dp, const ModelConfig& cfg, const Grid1D& grid) {
    const int order = moment_order_for(cfg.interactions);
    const MomentVector mx = grid_moments(dp.mu, grid, order);
    const MomentVector my = grid_moments(dp.nu, grid, order);
    const auto& inter = cfg.interactions;
    // drift_x(x) = V1'(x) + a (g11*mu)(x) + (1-a) (g12*nu)(x); same shape for y.
    Polynomial bx = cfg.v1.derivative();
    bx += cfg.a * convolve_with_moments(inter.grad_f11, mx);
    bx += (1.0 - cfg.a) * convolve_with_moments(inter.grad_f12, my);
    Polynomial by = cfg.v2.derivative();
    by += cfg.a * convolve_with_moments(inter.grad_f21, mx);
    by += (1.0 - cfg.a) * convolve_with_moments(inter.grad_f22, my);

    DriftField f;
    f.face_x.resize(static_cast<std::size_t>(grid.n_cells) + 1);
    f.face_y.resize(static_cast<std::size_t>(grid.n_cells) + 1);
    for (int i = 0; i <= grid.n_cells; ++i) {
        const double x = grid.face(i);
        f.face_x[static_cast<std::size_t>(i)] = bx(x);
        f.face_y[static_cast<std::size_t>(i)] = by(x);
    }
    return f;
}

namespace {

double max_abs_face(const DriftField& f) {
    double m = 0.0;
    for (double v : f.face_x) m = std::max(m, std::abs(v));
    for (double v : f.face_y) m = std::max(m, std::abs(v));
    return m;
}

// Chang-Cooper weight: delta(w) = 1/w - 1/(e^w - 1); delta(0) = 1/2.
double chang_cooper_delta(double w) {
    if (std::abs(w) < 1e-5) return 0.5 - w / 12.0;
    return 1.0 / w - 1.0 / std::expm1(w);
}

// Total flux G_{i+1/2} = A f_face + D (f_{i+1} - f_i)/h at the interior
// faces, zero at the boundary faces. The scheme evolves d f_i/dt =
// (G_{i+1/2} - G_{i-1/2})/h.
void face_fluxes(const std::vector<double>& f, const std::vector<double>& drift_face,
                 const Grid1D& grid, double diffusion, FluxScheme scheme, std::vector<double>& G) {
    const int n = grid.n_cells;
    G.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 1; i < n; ++i) {
        const double A = drift_face[static_cast<std::size_t>(i)];
        const double lo = f[static_cast<std::size_t>(i - 1)];
        const double hi = f[static_cast<std::size_t>(i)];
        double delta;
        if (scheme == FluxScheme::chang_cooper && diffusion > 0.0)
            delta = chang_cooper_delta(A * grid.h / diffusion);
        else
            delta = 0.5;
        const double f_face = delta * lo + (1.0 - delta) * hi;
        G[static_cast<std::size_t>(i)] = A * f_face + diffusion * (hi - lo) / grid.h;
    }
}

void apply_operator(const std::vector<double>& f, const std::vector<double>& drift_face,
                    const Grid1D& grid, double diffusion, FluxScheme scheme,
                    std::vector<double>& out) {
    static thread_local std::vector<double> G;
    face_fluxes(f, drift_face, grid, diffusion, scheme, G);
    out.resize(f.size());
    for (int i = 0; i < grid.n_cells; ++i)
        out[static_cast<std::size_t>(i)] =
            (G[static_cast<std::size_t>(i) + 1] - G[static_cast<std::size_t>(i)]) / grid.h;
}

} // namespace

double cfl_dt_bound(const DensityPair& dp, const ModelConfig& cfg, const Grid1D& grid) {
    const DriftField field = assemble_drift_field(dp, cfg, grid);
    const double vmax = max_abs_face(field);
    const double sigma2 = cfg.sigma * cfg.sigma;
    double bound = 0.4 * grid.h * grid.h / std::max(sigma2, 1e-300);
    if (vmax > 0.0) bound = std::min(bound, 0.4 * grid.h / vmax);
    return bound;
}

DensityPair fp_step(const DensityPair& dp, const ModelConfig& cfg, const Grid1D& grid, double dt,
                    FluxScheme scheme) {
    if (dp.mu.size() != static_cast<std::size_t>(grid.n_cells) ||
        dp.nu.size() != static_cast<std::size_t>(grid.n_cells))
        throw std::invalid_argument("fp_step: density size does not match the grid");
    const double bound = cfl_dt_bound(dp, cfg, grid);
    if (dt > bound * (1.0 + 1e-12)) throw CflError(dt, bound);

    const DriftField field = assemble_drift_field(dp, cfg, grid);
    const double diffusion = 0.5 * cfg.sigma * cfg.sigma;

    DensityPair out;
    out.t = dp.t + dt;
    std::vector<double> rhs;
    apply_operator(dp.mu, field.face_x, grid, diffusion, scheme, rhs);
    out.mu.resize(dp.mu.size());
    for (std::size_t i = 0; i < dp.mu.size(); ++i) out.mu[i] = dp.mu[i] + dt * rhs[i];
    apply_operator(dp.nu, field.face_y, grid, diffusion, scheme, rhs);
    out.nu.resize(dp.nu.size());
    for (std::size_t i = 0; i < dp.nu.size(); ++i) out.nu[i] = dp.nu[i] + dt * rhs[i];

    for (const auto* dens : {&out.mu, &out.nu})
        for (double v : *dens)
            if (v < 0.0)
                throw std::runtime_error("fp_step: negative density at t=" + std::to_string(out.t));
    return out;
}

namespace {

void check_domain_adequacy(const DensityPair& dp, double t) {
    for (const auto* dens : {&dp.mu, &dp.nu}) {
        const double peak = *std::max_element(dens->begin(), dens->end());
        if (dens->front() > 1e-12 * peak || dens->back() > 1e-12 * peak)
            throw QuadratureDomainError("fp_evolve: boundary density above 1e-12 of peak at t=" +
                                        std::to_string(t));
    }
}

} // namespace

std::pair<DensityPair, EvolveLog> fp_evolve(const DensityPair& dp0, const ModelConfig& cfg,
                                            const Grid1D& grid, double T, double dt,
                                            int record_stride, FluxScheme scheme) {
    if (!(T > 0.0) || !(dt > 0.0) || record_stride < 1)
        throw std::invalid_argument("fp_evolve: need T > 0, dt > 0, record_stride >= 1");
    const int n_steps = static_cast<int>(std::ceil(T / dt - 1e-12));
    check_domain_adequacy(dp0, dp0.t);

    EvolveLog log;
    auto record = [&](const DensityPair& dp) {
        log.t.push_back(dp.t);
        log.mass_mu.push_back(cell_mass(dp.mu, grid));
        log.mass_nu.push_back(cell_mass(dp.nu, grid));
        log.mean_mu.push_back(cell_mean(dp.mu, grid));
        log.mean_nu.push_back(cell_mean(dp.nu, grid));
    };

    DensityPair dp = dp0;
    record(dp);
    for (int s = 0; s < n_steps; ++s) {
        const double step_dt = std::min(dt, T - s * dt);
        dp = fp_step(dp, cfg, grid, step_dt, scheme);
        if ((s + 1) % record_stride == 0 || s + 1 == n_steps) {
            check_domain_adequacy(dp, dp.t);
            record(dp);
        }
    }
    return {std::move(dp), std::move(log)};
}

std::pair<double, double> fp_residual(const DensityPair& dp, const ModelConfig& cfg,
                                      const Grid1D& grid, FluxScheme scheme) {
    const DriftField field = assemble_drift_field(dp, cfg, grid);
    const double diffusion = 0.5 * cfg.sigma * cfg.sigma;
    std::vector<double> rhs;
    double res_mu = 0.0, res_nu = 0.0;
    apply_operator(dp.mu, field.face_x, grid, diffusion, scheme, rhs);
    for (double v : rhs) res_mu += std::abs(v);
    apply_operator(dp.nu, field.face_y, grid, diffusion, scheme, rhs);
    for (double v : rhs) res_nu += std::abs(v);
    return {res_mu * grid.h, res_nu * grid.h};
}

std::pair<double, double> fp_residual(const StationaryPair& sp, const ModelConfig& cfg,
                                      const Grid1D& grid, FluxScheme scheme) {
    if (sp.grid.size() != grid.centers.size())
        throw std::invalid_argument("fp_residual: stationary pair not sampled on this grid");
    for (std::size_t i = 0; i < sp.grid.size(); ++i)
        if (std::abs(sp.grid[i] - grid.centers[i]) > 1e-12 * std::max(1.0, std::abs(grid.centers[i])))
            throw std::invalid_argument("fp_residual: stationary pair not sampled on this grid");
    return fp_residual(DensityPair{sp.mu, sp.nu, 0.0}, cfg, grid, scheme);
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b, const Grid1D& grid) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s * grid.h;
}

void write_density_snapshots_csv(const std::string& path, const std::vector<DensityPair>& snaps,
                                 const Grid1D& grid) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "t,x,mu,nu\n";
    for (const DensityPair& dp : snaps)
        for (std::size_t i = 0; i < grid.centers.size(); ++i)
            out << format_double(dp.t) << ',' << format_double(grid.centers[i]) << ','
                << format_double(dp.mu[i]) << ',' << format_double(dp.nu[i]) << '\n';
}

void write_residual_report_csv(const std::string& path,
                               const std::vector<std::tuple<double, double, double>>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "grid_h,res_mu,res_nu\n";
    for (const auto& [h, rmu, rnu] : rows)
        out << format_double(h) << ',' << format_double(rmu) << ',' << format_double(rnu) << '\n';
}

} // namespace mv2

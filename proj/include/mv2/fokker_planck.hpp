#pragma once

#include <string>
#include <vector>

#include "mv2/invariant.hpp"
#include "mv2/model.hpp"

namespace mv2 {

// Uniform finite-volume grid; cell centers at x_min + (i + 1/2) h.
struct Grid1D {
    double x_min = -1.0;
    double x_max = 1.0;
    int n_cells = 16;
    double h = 0.0;
    std::vector<double> centers;

    static Grid1D uniform(double x_min, double x_max, int n_cells);
    double face(int i) const { return x_min + i * h; } // i = 0..n_cells
};

struct DensityPair {
    std::vector<double> mu;
    std::vector<double> nu;
    double t = 0.0;
};

double cell_mass(const std::vector<double>& dens, const Grid1D& grid);
double cell_mean(const std::vector<double>& dens, const Grid1D& grid);

DensityPair gaussian_density_pair(const Grid1D& grid, double mean_mu, double var_mu, double mean_nu,
                                  double var_nu);
// Stationary densities at the mean pair m sampled on the cell centers,
// renormalized to cell mass 1.
DensityPair density_from_root(const MeanPair& m, const ModelConfig& cfg, const Grid1D& grid);

struct DriftField {
    std::vector<double> face_x; // drift V1' + a gradF11*mu + (1-a) gradF12*nu at faces
    std::vector<double> face_y;
};

// Drift at every face. The convolution terms come from the grid moments of
// mu and nu, exact for polynomial gradients.
DriftField assemble_drift_field(const DensityPair& dp, const ModelConfig& cfg, const Grid1D& grid);

enum class FluxScheme { chang_cooper, central };

double cfl_dt_bound(const DensityPair& dp, const ModelConfig& cfg, const Grid1D& grid);

// One explicit step of the nonlocal Fokker-Planck system with no-flux
// boundaries. Advective flux uses Chang-Cooper weights (positivity, exact
// Gaussian equilibria for affine drift); central weights sit behind the
// scheme flag for accuracy studies. Throws CflError when
// dt > 0.4 min(h^2/sigma^2, h/max|drift|); throws on negative densities.
DensityPair fp_step(const DensityPair& dp, const ModelConfig& cfg, const Grid1D& grid, double dt,
                    FluxScheme scheme = FluxScheme::chang_cooper);

struct EvolveLog {
    std::vector<double> t;
    std::vector<double> mass_mu, mass_nu;
    std::vector<double> mean_mu, mean_nu;
};

// Repeated fp_step with a domain-adequacy check (boundary cells below 1e-12
// of the peak) at start and at every recorded step.
std::pair<DensityPair, EvolveLog> fp_evolve(const DensityPair& dp0, const ModelConfig& cfg,
                                            const Grid1D& grid, double T, double dt,
                                            int record_stride = 100,
                                            FluxScheme scheme = FluxScheme::chang_cooper);

// Discrete L1 norms of the stationary operator applied to the pair:
// residual_i = h sum |div(flux_i)| with the same fluxes fp_step uses.
std::pair<double, double> fp_residual(const DensityPair& dp, const ModelConfig& cfg,
                                      const Grid1D& grid, FluxScheme scheme = FluxScheme::chang_cooper);
std::pair<double, double> fp_residual(const StationaryPair& sp, const ModelConfig& cfg,
                                      const Grid1D& grid, FluxScheme scheme = FluxScheme::chang_cooper);

double l1_distance(const std::vector<double>& a, const std::vector<double>& b, const Grid1D& grid);

// CSV: `t,x,mu,nu` for a sequence of snapshots.
void write_density_snapshots_csv(const std::string& path, const std::vector<DensityPair>& snaps,
                                 const Grid1D& grid);
// CSV: `grid_h,res_mu,res_nu`.
void write_residual_report_csv(const std::string& path,
                               const std::vector<std::tuple<double, double, double>>& rows);

} // namespace mv2

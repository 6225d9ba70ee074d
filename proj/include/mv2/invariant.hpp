#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mv2/errors.hpp"
#include "mv2/model.hpp"

namespace mv2 {

struct MeanPair {
    double m1 = 0.0;
    double m2 = 0.0;
};

// alpha matrix when every interaction gradient is pure linear (alpha x),
// i.e. the quadratic-potential case the stationary theory covers.
std::optional<std::array<std::array<double, 2>, 2>> quadratic_alpha(const InteractionSpec& inter);

// tau_1 = a a11 + (1-a) a12, tau_2 = a a21 + (1-a) a22.
std::pair<double, double> tau_coefficients(const ModelConfig& cfg);

// Composite trapezoid on [-R, R] with symmetric nodes (exact +/- pairs).
// Construction verifies that both species' stationary exponents decay to
// below 1e-16 of their peak at the edges for every mean pair in
// [-m_max, m_max]^2.
class QuadratureRule {
public:
    static QuadratureRule for_model(const ModelConfig& cfg, double m_max, int n_nodes = 4097);
    // Explicit radius; still validates the tail criterion.
    static QuadratureRule with_radius(const ModelConfig& cfg, double m_max, double radius,
                                      int n_nodes);

    const std::vector<double>& nodes() const { return nodes_; }
    double radius() const { return nodes_.back(); }
    double spacing() const { return h_; }
    int n_nodes() const { return static_cast<int>(nodes_.size()); }
    double m_max() const { return m_max_; }

private:
    QuadratureRule() = default;
    std::vector<double> nodes_;
    double h_ = 0.0;
    double m_max_ = 0.0;
};

// Stationary exponent U_i(x) of species i in the quadratic-interaction case:
//   U_1 = V_1 + tau_1 x^2/2 - (a a11 m1 + (1-a) a12 m2) x, and symmetrically.
Polynomial stationary_exponent(const ModelConfig& cfg, Species species, const MeanPair& m);

// Self-consistency map of the mean pair (the right-hand side of the
// stationary mean system): Phi_i = int x w_i / int w_i with
// w_i = exp(-2 U_i / sigma^2), integrals by the rule with max-exponent
// stabilisation. Throws QuadratureDomainError when the integrand tail is
// not resolved at the rule edges.
MeanPair phi_map(const MeanPair& m, const ModelConfig& cfg, const QuadratureRule& rule);

enum class RootClass { stable, unstable };

struct RootInfo {
    MeanPair m;
    double residual = 0.0; // |Phi(m) - m|_inf
    RootClass classification = RootClass::stable;
    double spectral_radius = 0.0; // of DPhi at the root
};

struct StartDiagnostic {
    MeanPair start;
    MeanPair final;
    double residual = 0.0;
    bool accepted = false;
    int iterations = 0;
};

struct FixedPointResult {
    std::vector<RootInfo> roots;
    std::vector<StartDiagnostic> diagnostics;
};

struct FixedPointOptions {
    double damping = 0.5; // m <- (1-theta) m + theta Phi(m)
    double tol = 1e-10;
    int max_iter = 500;
    int n_threads = 1;
};

// Damped fixed-point iteration from every start, one central-difference
// Newton polish per start, dedup at radius 10 tol. (u,v) and (-u,-v) count
// as distinct roots: they are distinct measures.
FixedPointResult fixed_points(const ModelConfig& cfg, const QuadratureRule& rule,
                              const std::vector<MeanPair>& starts, const FixedPointOptions& opts);

// 7x7 uniform start grid over [-extent, extent]^2.
std::vector<MeanPair> default_start_grid(double extent, int points_per_side = 7);

struct StationaryPair {
    std::vector<double> grid;
    std::vector<double> mu;
    std::vector<double> nu;
    MeanPair means;     // trapezoid means of the densities
    double residual;    // |Phi(m) - m|_inf at the input mean pair
};

// Normalized stationary densities exp(-2U_i/sigma^2)/Z_i sampled on a
// uniform grid (trapezoid mass 1). The mean pair is not required to be a
// fixed point; its residual is recorded. Throws QuadratureDomainError when
// the grid does not cover the support (edge density above 1e-12 of peak).
StationaryPair stationary_density(const MeanPair& m, const ModelConfig& cfg,
                                  const std::vector<double>& grid_x);

// Lemma-backed symmetric invariant measure: requires even V1, V2, returns
// stationary_density at (0,0) and asserts the residual is at quadrature
// tolerance.
StationaryPair symmetric_invariant(const ModelConfig& cfg, const std::vector<double>& grid_x);

struct LaplaceExpansion {
    double m_star = 0.0;
    double k1 = 0.0, k2 = 0.0;
    double tau1 = 0.0, tau2 = 0.0;
    double rho_threshold = 0.0;
};

// First-order small-sigma expansion of Phi about a common nondegenerate
// minimizer m_star of V1 and V2: Phi_i(m* + rho_1 sigma^2, m* + rho_2
// sigma^2) = m* - k_i sigma^2 + o(sigma^2).
LaplaceExpansion laplace_expand(const ModelConfig& cfg, double m_star, double rho1, double rho2);

struct SigmaScanRow {
    double sigma = 0.0;
    int root_count = 0;
    std::vector<RootInfo> roots;
};

// fixed_points per sigma (decreasing list), warm-starting from the previous
// roots plus the fixed start grid.
std::vector<SigmaScanRow> sigma_scan(const ModelConfig& cfg, const std::vector<double>& sigma_list,
                                     const std::vector<MeanPair>& starts,
                                     const FixedPointOptions& opts, int n_nodes = 4097);

// CSV: `sigma,m1,m2,residual,classification`.
void write_roots_csv(const std::string& path, const std::vector<SigmaScanRow>& rows);
// CSV: `x,mu,nu`.
void write_density_csv(const std::string& path, const StationaryPair& sp);

} // namespace mv2

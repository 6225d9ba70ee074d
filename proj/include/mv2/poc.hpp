#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mv2/drift.hpp"
#include "mv2/model.hpp"
#include "mv2/sde.hpp"

namespace mv2 {

// One synchronous coupling of the interacting system with its mean-field
// copies: both systems start from the same positions and consume the same
// noise tape, so their pathwise distance is the chaos error, not sampling
// noise. Only the error summaries are kept, full paths are not stored.
struct CouplingRun {
    int n_index = 0;
    int N = 0, M = 0;
    double T = 0.0, dt = 0.0;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<double> omega_x;  // avg_i (X_i - hatX_i)^2 per recorded step
    std::vector<double> omega_y;
    std::vector<double> zeta_x;   // fourth-power analogue
    std::vector<double> zeta_y;
    double sup_sq_x = 0.0;        // sup_t (X_1 - hatX_1)^2 along this run
    double sup_sq_y = 0.0;
};

// Steps both systems in lockstep. The two initial ensembles must carry
// identical positions (coupling at t = 0); a mismatch is a contract
// violation. hat_drift must cover [0,T].
CouplingRun coupled_run(const ModelConfig& cfg, const Ensemble& interacting_init,
                        const Ensemble& hat_init, double T, double dt, std::uint64_t seed,
                        const DriftPair& hat_drift, int n_index = 0);

struct StatValue {
    double value = 0.0;
    double stderr_ = 0.0;
};

// Monte Carlo aggregates over replicas sharing (N, M, T, dt).
struct ErrorStats {
    int N = 0, M = 0, R = 0;
    double T = 0.0, dt = 0.0;
    std::vector<double> times;
    std::vector<double> omega, omega_se;         // replica mean of omega_x(t)
    std::vector<double> omega_hat, omega_hat_se; // Y species
    std::vector<double> zeta, zeta_se;
    std::vector<double> zeta_hat, zeta_hat_se;

    // Headline scalars: sup over the recorded grid of the mean curves, and
    // the replica average of the per-run sup (the pathwise statistic).
    StatValue sup_omega_x, sup_omega_y, sup_zeta_x, sup_zeta_y;
    StatValue esup_sq_x, esup_sq_y;

    std::vector<std::pair<std::string, StatValue>> named() const;
};

// Requires >= 2 replicas agreeing on (N, M, T, dt); throws
// std::invalid_argument otherwise.
ErrorStats error_stats(const std::vector<CouplingRun>& runs);

struct RateFit {
    double slope = 0.0;
    double ci_halfwidth = 0.0; // 2 * stderr of the slope
    double intercept = 0.0;
    double r2 = 0.0;
};

// Least squares of log(stat) against log(N) for every named statistic.
// Requires >= 4 distinct N sharing one N/M ratio.
std::map<std::string, RateFit> rate_fit(const std::vector<std::pair<int, ErrorStats>>& schedule);

// CSV: `N,M,R,stat,value,stderr`.
void write_error_stats_csv(const std::string& path, const std::vector<ErrorStats>& stats);
// CSV: `stat,slope,ci_halfwidth,intercept,r2`.
void write_rate_fit_csv(const std::string& path, const std::map<std::string, RateFit>& fits);

} // namespace mv2

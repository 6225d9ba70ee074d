#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mv2/picard.hpp"
#include "mv2/poc.hpp"
#include "mv2/util.hpp"

using namespace mv2;

namespace {

const Polynomial kQuad({0.0, 0.0, 0.5});
const Polynomial kDoubleWell({0.0, 0.0, -0.5, 0.0, 0.25});

ModelConfig quad_config(double alpha, double a, double sigma, Polynomial v1 = kQuad,
                        Polynomial v2 = kQuad) {
    QuadraticInteraction qi{{{{alpha, alpha}, {alpha, alpha}}}};
    return make_quadratic_config(std::move(v1), std::move(v2), qi, a, sigma);
}

DriftPair converged_drift(const ModelConfig& cfg, double T, double dt, int particles,
                          std::uint64_t seed) {
    GammaMcParams mc;
    mc.n_particles = particles;
    mc.dt = dt;
    mc.seed = seed;
    PicardOptions opts;
    opts.tol = 2e-3;
    opts.max_iter = 40;
    opts.n_segments = 10;
    const PicardResult res = picard_solve(cfg, T, mc, opts);
    REQUIRE(res.converged);
    return res.drift;
}

} // namespace

TEST_CASE("zero interactions couple pathwise exactly") {
    const ModelConfig cfg = quad_config(0.0, 0.5, 0.5);
    const DriftPair hat = DriftPair::zero(aligned_time_grid(0.5, 1e-2, 5));
    const Ensemble ens = make_ensemble(cfg, 8, 8, GaussianInit{}, GaussianInit{}, 3);
    const CouplingRun run = coupled_run(cfg, ens, ens, 0.5, 1e-2, 42, hat);
    for (double w : run.omega_x) CHECK(w == 0.0);
    for (double w : run.omega_y) CHECK(w == 0.0);
    for (double z : run.zeta_x) CHECK(z == 0.0);
    CHECK(run.sup_sq_x == 0.0);
    CHECK(run.sup_sq_y == 0.0);
}

TEST_CASE("mismatched initial data is a contract violation") {
    const ModelConfig cfg = quad_config(0.0, 0.5, 0.5);
    const DriftPair hat = DriftPair::zero(aligned_time_grid(0.5, 1e-2, 5));
    const Ensemble ens = make_ensemble(cfg, 4, 4, GaussianInit{}, GaussianInit{}, 3);
    Ensemble moved = ens;
    moved.x[2] += 0.5;
    CHECK_THROWS_AS(coupled_run(cfg, moved, ens, 0.5, 1e-2, 42, hat), std::invalid_argument);
}

TEST_CASE("coupling error shrinks along the particle schedule like C/N") {
    const ModelConfig cfg = quad_config(0.5, 0.5, 0.5);
    const double T = 0.5, dt = 1e-2;
    const DriftPair hat = converged_drift(cfg, T, dt, 4000, 7);
    std::vector<std::pair<int, double>> sup_by_n;
    double prev = 1e9, prev_esup = 1e9, prev_esup_se = 0.0;
    for (int n : {20, 80, 320}) {
        std::vector<CouplingRun> runs;
        for (int r = 0; r < 24; ++r) {
            const std::uint64_t seed = derive_stream(99, "poc-test", static_cast<std::uint64_t>(r));
            const Ensemble ens = make_ensemble(cfg, n, n, GaussianInit{}, GaussianInit{}, seed);
            runs.push_back(coupled_run(cfg, ens, ens, T, dt, seed, hat));
        }
        const ErrorStats st = error_stats(runs);
        CHECK(st.sup_omega_x.value > 0.0);
        CHECK(st.sup_omega_x.value < prev + 2.0 * st.sup_omega_x.stderr_);
        // pathwise sup statistic non-increasing up to 2 combined standard errors
        CHECK(st.esup_sq_x.value < prev_esup + 2.0 * (st.esup_sq_x.stderr_ + prev_esup_se));
        prev = st.sup_omega_x.value;
        prev_esup = st.esup_sq_x.value;
        prev_esup_se = st.esup_sq_x.stderr_;
        sup_by_n.emplace_back(n, st.esup_sq_x.value);
    }
    // C fitted on the smallest N predicts the largest within a factor 10
    const double C = sup_by_n.front().second * sup_by_n.front().first;
    const double predicted = C / sup_by_n.back().first;
    CHECK(sup_by_n.back().second < 10.0 * predicted);
    CHECK(sup_by_n.back().second > predicted / 10.0);
}

TEST_CASE("fourth-power statistic dominates the squared second at R = 100") {
    const ModelConfig cfg = quad_config(0.5, 0.5, 0.5);
    const double T = 0.3, dt = 1e-2;
    const DriftPair hat = converged_drift(cfg, T, dt, 2000, 13);
    std::vector<CouplingRun> runs;
    for (int r = 0; r < 100; ++r) {
        const std::uint64_t seed = derive_stream(7, "poc-jensen", static_cast<std::uint64_t>(r));
        const Ensemble ens = make_ensemble(cfg, 16, 16, GaussianInit{}, GaussianInit{}, seed);
        runs.push_back(coupled_run(cfg, ens, ens, T, dt, seed, hat));
    }
    const ErrorStats st = error_stats(runs);
    // Jensen: E[D^4] >= (E[D^2])^2, asserted within 3 combined standard errors
    for (std::size_t t = 0; t < st.times.size(); t += 5) {
        const double lhs = st.zeta[t];
        const double rhs = st.omega[t] * st.omega[t];
        const double slack = 3.0 * (st.zeta_se[t] + 2.0 * st.omega[t] * st.omega_se[t]);
        CHECK(lhs >= rhs - slack);
    }
}

TEST_CASE("error_stats contracts") {
    const ModelConfig cfg = quad_config(0.0, 0.5, 0.5);
    const DriftPair hat = DriftPair::zero(aligned_time_grid(0.2, 1e-2, 2));
    const Ensemble ens = make_ensemble(cfg, 4, 4, GaussianInit{}, GaussianInit{}, 3);
    const CouplingRun one = coupled_run(cfg, ens, ens, 0.2, 1e-2, 42, hat);
    CHECK_THROWS_AS(error_stats({one}), std::invalid_argument); // R < 2
    CouplingRun other = one;
    other.N += 1;
    CHECK_THROWS_AS(error_stats({one, other}), std::invalid_argument);
}

TEST_CASE("rate_fit recovers planted decay rates") {
    auto fake_stats = [](int n, double value) {
        ErrorStats st;
        st.N = n;
        st.M = n;
        st.R = 10;
        st.T = 1.0;
        st.dt = 0.1;
        const StatValue v{value, value * 0.01};
        st.sup_omega_x = st.sup_omega_y = v;
        st.sup_zeta_x = st.sup_zeta_y = StatValue{value * value, 0.0};
        st.esup_sq_x = st.esup_sq_y = v;
        return st;
    };
    std::vector<std::pair<int, ErrorStats>> schedule;
    for (int n : {50, 100, 200, 400}) schedule.emplace_back(n, fake_stats(n, 1.0 / n));
    const auto fits = rate_fit(schedule);
    CHECK(fits.at("sup_omega_x").slope == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(fits.at("sup_omega_x").r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fits.at("sup_zeta_x").slope == doctest::Approx(-2.0).epsilon(1e-12));

    // fewer than 4 distinct N
    std::vector<std::pair<int, ErrorStats>> short_sched(schedule.begin(), schedule.begin() + 3);
    CHECK_THROWS_AS(rate_fit(short_sched), std::invalid_argument);

    // broken ratio
    auto bad = schedule;
    bad[1].second.M = 3 * bad[1].second.N;
    CHECK_THROWS_AS(rate_fit(bad), std::invalid_argument);
}

TEST_CASE("species swap mirrors the statistics exactly") {
    // asymmetric model so the mirror is nontrivial
    QuadraticInteraction qi{{{{0.6, 0.3}, {0.2, 0.9}}}};
    const Polynomial v1 = kQuad;
    const Polynomial v2({0.0, 0.1, 0.6}); // x^2 * 0.6 + 0.1 x
    const ModelConfig cfg = make_quadratic_config(v1, v2, qi, 0.4, 0.5);
    QuadraticInteraction qim{{{{0.9, 0.2}, {0.3, 0.6}}}};
    const ModelConfig mirror = make_quadratic_config(v2, v1, qim, 0.6, 0.5);

    // hand-built hat drift and its mirror (components reversed)
    DriftPair hat = DriftPair::zero(aligned_time_grid(0.3, 1e-2, 3));
    for (std::size_t l = 0; l < hat.time_grid.size(); ++l) {
        hat.components[0][l] = Polynomial({0.01 * static_cast<double>(l), 0.24});
        hat.components[1][l] = Polynomial({-0.02, 0.18});
        hat.components[2][l] = Polynomial({0.005, 0.08});
        hat.components[3][l] = Polynomial({0.0, 0.54});
    }
    DriftPair hat_m = DriftPair::zero(hat.time_grid);
    for (int c = 0; c < 4; ++c) hat_m.components[static_cast<std::size_t>(c)] = hat.components[static_cast<std::size_t>(3 - c)];

    const int N = 6, M = 9;
    const std::uint64_t sx = 1001, sy = 2002;
    const NoiseTape tape(sx, sy, N, M, 30, 1e-2, false, true);
    const NoiseTape tape_m(sy, sx, M, N, 30, 1e-2, false, true);

    Ensemble ens;
    ens.sigma = cfg.sigma;
    for (int i = 0; i < N; ++i) ens.x.push_back(0.1 * i - 0.3);
    for (int i = 0; i < M; ++i) ens.y.push_back(-0.2 * i + 0.55);
    Ensemble ens_m;
    ens_m.sigma = cfg.sigma;
    ens_m.x = ens.y;
    ens_m.y = ens.x;

    // step both coupled systems manually with the explicit tapes
    Ensemble sys = ens, hat_sys = ens, sys_m = ens_m, hat_sys_m = ens_m;
    for (int s = 0; s < 30; ++s) {
        sys = em_step_interacting(std::move(sys), cfg, 1e-2, tape, s);
        hat_sys = em_step_external(std::move(hat_sys), cfg, hat, 1e-2, tape, s);
        sys_m = em_step_interacting(std::move(sys_m), mirror, 1e-2, tape_m, s);
        hat_sys_m = em_step_external(std::move(hat_sys_m), mirror, hat_m, 1e-2, tape_m, s);
    }
    for (int i = 0; i < N; ++i) {
        CHECK(sys.x[static_cast<std::size_t>(i)] == sys_m.y[static_cast<std::size_t>(i)]);
        CHECK(hat_sys.x[static_cast<std::size_t>(i)] == hat_sys_m.y[static_cast<std::size_t>(i)]);
    }
    for (int i = 0; i < M; ++i) {
        CHECK(sys.y[static_cast<std::size_t>(i)] == sys_m.x[static_cast<std::size_t>(i)]);
        CHECK(hat_sys.y[static_cast<std::size_t>(i)] == hat_sys_m.x[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("csv writers emit the documented headers") {
    ErrorStats st;
    st.N = 10;
    st.M = 10;
    st.R = 2;
    write_error_stats_csv("poc_stats_test.csv", {st});
    std::ifstream in("poc_stats_test.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "N,M,R,stat,value,stderr");
    std::remove("poc_stats_test.csv");
}

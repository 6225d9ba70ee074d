#include "mv2/poc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mv2/util.hpp"

namespace mv2 {

CouplingRun coupled_run(const ModelConfig& cfg, const Ensemble& interacting_init,
                        const Ensemble& hat_init, double T, double dt, std::uint64_t seed,
                        const DriftPair& hat_drift, int n_index) {
    if (interacting_init.x != hat_init.x || interacting_init.y != hat_init.y)
        throw std::invalid_argument("coupled_run: initial positions must match pairwise");
    if (interacting_init.x.empty() || interacting_init.y.empty())
        throw std::invalid_argument("coupled_run: both species need at least one particle");
    const double steps_real = T / dt;
    const int n_steps = static_cast<int>(std::llround(steps_real));
    if (n_steps < 1 || std::abs(steps_real - n_steps) > 1e-9 * std::max(1.0, steps_real))
        throw std::invalid_argument("coupled_run: T must be an integer multiple of dt");
    if (hat_drift.horizon() < T - 1e-12 * std::max(1.0, T))
        throw std::invalid_argument("coupled_run: hat drift horizon shorter than T");

    CouplingRun run;
    run.n_index = n_index;
    run.N = static_cast<int>(interacting_init.x.size());
    run.M = static_cast<int>(interacting_init.y.size());
    run.T = T;
    run.dt = dt;
    run.seed = seed;

    NoiseTape tape(seed, run.N, run.M, n_steps, dt);
    Ensemble sys = interacting_init;
    Ensemble hat = hat_init;

    auto record = [&run](const Ensemble& a, const Ensemble& b) {
        double ox = 0.0, zx = 0.0, oy = 0.0, zy = 0.0;
        for (std::size_t i = 0; i < a.x.size(); ++i) {
            const double d2 = (a.x[i] - b.x[i]) * (a.x[i] - b.x[i]);
            ox += d2;
            zx += d2 * d2;
        }
        for (std::size_t i = 0; i < a.y.size(); ++i) {
            const double d2 = (a.y[i] - b.y[i]) * (a.y[i] - b.y[i]);
            oy += d2;
            zy += d2 * d2;
        }
        run.times.push_back(a.t);
        run.omega_x.push_back(ox / static_cast<double>(a.x.size()));
        run.omega_y.push_back(oy / static_cast<double>(a.y.size()));
        run.zeta_x.push_back(zx / static_cast<double>(a.x.size()));
        run.zeta_y.push_back(zy / static_cast<double>(a.y.size()));
        const double d1x = (a.x[0] - b.x[0]) * (a.x[0] - b.x[0]);
        const double d1y = (a.y[0] - b.y[0]) * (a.y[0] - b.y[0]);
        run.sup_sq_x = std::max(run.sup_sq_x, d1x);
        run.sup_sq_y = std::max(run.sup_sq_y, d1y);
    };

    record(sys, hat);
    for (int s = 0; s < n_steps; ++s) {
        sys = em_step_interacting(std::move(sys), cfg, dt, tape, s);
        hat = em_step_external(std::move(hat), cfg, hat_drift, dt, tape, s);
        record(sys, hat);
    }
    return run;
}

namespace {

void mean_se(const std::vector<double>& samples, double& mean, double& se) {
    const double n = static_cast<double>(samples.size());
    mean = 0.0;
    for (double v : samples) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : samples) ss += (v - mean) * (v - mean);
    se = std::sqrt(ss / (n - 1.0) / n);
}

void curve_stats(const std::vector<const std::vector<double>*>& curves, std::vector<double>& mean,
                 std::vector<double>& se, StatValue& sup) {
    const std::size_t steps = curves.front()->size();
    mean.assign(steps, 0.0);
    se.assign(steps, 0.0);
    std::vector<double> samples(curves.size());
    sup = StatValue{};
    for (std::size_t t = 0; t < steps; ++t) {
        for (std::size_t r = 0; r < curves.size(); ++r) samples[r] = (*curves[r])[t];
        mean_se(samples, mean[t], se[t]);
        if (mean[t] >= sup.value) sup = StatValue{mean[t], se[t]};
    }
}

} // namespace

std::vector<std::pair<std::string, StatValue>> ErrorStats::named() const {
    return {{"sup_omega_x", sup_omega_x}, {"sup_omega_y", sup_omega_y},
            {"sup_zeta_x", sup_zeta_x},   {"sup_zeta_y", sup_zeta_y},
            {"esup_sq_x", esup_sq_x},     {"esup_sq_y", esup_sq_y}};
}

ErrorStats error_stats(const std::vector<CouplingRun>& runs) {
    if (runs.size() < 2) throw std::invalid_argument("error_stats: need R >= 2 replicas");
    const CouplingRun& first = runs.front();
    for (const CouplingRun& r : runs)
        if (r.N != first.N || r.M != first.M || r.T != first.T || r.dt != first.dt ||
            r.times.size() != first.times.size())
            throw std::invalid_argument("error_stats: replicas disagree on (N, M, T, dt)");

    ErrorStats st;
    st.N = first.N;
    st.M = first.M;
    st.R = static_cast<int>(runs.size());
    st.T = first.T;
    st.dt = first.dt;
    st.times = first.times;

    auto gather = [&runs](std::vector<double> CouplingRun::* member) {
        std::vector<const std::vector<double>*> curves;
        curves.reserve(runs.size());
        for (const CouplingRun& r : runs) curves.push_back(&(r.*member));
        return curves;
    };
    curve_stats(gather(&CouplingRun::omega_x), st.omega, st.omega_se, st.sup_omega_x);
    curve_stats(gather(&CouplingRun::omega_y), st.omega_hat, st.omega_hat_se, st.sup_omega_y);
    curve_stats(gather(&CouplingRun::zeta_x), st.zeta, st.zeta_se, st.sup_zeta_x);
    curve_stats(gather(&CouplingRun::zeta_y), st.zeta_hat, st.zeta_hat_se, st.sup_zeta_y);

    std::vector<double> sx, sy;
    for (const CouplingRun& r : runs) {
        sx.push_back(r.sup_sq_x);
        sy.push_back(r.sup_sq_y);
    }
    mean_se(sx, st.esup_sq_x.value, st.esup_sq_x.stderr_);
    mean_se(sy, st.esup_sq_y.value, st.esup_sq_y.stderr_);
    return st;
}

std::map<std::string, RateFit> rate_fit(const std::vector<std::pair<int, ErrorStats>>& schedule) {
    std::vector<int> ns;
    for (const auto& [n, st] : schedule) ns.push_back(n);
    std::sort(ns.begin(), ns.end());
    ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
    if (ns.size() < 4) throw std::invalid_argument("rate_fit: need >= 4 distinct N");
    const auto& head = schedule.front().second;
    for (const auto& [n, st] : schedule) {
        if (st.N != n) throw std::invalid_argument("rate_fit: schedule key does not match stats");
        if (static_cast<long long>(st.M) * head.N != static_cast<long long>(head.M) * st.N)
            throw std::invalid_argument("rate_fit: N/M ratio must be fixed across the schedule");
    }

    std::map<std::string, RateFit> fits;
    for (const auto& [name, unused] : head.named()) {
        (void)unused;
        std::vector<double> xs, ys;
        for (const auto& [n, st] : schedule) {
            double value = 0.0;
            for (const auto& [k, v] : st.named())
                if (k == name) value = v.value;
            if (!(value > 0.0))
                throw std::invalid_argument("rate_fit: statistic " + name + " must be positive");
            xs.push_back(std::log(static_cast<double>(n)));
            ys.push_back(std::log(value));
        }
        const LinFit f = linfit(xs, ys);
        fits[name] = RateFit{f.slope, 2.0 * f.slope_stderr, f.intercept, f.r2};
    }
    return fits;
}

void write_error_stats_csv(const std::string& path, const std::vector<ErrorStats>& stats) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "N,M,R,stat,value,stderr\n";
    for (const ErrorStats& st : stats)
        for (const auto& [name, v] : st.named())
            out << st.N << ',' << st.M << ',' << st.R << ',' << name << ','
                << format_double(v.value) << ',' << format_double(v.stderr_) << '\n';
}

void write_rate_fit_csv(const std::string& path, const std::map<std::string, RateFit>& fits) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "stat,slope,ci_halfwidth,intercept,r2\n";
    for (const auto& [name, f] : fits)
        out << name << ',' << format_double(f.slope) << ',' << format_double(f.ci_halfwidth) << ','
            << format_double(f.intercept) << ',' << format_double(f.r2) << '\n';
}

} // namespace mv2

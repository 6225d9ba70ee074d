#include "mv2/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mv2 {

namespace {

int derive_q(const Polynomial& g11, const Polynomial& g22) {
    const int d = std::max(g11.is_zero() ? 1 : g11.degree(), g22.is_zero() ? 1 : g22.degree());
    return std::max(1, (d + 1) / 2);
}

bool valid_self_gradient(const Polynomial& g) {
    return g.odd_powers_only() && (g.is_zero() || g.leading() > 0.0);
}

} // namespace

InteractionSpec InteractionSpec::make(Polynomial g11, Polynomial g12, Polynomial g21, Polynomial g22) {
    if (!valid_self_gradient(g11))
        throw std::invalid_argument("InteractionSpec: grad_f11 must be odd with positive leading coefficient");
    if (!valid_self_gradient(g22))
        throw std::invalid_argument("InteractionSpec: grad_f22 must be odd with positive leading coefficient");
    if (g12.degree() > 1 || g21.degree() > 1)
        throw std::invalid_argument("InteractionSpec: cross gradients must have degree <= 1");
    return lenient(std::move(g11), std::move(g12), std::move(g21), std::move(g22));
}

InteractionSpec InteractionSpec::lenient(Polynomial g11, Polynomial g12, Polynomial g21, Polynomial g22) {
    InteractionSpec s;
    s.q = derive_q(g11, g22);
    s.grad_f11 = std::move(g11);
    s.grad_f12 = std::move(g12);
    s.grad_f21 = std::move(g21);
    s.grad_f22 = std::move(g22);
    return s;
}

InteractionSpec QuadraticInteraction::to_interaction() const {
    for (const auto& row : alpha)
        for (double v : row)
            if (!(v >= 0.0)) throw std::invalid_argument("QuadraticInteraction: alpha entries must be >= 0");
    auto lin = [](double c) { return Polynomial({0.0, c}); };
    return InteractionSpec::make(lin(alpha[0][0]), lin(alpha[0][1]), lin(alpha[1][0]), lin(alpha[1][1]));
}

void ModelConfig::check() const {
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("ModelConfig: a must be in [0,1]");
    if (!(sigma >= 0.0)) throw std::invalid_argument("ModelConfig: sigma must be >= 0");
}

ModelConfig make_config(Polynomial v1, Polynomial v2, InteractionSpec inter, double a, double sigma) {
    ModelConfig cfg{std::move(v1), std::move(v2), std::move(inter), a, sigma};
    cfg.check();
    return cfg;
}

ModelConfig make_quadratic_config(Polynomial v1, Polynomial v2, const QuadraticInteraction& alpha,
                                  double a, double sigma) {
    return make_config(std::move(v1), std::move(v2), alpha.to_interaction(), a, sigma);
}

const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::satisfied: return "satisfied";
        case Verdict::violated: return "violated";
        default: return "not-checkable";
    }
}

bool AssumptionReport::all_satisfied() const {
    return std::all_of(h.begin(), h.end(),
                       [](const HypothesisResult& r) { return r.verdict == Verdict::satisfied; });
}

namespace {

bool confining_shape(const Polynomial& v) {
    // even degree >= 4 with positive leading coefficient
    return v.degree() >= 4 && v.degree() % 2 == 0 && v.leading() > 0.0;
}

// theta = max(0, -min V'') over a scan grid that provably brackets all
// critical points of V''. Returns NaN when V'' is unbounded below.
double estimate_theta(const Polynomial& v) {
    const Polynomial v2 = v.derivative().derivative();
    if (v2.is_zero()) return 0.0;
    if (v2.degree() == 0) return std::max(0.0, -v2.leading());
    if (v2.degree() % 2 != 0 || v2.leading() < 0.0)
        return std::numeric_limits<double>::quiet_NaN();
    const double radius = 1.1 * std::max(1.0, v2.cauchy_root_bound());
    const int n = 10000;
    double lo = v2(0.0);
    for (int i = 0; i <= n; ++i) {
        const double x = -radius + 2.0 * radius * static_cast<double>(i) / n;
        lo = std::min(lo, v2(x));
    }
    return std::max(0.0, -lo);
}

} // namespace

AssumptionReport validate_assumptions(const ModelConfig& cfg) {
    AssumptionReport rep;
    auto set = [&rep](int hyp, Verdict v, std::string note) {
        rep.h[static_cast<std::size_t>(hyp - 1)] = HypothesisResult{v, std::move(note)};
    };

    // H1, H2: polynomials are smooth with locally Lipschitz gradients.
    set(1, Verdict::satisfied, "polynomial coefficients: locally Lipschitz gradients");
    set(2, Verdict::satisfied, "polynomial coefficients: continuously differentiable");

    // H3: one-sided Lipschitz bound on the potential gradients.
    rep.theta1 = estimate_theta(cfg.v1);
    rep.theta2 = estimate_theta(cfg.v2);
    if (std::isnan(rep.theta1) || std::isnan(rep.theta2))
        set(3, Verdict::violated, "V'' unbounded below");
    else
        set(3, Verdict::satisfied, "theta from V'' scan");

    // H4: x V'(x) >= C4 x^4 - C2 x^2.
    auto h4_witness = [](const Polynomial& v, double& c4, double& c2) {
        const int d = v.degree();
        c4 = 0.5 * static_cast<double>(d) * v.leading();
        c2 = 0.0;
        for (int k = 1; k < d; ++k) c2 += std::abs(static_cast<double>(k) * v.coeff(k));
    };
    const bool h4_ok = confining_shape(cfg.v1) && confining_shape(cfg.v2);
    if (h4_ok) {
        h4_witness(cfg.v1, rep.c4_v1, rep.c2_v1);
        h4_witness(cfg.v2, rep.c4_v2, rep.c2_v2);
        set(4, Verdict::satisfied, "quartic growth of xV'(x)");
    } else {
        rep.c4_v1 = rep.c2_v1 = rep.c4_v2 = rep.c2_v2 = std::numeric_limits<double>::quiet_NaN();
        set(4, Verdict::violated, "needs even degree >= 4 with positive leading coefficient");
    }

    // H5: convexity at infinity; same shape condition as H4.
    set(5, h4_ok ? Verdict::satisfied : Verdict::violated,
        h4_ok ? "V'' -> +inf at infinity" : "V'' does not diverge");

    // H6: |V'| <= C |x|^{2m-1} with m >= 2.
    const int dgrad = std::max(cfg.v1.derivative().degree(), cfg.v2.derivative().degree());
    rep.m = dgrad / 2 + 1;
    set(6, rep.m >= 2 ? Verdict::satisfied : Verdict::violated,
        "m = " + std::to_string(rep.m) + " from deg(grad V) = " + std::to_string(dgrad));

    // H7: self gradients odd and increasing at infinity, degree 2q-1.
    const bool h7_ok = valid_self_gradient(cfg.interactions.grad_f11) &&
                       valid_self_gradient(cfg.interactions.grad_f22);
    rep.q = cfg.interactions.q;
    set(7, h7_ok ? Verdict::satisfied : Verdict::violated,
        "q = " + std::to_string(rep.q));

    // H8: cross gradients Lipschitz (degree <= 1).
    const bool h8_ok =
        cfg.interactions.grad_f12.degree() <= 1 && cfg.interactions.grad_f21.degree() <= 1;
    set(8, h8_ok ? Verdict::satisfied : Verdict::violated, "cross gradient degrees");

    return rep;
}

namespace {

// Species drift -V'(x) - w_mu (g_mu * mu)(x) - w_nu (g_nu * nu)(x).
double drift_common(const Polynomial& v, const Polynomial& g_mu, const Polynomial& g_nu,
                    double w_mu, double w_nu, double x, const MomentVector& mu_m,
                    const MomentVector& nu_m, int q) {
    if (mu_m.max_order() < 2 * q - 1 || nu_m.max_order() < 2 * q - 1)
        throw std::invalid_argument("drift: moment vector shorter than 2q-1");
    const double mu_term = w_mu == 0.0 ? 0.0 : w_mu * convolve_with_moments(g_mu, mu_m)(x);
    const double nu_term = w_nu == 0.0 ? 0.0 : w_nu * convolve_with_moments(g_nu, nu_m)(x);
    return -v.derivative()(x) - mu_term - nu_term;
}

} // namespace

double drift_x(const ModelConfig& cfg, double x, const MomentVector& mu_moments,
               const MomentVector& nu_moments) {
    return drift_common(cfg.v1, cfg.interactions.grad_f11, cfg.interactions.grad_f12, cfg.a,
                        1.0 - cfg.a, x, mu_moments, nu_moments, cfg.interactions.q);
}

double drift_y(const ModelConfig& cfg, double x, const MomentVector& mu_moments,
               const MomentVector& nu_moments) {
    return drift_common(cfg.v2, cfg.interactions.grad_f21, cfg.interactions.grad_f22, cfg.a,
                        1.0 - cfg.a, x, mu_moments, nu_moments, cfg.interactions.q);
}

} // namespace mv2

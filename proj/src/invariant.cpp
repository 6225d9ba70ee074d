#include "mv2/invariant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "mv2/errors.hpp"
#include "mv2/util.hpp"

namespace mv2 {

std::optional<std::array<std::array<double, 2>, 2>> quadratic_alpha(const InteractionSpec& inter) {
    auto linear_coeff = [](const Polynomial& g) -> std::optional<double> {
        if (g.is_zero()) return 0.0;
        if (g.degree() == 1 && g.coeff(0) == 0.0 && g.coeff(1) >= 0.0) return g.coeff(1);
        return std::nullopt;
    };
    const auto a11 = linear_coeff(inter.grad_f11);
    const auto a12 = linear_coeff(inter.grad_f12);
    const auto a21 = linear_coeff(inter.grad_f21);
    const auto a22 = linear_coeff(inter.grad_f22);
    if (!a11 || !a12 || !a21 || !a22) return std::nullopt;
    return std::array<std::array<double, 2>, 2>{{{*a11, *a12}, {*a21, *a22}}};
}

std::pair<double, double> tau_coefficients(const ModelConfig& cfg) {
    const auto alpha = quadratic_alpha(cfg.interactions);
    if (!alpha) throw std::invalid_argument("tau_coefficients: interactions must be quadratic");
    const auto& al = *alpha;
    return {cfg.a * al[0][0] + (1.0 - cfg.a) * al[0][1], cfg.a * al[1][0] + (1.0 - cfg.a) * al[1][1]};
}

Polynomial stationary_exponent(const ModelConfig& cfg, Species species, const MeanPair& m) {
    const auto alpha = quadratic_alpha(cfg.interactions);
    if (!alpha) throw std::invalid_argument("stationary_exponent: interactions must be quadratic");
    const auto& al = *alpha;
    const std::size_t r = (species == Species::X) ? 0 : 1;
    const double tau = cfg.a * al[r][0] + (1.0 - cfg.a) * al[r][1];
    const double beta = cfg.a * al[r][0] * m.m1 + (1.0 - cfg.a) * al[r][1] * m.m2;
    Polynomial u = (species == Species::X) ? cfg.v1 : cfg.v2;
    u += Polynomial({0.0, -beta, 0.5 * tau});
    return u;
}

namespace {

std::vector<double> symmetric_nodes(double radius, int n_nodes) {
    if (n_nodes < 16) throw std::invalid_argument("QuadratureRule: need at least 16 nodes");
    if (n_nodes % 2 == 0) ++n_nodes; // odd count keeps 0 on the grid and +/- pairs exact
    const int half = (n_nodes - 1) / 2;
    const double h = radius / half;
    std::vector<double> xs(static_cast<std::size_t>(n_nodes));
    for (int i = -half; i <= half; ++i) xs[static_cast<std::size_t>(i + half)] = i * h;
    return xs;
}

// Largest stationary exponent gap that the tail must clear: peak-to-edge
// ratio below 1e-16 means 2 (U(edge) - U_min) / sigma^2 >= -ln 1e-16.
constexpr double kTailLogRatio = -36.8413614879047; // ln 1e-16

// Worst-case (over |m1|,|m2| <= m_max) check that the density tail has
// decayed at +/-R. The linear tilt is bounded by beta_max |x|.
bool tail_resolved(const ModelConfig& cfg, double m_max, double radius) {
    const auto alpha = quadratic_alpha(cfg.interactions);
    const auto& al = *alpha;
    for (int sp = 0; sp < 2; ++sp) {
        const double tau = cfg.a * al[sp][0] + (1.0 - cfg.a) * al[sp][1];
        const double beta_max = (cfg.a * al[sp][0] + (1.0 - cfg.a) * al[sp][1]) * m_max;
        const Polynomial& v = (sp == 0) ? cfg.v1 : cfg.v2;
        // U(x) = V(x) + tau x^2/2 - beta x; lower envelope over the beta box
        auto u_lo = [&](double x) { return v(x) + 0.5 * tau * x * x - beta_max * std::abs(x); };
        const int n = 2000;
        double umin = u_lo(0.0);
        for (int i = -n; i <= n; ++i) umin = std::min(umin, u_lo(radius * i / n));
        const double gap_needed = -kTailLogRatio * cfg.sigma * cfg.sigma / 2.0;
        if (u_lo(radius) - umin < gap_needed || u_lo(-radius) - umin < gap_needed) return false;
    }
    return true;
}

} // namespace

QuadratureRule QuadratureRule::for_model(const ModelConfig& cfg, double m_max, int n_nodes) {
    if (!quadratic_alpha(cfg.interactions))
        throw std::invalid_argument("QuadratureRule: interactions must be quadratic");
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("QuadratureRule: sigma must be > 0");
    double radius = std::max(2.0, 2.0 * m_max);
    for (int trial = 0; trial < 40; ++trial) {
        if (tail_resolved(cfg, m_max, radius)) return with_radius(cfg, m_max, radius, n_nodes);
        radius *= 1.5;
    }
    throw QuadratureDomainError("QuadratureRule: no radius resolves the density tail");
}

QuadratureRule QuadratureRule::with_radius(const ModelConfig& cfg, double m_max, double radius,
                                           int n_nodes) {
    if (!(radius > 0.0)) throw std::invalid_argument("QuadratureRule: radius must be > 0");
    if (!tail_resolved(cfg, m_max, radius))
        throw QuadratureDomainError("QuadratureRule: tail above 1e-16 of peak at radius " +
                                    std::to_string(radius));
    QuadratureRule rule;
    rule.nodes_ = symmetric_nodes(radius, n_nodes);
    rule.h_ = rule.nodes_[1] - rule.nodes_[0];
    rule.m_max_ = m_max;
    return rule;
}

namespace {

// Trapezoid mean int x w / int w with w = exp(e - max e); the shift makes
// underflow at small sigma harmless.
double stabilized_mean(const std::vector<double>& xs, const std::vector<double>& expo) {
    double emax = expo[0];
    for (double e : expo) emax = std::max(emax, e);
    double num = 0.0, den = 0.0;
    const std::size_t n = xs.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::exp(expo[i] - emax) * ((i == 0 || i + 1 == n) ? 0.5 : 1.0);
        num += w * xs[i];
        den += w;
    }
    return num / den;
}

void check_call_tail(const std::vector<double>& expo, const char* who) {
    double emax = expo[0];
    for (double e : expo) emax = std::max(emax, e);
    if (expo.front() - emax > kTailLogRatio || expo.back() - emax > kTailLogRatio)
        throw QuadratureDomainError(std::string(who) + ": integrand tail above 1e-16 of peak at grid edge");
}

} // namespace

MeanPair phi_map(const MeanPair& m, const ModelConfig& cfg, const QuadratureRule& rule) {
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("phi_map: sigma must be > 0");
    const std::vector<double>& xs = rule.nodes();
    MeanPair out;
    const double scale = -2.0 / (cfg.sigma * cfg.sigma);
    for (Species sp : {Species::X, Species::Y}) {
        const Polynomial u = stationary_exponent(cfg, sp, m);
        std::vector<double> expo(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) expo[i] = scale * u(xs[i]);
        check_call_tail(expo, "phi_map");
        const double val = stabilized_mean(xs, expo);
        (sp == Species::X ? out.m1 : out.m2) = val;
    }
    return out;
}

std::vector<MeanPair> default_start_grid(double extent, int points_per_side) {
    std::vector<MeanPair> starts;
    starts.reserve(static_cast<std::size_t>(points_per_side) * points_per_side);
    for (int i = 0; i < points_per_side; ++i)
        for (int j = 0; j < points_per_side; ++j) {
            const double u = points_per_side == 1 ? 0.0
                                                  : -extent + 2.0 * extent * i / (points_per_side - 1);
            const double v = points_per_side == 1 ? 0.0
                                                  : -extent + 2.0 * extent * j / (points_per_side - 1);
            starts.push_back(MeanPair{u, v});
        }
    return starts;
}

namespace {

double residual_inf(const MeanPair& m, const MeanPair& phi) {
    return std::max(std::abs(phi.m1 - m.m1), std::abs(phi.m2 - m.m2));
}

// Central-difference Jacobian of Phi at m.
std::array<std::array<double, 2>, 2> phi_jacobian(const ModelConfig& cfg, const QuadratureRule& rule,
                                                  const MeanPair& m) {
    std::array<std::array<double, 2>, 2> J{};
    const double h1 = 1e-5 * (1.0 + std::abs(m.m1));
    const double h2 = 1e-5 * (1.0 + std::abs(m.m2));
    const MeanPair p1 = phi_map({m.m1 + h1, m.m2}, cfg, rule);
    const MeanPair q1 = phi_map({m.m1 - h1, m.m2}, cfg, rule);
    const MeanPair p2 = phi_map({m.m1, m.m2 + h2}, cfg, rule);
    const MeanPair q2 = phi_map({m.m1, m.m2 - h2}, cfg, rule);
    J[0][0] = (p1.m1 - q1.m1) / (2.0 * h1);
    J[1][0] = (p1.m2 - q1.m2) / (2.0 * h1);
    J[0][1] = (p2.m1 - q2.m1) / (2.0 * h2);
    J[1][1] = (p2.m2 - q2.m2) / (2.0 * h2);
    return J;
}

double spectral_radius_2x2(const std::array<std::array<double, 2>, 2>& J) {
    const double tr = J[0][0] + J[1][1];
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    const double disc = tr * tr / 4.0 - det;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return std::max(std::abs(tr / 2.0 + s), std::abs(tr / 2.0 - s));
    }
    return std::sqrt(det); // complex pair: |lambda| = sqrt(det)
}

} // namespace

FixedPointResult fixed_points(const ModelConfig& cfg, const QuadratureRule& rule,
                              const std::vector<MeanPair>& starts, const FixedPointOptions& opts) {
    if (starts.empty()) throw std::invalid_argument("fixed_points: starts must be nonempty");
    if (!(opts.tol > 0.0)) throw std::invalid_argument("fixed_points: tol must be > 0");
    if (!(opts.damping > 0.0 && opts.damping <= 1.0))
        throw std::invalid_argument("fixed_points: damping must be in (0,1]");

    std::vector<StartDiagnostic> diags(starts.size());
    parallel_for(static_cast<int>(starts.size()), opts.n_threads, [&](int si) {
        StartDiagnostic d;
        d.start = starts[static_cast<std::size_t>(si)];
        MeanPair m = d.start;
        MeanPair phi = phi_map(m, cfg, rule);
        int it = 0;
        while (residual_inf(m, phi) >= opts.tol && it < opts.max_iter) {
            m = MeanPair{(1.0 - opts.damping) * m.m1 + opts.damping * phi.m1,
                         (1.0 - opts.damping) * m.m2 + opts.damping * phi.m2};
            phi = phi_map(m, cfg, rule);
            ++it;
        }
        // One Newton polish on G(m) = Phi(m) - m.
        const auto J = phi_jacobian(cfg, rule, m);
        const double g1 = phi.m1 - m.m1, g2 = phi.m2 - m.m2;
        const double a11 = J[0][0] - 1.0, a12 = J[0][1], a21 = J[1][0], a22 = J[1][1] - 1.0;
        const double det = a11 * a22 - a12 * a21;
        if (std::abs(det) > 1e-14) {
            m.m1 -= (a22 * g1 - a12 * g2) / det;
            m.m2 -= (-a21 * g1 + a11 * g2) / det;
            phi = phi_map(m, cfg, rule);
        }
        d.final = m;
        d.residual = residual_inf(m, phi);
        d.iterations = it;
        d.accepted = d.residual < opts.tol;
        diags[static_cast<std::size_t>(si)] = d;
    });

    FixedPointResult result;
    result.diagnostics = std::move(diags);
    for (const StartDiagnostic& d : result.diagnostics) {
        if (!d.accepted) continue;
        bool duplicate = false;
        for (RootInfo& r : result.roots) {
            if (std::max(std::abs(r.m.m1 - d.final.m1), std::abs(r.m.m2 - d.final.m2)) <=
                10.0 * opts.tol) {
                duplicate = true;
                if (d.residual < r.residual) {
                    r.m = d.final;
                    r.residual = d.residual;
                }
                break;
            }
        }
        if (duplicate) continue;
        RootInfo root;
        root.m = d.final;
        root.residual = d.residual;
        result.roots.push_back(root);
    }
    for (RootInfo& r : result.roots) {
        r.spectral_radius = spectral_radius_2x2(phi_jacobian(cfg, rule, r.m));
        r.classification = r.spectral_radius < 1.0 ? RootClass::stable : RootClass::unstable;
    }
    std::sort(result.roots.begin(), result.roots.end(), [](const RootInfo& a, const RootInfo& b) {
        if (a.m.m1 != b.m.m1) return a.m.m1 < b.m.m1;
        return a.m.m2 < b.m.m2;
    });
    return result;
}

StationaryPair stationary_density(const MeanPair& m, const ModelConfig& cfg,
                                  const std::vector<double>& grid_x) {
    if (grid_x.size() < 16 || !std::is_sorted(grid_x.begin(), grid_x.end()))
        throw std::invalid_argument("stationary_density: need a sorted grid with >= 16 nodes");
    if (!(cfg.sigma > 0.0)) throw std::invalid_argument("stationary_density: sigma must be > 0");
    const double h = grid_x[1] - grid_x[0];
    const double scale = -2.0 / (cfg.sigma * cfg.sigma);

    StationaryPair sp;
    sp.grid = grid_x;
    for (Species s : {Species::X, Species::Y}) {
        const Polynomial u = stationary_exponent(cfg, s, m);
        std::vector<double> expo(grid_x.size());
        for (std::size_t i = 0; i < grid_x.size(); ++i) expo[i] = scale * u(grid_x[i]);
        double emax = expo[0];
        for (double e : expo) emax = std::max(emax, e);
        // Support check at the looser density threshold used by the PDE side.
        if (expo.front() - emax > std::log(1e-12) || expo.back() - emax > std::log(1e-12))
            throw QuadratureDomainError("stationary_density: grid narrower than the density support");
        std::vector<double> dens(grid_x.size());
        double mass = 0.0;
        for (std::size_t i = 0; i < grid_x.size(); ++i) {
            dens[i] = std::exp(expo[i] - emax);
            mass += dens[i] * ((i == 0 || i + 1 == grid_x.size()) ? 0.5 : 1.0);
        }
        mass *= h;
        double mean = 0.0;
        for (std::size_t i = 0; i < grid_x.size(); ++i) {
            dens[i] /= mass;
            mean += dens[i] * grid_x[i] * ((i == 0 || i + 1 == grid_x.size()) ? 0.5 : 1.0);
        }
        mean *= h;
        (s == Species::X ? sp.mu : sp.nu) = std::move(dens);
        (s == Species::X ? sp.means.m1 : sp.means.m2) = mean;
    }
    const QuadratureRule rule = QuadratureRule::for_model(
        cfg, std::max({1.0, std::abs(m.m1), std::abs(m.m2)}), 4097);
    sp.residual = residual_inf(m, phi_map(m, cfg, rule));
    return sp;
}

StationaryPair symmetric_invariant(const ModelConfig& cfg, const std::vector<double>& grid_x) {
    if (!cfg.v1.even_powers_only() || !cfg.v2.even_powers_only())
        throw std::invalid_argument("symmetric_invariant: V1 and V2 must be even polynomials");
    StationaryPair sp = stationary_density(MeanPair{0.0, 0.0}, cfg, grid_x);
    if (sp.residual > 1e-9)
        throw std::logic_error("symmetric_invariant: residual at (0,0) above quadrature tolerance");
    return sp;
}

LaplaceExpansion laplace_expand(const ModelConfig& cfg, double m_star, double rho1, double rho2) {
    const auto alpha = quadratic_alpha(cfg.interactions);
    if (!alpha) throw std::invalid_argument("laplace_expand: interactions must be quadratic");
    const auto& al = *alpha;
    const Polynomial v1p = cfg.v1.derivative();
    const Polynomial v2p = cfg.v2.derivative();
    if (std::abs(v1p(m_star)) > 1e-10 || std::abs(v2p(m_star)) > 1e-10)
        throw std::invalid_argument("laplace_expand: m_star must be a critical point of V1 and V2");
    const double v1pp = v1p.derivative()(m_star);
    const double v2pp = v2p.derivative()(m_star);
    if (!(v1pp > 0.0) || !(v2pp > 0.0))
        throw std::invalid_argument("laplace_expand: m_star must be a nondegenerate minimum");

    LaplaceExpansion ex;
    ex.m_star = m_star;
    ex.tau1 = cfg.a * al[0][0] + (1.0 - cfg.a) * al[0][1];
    ex.tau2 = cfg.a * al[1][0] + (1.0 - cfg.a) * al[1][1];
    const double v1ppp = v1p.derivative().derivative()(m_star);
    const double v2ppp = v2p.derivative().derivative()(m_star);
    const double zeta1 = cfg.a * al[0][0] * rho1 + (1.0 - cfg.a) * al[0][1] * rho2;
    const double zeta2 = cfg.a * al[1][0] * rho1 + (1.0 - cfg.a) * al[1][1] * rho2;
    // First-order coefficient of the exponential-integral mean about the
    // minimizer of the tilted exponent: k = U'''/(4 U''^2) - zeta/U''. The
    // tilt term enters with the sign the Gaussian closed form dictates
    // (mean shift +zeta sigma^2 / U'').
    ex.k1 = v1ppp / (4.0 * (v1pp + ex.tau1) * (v1pp + ex.tau1)) - zeta1 / (v1pp + ex.tau1);
    ex.k2 = v2ppp / (4.0 * (v2pp + ex.tau2) * (v2pp + ex.tau2)) - zeta2 / (v2pp + ex.tau2);
    ex.rho_threshold =
        std::max(std::abs(v1ppp) / (4.0 * v1pp * (v1pp + ex.tau1)),
                 std::abs(v2ppp) / (4.0 * v2pp * (v2pp + ex.tau2)));
    if (std::abs(rho1) <= ex.rho_threshold && std::abs(rho2) <= ex.rho_threshold) {
        if (std::abs(ex.k1) > ex.rho_threshold + 1e-12 || std::abs(ex.k2) > ex.rho_threshold + 1e-12)
            throw std::logic_error("laplace_expand: |k| <= rho bound violated");
    }
    return ex;
}

std::vector<SigmaScanRow> sigma_scan(const ModelConfig& cfg, const std::vector<double>& sigma_list,
                                     const std::vector<MeanPair>& starts,
                                     const FixedPointOptions& opts, int n_nodes) {
    for (std::size_t i = 1; i < sigma_list.size(); ++i)
        if (!(sigma_list[i] < sigma_list[i - 1]))
            throw std::invalid_argument("sigma_scan: sigma_list must be strictly decreasing");
    std::vector<SigmaScanRow> rows;
    std::vector<MeanPair> warm;
    for (double sigma : sigma_list) {
        ModelConfig c = cfg;
        c.sigma = sigma;
        double m_max = 1.0;
        for (const MeanPair& s : starts) m_max = std::max({m_max, std::abs(s.m1), std::abs(s.m2)});
        for (const MeanPair& s : warm) m_max = std::max({m_max, std::abs(s.m1), std::abs(s.m2)});
        const QuadratureRule rule = QuadratureRule::for_model(c, m_max, n_nodes);
        std::vector<MeanPair> all = warm;
        all.insert(all.end(), starts.begin(), starts.end());
        const FixedPointResult res = fixed_points(c, rule, all, opts);
        SigmaScanRow row;
        row.sigma = sigma;
        row.root_count = static_cast<int>(res.roots.size());
        row.roots = res.roots;
        rows.push_back(row);
        warm.clear();
        for (const RootInfo& r : res.roots) warm.push_back(r.m);
    }
    return rows;
}

void write_roots_csv(const std::string& path, const std::vector<SigmaScanRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "sigma,m1,m2,residual,classification\n";
    for (const auto& row : rows)
        for (const RootInfo& r : row.roots)
            out << format_double(row.sigma) << ',' << format_double(r.m.m1) << ','
                << format_double(r.m.m2) << ',' << format_double(r.residual) << ','
                << (r.classification == RootClass::stable ? "stable" : "unstable") << '\n';
}

void write_density_csv(const std::string& path, const StationaryPair& sp) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "x,mu,nu\n";
    for (std::size_t i = 0; i < sp.grid.size(); ++i)
        out << format_double(sp.grid[i]) << ',' << format_double(sp.mu[i]) << ','
            << format_double(sp.nu[i]) << '\n';
}

} // namespace mv2

#pragma once

#include <array>
#include <string>

#include "mv2/moments.hpp"
#include "mv2/polynomial.hpp"

namespace mv2 {

// Interaction gradients. grad_f11/grad_f22 act within a species and must be
// odd with positive leading coefficient (or zero); grad_f12/grad_f21 act
// across species and must have degree <= 1. q is the growth index: self
// gradients have degree 2q-1.
struct InteractionSpec {
    Polynomial grad_f11;
    Polynomial grad_f12;
    Polynomial grad_f21;
    Polynomial grad_f22;
    int q = 1;

    // Validating factory; throws std::invalid_argument when an invariant
    // fails and derives q from the self-interaction degrees.
    static InteractionSpec make(Polynomial g11, Polynomial g12, Polynomial g21, Polynomial g22);

    // Derives q without validating; used when ingesting configs that the
    // assumption report should be able to flag.
    static InteractionSpec lenient(Polynomial g11, Polynomial g12, Polynomial g21, Polynomial g22);
};

// F_ij(x) = alpha_ij x^2 / 2, so grad F_ij(x) = alpha_ij x.
struct QuadraticInteraction {
    std::array<std::array<double, 2>, 2> alpha;

    InteractionSpec to_interaction() const;
};

struct ModelConfig {
    Polynomial v1;
    Polynomial v2;
    InteractionSpec interactions;
    double a = 0.5;
    double sigma = 1.0;

    // Throws std::invalid_argument unless a in [0,1] and sigma >= 0.
    // sigma = 0 is admitted so deterministic gradient-flow runs can be
    // exercised; the JSON schema requires sigma > 0.
    void check() const;
};

ModelConfig make_config(Polynomial v1, Polynomial v2, InteractionSpec inter, double a, double sigma);
ModelConfig make_quadratic_config(Polynomial v1, Polynomial v2, const QuadraticInteraction& alpha,
                                  double a, double sigma);

enum class Verdict { satisfied, violated, not_checkable };

const char* verdict_name(Verdict v);

struct HypothesisResult {
    Verdict verdict = Verdict::not_checkable;
    std::string note;
};

// One verdict per hypothesis H1..H8 plus the witness constants the checks
// estimate along the way.
struct AssumptionReport {
    std::array<HypothesisResult, 8> h;

    double theta1 = 0.0, theta2 = 0.0;            // H3
    double c4_v1 = 0.0, c2_v1 = 0.0;              // H4, V1
    double c4_v2 = 0.0, c2_v2 = 0.0;              // H4, V2
    int m = 0;                                    // H6
    int q = 0;                                    // H7

    const HypothesisResult& hypothesis(int n) const { return h.at(static_cast<std::size_t>(n - 1)); }
    bool all_satisfied() const;
};

AssumptionReport validate_assumptions(const ModelConfig& cfg);

// Drift of the X species at x under laws with the given moments:
//   -V1'(x) - a (grad F11 * mu)(x) - (1-a) (grad F12 * nu)(x).
// Moment vectors must reach order 2q-1.
double drift_x(const ModelConfig& cfg, double x, const MomentVector& mu_moments,
               const MomentVector& nu_moments);

// Y-species counterpart: -V2'(x) - a (grad F21 * mu)(x) - (1-a) (grad F22 * nu)(x).
double drift_y(const ModelConfig& cfg, double x, const MomentVector& mu_moments,
               const MomentVector& nu_moments);

} // namespace mv2

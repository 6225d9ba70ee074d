#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "mv2/errors.hpp"
#include "mv2/model.hpp"
#include "mv2/model_json.hpp"

using namespace mv2;

namespace {

const Polynomial kDoubleWell({0.0, 0.0, -0.5, 0.0, 0.25}); // x^4/4 - x^2/2
const Polynomial kQuad({0.0, 0.0, 0.5});                   // x^2/2

ModelConfig double_well_config(double alpha = 1.0, double a = 0.5, double sigma = 0.5) {
    QuadraticInteraction qi{{{{alpha, alpha}, {alpha, alpha}}}};
    return make_quadratic_config(kDoubleWell, kDoubleWell, qi, a, sigma);
}

} // namespace

TEST_CASE("interaction invariants") {
    CHECK_THROWS_AS(InteractionSpec::make(Polynomial({0.0, 0.0, 1.0}), {}, {}, {}),
                    std::invalid_argument); // even self gradient
    CHECK_THROWS_AS(InteractionSpec::make(Polynomial({0.0, -1.0}), {}, {}, {}),
                    std::invalid_argument); // negative leading
    CHECK_THROWS_AS(
        InteractionSpec::make(Polynomial({0.0, 1.0}), Polynomial({0.0, 0.0, 0.0, 1.0}), {}, {}),
        std::invalid_argument); // cubic cross gradient
    const InteractionSpec cubic =
        InteractionSpec::make(Polynomial({0.0, 0.0, 0.0, 1.0}), {}, {}, Polynomial({0.0, 1.0}));
    CHECK(cubic.q == 2);
    const InteractionSpec zero = InteractionSpec::make({}, {}, {}, {});
    CHECK(zero.q == 1);
    QuadraticInteraction bad{{{{1.0, -0.5}, {0.0, 0.0}}}};
    CHECK_THROWS_AS(bad.to_interaction(), std::invalid_argument);
}

TEST_CASE("model config bounds") {
    CHECK_THROWS_AS(double_well_config(1.0, 1.5, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(double_well_config(1.0, 0.5, -1.0), std::invalid_argument);
    CHECK_NOTHROW(double_well_config(1.0, 0.0, 0.5));
    CHECK_NOTHROW(double_well_config(1.0, 1.0, 0.0)); // sigma = 0 admitted in-memory
}

TEST_CASE("drift_x linear case by hand") {
    // V1 = x^2/2, all gradients z, a = 1/2, means 1; drift at 0 is 1
    QuadraticInteraction qi{{{{1.0, 1.0}, {1.0, 1.0}}}};
    const ModelConfig cfg = make_quadratic_config(kQuad, kQuad, qi, 0.5, 0.5);
    const MomentVector mu = point_mass_moments(1.0, 4);
    const MomentVector nu = point_mass_moments(1.0, 4);
    CHECK(drift_x(cfg, 0.0, mu, nu) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("drift_x pure confinement") {
    QuadraticInteraction qi{{{{0.0, 0.0}, {0.0, 0.0}}}};
    const ModelConfig cfg = make_quadratic_config(kQuad, kQuad, qi, 0.5, 0.5);
    const MomentVector m = point_mass_moments(0.0, 4);
    CHECK(drift_x(cfg, 3.0, m, m) == -3.0);
}

TEST_CASE("drift_x cubic self interaction matches the moment expansion") {
    // gradF11 = z^3, a = 1, V1 = 0: drift(1) = -(1 - 3 m1 + 3 m2 - m3)
    const InteractionSpec inter =
        InteractionSpec::make(Polynomial({0.0, 0.0, 0.0, 1.0}), {}, {}, Polynomial({0.0, 1.0}));
    const ModelConfig cfg = make_config(Polynomial(), Polynomial(), inter, 1.0, 0.5);

    std::mt19937_64 rng(42);
    std::normal_distribution<double> dist(0.3, 1.1);
    std::vector<double> zs(20000);
    for (double& z : zs) z = dist(rng);
    const MomentVector mz = empirical_moments(zs, 4);

    // Monte Carlo average of gradF(x - Z) over the same sample is algebraically
    // identical to the moment expansion.
    const double x = 1.0;
    double mc = 0.0;
    for (double z : zs) mc += std::pow(x - z, 3);
    mc /= static_cast<double>(zs.size());
    CHECK(drift_x(cfg, x, mz, mz) == doctest::Approx(-mc).epsilon(1e-12));
    const double formula = -(1.0 - 3.0 * mz[1] + 3.0 * mz[2] - mz[3]);
    CHECK(drift_x(cfg, x, mz, mz) == doctest::Approx(formula).epsilon(1e-12));
}

TEST_CASE("drift with delta-measure moments reduces to pairwise evaluation") {
    const ModelConfig cfg = double_well_config(0.7, 0.25, 0.5);
    const double y = 0.5;
    const MomentVector delta = point_mass_moments(y, 4);
    for (double x : {-1.5, 0.0, 0.75, 2.0}) {
        const double expected = -cfg.v1.derivative()(x) - 0.25 * 0.7 * (x - y) - 0.75 * 0.7 * (x - y);
        CHECK(drift_x(cfg, x, delta, delta) == doctest::Approx(expected).epsilon(1e-14));
    }
}

TEST_CASE("drift moment-order contract") {
    const InteractionSpec inter =
        InteractionSpec::make(Polynomial({0.0, 0.0, 0.0, 1.0}), {}, {}, {});
    const ModelConfig cfg = make_config(kQuad, kQuad, inter, 0.5, 0.5);
    const MomentVector too_short{{1.0, 0.0}}; // order 1 < 2q-1 = 3
    CHECK_THROWS_AS(drift_x(cfg, 0.0, too_short, too_short), std::invalid_argument);
}

TEST_CASE("validate_assumptions on the double-well benchmark") {
    const AssumptionReport rep = validate_assumptions(double_well_config());
    for (int hyp = 1; hyp <= 8; ++hyp) CHECK(rep.hypothesis(hyp).verdict == Verdict::satisfied);
    CHECK(rep.theta1 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.theta2 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(rep.q == 1);
    CHECK(rep.m == 2);
    CHECK(rep.all_satisfied());
}

TEST_CASE("validate_assumptions flags quadratic confinement") {
    QuadraticInteraction qi{{{{1.0, 1.0}, {1.0, 1.0}}}};
    const ModelConfig cfg = make_quadratic_config(kQuad, kQuad, qi, 0.5, 0.5);
    const AssumptionReport rep = validate_assumptions(cfg);
    CHECK(rep.hypothesis(4).verdict == Verdict::violated);
    CHECK(rep.hypothesis(6).verdict == Verdict::violated);
    CHECK(rep.m == 1);
    CHECK_FALSE(rep.all_satisfied());
}

TEST_CASE("validate_assumptions flags a cubic cross gradient") {
    ModelConfig cfg = double_well_config();
    cfg.interactions = InteractionSpec::lenient(cfg.interactions.grad_f11,
                                                Polynomial({0.0, 0.0, 0.0, 1.0}),
                                                cfg.interactions.grad_f21, cfg.interactions.grad_f22);
    const AssumptionReport rep = validate_assumptions(cfg);
    CHECK(rep.hypothesis(8).verdict == Verdict::violated);
}

TEST_CASE("validate_assumptions is deterministic") {
    const ModelConfig cfg = double_well_config(0.3, 0.4, 0.7);
    const AssumptionReport a = validate_assumptions(cfg);
    const AssumptionReport b = validate_assumptions(cfg);
    for (int hyp = 1; hyp <= 8; ++hyp)
        CHECK(a.hypothesis(hyp).verdict == b.hypothesis(hyp).verdict);
    CHECK(a.theta1 == b.theta1);
    CHECK(a.c4_v1 == b.c4_v1);
    CHECK(a.c2_v1 == b.c2_v1);
}

TEST_CASE("H4 witnesses for the double-well") {
    const AssumptionReport rep = validate_assumptions(double_well_config());
    // x V'(x) = x^4 - x^2: leading coefficient of V is 1/4, degree 4
    CHECK(rep.c4_v1 == doctest::Approx(0.5));
    CHECK(rep.c2_v1 == doctest::Approx(1.0)); // |1 * (-1/2)| * ... lower coefficients of V'
}

TEST_CASE("model json round trip and schema errors") {
    const nlohmann::json doc = {
        {"v1", {0.0, 0.0, -0.5, 0.0, 0.25}},
        {"v2", {0.0, 0.0, -0.5, 0.0, 0.25}},
        {"interaction", {{"quadratic", {{0.1, 0.1}, {0.1, 0.1}}}}},
        {"a", 0.5},
        {"sigma", 0.5}};
    const ModelConfig cfg = model_from_json(doc);
    CHECK(cfg.v1(1.0) == doctest::Approx(-0.25));
    CHECK(cfg.interactions.grad_f11.coeff(1) == doctest::Approx(0.1));
    CHECK(cfg.interactions.q == 1);
    const ModelConfig back = model_from_json(model_to_json(cfg));
    CHECK(back.a == cfg.a);
    CHECK(back.interactions.grad_f22 == cfg.interactions.grad_f22);

    nlohmann::json bad = doc;
    bad["a"] = 1.5;
    try {
        model_from_json(bad);
        CHECK(false);
    } catch (const SchemaError& e) {
        CHECK(e.path == "model.a");
    }
    bad = doc;
    bad["sigma"] = 0.0;
    CHECK_THROWS_AS(model_from_json(bad), SchemaError);
    bad = doc;
    bad.erase("v2");
    CHECK_THROWS_AS(model_from_json(bad), SchemaError);

    // explicit gradient form
    nlohmann::json grads = doc;
    grads["interaction"] = {{"grad_f11", {0.0, 0.0, 0.0, 1.0}},
                            {"grad_f12", {0.0, 1.0}},
                            {"grad_f21", {0.0, 1.0}},
                            {"grad_f22", {0.0, 1.0}}};
    CHECK(model_from_json(grads).interactions.q == 2);
}

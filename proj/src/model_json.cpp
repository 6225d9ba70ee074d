#include "mv2/model_json.hpp"

#include <cmath>

#include "mv2/errors.hpp"

namespace mv2 {

namespace {

using nlohmann::json;

double require_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw SchemaError(path, "must be finite");
    return v;
}

std::vector<double> require_coeffs(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw SchemaError(path, "expected a nonempty coefficient array");
    std::vector<double> c;
    c.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i)
        c.push_back(require_number(j[i], path + "[" + std::to_string(i) + "]"));
    return c;
}

Polynomial require_poly(const json& j, const std::string& path) {
    return Polynomial(require_coeffs(j, path));
}

InteractionSpec parse_interaction(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    if (j.contains("quadratic")) {
        const json& q = j.at("quadratic");
        if (!q.is_array() || q.size() != 2 || !q[0].is_array() || q[0].size() != 2 ||
            !q[1].is_array() || q[1].size() != 2)
            throw SchemaError(path + ".quadratic", "expected a 2x2 matrix");
        QuadraticInteraction qi{};
        for (int r = 0; r < 2; ++r)
            for (int c = 0; c < 2; ++c) {
                const std::string p = path + ".quadratic[" + std::to_string(r) + "][" + std::to_string(c) + "]";
                const double v = require_number(q[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)], p);
                if (v < 0.0) throw SchemaError(p, "must be >= 0");
                qi.alpha[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = v;
            }
        return qi.to_interaction();
    }
    for (const char* key : {"grad_f11", "grad_f12", "grad_f21", "grad_f22"})
        if (!j.contains(key)) throw SchemaError(path + "." + key, "missing field");
    // Lenient: the assumption report, not the parser, judges H7/H8.
    return InteractionSpec::lenient(
        require_poly(j.at("grad_f11"), path + ".grad_f11"), require_poly(j.at("grad_f12"), path + ".grad_f12"),
        require_poly(j.at("grad_f21"), path + ".grad_f21"), require_poly(j.at("grad_f22"), path + ".grad_f22"));
}

} // namespace

ModelConfig model_from_json(const nlohmann::json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path, "expected an object");
    for (const char* key : {"v1", "v2", "interaction", "a", "sigma"})
        if (!j.contains(key)) throw SchemaError(path + "." + key, "missing field");

    ModelConfig cfg;
    cfg.v1 = require_poly(j.at("v1"), path + ".v1");
    cfg.v2 = require_poly(j.at("v2"), path + ".v2");
    cfg.interactions = parse_interaction(j.at("interaction"), path + ".interaction");
    cfg.a = require_number(j.at("a"), path + ".a");
    if (cfg.a < 0.0 || cfg.a > 1.0) throw SchemaError(path + ".a", "must be in [0,1]");
    cfg.sigma = require_number(j.at("sigma"), path + ".sigma");
    if (!(cfg.sigma > 0.0)) throw SchemaError(path + ".sigma", "must be > 0");
    return cfg;
}

nlohmann::json model_to_json(const ModelConfig& cfg) {
    auto coeffs = [](const Polynomial& p) {
        return p.is_zero() ? std::vector<double>{0.0} : p.coeffs();
    };
    return nlohmann::json{
        {"v1", coeffs(cfg.v1)},
        {"v2", coeffs(cfg.v2)},
        {"interaction",
         {{"grad_f11", coeffs(cfg.interactions.grad_f11)},
          {"grad_f12", coeffs(cfg.interactions.grad_f12)},
          {"grad_f21", coeffs(cfg.interactions.grad_f21)},
          {"grad_f22", coeffs(cfg.interactions.grad_f22)}}},
        {"a", cfg.a},
        {"sigma", cfg.sigma}};
}

} // namespace mv2

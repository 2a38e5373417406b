#include "microvol/kernel_json.hpp"

#include "microvol/error.hpp"

namespace microvol {

using nlohmann::json;

const json& require_field(const json& j, const std::string& key, const std::string& path) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!j.is_object()) throw Error("expected an object at '" + (path.empty() ? "<root>" : path) + "'");
    auto it = j.find(key);
    if (it == j.end()) throw Error("missing required field '" + full + "'");
    return *it;
}

namespace {

double number_field(const json& j, const std::string& key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number()) throw Error("field '" + path + "." + key + "' must be a number");
    return v.get<double>();
}

}  // namespace

json to_json(const KernelFunction& k) {
    json j;
    j["family"] = to_string(k.family());
    j["weight"] = k.weight();
    if (k.family() == KernelFamily::exponential_mixture) {
        json comps = json::array();
        for (const auto& c : k.components()) comps.push_back({{"coefficient", c.coefficient}, {"rate", c.rate}});
        j["params"] = {{"components", comps}};
    } else {
        j["params"] = {{"alpha", k.alpha()}};
    }
    return j;
}

KernelFunction kernel_from_json(const json& j) {
    const auto family = kernel_family_from_string(require_field(j, "family", "kernel").get<std::string>());
    const double weight = number_field(j, "weight", "kernel");
    const json& params = require_field(j, "params", "kernel");
    if (family == KernelFamily::shifted_power_law) {
        return KernelFunction::shifted_power_law(weight, number_field(params, "alpha", "kernel.params"));
    }
    if (params.contains("rate")) {
        return KernelFunction::exponential(weight, number_field(params, "rate", "kernel.params"));
    }
    const json& comps = require_field(params, "components", "kernel.params");
    if (!comps.is_array()) throw Error("field 'kernel.params.components' must be an array");
    std::vector<ExpComponent> parts;
    for (const auto& c : comps) {
        parts.push_back({number_field(c, "coefficient", "kernel.params.components[]"),
                         number_field(c, "rate", "kernel.params.components[]")});
    }
    return KernelFunction::exponential_mixture(weight, std::move(parts));
}

json to_json(const AsymptoticSequence& s) {
    json j;
    j["regime"] = to_string(s.regime());
    if (s.regime() == Regime::light) {
        j["params"] = {{"lambda", s.lambda()}, {"mu", s.mu()}};
    } else {
        j["params"] = {{"alpha", s.alpha()}, {"lambda_star", s.lambda()}, {"mu", s.mu()}};
    }
    return j;
}

AsymptoticSequence sequence_from_json(const json& j) {
    const Regime regime = regime_from_string(require_field(j, "regime", "sequence").get<std::string>());
    const json& p = require_field(j, "params", "sequence");
    if (regime == Regime::light) {
        return AsymptoticSequence::light(number_field(p, "lambda", "sequence.params"),
                                         number_field(p, "mu", "sequence.params"));
    }
    return AsymptoticSequence::heavy(number_field(p, "alpha", "sequence.params"),
                                     number_field(p, "lambda_star", "sequence.params"),
                                     number_field(p, "mu", "sequence.params"));
}

json to_json(const ModelSpec& m) {
    return {{"phi1", to_json(m.kernel.phi1())},
            {"phi2", to_json(m.kernel.phi2())},
            {"beta", m.kernel.beta()},
            {"sequence", to_json(m.sequence)}};
}

ModelSpec model_from_json(const json& j) {
    auto phi1 = kernel_from_json(require_field(j, "phi1", "model"));
    auto phi2 = kernel_from_json(require_field(j, "phi2", "model"));
    const double beta = number_field(j, "beta", "model");
    return {build_kernel_matrix(std::move(phi1), std::move(phi2), beta),
            sequence_from_json(require_field(j, "sequence", "model"))};
}

}  // namespace microvol

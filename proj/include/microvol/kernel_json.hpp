#pragma once

// JSON encoding of kernels, kernel matrices and asymptotic sequences.
// Layout is documented in docs/formats.md.

#include <json.hpp>

#include "microvol/kernels.hpp"

namespace microvol {

/// Kernel matrix plus the asymptotic sequence it is simulated under.
struct ModelSpec {
    KernelMatrixSpec kernel;
    AsymptoticSequence sequence;
};

nlohmann::json to_json(const KernelFunction& k);
KernelFunction kernel_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AsymptoticSequence& s);
AsymptoticSequence sequence_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ModelSpec& m);
/// Validates criticality through build_kernel_matrix().
ModelSpec model_from_json(const nlohmann::json& j);

/// Fetch a required member, throwing an Error that names `path.key` when absent.
const nlohmann::json& require_field(const nlohmann::json& j, const std::string& key,
                                    const std::string& path = "");

}  // namespace microvol

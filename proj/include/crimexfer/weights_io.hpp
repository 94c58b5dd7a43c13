#pragma once

#include "crimexfer/features.hpp"
#include "crimexfer/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace crimexfer::nn {

inline constexpr int kWeightsFormatVersion = 1;

void to_json(nlohmann::json& j, const ArchitectureDescriptor& d);
void from_json(const nlohmann::json& j, ArchitectureDescriptor& d);

/// A weights document: the model plus, for trained models, the standardization it expects.
struct WeightsFile {
    ModelParams params;
    std::optional<FeatureStats> stats;
};

/// JSON document with `format_version`, the full descriptor, per-layer shapes and base64
/// little-endian float64 payloads, and a CRC-32 over all payload bytes in order.
std::string serialize_weights(const ModelParams& params, const std::optional<FeatureStats>& stats = std::nullopt);

/// FormatVersionError for unknown versions, CorruptFile for anything malformed or failing the checksum.
WeightsFile parse_weights(const std::string& text);

void save_params(const ModelParams& params, const std::filesystem::path& path,
                 const std::optional<FeatureStats>& stats = std::nullopt);
WeightsFile load_params(const std::filesystem::path& path);
/// Loads and checks the stored descriptor against `expected`; ArchitectureMismatch lists both.
WeightsFile load_params(const std::filesystem::path& path, const ArchitectureDescriptor& expected);

/// CRC-32 of the weight payload, used as a model fingerprint in manifests.
std::uint32_t params_checksum(const ModelParams& params);

} // namespace crimexfer::nn

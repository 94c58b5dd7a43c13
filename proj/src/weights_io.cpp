#include "crimexfer/weights_io.hpp"

#include "crimexfer/error.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace crimexfer::nn {

static_assert(std::endian::native == std::endian::little, "weights payloads are little-endian float64");

namespace {

std::string encode_base64(const double* values, std::size_t n) {
    const std::size_t bytes = n * sizeof(double);
    std::string out(4 * ((bytes + 2) / 3), '\0');
    const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                        reinterpret_cast<const unsigned char*>(values), static_cast<int>(bytes));
    out.resize(static_cast<std::size_t>(written));
    return out;
}

std::vector<double> decode_base64(const std::string& text, std::size_t expected_values, const std::string& what) {
    const std::size_t bytes = expected_values * sizeof(double);
    if (text.size() != 4 * ((bytes + 2) / 3)) throw CorruptFile(what + ": payload length does not match its shape");
    std::vector<unsigned char> raw(text.size() / 4 * 3 + 3);
    const int n = EVP_DecodeBlock(raw.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0 || static_cast<std::size_t>(n) < bytes) throw CorruptFile(what + ": payload is not valid base64");
    std::vector<double> out(expected_values);
    std::memcpy(out.data(), raw.data(), bytes);
    return out;
}

uLong crc_update(uLong crc, const std::vector<double>& values) {
    return crc32(crc, reinterpret_cast<const Bytef*>(values.data()), static_cast<uInt>(values.size() * sizeof(double)));
}

uLong crc_update(uLong crc, std::span<const double> values) {
    return crc32(crc, reinterpret_cast<const Bytef*>(values.data()), static_cast<uInt>(values.size() * sizeof(double)));
}

} // namespace

void to_json(nlohmann::json& j, const ArchitectureDescriptor& d) {
    j = nlohmann::json{{"lookback_days", d.lookback_days},
                       {"feature_count", d.feature_count},
                       {"grid", d.grid},
                       {"cell_convention", d.cell_convention},
                       {"conv_channels", d.conv_channels},
                       {"dense_hidden", d.dense_hidden},
                       {"layers", d.summary()}};
}

void from_json(const nlohmann::json& j, ArchitectureDescriptor& d) {
    d.lookback_days = j.at("lookback_days").get<int>();
    d.feature_count = j.at("feature_count").get<int>();
    d.grid = j.at("grid").get<int>();
    d.cell_convention = j.at("cell_convention").get<std::string>();
    d.conv_channels = j.at("conv_channels").get<std::vector<int>>();
    d.dense_hidden = j.at("dense_hidden").get<std::vector<int>>();
}

std::uint32_t params_checksum(const ModelParams& params) {
    uLong crc = crc32(0L, Z_NULL, 0);
    for (const auto& w : params.weights) crc = crc_update(crc, w.data());
    return static_cast<std::uint32_t>(crc);
}

std::string serialize_weights(const ModelParams& params, const std::optional<FeatureStats>& stats) {
    const auto shapes = param_shapes(params.desc);
    if (shapes.size() != params.weights.size()) throw ShapeError("parameters do not match descriptor");
    nlohmann::json doc;
    doc["format"] = "crimexfer-weights";
    doc["format_version"] = kWeightsFormatVersion;
    doc["descriptor"] = params.desc;
    doc["descriptor"]["stats_ref"] = stats ? "inline" : "none";
    uLong crc = crc32(0L, Z_NULL, 0);
    auto& layers = doc["layers"] = nlohmann::json::array();
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const Tensor& w = params.weights[i];
        if (w.shape() != shapes[i].shape) throw ShapeError(shapes[i].name + " has shape " + w.shape_string());
        layers.push_back({{"name", shapes[i].name}, {"shape", w.shape()}, {"data", encode_base64(w.data().data(), w.size())}});
        crc = crc_update(crc, w.data());
    }
    if (stats) {
        doc["stats"] = {{"mean", encode_base64(stats->mean.data(), kFeatureChannels)},
                        {"sd", encode_base64(stats->sd.data(), kFeatureChannels)}};
        crc = crc32(crc, reinterpret_cast<const Bytef*>(stats->mean.data()), sizeof(double) * kFeatureChannels);
        crc = crc32(crc, reinterpret_cast<const Bytef*>(stats->sd.data()), sizeof(double) * kFeatureChannels);
    }
    doc["crc32"] = static_cast<std::uint32_t>(crc);
    return doc.dump(1) + "\n";
}

WeightsFile parse_weights(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("weights document is not valid JSON: ") + e.what());
    }
    try {
        if (!doc.is_object() || doc.value("format", std::string{}) != "crimexfer-weights")
            throw CorruptFile("not a crimexfer weights document");
        const int version = doc.at("format_version").get<int>();
        if (version != kWeightsFormatVersion)
            throw FormatVersionError("weights format_version " + std::to_string(version) + " is not supported (expected " +
                                     std::to_string(kWeightsFormatVersion) + ")");
        WeightsFile out;
        out.params.desc = doc.at("descriptor").get<ArchitectureDescriptor>();
        const auto shapes = param_shapes(out.params.desc);
        const auto& layers = doc.at("layers");
        if (!layers.is_array() || layers.size() != shapes.size()) throw CorruptFile("layer list does not match descriptor");
        uLong crc = crc32(0L, Z_NULL, 0);
        for (std::size_t i = 0; i < shapes.size(); ++i) {
            const auto& layer = layers[i];
            const auto shape = layer.at("shape").get<std::vector<std::size_t>>();
            if (layer.at("name").get<std::string>() != shapes[i].name || shape != shapes[i].shape)
                throw CorruptFile("layer " + std::to_string(i) + " does not match descriptor (" + shapes[i].name + ")");
            auto values = decode_base64(layer.at("data").get<std::string>(), Tensor::element_count(shape), shapes[i].name);
            crc = crc_update(crc, values);
            out.params.weights.emplace_back(shape, std::move(values));
        }
        if (doc.contains("stats")) {
            FeatureStats s;
            const auto mean = decode_base64(doc["stats"].at("mean").get<std::string>(), kFeatureChannels, "stats.mean");
            const auto sd = decode_base64(doc["stats"].at("sd").get<std::string>(), kFeatureChannels, "stats.sd");
            std::copy(mean.begin(), mean.end(), s.mean.begin());
            std::copy(sd.begin(), sd.end(), s.sd.begin());
            crc = crc_update(crc, mean);
            crc = crc_update(crc, sd);
            out.stats = s;
        }
        if (doc.at("crc32").get<std::uint32_t>() != static_cast<std::uint32_t>(crc))
            throw CorruptFile("weights payload checksum mismatch");
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptFile(std::string("malformed weights document: ") + e.what());
    } catch (const ShapeError& e) {
        throw CorruptFile(std::string("invalid descriptor in weights document: ") + e.what());
    }
}

void save_params(const ModelParams& params, const std::filesystem::path& path, const std::optional<FeatureStats>& stats) {
    const std::string text = serialize_weights(params, stats);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

WeightsFile load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_weights(buf.str());
}

WeightsFile load_params(const std::filesystem::path& path, const ArchitectureDescriptor& expected) {
    WeightsFile wf = load_params(path);
    if (!(wf.params.desc == expected))
        throw ArchitectureMismatch("weights file " + path.string() + " has architecture\n  " + wf.params.desc.summary() +
                                   "\nbut the run expects\n  " + expected.summary());
    return wf;
}

} // namespace crimexfer::nn

#include "crimexfer/config_json.hpp"

#include "crimexfer/error.hpp"

namespace crimexfer {

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    return {
        {"lr_grid", cfg.lr_grid},
        {"batch_size", cfg.batch_size},
        {"max_epochs", cfg.max_epochs},
        {"patience", cfg.patience},
        {"seed", cfg.seed},
        {"adam", {{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"eps", cfg.adam.eps}}},
    };
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base) {
    try {
        if (j.contains("lr_grid")) base.lr_grid = j["lr_grid"].get<std::vector<double>>();
        if (j.contains("batch_size")) base.batch_size = j["batch_size"].get<std::size_t>();
        if (j.contains("max_epochs")) base.max_epochs = j["max_epochs"].get<int>();
        if (j.contains("patience")) base.patience = j["patience"].get<int>();
        if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("adam")) {
            const auto& a = j["adam"];
            base.adam.beta1 = a.value("beta1", base.adam.beta1);
            base.adam.beta2 = a.value("beta2", base.adam.beta2);
            base.adam.eps = a.value("eps", base.adam.eps);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad training configuration: ") + e.what());
    }
    base.validate();
    return base;
}

nn::ArchitectureDescriptor architecture_from_json(const nlohmann::json& j, nn::ArchitectureDescriptor base) {
    try {
        base.lookback_days = j.value("lookback_days", base.lookback_days);
        base.feature_count = j.value("feature_count", base.feature_count);
        if (j.contains("conv_channels")) base.conv_channels = j["conv_channels"].get<std::vector<int>>();
        if (j.contains("dense_hidden")) base.dense_hidden = j["dense_hidden"].get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad architecture configuration: ") + e.what());
    }
    base.validate();
    return base;
}

} // namespace crimexfer

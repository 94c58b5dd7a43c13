#pragma once

#include "crimexfer/training.hpp"

#include <json.hpp>

namespace crimexfer {

nlohmann::json train_config_to_json(const TrainConfig& cfg);

/// Overlays the keys present in `j` (lr_grid, batch_size, max_epochs, patience, seed,
/// adam.{beta1,beta2,eps}) onto `base`. DataError on wrong types or invalid values.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Overlays lookback_days, feature_count, conv_channels and dense_hidden from `j` onto `base`.
nn::ArchitectureDescriptor architecture_from_json(const nlohmann::json& j, nn::ArchitectureDescriptor base = {});

} // namespace crimexfer

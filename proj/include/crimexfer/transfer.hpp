#pragma once

#include "crimexfer/training.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crimexfer {

/// Source models always see the full look-back window.
constexpr int kPretrainMonths = 7;

/// theta_s: a randomly initialized model trained on the 7 months before `test_month`.
TrainedModel pretrain_source(const PreparedCity& source, YearMonth test_month, const TrainConfig& cfg,
                             const nn::ArchitectureDescriptor& desc);

struct TransferRun {
    std::string source_city;
    std::string target_city;
    int k = 0;
    YearMonth test_month;
    TrainedModel fine_tuned;        // theta_{s,t}
    std::uint32_t source_checksum = 0;
};

/// Initializes every layer from theta_s and fine-tunes on the target's k-month window with
/// target-fitted standardization. theta_s itself is the epoch-0 checkpoint.
/// ArchitectureMismatch when theta_s does not have the `expected` architecture.
TransferRun fine_tune(const TrainedModel& source_model, const std::string& source_name, const PreparedCity& target, int k,
                      YearMonth test_month, const TrainConfig& cfg, const nn::ArchitectureDescriptor& expected);

/// theta_t: the same protocol from a seeded random initialization.
TrainedModel train_baseline(const PreparedCity& target, int k, YearMonth test_month, const TrainConfig& cfg,
                            const nn::ArchitectureDescriptor& desc);

/// Per (tract, day): hotspot iff at least half of the members predict one (ties count as
/// hotspots); probability is the member mean. DomainMismatch unless all members share a domain.
PredictionSet majority_vote(std::span<const PredictionSet> members);

} // namespace crimexfer

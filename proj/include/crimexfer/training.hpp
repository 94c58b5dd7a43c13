#pragma once

#include "crimexfer/dataset.hpp"
#include "crimexfer/features.hpp"
#include "crimexfer/model.hpp"
#include "crimexfer/spatial.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace crimexfer {

constexpr int kValidationDays = 15;

struct SplitWindows {
    DateRange train;
    DateRange validation;
    YearMonth test_month;
    int months = 0;

    DateRange window() const { return {train.first, validation.last}; }
};

/// Window = months_back_window(test_month, k); validation = its final 15 days; train = the rest.
SplitWindows make_splits(YearMonth test_month, int k);
/// As above, WindowOutOfRange when the window leaves `period`.
SplitWindows make_splits(YearMonth test_month, int k, const DateRange& period);

struct TrainConfig {
    std::vector<double> lr_grid{1e-3, 3e-4};
    std::size_t batch_size = 64;
    int max_epochs = 8;
    int patience = 2;
    std::uint64_t seed = 1;
    nn::AdamConfig adam;

    /// Throws DataError on non-positive values or an empty grid.
    void validate() const;
};

/// A city prepared for one crime class: feature panel, labels and neighbor grids.
class PreparedCity {
public:
    PreparedCity(std::shared_ptr<const CityDataset> ds, CrimeClass crime_class);

    const CityDataset& dataset() const { return *ds_; }
    const std::string& name() const { return ds_->city_name; }
    CrimeClass crime_class() const { return crime_class_; }
    const FeaturePanel& panel() const { return build_.panel; }
    const HotspotLabels& labels() const { return build_.labels; }
    const NeighborMap& neighbors() const { return neighbors_; }

private:
    std::shared_ptr<const CityDataset> ds_;
    CrimeClass crime_class_;
    PanelBuild build_;
    NeighborMap neighbors_;
};

/// (tract position, day index within the panel).
struct SampleKey {
    std::size_t tract = 0;
    std::size_t day = 0;
    friend auto operator<=>(const SampleKey&, const SampleKey&) = default;
};

/// Every (tract, day) in `window` whose full look-back lies inside the panel, ordered by day then tract.
std::vector<SampleKey> window_samples(const PreparedCity& city, const DateRange& window, int lookback_days);

/// Assembles model inputs for `keys` from a standardized panel (see standardize_panel).
nn::BatchInput assemble_batch(const PreparedCity& city, const std::vector<double>& standardized, int lookback_days,
                              std::span<const SampleKey> keys);

/// Probabilities for `keys`, evaluated in chunks.
std::vector<double> predict_samples(const nn::ModelParams& params, const PreparedCity& city,
                                    const std::vector<double>& standardized, std::span<const SampleKey> keys);

struct EpochRecord {
    int epoch = 0;       // 0 = the initial parameters, before any update
    double lr = 0.0;     // 0 for the epoch-0 row
    double train_loss = 0.0;
    double val_f1 = 0.0;
    std::uint64_t batch_digest = 0; // hash of the epoch's sample order; 0 for epoch 0
};

struct TrainedModel {
    nn::ModelParams params;
    FeatureStats stats;
    std::vector<EpochRecord> history;
    double chosen_lr = 0.0;
    int chosen_epoch = 0;
    double best_val_f1 = 0.0;
    std::size_t train_samples = 0;
    std::size_t validation_samples = 0;
};

/// Fits standardization on splits.train, then for each learning rate (ascending) trains with
/// per-epoch seeded shuffling and early stopping on validation F1. The initial parameters are
/// the epoch-0 checkpoint. Returns the best checkpoint; ties prefer lower lr, then earlier epoch.
/// EmptyTrainingSet when the train or validation window has no usable samples.
TrainedModel train_model(const PreparedCity& city, const SplitWindows& splits, const TrainConfig& cfg,
                         const nn::ModelParams& init);

/// Same, initialized with init_params(desc, cfg.seed).
TrainedModel train_model(const PreparedCity& city, const SplitWindows& splits, const TrainConfig& cfg,
                         const nn::ArchitectureDescriptor& desc);

/// CSV `epoch,lr,train_loss,val_f1`.
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

struct Prediction {
    std::size_t tract = 0;
    StudyDate date;
    double probability = 0.0;
    std::uint8_t label = 0;
};

struct PredictionSet {
    YearMonth month;
    std::vector<Prediction> entries; // ordered by date, then tract
    std::vector<std::string> warnings;

    bool same_domain(const PredictionSet& other) const;
};

/// Next-day predictions for every tract and day of `test_month`; days without a full
/// look-back are omitted with a warning.
PredictionSet predict_month(const TrainedModel& model, const PreparedCity& city, YearMonth test_month);

} // namespace crimexfer

#include "crimexfer/training.hpp"

#include "crimexfer/error.hpp"
#include "crimexfer/metrics.hpp"
#include "crimexfer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <ostream>

namespace crimexfer {

SplitWindows make_splits(YearMonth test_month, int k) {
    const DateRange w = months_back_window(test_month, k);
    const StudyDate val_first = w.last.plus_days(-(kValidationDays - 1));
    return SplitWindows{{w.first, val_first.plus_days(-1)}, {val_first, w.last}, test_month, k};
}

SplitWindows make_splits(YearMonth test_month, int k, const DateRange& period) {
    months_back_window(test_month, k, period);
    return make_splits(test_month, k);
}

void TrainConfig::validate() const {
    if (lr_grid.empty()) throw DataError("learning-rate grid is empty");
    for (double lr : lr_grid)
        if (!(lr > 0.0) || !std::isfinite(lr)) throw DataError("learning rates must be positive");
    if (batch_size == 0) throw DataError("batch size must be positive");
    if (max_epochs < 0) throw DataError("max_epochs must be >= 0");
    if (patience < 1) throw DataError("patience must be >= 1");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0))
        throw DataError("invalid Adam constants");
}

PreparedCity::PreparedCity(std::shared_ptr<const CityDataset> ds, CrimeClass crime_class)
    : ds_(std::move(ds)), crime_class_(crime_class), build_(build_panel(*ds_, crime_class)), neighbors_(ds_->tracts) {}

std::vector<SampleKey> window_samples(const PreparedCity& city, const DateRange& window, int lookback_days) {
    const FeaturePanel& panel = city.panel();
    std::vector<SampleKey> keys;
    if (window.last < window.first) return keys;
    const auto T = static_cast<std::size_t>(lookback_days);
    for (StudyDate d = window.first; d <= window.last; d = d.plus_days(1)) {
        if (!panel.period().contains(d)) continue;
        const std::size_t day = panel.day_index(d);
        if (day < T) continue;
        for (std::size_t t = 0; t < panel.tract_count(); ++t) keys.push_back({t, day});
    }
    return keys;
}

nn::BatchInput assemble_batch(const PreparedCity& city, const std::vector<double>& standardized, int lookback_days,
                              std::span<const SampleKey> keys) {
    const auto T = static_cast<std::size_t>(lookback_days);
    const std::size_t channels = T * kFeatureChannels;
    const std::size_t n = city.panel().tract_count();
    const StudyDate origin = city.panel().period().first;
    nn::BatchInput b;
    b.size = keys.size();
    b.inputs.resize(keys.size() * nn::kGridCells * channels);
    b.dow.assign(keys.size() * nn::kDowDim, 0.0);
    double* dst = b.inputs.data();
    for (std::size_t s = 0; s < keys.size(); ++s) {
        const SampleKey& k = keys[s];
        if (k.day < T) throw InsufficientHistory("sample lacks a full look-back");
        const auto& cells = city.neighbors().cells(k.tract);
        for (std::size_t q = 0; q < nn::kGridCells; ++q)
            for (std::size_t d = 0; d < T; ++d) {
                const double* src = standardized.data() + ((k.day - T + d) * n + cells[q]) * kFeatureChannels;
                std::memcpy(dst, src, kFeatureChannels * sizeof(double));
                dst += kFeatureChannels;
            }
        const int dow = day_of_week(origin.plus_days(static_cast<std::int64_t>(k.day)));
        b.dow[s * nn::kDowDim + static_cast<std::size_t>(dow)] = 1.0;
    }
    return b;
}

std::vector<double> predict_samples(const nn::ModelParams& params, const PreparedCity& city,
                                    const std::vector<double>& standardized, std::span<const SampleKey> keys) {
    constexpr std::size_t kChunk = 256;
    std::vector<double> out;
    out.reserve(keys.size());
    for (std::size_t i = 0; i < keys.size(); i += kChunk) {
        const auto chunk = keys.subspan(i, std::min(kChunk, keys.size() - i));
        const auto probs = nn::forward_batch(params, assemble_batch(city, standardized, params.desc.lookback_days, chunk));
        out.insert(out.end(), probs.begin(), probs.end());
    }
    return out;
}

namespace {

std::vector<std::uint8_t> labels_for(const PreparedCity& city, std::span<const SampleKey> keys) {
    std::vector<std::uint8_t> y(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) y[i] = city.labels().at(keys[i].tract, keys[i].day);
    return y;
}

double validation_f1(const nn::ModelParams& params, const PreparedCity& city, const std::vector<double>& z,
                     const std::vector<SampleKey>& keys, const std::vector<std::uint8_t>& y) {
    return f1_score(confusion_at_half(predict_samples(params, city, z, keys), y));
}

double mean_loss(const nn::ModelParams& params, const PreparedCity& city, const std::vector<double>& z,
                 const std::vector<SampleKey>& keys, const std::vector<std::uint8_t>& y) {
    const auto probs = predict_samples(params, city, z, keys);
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) sum += nn::loss_bce(probs[i], y[i]).loss;
    return sum / static_cast<double>(probs.size());
}

std::vector<SampleKey> shuffled(std::vector<SampleKey> keys, std::uint64_t seed, int epoch) {
    CounterRng rng(derive_seed(seed, {0x5f0ff1eULL, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t i = keys.size(); i > 1; --i) std::swap(keys[i - 1], keys[rng.below(i)]);
    return keys;
}

std::uint64_t order_digest(const std::vector<SampleKey>& keys, std::size_t batch_size) {
    std::uint64_t h = mix64(batch_size);
    for (const auto& k : keys) h = mix64(h ^ (k.tract * 0x100000001b3ULL + (k.day << 32)));
    return h;
}

} // namespace

TrainedModel train_model(const PreparedCity& city, const SplitWindows& splits, const TrainConfig& cfg,
                         const nn::ModelParams& init) {
    cfg.validate();
    const int T = init.desc.lookback_days;
    if (init.desc.feature_count != static_cast<int>(kFeatureChannels))
        throw ArchitectureMismatch("model expects " + std::to_string(init.desc.feature_count) + " features per day");

    TrainedModel out;
    out.stats = fit_stats(city.panel(), splits.train);
    const std::vector<double> z = standardize_panel(city.panel(), out.stats);
    const auto train_keys = window_samples(city, splits.train, T);
    const auto val_keys = window_samples(city, splits.validation, T);
    if (train_keys.empty() || val_keys.empty())
        throw EmptyTrainingSet("no trainable samples for " + city.name() + " in " + splits.train.first.iso() + ".." +
                               splits.validation.last.iso() + " with a " + std::to_string(T) + "-day look-back");
    out.train_samples = train_keys.size();
    out.validation_samples = val_keys.size();
    const auto train_y = labels_for(city, train_keys);
    const auto val_y = labels_for(city, val_keys);

    std::vector<double> grid = cfg.lr_grid;
    std::sort(grid.begin(), grid.end());

    out.params = init;
    out.best_val_f1 = validation_f1(init, city, z, val_keys, val_y);
    out.chosen_lr = grid.front();
    out.chosen_epoch = 0;
    out.history.push_back({0, 0.0, mean_loss(init, city, z, train_keys, train_y), out.best_val_f1, 0});

    for (double lr : grid) {
        nn::ModelParams params = init;
        nn::AdamState adam = nn::AdamState::for_params(params);
        double run_best = out.history.front().val_f1;
        int stale = 0;
        for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            const auto order = shuffled(train_keys, cfg.seed, epoch);
            double loss_sum = 0.0;
            for (std::size_t i = 0; i < order.size(); i += cfg.batch_size) {
                const std::span<const SampleKey> keys(order.data() + i, std::min(cfg.batch_size, order.size() - i));
                const nn::BatchInput batch = assemble_batch(city, z, T, keys);
                std::vector<double> y(keys.size());
                for (std::size_t s = 0; s < keys.size(); ++s) y[s] = city.labels().at(keys[s].tract, keys[s].day);
                double batch_loss = 0.0;
                const nn::Gradients g = nn::backward(params, batch, y, &batch_loss);
                nn::adam_step(params, g, adam, lr, cfg.adam);
                loss_sum += batch_loss * static_cast<double>(keys.size());
            }
            const double f1 = validation_f1(params, city, z, val_keys, val_y);
            out.history.push_back({epoch, lr, loss_sum / static_cast<double>(order.size()), f1,
                                   order_digest(order, cfg.batch_size)});
            if (f1 > out.best_val_f1) {
                out.best_val_f1 = f1;
                out.params = params;
                out.chosen_lr = lr;
                out.chosen_epoch = epoch;
            }
            if (f1 > run_best) {
                run_best = f1;
                stale = 0;
            } else if (++stale >= cfg.patience) {
                break;
            }
        }
    }
    return out;
}

TrainedModel train_model(const PreparedCity& city, const SplitWindows& splits, const TrainConfig& cfg,
                         const nn::ArchitectureDescriptor& desc) {
    return train_model(city, splits, cfg, nn::init_params(desc, cfg.seed));
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
    out << "epoch,lr,train_loss,val_f1\n";
    out.precision(17);
    for (const auto& r : history) out << r.epoch << ',' << r.lr << ',' << r.train_loss << ',' << r.val_f1 << '\n';
}

bool PredictionSet::same_domain(const PredictionSet& other) const {
    if (entries.size() != other.entries.size()) return false;
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].tract != other.entries[i].tract || entries[i].date != other.entries[i].date) return false;
    return true;
}

PredictionSet predict_month(const TrainedModel& model, const PreparedCity& city, YearMonth test_month) {
    const DateRange month{test_month.first_day(), test_month.last_day()};
    if (!city.panel().period().contains(month))
        throw WindowOutOfRange("test month " + test_month.str() + " is outside the study period of " + city.name());
    const int T = model.params.desc.lookback_days;
    PredictionSet out;
    out.month = test_month;
    const auto keys = window_samples(city, month, T);
    const std::size_t expected = static_cast<std::size_t>(month.days()) * city.panel().tract_count();
    if (keys.size() < expected)
        out.warnings.push_back(std::to_string(expected - keys.size()) + " (tract, day) pairs of " + test_month.str() +
                               " lack a " + std::to_string(T) + "-day history and were omitted");
    const std::vector<double> z = standardize_panel(city.panel(), model.stats);
    const auto probs = predict_samples(model.params, city, z, keys);
    out.entries.reserve(keys.size());
    const StudyDate origin = city.panel().period().first;
    for (std::size_t i = 0; i < keys.size(); ++i)
        out.entries.push_back({keys[i].tract, origin.plus_days(static_cast<std::int64_t>(keys[i].day)), probs[i],
                               static_cast<std::uint8_t>(probs[i] >= kDecisionThreshold ? 1 : 0)});
    return out;
}

} // namespace crimexfer

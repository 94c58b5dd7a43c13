#include "crimexfer/transfer.hpp"

#include "crimexfer/error.hpp"
#include "crimexfer/weights_io.hpp"

namespace crimexfer {

TrainedModel pretrain_source(const PreparedCity& source, YearMonth test_month, const TrainConfig& cfg,
                             const nn::ArchitectureDescriptor& desc) {
    const SplitWindows splits = make_splits(test_month, kPretrainMonths, source.panel().period());
    return train_model(source, splits, cfg, desc);
}

TransferRun fine_tune(const TrainedModel& source_model, const std::string& source_name, const PreparedCity& target, int k,
                      YearMonth test_month, const TrainConfig& cfg, const nn::ArchitectureDescriptor& expected) {
    if (!(source_model.params.desc == expected))
        throw ArchitectureMismatch("source model from " + source_name + " has architecture\n  " +
                                   source_model.params.desc.summary() + "\nbut the target run expects\n  " +
                                   expected.summary());
    const SplitWindows splits = make_splits(test_month, k, target.panel().period());
    TransferRun run;
    run.source_city = source_name;
    run.target_city = target.name();
    run.k = k;
    run.test_month = test_month;
    run.source_checksum = nn::params_checksum(source_model.params);
    run.fine_tuned = train_model(target, splits, cfg, source_model.params);
    return run;
}

TrainedModel train_baseline(const PreparedCity& target, int k, YearMonth test_month, const TrainConfig& cfg,
                            const nn::ArchitectureDescriptor& desc) {
    const SplitWindows splits = make_splits(test_month, k, target.panel().period());
    return train_model(target, splits, cfg, desc);
}

PredictionSet majority_vote(std::span<const PredictionSet> members) {
    if (members.empty()) throw DomainMismatch("majority vote needs at least one member");
    for (const auto& m : members.subspan(1))
        if (!(m.month == members[0].month) || !m.same_domain(members[0]))
            throw DomainMismatch("voting members cover different (tract, day) domains");
    PredictionSet out;
    out.month = members[0].month;
    out.entries = members[0].entries;
    const std::size_t n = members.size();
    for (std::size_t i = 0; i < out.entries.size(); ++i) {
        std::size_t votes = 0;
        double prob = 0.0;
        for (const auto& m : members) {
            votes += m.entries[i].label;
            prob += m.entries[i].probability;
        }
        out.entries[i].label = 2 * votes >= n ? 1 : 0;
        out.entries[i].probability = prob / static_cast<double>(n);
    }
    return out;
}

} // namespace crimexfer

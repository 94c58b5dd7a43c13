#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

namespace crimexfer {

struct Confusion {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    void add(bool predicted, bool actual) {
        if (predicted) (actual ? tp : fp) += 1;
        else (actual ? fn : tn) += 1;
    }
    Confusion& operator+=(const Confusion& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }
    std::uint64_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

/// F1 from pooled counts. tp = 0 with any error gives 0; no positives anywhere gives 1
/// (`degenerate` is set so callers can warn).
double f1_score(const Confusion& c, bool* degenerate = nullptr);

/// Pooled confusion of thresholded predictions (label = p >= 0.5) against labels.
Confusion confusion_at_half(std::span<const double> probabilities, std::span<const std::uint8_t> labels);

/// (f1_transfer / f1_baseline - 1) * 100; nullopt when the baseline is 0.
/// InvalidF1 for negative or non-finite inputs.
std::optional<double> relative_change(double f1_transfer, double f1_baseline);

constexpr double kDecisionThreshold = 0.5;

} // namespace crimexfer

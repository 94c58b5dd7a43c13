#include "crimexfer/metrics.hpp"

#include "crimexfer/error.hpp"

#include <cmath>
#include <string>

namespace crimexfer {

double f1_score(const Confusion& c, bool* degenerate) {
    if (degenerate) *degenerate = false;
    if (c.tp == 0) {
        if (c.fp == 0 && c.fn == 0) {
            if (degenerate) *degenerate = true;
            return 1.0;
        }
        return 0.0;
    }
    const double tp = static_cast<double>(c.tp);
    const double precision = tp / static_cast<double>(c.tp + c.fp);
    const double recall = tp / static_cast<double>(c.tp + c.fn);
    return 2.0 * precision * recall / (precision + recall);
}

Confusion confusion_at_half(std::span<const double> probabilities, std::span<const std::uint8_t> labels) {
    if (probabilities.size() != labels.size()) throw DomainMismatch("prediction and label counts differ");
    Confusion c;
    for (std::size_t i = 0; i < labels.size(); ++i) c.add(probabilities[i] >= kDecisionThreshold, labels[i] != 0);
    return c;
}

std::optional<double> relative_change(double f1_transfer, double f1_baseline) {
    if (!std::isfinite(f1_transfer) || !std::isfinite(f1_baseline) || f1_transfer < 0.0 || f1_baseline < 0.0)
        throw InvalidF1("F1 values must be finite and non-negative (got " + std::to_string(f1_transfer) + ", " +
                        std::to_string(f1_baseline) + ")");
    if (f1_baseline == 0.0) return std::nullopt;
    return (f1_transfer / f1_baseline - 1.0) * 100.0;
}

} // namespace crimexfer

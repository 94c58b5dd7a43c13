#pragma once

#include "crimexfer/model.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace crimexfer::nn {

struct TensorCheck {
    std::string name;            // parameter tensor, e.g. "conv0.weight"
    std::size_t checked = 0;     // coordinates compared
    std::size_t skipped = 0;     // coordinates whose +-h probe crossed a ReLU kink
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

struct ArchitectureCheck {
    ArchitectureDescriptor desc;
    std::vector<TensorCheck> tensors;
};

struct GradcheckReport {
    std::vector<ArchitectureCheck> architectures;
    double max_rel_error = 0.0;
    std::string worst; // "arch #i tensor[index]"

    bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

struct GradcheckOptions {
    std::uint64_t seed = 1;
    int random_architectures = 5; // in addition to the default architecture
    double step = 1e-5;           // central-difference h
    std::size_t batch = 3;
    /// Coordinates probed per tensor; tensors at most this large are checked exhaustively.
    std::size_t max_coords_per_tensor = 256;
};

/// |a - n| / max(|a|, |n|, kGradcheckFloor)
constexpr double kGradcheckFloor = 1e-6;
double gradcheck_rel_error(double analytic, double numeric);

/// Compares backward() against central differences of batch_loss() on random inputs for the
/// default architecture and `random_architectures` randomly drawn ones.
GradcheckReport run_gradcheck(const GradcheckOptions& opts = {});

} // namespace crimexfer::nn

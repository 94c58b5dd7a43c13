#pragma once

#include "crimexfer/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace crimexfer::nn {

/// Rank-to-cell convention of the 3x3 neighbor grid the model was trained on.
inline constexpr const char* kCellConvention = "rank-pairs-lr-ud-diag/v1";
inline constexpr std::size_t kGridCells = 9;
inline constexpr std::size_t kDowDim = 7;

/// Conv(3x3 same) -> ReLU per conv width, Flatten, Concat(day-of-week one-hot),
/// Dense -> ReLU per hidden width, Dense(->1), Sigmoid.
struct ArchitectureDescriptor {
    int lookback_days = 7;
    int feature_count = 11;
    int grid = 3;
    std::string cell_convention = kCellConvention;
    std::vector<int> conv_channels{32, 64};
    std::vector<int> dense_hidden{64};

    std::size_t input_channels() const { return static_cast<std::size_t>(lookback_days * feature_count); }
    std::size_t flatten_size() const { return kGridCells * static_cast<std::size_t>(conv_channels.back()); }
    std::size_t dense_input() const { return flatten_size() + kDowDim; }

    /// Throws ShapeError when the layer chain is inconsistent.
    void validate() const;
    /// Human-readable layer list, e.g. "Conv(3x3,77->32) ReLU ...".
    std::string summary() const;

    friend bool operator==(const ArchitectureDescriptor&, const ArchitectureDescriptor&) = default;
};

struct ParamShape {
    std::string name;
    std::vector<std::size_t> shape;
};

/// Parameter tensors in storage order: conv{i}.weight [3,3,in,out], conv{i}.bias [out],
/// dense{j}.weight [in,out], dense{j}.bias [out], output.weight [in,1], output.bias [1].
std::vector<ParamShape> param_shapes(const ArchitectureDescriptor& desc);

struct ModelParams {
    ArchitectureDescriptor desc;
    std::vector<Tensor> weights;

    std::size_t parameter_count() const;
    /// True when every tensor is bit-identical.
    bool bitwise_equal(const ModelParams& other) const;
};

using Gradients = std::vector<Tensor>;

/// He-uniform weights (bound sqrt(6 / fan_in)) from a CounterRng keyed per layer; zero biases.
ModelParams init_params(const ArchitectureDescriptor& desc, std::uint64_t seed);
ModelParams zero_params(const ArchitectureDescriptor& desc);
Gradients zeros_like(const ModelParams& params);

/// A batch in the engine's native layout: `inputs` holds (sample * 9 + cell) rows of
/// input_channels() values; `dow` holds 7 values per sample.
struct BatchInput {
    std::size_t size = 0;
    std::vector<double> inputs;
    std::vector<double> dow;
};

/// Packs one (C, 3, 3) tensor plus one-hot into a batch of one.
BatchInput single_sample(const ArchitectureDescriptor& desc, const Tensor& grid, std::span<const double> dow);

/// Probabilities for every sample. ShapeError on malformed input, NumericError on non-finite values.
std::vector<double> forward_batch(const ModelParams& params, const BatchInput& batch);
double forward(const ModelParams& params, const Tensor& grid, std::span<const double> dow);

constexpr double kProbClamp = 1e-12;

struct LossValue {
    double loss = 0.0;
    double dlogit = 0.0;
};

/// Binary cross-entropy on a clamped probability; dlogit = p - y.
LossValue loss_bce(double p, double y);

/// Exact reverse-mode gradient of the mean batch loss. Optionally reports the loss.
Gradients backward(const ModelParams& params, const BatchInput& batch, std::span<const double> labels,
                   double* mean_loss = nullptr);

/// Mean batch loss only (no gradient).
double batch_loss(const ModelParams& params, const BatchInput& batch, std::span<const double> labels);

/// Per-ReLU activation pattern of a forward pass; gradient checks use it to detect kinks.
std::vector<std::uint8_t> relu_pattern(const ModelParams& params, const BatchInput& batch);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    std::int64_t step = 0;

    static AdamState for_params(const ModelParams& params);
};

/// One bias-corrected Adam update in place.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg = {});

namespace detail {
/// Test hook: scales every conv weight gradient by `scale` (1 restores exact gradients).
void set_conv_gradient_fault(double scale);
} // namespace detail

} // namespace crimexfer::nn

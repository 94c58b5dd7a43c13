#include "crimexfer/gradcheck.hpp"

#include "crimexfer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crimexfer::nn {

double gradcheck_rel_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradcheckFloor});
    return std::abs(analytic - numeric) / scale;
}

namespace {

ArchitectureDescriptor random_architecture(CounterRng& rng) {
    ArchitectureDescriptor d;
    d.lookback_days = 1 + static_cast<int>(rng.below(4));
    d.feature_count = 1 + static_cast<int>(rng.below(6));
    d.conv_channels.clear();
    d.dense_hidden.clear();
    const auto convs = 1 + rng.below(3);
    for (std::uint64_t i = 0; i < convs; ++i) d.conv_channels.push_back(1 + static_cast<int>(rng.below(6)));
    const auto dense = rng.below(3);
    for (std::uint64_t i = 0; i < dense; ++i) d.dense_hidden.push_back(1 + static_cast<int>(rng.below(8)));
    return d;
}

BatchInput random_batch(const ArchitectureDescriptor& d, std::size_t n, CounterRng& rng) {
    BatchInput b;
    b.size = n;
    b.inputs.resize(n * kGridCells * d.input_channels());
    for (auto& x : b.inputs) x = rng.uniform(-1.0, 1.0);
    b.dow.assign(n * kDowDim, 0.0);
    for (std::size_t s = 0; s < n; ++s) b.dow[s * kDowDim + rng.below(kDowDim)] = 1.0;
    return b;
}

ArchitectureCheck check_architecture(const ArchitectureDescriptor& desc, std::uint64_t seed, const GradcheckOptions& opts) {
    CounterRng rng(derive_seed(seed, {0x9c4ec, 1}));
    ModelParams params = init_params(desc, seed);
    // Non-zero biases so every bias path carries gradient through active units.
    for (std::size_t i = 1; i < params.weights.size(); i += 2)
        for (double& b : params.weights[i].data()) b = rng.uniform(-0.1, 0.1);
    const BatchInput batch = random_batch(desc, opts.batch, rng);
    std::vector<double> labels(opts.batch);
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<double>(i % 2);

    const Gradients g = backward(params, batch, labels);
    const auto base_pattern = relu_pattern(params, batch);
    const auto shapes = param_shapes(desc);

    ArchitectureCheck out;
    out.desc = desc;
    for (std::size_t t = 0; t < params.weights.size(); ++t) {
        TensorCheck tc;
        tc.name = shapes[t].name;
        const std::size_t n = params.weights[t].size();
        std::vector<std::size_t> coords(n);
        std::iota(coords.begin(), coords.end(), std::size_t{0});
        if (n > opts.max_coords_per_tensor) {
            for (std::size_t i = 0; i < opts.max_coords_per_tensor; ++i) std::swap(coords[i], coords[i + rng.below(n - i)]);
            coords.resize(opts.max_coords_per_tensor);
        }
        for (std::size_t idx : coords) {
            double& w = params.weights[t].data()[idx];
            const double orig = w;
            w = orig + opts.step;
            const bool kink_plus = relu_pattern(params, batch) != base_pattern;
            const double lp = batch_loss(params, batch, labels);
            w = orig - opts.step;
            const bool kink_minus = relu_pattern(params, batch) != base_pattern;
            const double lm = batch_loss(params, batch, labels);
            w = orig;
            if (kink_plus || kink_minus) {
                ++tc.skipped;
                continue;
            }
            const double numeric = (lp - lm) / (2.0 * opts.step);
            const double analytic = g[t].data()[idx];
            const double err = gradcheck_rel_error(analytic, numeric);
            ++tc.checked;
            if (tc.checked == 1 || err > tc.max_rel_error) {
                tc.max_rel_error = err;
                tc.worst_index = idx;
                tc.worst_analytic = analytic;
                tc.worst_numeric = numeric;
            }
        }
        out.tensors.push_back(tc);
    }
    return out;
}

} // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& opts) {
    GradcheckReport report;
    std::vector<ArchitectureDescriptor> archs{ArchitectureDescriptor{}};
    CounterRng rng(derive_seed(opts.seed, {0xa5c4}));
    for (int i = 0; i < opts.random_architectures; ++i) archs.push_back(random_architecture(rng));
    for (std::size_t a = 0; a < archs.size(); ++a) {
        report.architectures.push_back(check_architecture(archs[a], derive_seed(opts.seed, {a}), opts));
        for (const auto& t : report.architectures.back().tensors)
            if (t.checked > 0 && (report.worst.empty() || t.max_rel_error > report.max_rel_error)) {
                report.max_rel_error = t.max_rel_error;
                report.worst = "architecture #" + std::to_string(a) + " " + t.name + "[" +
                               std::to_string(t.worst_index) + "]";
            }
    }
    return report;
}

} // namespace crimexfer::nn

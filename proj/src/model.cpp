#include "crimexfer/model.hpp"

#include "crimexfer/error.hpp"
#include "crimexfer/rng.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <sstream>

namespace crimexfer::nn {

namespace detail {
// Scales conv weight gradients; != 1 only in sabotage tests of the gradient checker.
double g_conv_grad_fault = 1.0;
void set_conv_gradient_fault(double scale) { g_conv_grad_fault = scale; }
} // namespace detail

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using Eigen::Index;

/// (output cell, input cell) pairs touched by each 3x3 kernel tap under zero padding.
struct TapTable {
    std::array<std::vector<std::pair<int, int>>, 9> pairs;
    TapTable() {
        for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx)
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) {
                        const int ir = r + ky - 1, ic = c + kx - 1;
                        if (ir >= 0 && ir < 3 && ic >= 0 && ic < 3) pairs[ky * 3 + kx].emplace_back(r * 3 + c, ir * 3 + ic);
                    }
    }
};

const TapTable& taps() {
    static const TapTable table;
    return table;
}

ConstMatMap cmap(const Tensor& t, Index rows, Index cols) { return ConstMatMap(t.data().data(), rows, cols); }
MatMap mmap(Tensor& t, Index rows, Index cols) { return MatMap(t.data().data(), rows, cols); }

/// Forward activations kept for the backward pass.
struct Trace {
    std::size_t batch = 0;
    std::vector<RowMat> conv_in;   // input to conv layer i, (B*9) x Cin
    std::vector<RowMat> conv_out;  // post-ReLU output, (B*9) x Cout
    RowMat dense_in0;              // B x (flatten + 7)
    std::vector<RowMat> dense_out; // post-ReLU hidden activations
    Eigen::VectorXd logits;
};

void conv_forward(const RowMat& x, const Tensor& w, const Tensor& b, std::size_t batch, RowMat& y) {
    const Index cin = x.cols();
    const Index cout = static_cast<Index>(b.size());
    const ConstMatMap wm = cmap(w, 9 * cin, cout);
    y.setZero(x.rows(), cout);
    RowMat gathered, partial;
    for (int k = 0; k < 9; ++k) {
        const auto& pairs = taps().pairs[static_cast<std::size_t>(k)];
        const auto wk = wm.middleRows(k * cin, cin);
        if (k == 4) {
            y.noalias() += x * wk;
            continue;
        }
        const Index np = static_cast<Index>(pairs.size());
        gathered.resize(static_cast<Index>(batch) * np, cin);
        for (std::size_t s = 0; s < batch; ++s)
            for (Index j = 0; j < np; ++j)
                gathered.row(static_cast<Index>(s) * np + j) = x.row(static_cast<Index>(s * 9) + pairs[static_cast<std::size_t>(j)].second);
        partial.noalias() = gathered * wk;
        for (std::size_t s = 0; s < batch; ++s)
            for (Index j = 0; j < np; ++j)
                y.row(static_cast<Index>(s * 9) + pairs[static_cast<std::size_t>(j)].first) += partial.row(static_cast<Index>(s) * np + j);
    }
    y.rowwise() += cmap(b, 1, cout).row(0);
}

/// dy is the gradient at the conv output (pre-activation). Writes weight/bias grads and,
/// when dx is non-null, the input gradient.
void conv_backward(const RowMat& x, const Tensor& w, const RowMat& dy, std::size_t batch, Tensor& dw, Tensor& db,
                   RowMat* dx) {
    const Index cin = x.cols();
    const Index cout = dy.cols();
    const ConstMatMap wm = cmap(w, 9 * cin, cout);
    MatMap dwm = mmap(dw, 9 * cin, cout);
    mmap(db, 1, cout) = dy.colwise().sum();
    if (dx) dx->setZero(x.rows(), cin);
    RowMat gx, gdy, gdx;
    for (int k = 0; k < 9; ++k) {
        const auto& pairs = taps().pairs[static_cast<std::size_t>(k)];
        const auto wk = wm.middleRows(k * cin, cin);
        if (k == 4) {
            dwm.middleRows(k * cin, cin).noalias() = x.transpose() * dy;
            if (dx) dx->noalias() += dy * wk.transpose();
            continue;
        }
        const Index np = static_cast<Index>(pairs.size());
        gx.resize(static_cast<Index>(batch) * np, cin);
        gdy.resize(static_cast<Index>(batch) * np, cout);
        for (std::size_t s = 0; s < batch; ++s)
            for (Index j = 0; j < np; ++j) {
                const auto& pr = pairs[static_cast<std::size_t>(j)];
                gx.row(static_cast<Index>(s) * np + j) = x.row(static_cast<Index>(s * 9) + pr.second);
                gdy.row(static_cast<Index>(s) * np + j) = dy.row(static_cast<Index>(s * 9) + pr.first);
            }
        dwm.middleRows(k * cin, cin).noalias() = gx.transpose() * gdy;
        if (dx) {
            gdx.noalias() = gdy * wk.transpose();
            for (std::size_t s = 0; s < batch; ++s)
                for (Index j = 0; j < np; ++j)
                    dx->row(static_cast<Index>(s * 9) + pairs[static_cast<std::size_t>(j)].second) += gdx.row(static_cast<Index>(s) * np + j);
        }
    }
    if (detail::g_conv_grad_fault != 1.0) dwm *= detail::g_conv_grad_fault;
}

void check_batch(const ArchitectureDescriptor& d, const BatchInput& batch) {
    if (batch.size == 0) throw ShapeError("empty batch");
    if (batch.inputs.size() != batch.size * kGridCells * d.input_channels())
        throw ShapeError("batch inputs have " + std::to_string(batch.inputs.size()) + " values, expected " +
                         std::to_string(batch.size * kGridCells * d.input_channels()));
    if (batch.dow.size() != batch.size * kDowDim)
        throw ShapeError("batch day-of-week block has " + std::to_string(batch.dow.size()) + " values, expected " +
                         std::to_string(batch.size * kDowDim));
}

void check_params(const ModelParams& p) {
    const auto shapes = param_shapes(p.desc);
    if (shapes.size() != p.weights.size()) throw ShapeError("parameter count does not match descriptor");
    for (std::size_t i = 0; i < shapes.size(); ++i)
        if (shapes[i].shape != p.weights[i].shape())
            throw ShapeError(shapes[i].name + " has shape " + p.weights[i].shape_string());
}

Trace run_forward(const ModelParams& p, const BatchInput& batch) {
    const ArchitectureDescriptor& d = p.desc;
    check_params(p);
    check_batch(d, batch);
    Trace tr;
    tr.batch = batch.size;
    const Index rows = static_cast<Index>(batch.size * kGridCells);
    const Index B = static_cast<Index>(batch.size);

    std::size_t wi = 0;
    RowMat x = ConstMatMap(batch.inputs.data(), rows, static_cast<Index>(d.input_channels()));
    for (std::size_t i = 0; i < d.conv_channels.size(); ++i) {
        RowMat y;
        conv_forward(x, p.weights[wi], p.weights[wi + 1], batch.size, y);
        wi += 2;
        y = y.cwiseMax(0.0);
        tr.conv_in.push_back(std::move(x));
        tr.conv_out.push_back(y);
        x = std::move(y);
    }
    const Index flat = static_cast<Index>(d.flatten_size());
    tr.dense_in0.resize(B, flat + static_cast<Index>(kDowDim));
    // (B*9) x C row-major is exactly B x (9*C) row-major.
    tr.dense_in0.leftCols(flat) = ConstMatMap(tr.conv_out.back().data(), B, flat);
    tr.dense_in0.rightCols(static_cast<Index>(kDowDim)) = ConstMatMap(batch.dow.data(), B, static_cast<Index>(kDowDim));

    const RowMat* h = &tr.dense_in0;
    for (std::size_t j = 0; j < d.dense_hidden.size(); ++j) {
        const Index in = h->cols(), out = static_cast<Index>(d.dense_hidden[j]);
        RowMat z = (*h) * cmap(p.weights[wi], in, out);
        z.rowwise() += cmap(p.weights[wi + 1], 1, out).row(0);
        wi += 2;
        tr.dense_out.push_back(z.cwiseMax(0.0));
        h = &tr.dense_out.back();
    }
    tr.logits = ((*h) * cmap(p.weights[wi], h->cols(), 1)).col(0);
    tr.logits.array() += p.weights[wi + 1][0];
    if (!tr.logits.allFinite()) throw NumericError("non-finite logit in forward pass");
    return tr;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

} // namespace

// ---------------------------------------------------------------------------

void ArchitectureDescriptor::validate() const {
    if (lookback_days < 1) throw ShapeError("look-back must be >= 1 day");
    if (feature_count < 1) throw ShapeError("feature count must be >= 1");
    if (grid != 3) throw ShapeError("only a 3x3 neighbor grid is supported");
    if (conv_channels.empty()) throw ShapeError("at least one conv layer is required");
    for (int c : conv_channels)
        if (c < 1) throw ShapeError("conv width must be positive");
    for (int h : dense_hidden)
        if (h < 1) throw ShapeError("dense width must be positive");
}

std::string ArchitectureDescriptor::summary() const {
    std::ostringstream s;
    s << "T=" << lookback_days << " features=" << feature_count << " grid=" << grid << "x" << grid
      << " cells=" << cell_convention << " :";
    std::size_t in = input_channels();
    for (int c : conv_channels) {
        s << " Conv(3x3," << in << "->" << c << ",same) ReLU";
        in = static_cast<std::size_t>(c);
    }
    s << " Flatten(" << flatten_size() << ") Concat(dow " << kDowDim << ")";
    in = dense_input();
    for (int h : dense_hidden) {
        s << " Dense(" << in << "->" << h << ") ReLU";
        in = static_cast<std::size_t>(h);
    }
    s << " Dense(" << in << "->1) Sigmoid";
    return s.str();
}

std::vector<ParamShape> param_shapes(const ArchitectureDescriptor& d) {
    d.validate();
    std::vector<ParamShape> out;
    std::size_t in = d.input_channels();
    for (std::size_t i = 0; i < d.conv_channels.size(); ++i) {
        const auto c = static_cast<std::size_t>(d.conv_channels[i]);
        out.push_back({"conv" + std::to_string(i) + ".weight", {3, 3, in, c}});
        out.push_back({"conv" + std::to_string(i) + ".bias", {c}});
        in = c;
    }
    in = d.dense_input();
    for (std::size_t j = 0; j < d.dense_hidden.size(); ++j) {
        const auto h = static_cast<std::size_t>(d.dense_hidden[j]);
        out.push_back({"dense" + std::to_string(j) + ".weight", {in, h}});
        out.push_back({"dense" + std::to_string(j) + ".bias", {h}});
        in = h;
    }
    out.push_back({"output.weight", {in, 1}});
    out.push_back({"output.bias", {1}});
    return out;
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& w : weights) n += w.size();
    return n;
}

bool ModelParams::bitwise_equal(const ModelParams& other) const {
    if (!(desc == other.desc) || weights.size() != other.weights.size()) return false;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i].shape() != other.weights[i].shape()) return false;
        if (std::memcmp(weights[i].data().data(), other.weights[i].data().data(), weights[i].size() * sizeof(double)) != 0)
            return false;
    }
    return true;
}

ModelParams zero_params(const ArchitectureDescriptor& desc) {
    ModelParams p{desc, {}};
    for (const auto& s : param_shapes(desc)) p.weights.emplace_back(s.shape);
    return p;
}

ModelParams init_params(const ArchitectureDescriptor& desc, std::uint64_t seed) {
    ModelParams p = zero_params(desc);
    const auto shapes = param_shapes(desc);
    for (std::size_t i = 0; i < shapes.size(); i += 2) {
        const auto& shape = shapes[i].shape;
        // Weight tensors are [.., fan_in, fan_out]; fan-in is everything but the last extent.
        std::size_t fan_in = 1;
        for (std::size_t k = 0; k + 1 < shape.size(); ++k) fan_in *= shape[k];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        CounterRng rng(derive_seed(seed, {0x1a7e5, i}));
        for (double& w : p.weights[i].data()) w = rng.uniform(-bound, bound);
    }
    return p;
}

Gradients zeros_like(const ModelParams& params) {
    Gradients g;
    for (const auto& w : params.weights) g.emplace_back(w.shape());
    return g;
}

BatchInput single_sample(const ArchitectureDescriptor& desc, const Tensor& grid, std::span<const double> dow) {
    const std::size_t c = desc.input_channels();
    if (grid.shape() != std::vector<std::size_t>{c, 3, 3})
        throw ShapeError("input tensor has shape " + grid.shape_string() + ", expected [" + std::to_string(c) + ",3,3]");
    if (dow.size() != kDowDim) throw ShapeError("day-of-week one-hot must have 7 entries");
    BatchInput b;
    b.size = 1;
    b.inputs.resize(kGridCells * c);
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t col = 0; col < 3; ++col) b.inputs[(r * 3 + col) * c + ch] = grid.at(ch, r, col);
    b.dow.assign(dow.begin(), dow.end());
    return b;
}

std::vector<double> forward_batch(const ModelParams& params, const BatchInput& batch) {
    const Trace tr = run_forward(params, batch);
    std::vector<double> out(batch.size);
    for (std::size_t i = 0; i < batch.size; ++i) out[i] = sigmoid(tr.logits[static_cast<Index>(i)]);
    return out;
}

double forward(const ModelParams& params, const Tensor& grid, std::span<const double> dow) {
    return forward_batch(params, single_sample(params.desc, grid, dow))[0];
}

LossValue loss_bce(double p, double y) {
    const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    return {-(y * std::log(q) + (1.0 - y) * std::log(1.0 - q)), p - y};
}

double batch_loss(const ModelParams& params, const BatchInput& batch, std::span<const double> labels) {
    if (labels.size() != batch.size) throw ShapeError("label count does not match batch size");
    const auto probs = forward_batch(params, batch);
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) sum += loss_bce(probs[i], labels[i]).loss;
    return sum / static_cast<double>(probs.size());
}

std::vector<std::uint8_t> relu_pattern(const ModelParams& params, const BatchInput& batch) {
    const Trace tr = run_forward(params, batch);
    std::vector<std::uint8_t> bits;
    for (const auto& m : tr.conv_out)
        for (Index i = 0; i < m.size(); ++i) bits.push_back(m.data()[i] > 0.0);
    for (const auto& m : tr.dense_out)
        for (Index i = 0; i < m.size(); ++i) bits.push_back(m.data()[i] > 0.0);
    return bits;
}

Gradients backward(const ModelParams& params, const BatchInput& batch, std::span<const double> labels, double* mean_loss) {
    if (labels.size() != batch.size) throw ShapeError("label count does not match batch size");
    const ArchitectureDescriptor& d = params.desc;
    const Trace tr = run_forward(params, batch);
    const Index B = static_cast<Index>(batch.size);
    Gradients g = zeros_like(params);

    Eigen::VectorXd dlogit(B);
    double loss = 0.0;
    for (Index i = 0; i < B; ++i) {
        const LossValue lv = loss_bce(sigmoid(tr.logits[i]), labels[static_cast<std::size_t>(i)]);
        loss += lv.loss;
        dlogit[i] = lv.dlogit / static_cast<double>(B);
    }
    if (mean_loss) *mean_loss = loss / static_cast<double>(B);

    std::size_t wi = params.weights.size() - 2;
    const RowMat& top = d.dense_hidden.empty() ? tr.dense_in0 : tr.dense_out.back();
    mmap(g[wi], top.cols(), 1) = top.transpose() * dlogit;
    g[wi + 1][0] = dlogit.sum();
    RowMat dh = dlogit * cmap(params.weights[wi], top.cols(), 1).transpose();

    for (std::size_t j = d.dense_hidden.size(); j-- > 0;) {
        wi -= 2;
        const RowMat& in = j == 0 ? tr.dense_in0 : tr.dense_out[j - 1];
        const RowMat dz = dh.cwiseProduct((tr.dense_out[j].array() > 0.0).cast<double>().matrix());
        const Index out = dz.cols();
        mmap(g[wi], in.cols(), out).noalias() = in.transpose() * dz;
        mmap(g[wi + 1], 1, out) = dz.colwise().sum();
        dh.noalias() = dz * cmap(params.weights[wi], in.cols(), out).transpose();
    }

    const Index last_c = static_cast<Index>(d.conv_channels.back());
    const RowMat flat = dh.leftCols(static_cast<Index>(d.flatten_size()));
    RowMat dy = ConstMatMap(flat.data(), B * static_cast<Index>(kGridCells), last_c);
    for (std::size_t i = d.conv_channels.size(); i-- > 0;) {
        wi -= 2;
        dy = dy.cwiseProduct((tr.conv_out[i].array() > 0.0).cast<double>().matrix());
        RowMat dx;
        conv_backward(tr.conv_in[i], params.weights[wi], dy, batch.size, g[wi], g[wi + 1], i > 0 ? &dx : nullptr);
        if (i > 0) dy = std::move(dx);
    }
    for (const auto& t : g)
        if (!t.all_finite()) throw NumericError("non-finite gradient");
    return g;
}

AdamState AdamState::for_params(const ModelParams& params) {
    AdamState s;
    s.m = zeros_like(params);
    s.v = zeros_like(params);
    return s;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr, const AdamConfig& cfg) {
    if (grads.size() != params.weights.size() || state.m.size() != params.weights.size())
        throw ShapeError("Adam: gradient/state count does not match parameters");
    ++state.step;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.weights.size(); ++i) {
        auto w = params.weights[i].data();
        const auto gi = grads[i].data();
        auto m = state.m[i].data();
        auto v = state.v[i].data();
        if (gi.size() != w.size()) throw ShapeError("Adam: gradient shape mismatch");
        const auto n = static_cast<Eigen::Index>(w.size());
        Eigen::Map<Eigen::ArrayXd> W(w.data(), n), M(m.data(), n), V(v.data(), n);
        const Eigen::Map<const Eigen::ArrayXd> G(gi.data(), n);
        M = cfg.beta1 * M + (1.0 - cfg.beta1) * G;
        V = cfg.beta2 * V + (1.0 - cfg.beta2) * G.square();
        W -= lr * (M / c1) / ((V / c2).sqrt() + cfg.eps);
    }
}

} // namespace crimexfer::nn

#include "crimexfer/tensor.hpp"

#include "crimexfer/error.hpp"

#include <cmath>

namespace crimexfer::nn {

Tensor::Tensor(std::vector<std::size_t> shape, const std::vector<double>& data)
    : shape_(std::move(shape)), data_(data.begin(), data.end()) {
    if (data_.size() != element_count(shape_))
        throw ShapeError("tensor data has " + std::to_string(data_.size()) + " values for shape " + shape_string());
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_string() const {
    std::string s = "[";
    for (std::size_t i = 0; i < shape_.size(); ++i) s += (i ? "," : "") + std::to_string(shape_[i]);
    return s + "]";
}

} // namespace crimexfer::nn

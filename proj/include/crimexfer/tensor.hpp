#pragma once

#include <cstddef>
#include <functional>
#include <new>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace crimexfer::nn {

// Cache-line aligned storage so vectorized reductions take the same path for every copy.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t alignment{64};
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}
    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using AlignedVector = std::vector<double, AlignedAllocator<double>>;

/// Row-major dense array of 64-bit floats.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(element_count(shape_), fill) {}
    Tensor(std::vector<std::size_t> shape, const std::vector<double>& data);

    static std::size_t element_count(const std::vector<std::size_t>& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    /// (C, H, W) accessor.
    double& at(std::size_t c, std::size_t h, std::size_t w) { return data_[(c * shape_[1] + h) * shape_[2] + w]; }
    double at(std::size_t c, std::size_t h, std::size_t w) const { return data_[(c * shape_[1] + h) * shape_[2] + w]; }

    bool all_finite() const;
    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    AlignedVector data_;
};

} // namespace crimexfer::nn

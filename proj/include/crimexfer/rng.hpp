#pragma once

#include <cstdint>
#include <limits>
#include <initializer_list>

namespace crimexfer {

/// SplitMix64 output mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Folds a list of tags into a seed; used to give every job its own stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (std::uint64_t t : tags) h = mix64(h ^ mix64(t + 0x9e3779b97f4a7c15ULL));
    return h;
}

/// FNV-1a over a string, for deriving seeds from names.
constexpr std::uint64_t hash_name(const char* s, std::size_t n) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n; ++i) h = (h ^ static_cast<unsigned char>(s[i])) * 0x100000001b3ULL;
    return h;
}

/// Counter-based generator: the i-th draw is mix64(key + i * golden). Satisfies
/// UniformRandomBitGenerator so it can drive <random> distributions.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0, std::uint64_t counter = 0) noexcept : key_(key), counter_(counter) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n), n > 0 (Lemire multiply-shift; negligible bias for small n).
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>((*this)()) * n) >> 64);
    }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace crimexfer

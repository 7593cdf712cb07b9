#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace prldpc {

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Derive a child key from a parent key and an index.
constexpr std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept
{
    return mix64(mix64(parent ^ 0x6A09E667F3BCC909ULL) + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

/**
 * Counter-based random stream.
 *
 * Word k of the stream is mix64(key + (k + 1) * golden), i.e. SplitMix64
 * evaluated at an explicit counter, so any position can be reproduced from
 * (key, counter) alone. Normal deviates use the Box-Muller transform on two
 * consecutive words and return the cosine branch first, then the sine branch.
 */
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) noexcept : key_(key) {}

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t counter() const noexcept { return counter_; }

    std::uint64_t next_u64() noexcept
    {
        ++counter_;
        return mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1].
    double uniform_open_low() noexcept
    {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    std::uint8_t bit() noexcept { return static_cast<std::uint8_t>(next_u64() >> 63); }

    /// Uniform integer in [0, n). Slight modulo bias is irrelevant for n << 2^64.
    std::uint64_t below(std::uint64_t n) noexcept { return n == 0 ? 0 : next_u64() % n; }

    double gaussian() noexcept
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open_low();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace prldpc

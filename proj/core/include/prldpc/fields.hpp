#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "prldpc/ldpc.hpp"

namespace prldpc {

// Soft values throughout the library are fields: half log-likelihood ratios,
// P(x = +1) / P(x = -1) = exp(2 * field).

/// Smallest complement 1 - |tanh product| used when converting back to a field;
/// keeps every message finite (|message| <= about 345).
inline constexpr double kMinComplement = 1e-300;

/// tanh(x) together with its complement 1 - |tanh(x)|, each to full relative precision.
struct TanhFactor {
    double t = 0.0;
    double comp = 1.0;
};

inline TanhFactor tanh_factor(double x) noexcept
{
    const double ax = std::abs(x);
    TanhFactor f;
    if (ax < 0.5) {
        const double m = std::expm1(-2.0 * ax);
        f.t = -m / (2.0 + m);
        f.comp = 2.0 * (1.0 + m) / (2.0 + m);
    } else {
        const double e = std::exp(-2.0 * ax);
        f.t = (1.0 - e) / (1.0 + e);
        f.comp = 2.0 * e / (1.0 + e);
    }
    f.t = std::copysign(f.t, x);
    return f;
}

/**
 * Product of tanh factors converted back with atanh. The product is carried
 * both directly and as its complement so that nearly saturated factors keep
 * their precision; the first fold is exact.
 */
class TanhProduct {
public:
    void fold(const TanhFactor &f) noexcept
    {
        t_ *= f.t;
        comp_ += f.comp * (1.0 - comp_);
    }

    double atanh() const noexcept
    {
        if (comp_ >= 0.5)
            return std::atanh(t_);
        const double c = std::max(comp_, kMinComplement);
        return std::copysign(0.5 * std::log1p(2.0 * (1.0 - c) / c), t_);
    }

private:
    double t_ = 1.0;
    double comp_ = 0.0;
};

/// atanh(tanh(a) * tanh(b)).
inline double tanh_pair(double a, double b) noexcept
{
    TanhProduct p;
    p.fold(tanh_factor(a));
    p.fold(tanh_factor(b));
    return p.atanh();
}

/// Field >= 0 decides bit 0 (symbol +1).
inline Bits hard_decision(std::span<const double> fields)
{
    Bits out(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i)
        out[i] = fields[i] >= 0.0 ? 0 : 1;
    return out;
}

struct DecodeResult {
    Bits hard_bits;
    std::vector<double> lambdas;
    std::size_t iterations_used = 0;
    bool converged = false;
    std::size_t detector_passes = 0; ///< BCJR passes (turbo only)
    std::size_t inner_iterations = 0; ///< sum-product iterations (turbo only)
};

} // namespace prldpc

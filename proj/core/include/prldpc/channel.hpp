#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prldpc/random.hpp"

namespace prldpc {

/**
 * Partial-response target h(D) = h_0 + h_1 D + ... + h_L D^L with h_0 = 1.
 */
class PrTarget {
public:
    explicit PrTarget(std::vector<double> coeffs);

    /// Accepts "1,-1", "1 -1" or polynomial shorthand such as "1-D", "1-D^2", "1+0.5D".
    static PrTarget parse(std::string_view text);

    const std::vector<double> &coeffs() const noexcept { return coeffs_; }
    std::size_t isi_len() const noexcept { return coeffs_.size() - 1; }
    double h(std::size_t j) const { return coeffs_.at(j); }

    /// Sum of squared taps.
    double energy() const noexcept;

    /// Tap autocorrelation sum_{k=0}^{L-p} h_k h_{k+p}.
    double autocorrelation(std::size_t lag) const;

    /// Lags p in [1, L] whose autocorrelation is nonzero.
    std::vector<std::size_t> pairwise_lags() const;

    /// True iff h(D) = 1 - alpha D^n with |alpha| <= 1 (or L = 0), the form on
    /// which pairwise BP is exact on loop-free graphs.
    bool is_bp_exact() const;

    /// Canonical text, e.g. "1-D", "1+0.5D", "1-D^2".
    std::string to_string() const;

    friend bool operator==(const PrTarget &, const PrTarget &) = default;

private:
    std::vector<double> coeffs_;
};

/// Scaling of the expanded likelihood exponent.
enum class Convention {
    paper, ///< coefficient s^2 (reproduces Q_1 = -s^2 on the dicode channel)
    exact, ///< coefficient 1/sigma^2, the true Gaussian precision
};

std::string_view to_string(Convention c);
Convention parse_convention(std::string_view text);

struct NoiseSpec {
    double snr_linear = 1.0; ///< s^2
    double sigma2 = 1.0;     ///< noise variance

    static NoiseSpec from_snr_db(const PrTarget &target, double snr_db);
    double sigma() const;
};

/// sigma^2 = sum h_j^2 / 10^(snr_db / 10).
double snr_to_sigma2(const PrTarget &target, double snr_db);

/// snr_plot_db + 10 log10(R); R must lie in (0, 1].
double apply_rate_penalty(double snr_plot_db, double rate);

/// Coefficient c multiplying the expanded likelihood: s^2 or 1/sigma^2.
double precision_coefficient(const PrTarget &target, const NoiseSpec &noise, Convention conv);

/// y_m = sum_j h_j x_{m-j} + noise for m = 1..N+L, with `pad` on both sides of x.
std::vector<double> transmit(std::span<const std::int8_t> x, const PrTarget &target, const NoiseSpec &noise,
                             CounterRng &rng, std::int8_t pad = 1);
std::vector<double> transmit_noiseless(std::span<const std::int8_t> x, const PrTarget &target, std::int8_t pad = 1);

struct ChannelCouplings {
    std::vector<double> u;        ///< per-bit fields, boundary corrections included
    std::vector<double> q;        ///< q[p-1] = Q_p, p = 1..L
    std::vector<double> boundary; ///< the part of u contributed by known padding symbols
    double precision = 0.0;       ///< c

    std::size_t n_vars() const noexcept { return u.size(); }
    double coupling(std::size_t lag) const { return lag == 0 ? 0.0 : q.at(lag - 1); }
};

ChannelCouplings compute_couplings(std::span<const double> y, const PrTarget &target, const NoiseSpec &noise,
                                   std::int8_t pad, Convention conv);

/// Couplings built from an explicit coefficient c, used where a convention-free
/// model is wanted (tests and the oracle instance generator).
ChannelCouplings couplings_with_precision(std::span<const double> y, const PrTarget &target, double c,
                                          std::int8_t pad);

/// -(c/2) sum_m (y_m - sum_j h_j x_{m-j})^2 with padding.
double log_likelihood(std::span<const double> y, std::span<const std::int8_t> x, const PrTarget &target, double c,
                      std::int8_t pad);

struct ExpansionCheck {
    double residual = 0.0;     ///< at the supplied x
    double max_residual = 0.0; ///< over all 2^N configurations
    double constant = 0.0;     ///< mean of logP - (sum u x - sum Q x x)
};

inline constexpr std::size_t kMaxExpansionBits = 20;

/// Checks that sum u_i x_i - sum Q x_i x_j reproduces the exact log-likelihood
/// up to an x-independent constant, by enumerating every configuration.
ExpansionCheck verify_expansion(std::span<const std::int8_t> x, std::span<const double> y, const PrTarget &target,
                                const NoiseSpec &noise, std::int8_t pad, Convention conv);

} // namespace prldpc

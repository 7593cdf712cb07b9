#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prldpc/channel.hpp"
#include "prldpc/fields.hpp"
#include "prldpc/ldpc.hpp"
#include "prldpc/ops.hpp"

namespace prldpc {

/**
 * Flooding sum-product decoder for a memoryless channel.
 *
 * The check-to-variable messages persist between calls to iterate(), which
 * lets the turbo loop keep the decoder state across detector passes.
 */
class SumProductDecoder {
public:
    explicit SumProductDecoder(const ParityCheckMatrix &h);

    const ParityCheckMatrix &code() const noexcept { return h_; }
    void reset();

    /// One iteration: variable fields from the cached messages, then messages
    /// refreshed. With `ops`, every message is recomputed per edge and tallied.
    void iterate(std::span<const double> llr, OpCounter *ops = nullptr);

    /// llr_i + sum of incoming check messages.
    std::vector<double> posterior(std::span<const double> llr) const;
    /// Sum of incoming check messages (posterior minus input).
    std::vector<double> extrinsic() const;

    /// Check messages per edge, edges numbered row-major.
    const std::vector<double> &messages() const noexcept { return mu_; }
    std::size_t iteration() const noexcept { return iteration_; }

private:
    ParityCheckMatrix h_;
    std::vector<std::uint32_t> row_offset_;
    std::vector<std::uint32_t> var_edges_, var_offset_;
    std::vector<double> mu_, eta_;
    std::vector<TanhFactor> tanh_;
    std::size_t iteration_ = 0;
};

struct SumProductOptions {
    std::size_t max_iter = 20;
    bool early_stop = true;
    OpCounter *ops = nullptr;
    std::function<void(std::size_t, std::span<const double>)> on_iteration;
};

DecodeResult sum_product_decode(const ParityCheckMatrix &h, std::span<const double> llr,
                                const SumProductOptions &opt = {});

/// Operations of one counted sum-product iteration, from the code's degrees.
OpCount sum_product_iteration_cost(const ParityCheckMatrix &h);

/**
 * Trellis of a PR target. A state holds the last L symbols as bits, bit k
 * being the symbol k + 1 steps in the past.
 */
class Trellis {
public:
    explicit Trellis(PrTarget target);

    const PrTarget &target() const noexcept { return target_; }
    std::size_t n_states() const noexcept { return std::size_t{1} << target_.isi_len(); }

    std::size_t next_state(std::size_t state, std::uint8_t bit) const;
    /// Noiseless output h_0 x + sum_j h_j x_{-j} for input `bit` from `state`.
    double output(std::size_t state, std::uint8_t bit) const;
    /// State whose L remembered symbols all equal `pad`.
    std::size_t pad_state(std::int8_t pad) const;

private:
    PrTarget target_;
    std::size_t mask_;
};

struct BcjrOutput {
    std::vector<double> posterior; ///< fields of the full a-posteriori marginals
    std::vector<double> extrinsic; ///< the same marginals with the prior term left out
};

/**
 * Log-domain forward-backward over N free steps and L termination steps
 * (inputs forced to `pad`). Branch metric -(c/2)(y - out)^2 + prior * x.
 * `priors` are fields; an empty span means uniform.
 */
BcjrOutput bcjr(const Trellis &trellis, std::span<const double> y, std::span<const double> priors, double c,
                std::int8_t pad = 1);

/// Probability-domain forward-backward that tallies every multiplication and
/// addition. Termination steps are booked as overhead.
BcjrOutput bcjr_counted(const Trellis &trellis, std::span<const double> y, std::span<const double> priors, double c,
                        std::int8_t pad, OpCounter &ops);

struct TurboSchedule {
    std::size_t outer = 3; ///< T
    std::size_t inner = 6; ///< S

    /// "3x6", meaning 3 turbo iterations of one BCJR pass plus 6 sum-product iterations.
    static TurboSchedule parse(std::string_view text);
    std::string to_string() const;
    std::size_t budget() const noexcept { return outer * (inner + 1); }

    friend bool operator==(const TurboSchedule &, const TurboSchedule &) = default;
};

struct TurboOptions {
    TurboSchedule schedule;
    bool early_stop = true;
    OpCounter *ops = nullptr;
};

/// Turbo equalization. iterations_used counts BCJR passes plus sum-product iterations.
DecodeResult turbo_equalize(const ParityCheckMatrix &h, const Trellis &trellis, std::span<const double> y, double c,
                            std::int8_t pad, const TurboOptions &opt = {});

} // namespace prldpc

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace prldpc {

/// Multiplication / addition tally. tanh, atanh, exp and log are treated as
/// table lookups and never counted; neither is computing the channel fields u_i.
struct OpCount {
    std::uint64_t mults = 0;
    std::uint64_t adds = 0;

    OpCount &operator+=(const OpCount &o)
    {
        mults += o.mults;
        adds += o.adds;
        return *this;
    }
    friend OpCount operator+(OpCount a, const OpCount &b) { return a += b; }
    friend OpCount operator*(OpCount a, std::uint64_t k) { return {a.mults * k, a.adds * k}; }
    friend bool operator==(const OpCount &, const OpCount &) = default;
};

struct PerSymbolOps {
    double mults = 0.0;
    double adds = 0.0;
};

/// Per-symbol operation counter filled in by the instrumented decoders.
class OpCounter {
public:
    explicit OpCounter(std::size_t n_symbols = 0) : per_symbol_(n_symbols) {}

    void reset(std::size_t n_symbols) { per_symbol_.assign(n_symbols, {}); overhead_ = {}; }
    std::size_t n_symbols() const noexcept { return per_symbol_.size(); }

    void mul(std::size_t sym, std::uint64_t k = 1) { per_symbol_[sym].mults += k; }
    void add(std::size_t sym, std::uint64_t k = 1) { per_symbol_[sym].adds += k; }
    /// Work that belongs to no transmitted symbol (trellis termination steps).
    void overhead(const OpCount &c) { overhead_ += c; }

    const OpCount &symbol(std::size_t sym) const { return per_symbol_.at(sym); }
    const OpCount &overhead() const noexcept { return overhead_; }
    OpCount total() const;

    /// Mean over symbols [skip, N - skip); skip = L excludes the block edges
    /// where symbols have fewer ISI neighbours.
    PerSymbolOps per_symbol(std::size_t skip = 0) const;

private:
    std::vector<OpCount> per_symbol_;
    OpCount overhead_;
};

/// Per-symbol cost of a regular (q, p) code: pairwise PR-BP when `pairwise`,
/// memoryless sum-product otherwise, times `iterations`.
OpCount predicted_ops(std::uint64_t q, std::uint64_t p, bool pairwise, std::uint64_t iterations);

/// Per-symbol cost of one BCJR step on a trellis with `states` states.
OpCount predicted_bcjr_ops(std::uint64_t states);

/// Per-symbol cost of turbo equalization: T x (one BCJR pass + S sum-product iterations).
OpCount predicted_turbo_ops(std::uint64_t q, std::uint64_t p, std::uint64_t states, std::uint64_t outer,
                            std::uint64_t inner);

} // namespace prldpc

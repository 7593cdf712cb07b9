#include "prldpc/ops.hpp"

#include <stdexcept>

namespace prldpc {

OpCount OpCounter::total() const
{
    OpCount t = overhead_;
    for (const auto &s : per_symbol_)
        t += s;
    return t;
}

PerSymbolOps OpCounter::per_symbol(std::size_t skip) const
{
    if (2 * skip >= per_symbol_.size())
        throw std::invalid_argument("OpCounter::per_symbol: no interior symbols");
    OpCount t;
    for (std::size_t i = skip; i + skip < per_symbol_.size(); ++i)
        t += per_symbol_[i];
    const auto n = static_cast<double>(per_symbol_.size() - 2 * skip);
    return {static_cast<double>(t.mults) / n, static_cast<double>(t.adds) / n};
}

OpCount predicted_ops(std::uint64_t q, std::uint64_t p, bool pairwise, std::uint64_t iterations)
{
    if (q < 2 || p < 2)
        throw std::invalid_argument("predicted_ops: needs q >= 2 and p >= 2");
    OpCount per_iter;
    if (pairwise) {
        per_iter.mults = q * (q - 1) * (p - 2) + 2;
        per_iter.adds = q * (q + 1) + 6;
    } else {
        per_iter.mults = q * (q - 1) * (p - 2);
        per_iter.adds = q * (q - 1);
    }
    return per_iter * iterations;
}

OpCount predicted_bcjr_ops(std::uint64_t states)
{
    if (states < 2)
        throw std::invalid_argument("predicted_bcjr_ops: needs at least two states");
    const std::uint64_t branches = 2 * states;
    OpCount c;
    // branch metrics, forward, backward, a-posteriori sums, forward normalization
    c.mults = branches + branches + branches + branches + states;
    // forward, backward, a-posteriori sums, normalization, LLR difference, extrinsic
    c.adds = (branches - states) + (branches - states) + (branches - 2) + (states - 1) + 1 + 1;
    return c;
}

OpCount predicted_turbo_ops(std::uint64_t q, std::uint64_t p, std::uint64_t states, std::uint64_t outer,
                            std::uint64_t inner)
{
    return (predicted_bcjr_ops(states) + predicted_ops(q, p, false, inner)) * outer;
}

} // namespace prldpc

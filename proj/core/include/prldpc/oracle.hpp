#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "prldpc/channel.hpp"
#include "prldpc/decoder.hpp"

namespace prldpc {

inline constexpr std::size_t kMaxOracleBits = 24;

class ZeroSupportError : public std::runtime_error {
public:
    ZeroSupportError() : std::runtime_error("every configuration violates a parity check") {}
};

struct ExactMarginals {
    std::vector<double> p_plus; ///< P(x_i = +1)
    std::vector<double> fields; ///< 0.5 ln(P(+1) / P(-1))
    double log_z = 0.0;
};

/**
 * Brute-force marginals of
 * P(x) ~ prod_checks delta(parity) * exp(sum u_i x_i - sum_isi Q x_a x_b)
 * over all 2^N configurations.
 */
ExactMarginals exact_marginals(const FactorGraph &g, const ChannelCouplings &c);

/**
 * Beliefs on every node of the tripartite graph. Two-valued tables are
 * indexed by bit (0 is x = +1). Check tables are indexed by a mask over the
 * check's variables in row order (bit k set means the k-th variable is -1);
 * ISI tables by bit_a + 2 * bit_b.
 */
struct BeliefSet {
    std::vector<std::array<double, 2>> var;
    std::vector<std::vector<double>> check;
    std::vector<std::array<double, 4>> isi;
};

/// Beliefs reconstructed from the fields and cached messages of `s`.
BeliefSet beliefs_from_fields(const FactorGraph &g, const FieldState &s, const ChannelCouplings &c);

/// Exact beliefs of every node by enumeration (same guard as exact_marginals).
BeliefSet exact_beliefs(const FactorGraph &g, const ChannelCouplings &c);

/**
 * Bethe free energy F = U - H. The fields u_i / q_i are folded into each check
 * factor; variables without checks carry their own unary term. The node
 * entropy weight is (number of incident checks and ISI nodes) - 1. Support on
 * a parity-violating configuration gives +infinity.
 */
double bethe_free_energy(const FactorGraph &g, const BeliefSet &b, const ChannelCouplings &c);

struct ConstraintResiduals {
    double normalization = 0.0; ///< max |sum of a table - 1|
    double consistency = 0.0;   ///< max |factor marginal - variable belief|
};

ConstraintResiduals constraint_residuals(const FactorGraph &g, const BeliefSet &b);

/// Max |rhs - stored field| of the fixed-point equations, with every message
/// evaluated from the stored fields.
double stationarity_residual(const FactorGraph &g, const FieldState &s, const ChannelCouplings &c);

struct TreeInstance {
    FactorGraph graph;
    ChannelCouplings couplings;
};

/**
 * Random loop-free instance: a forest of checks (each new check shares one
 * variable with the already-connected part and adds fresh leaves), then the
 * target's ISI pairs wherever they close no cycle. Couplings come from a
 * channel realization at `snr_db` with coefficient s^2.
 */
TreeInstance random_tree_instance(CounterRng &rng, std::size_t n_vars, const PrTarget &target, double snr_db);

struct TreeCheckSummary {
    std::size_t instances = 0;
    double max_marginal_error = 0.0;
    double max_stationarity = 0.0;
    double max_free_energy_gap = 0.0; ///< |F + log Z|
    double max_consistency = 0.0;
    std::size_t max_iterations = 0;
};

/// Decode `count` random trees per target to a fixed point and compare against enumeration.
TreeCheckSummary run_tree_checks(std::size_t n_vars, std::size_t count, std::uint64_t seed,
                                 const std::vector<PrTarget> &targets, double snr_db = 2.0);

} // namespace prldpc

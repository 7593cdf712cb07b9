#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "prldpc/channel.hpp"
#include "prldpc/fields.hpp"
#include "prldpc/ldpc.hpp"
#include "prldpc/ops.hpp"

namespace prldpc {

/// Pairwise channel factor exp(-Q_lag x_a x_b), a < b, b - a = lag.
struct IsiNode {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t lag = 0;

    friend bool operator==(const IsiNode &, const IsiNode &) = default;
};

/**
 * Tripartite graph: variables, parity checks and pairwise ISI nodes.
 *
 * Check edges are numbered row-major (check 0's variables first). ISI edges
 * are numbered 2k + side, where side 0 is the edge to node k's `a` endpoint
 * and side 1 the edge to its `b` endpoint; edge e ^ 1 is always the other
 * endpoint of the same ISI node.
 */
class FactorGraph {
public:
    FactorGraph() = default;
    FactorGraph(ParityCheckMatrix code, std::vector<IsiNode> isi);

    /// One ISI node per lag with nonzero tap autocorrelation and per position.
    static FactorGraph build(const ParityCheckMatrix &code, const PrTarget &target);

    const ParityCheckMatrix &code() const noexcept { return code_; }
    const std::vector<IsiNode> &isi_nodes() const noexcept { return isi_; }

    std::size_t n_vars() const noexcept { return code_.n_vars(); }
    std::size_t n_checks() const noexcept { return code_.n_checks(); }
    std::size_t n_check_edges() const noexcept { return edge_var_.size(); }
    std::size_t n_isi_edges() const noexcept { return 2 * isi_.size(); }

    std::uint32_t edge_var(std::size_t e) const { return edge_var_[e]; }
    std::uint32_t edge_check(std::size_t e) const { return edge_check_[e]; }
    /// Check edges of check j, in row order.
    std::span<const std::uint32_t> check_edges(std::size_t j) const;
    /// Check edges of variable i, ordered by check index.
    std::span<const std::uint32_t> var_check_edges(std::size_t i) const;
    /// ISI edges incident on variable i, ordered by ISI node index.
    std::span<const std::uint32_t> var_isi_edges(std::size_t i) const;

    std::uint32_t isi_edge_var(std::size_t e) const
    {
        const auto &n = isi_[e >> 1];
        return (e & 1U) ? n.b : n.a;
    }
    std::uint32_t isi_edge_lag(std::size_t e) const { return isi_[e >> 1].lag; }

    /// True when the combined graph (checks + ISI nodes) has no cycle.
    bool is_loop_free() const;

private:
    ParityCheckMatrix code_;
    std::vector<IsiNode> isi_;
    std::vector<std::uint32_t> edge_ids_, edge_var_, edge_check_;
    std::vector<std::uint32_t> row_offset_;
    std::vector<std::uint32_t> var_edges_, var_edge_offset_;
    std::vector<std::uint32_t> var_isi_, var_isi_offset_;
};

/// Edge fields and cached messages of the PR-BP iteration.
struct FieldState {
    std::vector<double> eta_check; ///< variable -> check, per check edge
    std::vector<double> mu;        ///< check -> variable, per check edge
    std::vector<double> eta_isi;   ///< variable -> ISI node, per ISI edge
    std::vector<double> zeta;      ///< ISI node -> variable, per ISI edge (message to that edge's variable)
    std::size_t iteration = 0;

    /// Iteration 0: every field and message is zero.
    static FieldState initial(const FactorGraph &g);
};

/// mu for check edge e: atanh of the product of tanh of the other fields on the check.
double check_message(const FactorGraph &g, const FieldState &s, std::size_t e);

/// zeta for ISI edge e: atanh(tanh(eta of the other endpoint) * tanh(Q)).
/// Enters the receiving variable's fields with a minus sign.
double isi_message(const FactorGraph &g, const FieldState &s, const ChannelCouplings &c, std::size_t e);

/// One flooding step: new fields from the cached messages, then messages
/// refreshed from the new fields. `out` may not alias `in`.
void update_fields(const FactorGraph &g, const ChannelCouplings &c, const FieldState &in, FieldState &out);
FieldState update_fields(const FactorGraph &g, const ChannelCouplings &c, const FieldState &in);

/// Same values as update_fields, computed with per-edge recomputation of every
/// message so the tally matches the per-symbol operation model.
void update_fields_counted(const FactorGraph &g, const ChannelCouplings &c, const FieldState &in, FieldState &out,
                           OpCounter &ops);

/// Total operations of one update_fields_counted step, evaluated from the
/// graph's degrees without running it.
OpCount prbp_iteration_cost(const FactorGraph &g);

/// Lambda_i = u_i + sum of check messages. With `full_posterior` the ISI
/// messages are subtracted as well, giving the belief field of variable i.
std::vector<double> likelihoods(const FactorGraph &g, const FieldState &s, const ChannelCouplings &c,
                                bool full_posterior = false);

struct TraceRow {
    std::size_t iteration = 0;
    double min_abs_eta = 0.0;
    double max_abs_eta = 0.0;
    double mean_abs_eta = 0.0;
    std::size_t syndrome_weight = 0;
};

void write_trace_csv(std::ostream &out, std::span<const TraceRow> rows);

struct DecodeOptions {
    std::size_t max_iter = 20;
    bool early_stop = true;
    bool full_posterior = false;
    bool keep_snapshot = false;
    OpCounter *ops = nullptr;
    std::vector<TraceRow> *trace = nullptr;
    /// Called after every iteration with the iteration number and Lambda.
    std::function<void(std::size_t, std::span<const double>)> on_iteration;
};

struct PrbpResult : DecodeResult {
    std::optional<FieldState> field_snapshot;
};

PrbpResult decode(const FactorGraph &g, const ChannelCouplings &c, const DecodeOptions &opt = {});

} // namespace prldpc

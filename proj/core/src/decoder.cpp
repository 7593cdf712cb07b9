#include "prldpc/decoder.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

namespace prldpc {

FactorGraph::FactorGraph(ParityCheckMatrix code, std::vector<IsiNode> isi)
    : code_(std::move(code)), isi_(std::move(isi))
{
    const std::size_t n = code_.n_vars();
    for (const auto &node : isi_) {
        if (node.a >= node.b || node.b >= n)
            throw std::invalid_argument("ISI node must join two distinct in-range variables with a < b");
        if (node.b - node.a != node.lag || node.lag == 0)
            throw std::invalid_argument("ISI node lag must equal the index distance");
    }

    row_offset_.assign(code_.n_checks() + 1, 0);
    for (std::size_t j = 0; j < code_.n_checks(); ++j) {
        row_offset_[j + 1] = row_offset_[j] + static_cast<std::uint32_t>(code_.check_degree(j));
        for (auto v : code_.row(j)) {
            edge_ids_.push_back(static_cast<std::uint32_t>(edge_var_.size()));
            edge_var_.push_back(v);
            edge_check_.push_back(static_cast<std::uint32_t>(j));
        }
    }

    // Variable-side edge lists; edges are appended in increasing check order.
    std::vector<std::vector<std::uint32_t>> per_var(n);
    for (std::uint32_t e = 0; e < edge_var_.size(); ++e)
        per_var[edge_var_[e]].push_back(e);
    var_edge_offset_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        var_edge_offset_[i + 1] = var_edge_offset_[i] + static_cast<std::uint32_t>(per_var[i].size());
        var_edges_.insert(var_edges_.end(), per_var[i].begin(), per_var[i].end());
    }

    std::vector<std::vector<std::uint32_t>> per_var_isi(n);
    for (std::uint32_t k = 0; k < isi_.size(); ++k) {
        per_var_isi[isi_[k].a].push_back(2 * k);
        per_var_isi[isi_[k].b].push_back(2 * k + 1);
    }
    var_isi_offset_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        var_isi_offset_[i + 1] = var_isi_offset_[i] + static_cast<std::uint32_t>(per_var_isi[i].size());
        var_isi_.insert(var_isi_.end(), per_var_isi[i].begin(), per_var_isi[i].end());
    }
}

FactorGraph FactorGraph::build(const ParityCheckMatrix &code, const PrTarget &target)
{
    std::vector<IsiNode> isi;
    const std::size_t n = code.n_vars();
    for (auto lag : target.pairwise_lags())
        for (std::size_t a = 0; a + lag < n; ++a)
            isi.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a + lag),
                           static_cast<std::uint32_t>(lag)});
    return FactorGraph(code, std::move(isi));
}

std::span<const std::uint32_t> FactorGraph::check_edges(std::size_t j) const
{
    return {edge_ids_.data() + row_offset_[j], row_offset_[j + 1] - row_offset_[j]};
}

std::span<const std::uint32_t> FactorGraph::var_check_edges(std::size_t i) const
{
    return {var_edges_.data() + var_edge_offset_[i], var_edge_offset_[i + 1] - var_edge_offset_[i]};
}

std::span<const std::uint32_t> FactorGraph::var_isi_edges(std::size_t i) const
{
    return {var_isi_.data() + var_isi_offset_[i], var_isi_offset_[i + 1] - var_isi_offset_[i]};
}

bool FactorGraph::is_loop_free() const
{
    // Union-find over variables + checks + ISI nodes; an edge inside one
    // component closes a cycle.
    const std::size_t n = n_vars(), m = n_checks();
    std::vector<std::size_t> parent(n + m + isi_.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b)
            return false;
        parent[a] = b;
        return true;
    };
    for (std::size_t e = 0; e < n_check_edges(); ++e)
        if (!unite(edge_var_[e], n + edge_check_[e]))
            return false;
    for (std::size_t k = 0; k < isi_.size(); ++k) {
        if (!unite(isi_[k].a, n + m + k) || !unite(isi_[k].b, n + m + k))
            return false;
    }
    return true;
}

FieldState FieldState::initial(const FactorGraph &g)
{
    FieldState s;
    s.eta_check.assign(g.n_check_edges(), 0.0);
    s.mu.assign(g.n_check_edges(), 0.0);
    s.eta_isi.assign(g.n_isi_edges(), 0.0);
    s.zeta.assign(g.n_isi_edges(), 0.0);
    return s;
}

double check_message(const FactorGraph &g, const FieldState &s, std::size_t e)
{
    TanhProduct prod;
    for (auto other : g.check_edges(g.edge_check(e)))
        if (other != e)
            prod.fold(tanh_factor(s.eta_check[other]));
    return prod.atanh();
}

double isi_message(const FactorGraph &g, const FieldState &s, const ChannelCouplings &c, std::size_t e)
{
    const double q = c.coupling(g.isi_edge_lag(e));
    return tanh_pair(s.eta_isi[e ^ 1U], q);
}

namespace {

void resize_like(const FieldState &in, FieldState &out)
{
    out.eta_check.resize(in.eta_check.size());
    out.mu.resize(in.mu.size());
    out.eta_isi.resize(in.eta_isi.size());
    out.zeta.resize(in.zeta.size());
}

/// Recompute mu and zeta caches of `s` from its own fields.
void refresh_messages(const FactorGraph &g, const ChannelCouplings &c, FieldState &s,
                      std::vector<TanhFactor> &tanh_buf)
{
    tanh_buf.resize(g.n_check_edges());
    for (std::size_t e = 0; e < g.n_check_edges(); ++e)
        tanh_buf[e] = tanh_factor(s.eta_check[e]);
    for (std::size_t j = 0; j < g.n_checks(); ++j) {
        const auto edges = g.check_edges(j);
        for (auto e : edges) {
            TanhProduct prod;
            for (auto other : edges)
                if (other != e)
                    prod.fold(tanh_buf[other]);
            s.mu[e] = prod.atanh();
        }
    }
    for (std::size_t f = 0; f < g.n_isi_edges(); ++f)
        s.zeta[f] = isi_message(g, s, c, f);
}

} // namespace

void update_fields(const FactorGraph &g, const ChannelCouplings &c, const FieldState &in, FieldState &out)
{
    if (c.u.size() != g.n_vars())
        throw std::invalid_argument("update_fields: couplings do not match the graph size");
    resize_like(in, out);
    for (std::size_t i = 0; i < g.n_vars(); ++i) {
        const auto checks = g.var_check_edges(i);
        const auto isi = g.var_isi_edges(i);
        const double u = c.u[i];

        double z_all = 0.0;
        for (std::size_t k = 0; k < isi.size(); ++k)
            z_all = k == 0 ? in.zeta[isi[k]] : z_all + in.zeta[isi[k]];

        for (auto e : checks) {
            double mu_sum = 0.0;
            bool any = false;
            for (auto other : checks) {
                if (other == e)
                    continue;
                mu_sum = any ? mu_sum + in.mu[other] : in.mu[other];
                any = true;
            }
            double acc = u;
            if (any)
                acc += mu_sum;
            if (!isi.empty())
                acc -= z_all;
            out.eta_check[e] = acc;
        }

        double mu_all = 0.0;
        for (std::size_t k = 0; k < checks.size(); ++k)
            mu_all = k == 0 ? in.mu[checks[k]] : mu_all + in.mu[checks[k]];
        for (auto f : isi) {
            double z_others = 0.0;
            bool any = false;
            for (auto other : isi) {
                if (other == f)
                    continue;
                z_others = any ? z_others + in.zeta[other] : in.zeta[other];
                any = true;
            }
            double acc = u;
            if (any)
                acc -= z_others;
            if (!checks.empty())
                acc += mu_all;
            out.eta_isi[f] = acc;
        }
    }
    out.iteration = in.iteration + 1;
    thread_local std::vector<TanhFactor> tanh_buf;
    refresh_messages(g, c, out, tanh_buf);
}

FieldState update_fields(const FactorGraph &g, const ChannelCouplings &c, const FieldState &in)
{
    FieldState out;
    update_fields(g, c, in, out);
    return out;
}

void update_fields_counted(const FactorGraph &g, const ChannelCouplings &c, const FieldState &in, FieldState &out,
                           OpCounter &ops)
{
    if (c.u.size() != g.n_vars())
        throw std::invalid_argument("update_fields_counted: couplings do not match the graph size");
    if (ops.n_symbols() != g.n_vars())
        ops.reset(g.n_vars());
    resize_like(in, out);

    // mu for check edge b recomputed from the previous fields; p - 2 multiplications.
    auto fresh_mu = [&](std::uint32_t b, std::size_t sym) {
        bool first = true;
        TanhProduct prod;
        for (auto other : g.check_edges(g.edge_check(b))) {
            if (other == b)
                continue;
            prod.fold(tanh_factor(in.eta_check[other]));
            if (!first)
                ops.mul(sym);
            first = false;
        }
        // iteration 0 caches are zero by definition
        return in.iteration == 0 ? in.mu[b] : prod.atanh();
    };

    std::vector<double> z;
    for (std::size_t i = 0; i < g.n_vars(); ++i) {
        const auto checks = g.var_check_edges(i);
        const auto isi = g.var_isi_edges(i);
        const double u = c.u[i];

        // each zeta into i once: one multiplication
        z.resize(isi.size());
        for (std::size_t k = 0; k < isi.size(); ++k) {
            const double q = c.coupling(g.isi_edge_lag(isi[k]));
            z[k] = tanh_pair(in.eta_isi[isi[k] ^ 1U], q);
            ops.mul(i);
        }

        // Variable -> check fields: every mu and the zeta sum recomputed per edge.
        double last_partial = 0.0, mu_last = 0.0;
        for (std::size_t a = 0; a < checks.size(); ++a) {
            double mu_sum = 0.0;
            bool any = false;
            for (auto other : checks) {
                if (other == checks[a])
                    continue;
                const double m = fresh_mu(other, i);
                if (other == checks.back())
                    mu_last = m;
                if (any) {
                    mu_sum += m;
                    ops.add(i);
                } else {
                    mu_sum = m;
                    any = true;
                }
            }
            double z_all = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k) {
                if (k == 0) {
                    z_all = z[k];
                } else {
                    z_all += z[k];
                    ops.add(i);
                }
            }
            double acc = u;
            if (any) {
                acc += mu_sum;
                ops.add(i);
            }
            if (!isi.empty()) {
                acc -= z_all;
                ops.add(i);
            }
            out.eta_check[checks[a]] = acc;
            if (a + 1 == checks.size())
                last_partial = mu_sum;
        }
        if (checks.size() == 1 && !isi.empty())
            mu_last = fresh_mu(checks.back(), i);

        // Variable -> ISI fields: the full check sum completes the
        // leave-last-out partial of the last check edge with one addition.
        for (std::size_t k = 0; k < isi.size(); ++k) {
            double mu_all = 0.0;
            if (checks.size() == 1) {
                mu_all = mu_last;
            } else if (checks.size() > 1) {
                mu_all = last_partial + mu_last;
                ops.add(i);
            }
            double z_others = 0.0;
            bool any = false;
            for (std::size_t o = 0; o < isi.size(); ++o) {
                if (o == k)
                    continue;
                if (any) {
                    z_others += z[o];
                    ops.add(i);
                } else {
                    z_others = z[o];
                    any = true;
                }
            }
            double acc = u;
            if (any) {
                acc -= z_others;
                ops.add(i);
            }
            if (!checks.empty()) {
                acc += mu_all;
                ops.add(i);
            }
            out.eta_isi[isi[k]] = acc;
        }
    }
    out.iteration = in.iteration + 1;
    thread_local std::vector<TanhFactor> tanh_buf;
    refresh_messages(g, c, out, tanh_buf);
}

OpCount prbp_iteration_cost(const FactorGraph &g)
{
    auto sat = [](std::uint64_t v, std::uint64_t d) { return v > d ? v - d : 0; };
    OpCount total;
    for (std::size_t i = 0; i < g.n_vars(); ++i) {
        const auto checks = g.var_check_edges(i);
        const std::uint64_t q = checks.size();
        const std::uint64_t k = g.var_isi_edges(i).size();
        total.mults += k;
        for (auto e : checks) {
            for (auto other : checks)
                if (other != e)
                    total.mults += sat(g.code().check_degree(g.edge_check(other)), 2);
            total.adds += sat(q, 2) + sat(k, 1) + (q > 1 ? 1 : 0) + (k > 0 ? 1 : 0);
        }
        if (q == 1 && k > 0)
            total.mults += sat(g.code().check_degree(g.edge_check(checks[0])), 2);
        total.adds += k * ((q > 1 ? 1 : 0) + sat(k, 2) + (k > 1 ? 1 : 0) + (q > 0 ? 1 : 0));
    }
    return total;
}

std::vector<double> likelihoods(const FactorGraph &g, const FieldState &s, const ChannelCouplings &c,
                                bool full_posterior)
{
    std::vector<double> lambda(g.n_vars());
    for (std::size_t i = 0; i < g.n_vars(); ++i) {
        double acc = c.u[i];
        for (auto e : g.var_check_edges(i))
            acc += s.mu[e];
        if (full_posterior)
            for (auto f : g.var_isi_edges(i))
                acc -= s.zeta[f];
        lambda[i] = acc;
    }
    return lambda;
}

void write_trace_csv(std::ostream &out, std::span<const TraceRow> rows)
{
    out << "iteration,min_abs_eta,max_abs_eta,mean_abs_eta,syndrome_weight\n";
    char buf[160];
    for (const auto &r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.9e,%.9e,%.9e,%zu\n", r.iteration, r.min_abs_eta, r.max_abs_eta,
                      r.mean_abs_eta, r.syndrome_weight);
        out << buf;
    }
}

namespace {

TraceRow trace_row(const FieldState &s, std::size_t syndrome_weight)
{
    TraceRow row;
    row.iteration = s.iteration;
    row.syndrome_weight = syndrome_weight;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
    std::size_t count = 0;
    for (const auto *v : {&s.eta_check, &s.eta_isi}) {
        for (double x : *v) {
            const double a = std::abs(x);
            lo = std::min(lo, a);
            hi = std::max(hi, a);
            sum += a;
            ++count;
        }
    }
    row.min_abs_eta = count ? lo : 0.0;
    row.max_abs_eta = hi;
    row.mean_abs_eta = count ? sum / static_cast<double>(count) : 0.0;
    return row;
}

} // namespace

PrbpResult decode(const FactorGraph &g, const ChannelCouplings &c, const DecodeOptions &opt)
{
    if (opt.max_iter == 0)
        throw std::invalid_argument("decode: max_iter must be at least 1");
    if (c.u.size() != g.n_vars())
        throw std::invalid_argument("decode: couplings do not match the graph size");

    FieldState cur = FieldState::initial(g);
    FieldState next;
    PrbpResult res;
    for (std::size_t it = 1; it <= opt.max_iter; ++it) {
        if (opt.ops)
            update_fields_counted(g, c, cur, next, *opt.ops);
        else
            update_fields(g, c, cur, next);
        std::swap(cur, next);

        res.lambdas = likelihoods(g, cur, c, opt.full_posterior);
        res.hard_bits = hard_decision(res.lambdas);
        const auto synd = syndrome(g.code(), res.hard_bits);
        const auto weight = static_cast<std::size_t>(std::count(synd.begin(), synd.end(), std::uint8_t{1}));
        res.converged = weight == 0;
        res.iterations_used = it;
        if (opt.trace)
            opt.trace->push_back(trace_row(cur, weight));
        if (opt.on_iteration)
            opt.on_iteration(it, res.lambdas);
        if (res.converged && opt.early_stop)
            break;
    }
    if (opt.keep_snapshot)
        res.field_snapshot = std::move(cur);
    return res;
}

} // namespace prldpc

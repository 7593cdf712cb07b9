#include "prldpc/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace prldpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

struct Enumeration {
    const FactorGraph &g;
    const ChannelCouplings &c;
    std::vector<std::uint32_t> check_masks;

    Enumeration(const FactorGraph &graph, const ChannelCouplings &cp) : g(graph), c(cp)
    {
        if (g.n_vars() > kMaxOracleBits)
            throw std::invalid_argument("exact enumeration: N = " + std::to_string(g.n_vars()) + " exceeds " +
                                        std::to_string(kMaxOracleBits));
        if (c.u.size() != g.n_vars())
            throw std::invalid_argument("exact enumeration: couplings do not match the graph size");
        for (std::size_t j = 0; j < g.n_checks(); ++j) {
            std::uint32_t m = 0;
            for (auto v : g.code().row(j))
                m |= 1U << v;
            check_masks.push_back(m);
        }
    }

    // cfg bit i set means x_i = -1
    bool valid(std::uint32_t cfg) const
    {
        for (auto m : check_masks)
            if (std::popcount(cfg & m) & 1)
                return false;
        return true;
    }

    double log_weight(std::uint32_t cfg) const
    {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.n_vars(); ++i)
            acc += ((cfg >> i) & 1U) ? -c.u[i] : c.u[i];
        for (const auto &node : g.isi_nodes()) {
            const bool same = ((cfg >> node.a) & 1U) == ((cfg >> node.b) & 1U);
            acc -= same ? c.coupling(node.lag) : -c.coupling(node.lag);
        }
        return acc;
    }

    /// Calls fn(cfg, weight) with weights scaled by exp(-max); returns log Z.
    template <class Fn>
    double run(Fn &&fn) const
    {
        const std::uint64_t count = std::uint64_t{1} << g.n_vars();
        double top = -kInf;
        for (std::uint64_t cfg = 0; cfg < count; ++cfg) {
            const auto c32 = static_cast<std::uint32_t>(cfg);
            if (valid(c32))
                top = std::max(top, log_weight(c32));
        }
        if (top == -kInf)
            throw ZeroSupportError();
        double z = 0.0;
        for (std::uint64_t cfg = 0; cfg < count; ++cfg) {
            const auto c32 = static_cast<std::uint32_t>(cfg);
            if (!valid(c32))
                continue;
            const double w = std::exp(log_weight(c32) - top);
            z += w;
            fn(c32, w);
        }
        return top + std::log(z);
    }
};

void normalize(std::span<double> t)
{
    double s = 0.0;
    for (double v : t)
        s += v;
    for (auto &v : t)
        v /= s;
}

std::uint32_t isi_index(std::uint32_t cfg, const IsiNode &node)
{
    return ((cfg >> node.a) & 1U) | (((cfg >> node.b) & 1U) << 1);
}

std::uint32_t check_index(std::uint32_t cfg, std::span<const std::uint32_t> row)
{
    std::uint32_t idx = 0;
    for (std::size_t k = 0; k < row.size(); ++k)
        idx |= ((cfg >> row[k]) & 1U) << k;
    return idx;
}

} // namespace

ExactMarginals exact_marginals(const FactorGraph &g, const ChannelCouplings &c)
{
    const Enumeration en(g, c);
    const std::size_t n = g.n_vars();
    std::vector<double> plus(n, 0.0), minus(n, 0.0);
    ExactMarginals out;
    out.log_z = en.run([&](std::uint32_t cfg, double w) {
        for (std::size_t i = 0; i < n; ++i)
            (((cfg >> i) & 1U) ? minus : plus)[i] += w;
    });
    out.p_plus.resize(n);
    out.fields.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.p_plus[i] = plus[i] / (plus[i] + minus[i]);
        out.fields[i] = 0.5 * (std::log(plus[i]) - std::log(minus[i]));
    }
    return out;
}

BeliefSet exact_beliefs(const FactorGraph &g, const ChannelCouplings &c)
{
    const Enumeration en(g, c);
    BeliefSet b;
    b.var.assign(g.n_vars(), {0.0, 0.0});
    b.check.resize(g.n_checks());
    for (std::size_t j = 0; j < g.n_checks(); ++j)
        b.check[j].assign(std::size_t{1} << g.code().check_degree(j), 0.0);
    b.isi.assign(g.isi_nodes().size(), {0.0, 0.0, 0.0, 0.0});

    en.run([&](std::uint32_t cfg, double w) {
        for (std::size_t i = 0; i < g.n_vars(); ++i)
            b.var[i][(cfg >> i) & 1U] += w;
        for (std::size_t j = 0; j < g.n_checks(); ++j)
            b.check[j][check_index(cfg, g.code().row(j))] += w;
        for (std::size_t k = 0; k < g.isi_nodes().size(); ++k)
            b.isi[k][isi_index(cfg, g.isi_nodes()[k])] += w;
    });
    for (auto &t : b.var)
        normalize(t);
    for (auto &t : b.check)
        normalize(t);
    for (auto &t : b.isi)
        normalize(t);
    return b;
}

BeliefSet beliefs_from_fields(const FactorGraph &g, const FieldState &s, const ChannelCouplings &c)
{
    auto finite = [](double v) {
        if (!std::isfinite(v))
            throw std::invalid_argument("beliefs_from_fields: non-finite field");
        return v;
    };
    BeliefSet b;
    const auto lambda = likelihoods(g, s, c, true);
    b.var.resize(g.n_vars());
    for (std::size_t i = 0; i < g.n_vars(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-2.0 * finite(lambda[i])));
        b.var[i] = {p, 1.0 - p};
    }

    b.check.resize(g.n_checks());
    for (std::size_t j = 0; j < g.n_checks(); ++j) {
        const auto edges = g.check_edges(j);
        const std::size_t size = std::size_t{1} << edges.size();
        std::vector<double> logt(size, -kInf);
        double top = -kInf;
        for (std::uint32_t idx = 0; idx < size; ++idx) {
            if (std::popcount(idx) & 1)
                continue;
            double acc = 0.0;
            for (std::size_t k = 0; k < edges.size(); ++k)
                acc += ((idx >> k) & 1U) ? -finite(s.eta_check[edges[k]]) : s.eta_check[edges[k]];
            logt[idx] = acc;
            top = std::max(top, acc);
        }
        auto &t = b.check[j];
        t.resize(size);
        for (std::size_t idx = 0; idx < size; ++idx)
            t[idx] = logt[idx] == -kInf ? 0.0 : std::exp(logt[idx] - top);
        normalize(t);
    }

    b.isi.resize(g.isi_nodes().size());
    for (std::size_t k = 0; k < g.isi_nodes().size(); ++k) {
        const double q = c.coupling(g.isi_nodes()[k].lag);
        const double ea = finite(s.eta_isi[2 * k]), eb = finite(s.eta_isi[2 * k + 1]);
        double logt[4];
        for (std::uint32_t idx = 0; idx < 4; ++idx) {
            const double xa = (idx & 1U) ? -1.0 : 1.0, xb = (idx & 2U) ? -1.0 : 1.0;
            logt[idx] = -q * xa * xb + ea * xa + eb * xb;
        }
        const double top = *std::max_element(logt, logt + 4);
        for (std::uint32_t idx = 0; idx < 4; ++idx)
            b.isi[k][idx] = std::exp(logt[idx] - top);
        normalize(b.isi[k]);
    }
    return b;
}

double bethe_free_energy(const FactorGraph &g, const BeliefSet &b, const ChannelCouplings &c)
{
    const auto &h = g.code();
    double energy = 0.0, entropy = 0.0;

    for (std::size_t j = 0; j < g.n_checks(); ++j) {
        const auto row = h.row(j);
        const auto &t = b.check.at(j);
        for (std::uint32_t idx = 0; idx < t.size(); ++idx) {
            if (t[idx] <= 0.0)
                continue;
            if (std::popcount(idx) & 1)
                return kInf;
            double log_f = 0.0;
            for (std::size_t k = 0; k < row.size(); ++k) {
                const double x = ((idx >> k) & 1U) ? -1.0 : 1.0;
                log_f += c.u[row[k]] * x / static_cast<double>(h.var_degree(row[k]));
            }
            energy -= t[idx] * log_f;
            entropy -= xlogx(t[idx]);
        }
    }
    for (std::size_t k = 0; k < g.isi_nodes().size(); ++k) {
        const double q = c.coupling(g.isi_nodes()[k].lag);
        for (std::uint32_t idx = 0; idx < 4; ++idx) {
            const double xa = (idx & 1U) ? -1.0 : 1.0, xb = (idx & 2U) ? -1.0 : 1.0;
            const double p = b.isi.at(k)[idx];
            energy -= p * (-q * xa * xb);
            entropy -= xlogx(p);
        }
    }
    for (std::size_t i = 0; i < g.n_vars(); ++i) {
        const auto &bi = b.var.at(i);
        const auto q = h.var_degree(i);
        if (q == 0)
            energy -= c.u[i] * (bi[0] - bi[1]);
        const double degree = static_cast<double>(q + g.var_isi_edges(i).size());
        entropy += (degree - 1.0) * (xlogx(bi[0]) + xlogx(bi[1]));
    }
    return energy - entropy;
}

ConstraintResiduals constraint_residuals(const FactorGraph &g, const BeliefSet &b)
{
    ConstraintResiduals r;
    auto norm = [&](std::span<const double> t) {
        double s = 0.0;
        for (double v : t)
            s += v;
        r.normalization = std::max(r.normalization, std::abs(s - 1.0));
    };
    for (const auto &t : b.var)
        norm(t);
    for (const auto &t : b.check)
        norm(t);
    for (const auto &t : b.isi)
        norm(t);

    for (std::size_t j = 0; j < g.n_checks(); ++j) {
        const auto row = g.code().row(j);
        for (std::size_t k = 0; k < row.size(); ++k) {
            double plus = 0.0;
            for (std::uint32_t idx = 0; idx < b.check[j].size(); ++idx)
                if (!((idx >> k) & 1U))
                    plus += b.check[j][idx];
            r.consistency = std::max(r.consistency, std::abs(plus - b.var[row[k]][0]));
        }
    }
    for (std::size_t k = 0; k < g.isi_nodes().size(); ++k) {
        const auto &t = b.isi[k];
        const auto &node = g.isi_nodes()[k];
        r.consistency = std::max(r.consistency, std::abs(t[0] + t[2] - b.var[node.a][0]));
        r.consistency = std::max(r.consistency, std::abs(t[0] + t[1] - b.var[node.b][0]));
    }
    return r;
}

double stationarity_residual(const FactorGraph &g, const FieldState &s, const ChannelCouplings &c)
{
    std::vector<double> mu(g.n_check_edges()), zeta(g.n_isi_edges());
    for (std::size_t e = 0; e < mu.size(); ++e)
        mu[e] = check_message(g, s, e);
    for (std::size_t f = 0; f < zeta.size(); ++f)
        zeta[f] = isi_message(g, s, c, f);

    double worst = 0.0;
    for (std::size_t i = 0; i < g.n_vars(); ++i) {
        const auto checks = g.var_check_edges(i);
        const auto isi = g.var_isi_edges(i);
        double mu_all = 0.0, z_all = 0.0;
        for (auto e : checks)
            mu_all += mu[e];
        for (auto f : isi)
            z_all += zeta[f];
        for (auto e : checks)
            worst = std::max(worst, std::abs(c.u[i] + (mu_all - mu[e]) - z_all - s.eta_check[e]));
        for (auto f : isi)
            worst = std::max(worst, std::abs(c.u[i] - (z_all - zeta[f]) + mu_all - s.eta_isi[f]));
    }
    return worst;
}

TreeInstance random_tree_instance(CounterRng &rng, std::size_t n_vars, const PrTarget &target, double snr_db)
{
    if (n_vars == 0 || n_vars > kMaxOracleBits)
        throw std::invalid_argument("random_tree_instance: size must lie in [1, 24]");

    std::vector<std::uint32_t> perm(n_vars);
    std::iota(perm.begin(), perm.end(), 0U);
    for (std::size_t k = n_vars; k > 1; --k)
        std::swap(perm[k - 1], perm[rng.below(k)]);

    std::vector<std::vector<std::uint32_t>> rows;
    std::vector<std::uint32_t> connected;
    std::size_t next = 0;
    while (next < n_vars) {
        const std::size_t left = n_vars - next;
        if (rng.below(8) == 0) {
            ++next; // this variable stays outside every check
            continue;
        }
        const std::size_t degree = 2 + rng.below(3);
        if (connected.empty() || rng.below(4) == 0) {
            if (left < 2) {
                ++next;
                continue;
            }
            const std::size_t take = std::min(degree, left);
            std::vector<std::uint32_t> row(perm.begin() + static_cast<std::ptrdiff_t>(next),
                                           perm.begin() + static_cast<std::ptrdiff_t>(next + take));
            next += take;
            connected.insert(connected.end(), row.begin(), row.end());
            rows.push_back(std::move(row));
        } else {
            const std::size_t take = std::min(degree - 1, left);
            std::vector<std::uint32_t> row{connected[rng.below(connected.size())]};
            row.insert(row.end(), perm.begin() + static_cast<std::ptrdiff_t>(next),
                       perm.begin() + static_cast<std::ptrdiff_t>(next + take));
            next += take;
            connected.insert(connected.end(), row.begin() + 1, row.end());
            rows.push_back(std::move(row));
        }
    }
    auto code = ParityCheckMatrix::from_rows(n_vars, std::move(rows));

    // Union-find over variables and checks; an ISI pair is added only when its
    // endpoints are still in different components.
    std::vector<std::size_t> parent(n_vars + code.n_checks());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x)
            x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t j = 0; j < code.n_checks(); ++j)
        for (auto v : code.row(j))
            parent[find(v)] = find(n_vars + j);

    std::vector<IsiNode> isi;
    for (auto lag : target.pairwise_lags()) {
        for (std::size_t a = 0; a + lag < n_vars; ++a) {
            const auto ra = find(a), rb = find(a + lag);
            if (ra == rb)
                continue;
            parent[ra] = rb;
            isi.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a + lag),
                           static_cast<std::uint32_t>(lag)});
        }
    }

    Symbols x(n_vars);
    for (auto &v : x)
        v = rng.bit() ? -1 : 1;
    const auto noise = NoiseSpec::from_snr_db(target, snr_db);
    const auto y = transmit(x, target, noise, rng, 1);
    return {FactorGraph(std::move(code), std::move(isi)), couplings_with_precision(y, target, noise.snr_linear, 1)};
}

TreeCheckSummary run_tree_checks(std::size_t n_vars, std::size_t count, std::uint64_t seed,
                                 const std::vector<PrTarget> &targets, double snr_db)
{
    TreeCheckSummary sum;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        for (std::size_t k = 0; k < count; ++k) {
            CounterRng rng(derive_key(derive_key(seed, t), k));
            const auto inst = random_tree_instance(rng, n_vars, targets[t], snr_db);
            DecodeOptions opt;
            opt.max_iter = 4 * n_vars + 10;
            opt.early_stop = false;
            opt.keep_snapshot = true;
            const auto res = decode(inst.graph, inst.couplings, opt);
            const auto &state = *res.field_snapshot;

            const auto exact = exact_marginals(inst.graph, inst.couplings);
            const auto beliefs = beliefs_from_fields(inst.graph, state, inst.couplings);
            for (std::size_t i = 0; i < n_vars; ++i)
                sum.max_marginal_error = std::max(sum.max_marginal_error, std::abs(beliefs.var[i][0] - exact.p_plus[i]));
            sum.max_stationarity = std::max(sum.max_stationarity, stationarity_residual(inst.graph, state, inst.couplings));
            const double f = bethe_free_energy(inst.graph, beliefs, inst.couplings);
            sum.max_free_energy_gap = std::max(sum.max_free_energy_gap, std::abs(f + exact.log_z));
            sum.max_consistency = std::max(sum.max_consistency, constraint_residuals(inst.graph, beliefs).consistency);
            sum.max_iterations = std::max(sum.max_iterations, res.iterations_used);
            ++sum.instances;
        }
    }
    return sum;
}

} // namespace prldpc

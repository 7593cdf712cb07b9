#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "prldpc/decoder.hpp"
#include "prldpc/oracle.hpp"
#include "test_support.hpp"

using namespace prldpc;
using doctest::Approx;

namespace {

struct Received {
    Bits word;
    ChannelCouplings couplings;
};

Received receive(const ParityCheckMatrix &h, const GeneratorSpec &gen, const PrTarget &target, double snr_db,
                 std::uint64_t seed, std::int8_t pad = 1)
{
    CounterRng rng(seed);
    Bits msg(gen.message_len());
    for (auto &b : msg)
        b = rng.bit();
    Received r;
    r.word = gen.encode(msg);
    const auto noise = NoiseSpec::from_snr_db(target, snr_db);
    const auto y = transmit(to_bipolar(r.word), target, noise, rng, pad);
    r.couplings = compute_couplings(y, target, noise, pad, Convention::paper);
    return r;
}

std::vector<IsiNode> nodes(const FactorGraph &g) { return g.isi_nodes(); }

} // namespace

TEST_CASE("ISI node sets")
{
    const auto h4 = ParityCheckMatrix::from_rows(4, {});
    CHECK(nodes(FactorGraph::build(h4, PrTarget::parse("1-D"))) ==
          std::vector<IsiNode>{{0, 1, 1}, {1, 2, 1}, {2, 3, 1}});
    const auto h5 = ParityCheckMatrix::from_rows(5, {});
    CHECK(nodes(FactorGraph::build(h5, PrTarget::parse("1-D^2"))) ==
          std::vector<IsiNode>{{0, 2, 2}, {1, 3, 2}, {2, 4, 2}});
    CHECK(FactorGraph::build(h5, PrTarget::parse("1")).isi_nodes().empty());

    // generalized pairwise mode: one node per nonzero lag and position
    const auto g = FactorGraph::build(h4, PrTarget::parse("1+0.5D+0.25D^2"));
    CHECK(g.isi_nodes().size() == 3 + 2);
    CHECK_FALSE(PrTarget::parse("1+0.5D+0.25D^2").is_bp_exact());
}

TEST_CASE("graph adjacency")
{
    const auto h = ParityCheckMatrix::from_rows(4, {{0, 1, 2}, {1, 3}});
    const FactorGraph g(h, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}});
    CHECK(g.n_check_edges() == 5);
    CHECK(g.n_isi_edges() == 6);
    const auto c1 = g.check_edges(1);
    REQUIRE(c1.size() == 2);
    CHECK(g.edge_var(c1[0]) == 1);
    CHECK(g.edge_var(c1[1]) == 3);
    CHECK(g.var_check_edges(1).size() == 2);
    CHECK(g.var_isi_edges(1).size() == 2);
    CHECK(g.var_isi_edges(0).size() == 1);
    for (std::size_t f = 0; f < g.n_isi_edges(); ++f)
        CHECK(g.isi_edge_var(f) != g.isi_edge_var(f ^ 1U));
    CHECK_FALSE(g.is_loop_free()); // 0-1 via the check and via the ISI node
    CHECK(FactorGraph(ParityCheckMatrix::from_rows(4, {{0, 1}}), {{1, 2, 1}, {2, 3, 1}}).is_loop_free());
    CHECK_THROWS(FactorGraph(h, {{1, 1, 0}}));
    CHECK_THROWS(FactorGraph(h, {{0, 2, 1}}));
}

TEST_CASE("check message")
{
    const FactorGraph g(ParityCheckMatrix::from_rows(3, {{0, 1, 2}}), {});
    auto s = FieldState::initial(g);
    s.eta_check = {0.3, std::atanh(0.5), std::atanh(0.8)};
    CHECK(check_message(g, s, 0) == Approx(0.42364893019360184).epsilon(1e-14));
    s.eta_check[1] = 0.0;
    CHECK(check_message(g, s, 0) == 0.0);

    const FactorGraph pair(ParityCheckMatrix::from_rows(2, {{0, 1}}), {});
    auto t = FieldState::initial(pair);
    t.eta_check = {0.7, -1.3};
    CHECK(check_message(pair, t, 0) == Approx(-1.3).epsilon(1e-12));
    CHECK(check_message(pair, t, 1) == Approx(0.7).epsilon(1e-12));
}

TEST_CASE("tanh products keep precision near saturation")
{
    CounterRng rng(13);
    for (int k = 0; k < 1000; ++k) {
        const double a = 4.0 * rng.gaussian(), b = 4.0 * rng.gaussian();
        CHECK(tanh_pair(a, b) == Approx(std::atanh(std::tanh(a) * std::tanh(b))).epsilon(1e-9));
        const auto f = tanh_factor(a);
        CHECK(f.t == Approx(std::tanh(a)).epsilon(1e-15));
        CHECK(f.comp == Approx(1.0 - std::abs(std::tanh(a))).epsilon(1e-9));
    }
    // a single factor passes straight through, far beyond where tanh rounds to 1
    for (double x : {1e-12, 0.3, 8.0, 25.0, -60.0, 300.0}) {
        TanhProduct p;
        p.fold(tanh_factor(x));
        CHECK(p.atanh() == Approx(x).epsilon(1e-12));
    }
    // atanh(tanh(30) tanh(20)) = 20 - ln(1 + e^-20) / 2 up to terms of order e^-40
    const double expect = 20.0 - 0.5 * std::log1p(std::exp(-20.0));
    CHECK(tanh_pair(30.0, 20.0) == Approx(expect).epsilon(1e-15));
    CHECK(tanh_pair(-30.0, 20.0) == Approx(-expect).epsilon(1e-15));
    CHECK(tanh_pair(0.0, 20.0) == 0.0);
    CHECK(std::isfinite(tanh_pair(1e4, 1e4)));
    CHECK(tanh_pair(1e4, 1e4) <= 346.0);
}

TEST_CASE("ISI message uses the other endpoint")
{
    const FactorGraph g(ParityCheckMatrix::from_rows(2, {}), {{0, 1, 1}});
    ChannelCouplings c;
    c.u = {0.0, 0.0};
    c.q = {std::atanh(-0.9)};
    auto s = FieldState::initial(g);
    s.eta_isi = {5.0, std::atanh(0.5)}; // the receiver's own field must not matter
    CHECK(isi_message(g, s, c, 0) == Approx(-0.48470027859405174).epsilon(1e-14));
    s.eta_isi[1] = 0.0;
    CHECK(isi_message(g, s, c, 0) == 0.0);
    c.q = {0.0};
    s.eta_isi[1] = 2.0;
    CHECK(isi_message(g, s, c, 0) == 0.0);
}

TEST_CASE("first iteration sets every field to u")
{
    const auto h = load_alist(test::fixture("mackay_495_433"));
    const auto target = PrTarget::parse("1-D");
    const auto g = FactorGraph::build(h, target);
    const auto r = receive(h, derive_generator(h), target, 4.0, 1);
    const auto s1 = update_fields(g, r.couplings, FieldState::initial(g));
    CHECK(s1.iteration == 1);
    for (std::size_t e = 0; e < g.n_check_edges(); ++e)
        REQUIRE(s1.eta_check[e] == r.couplings.u[g.edge_var(e)]);
    for (std::size_t f = 0; f < g.n_isi_edges(); ++f)
        REQUIRE(s1.eta_isi[f] == r.couplings.u[g.isi_edge_var(f)]);
    CHECK(likelihoods(g, FieldState::initial(g), r.couplings) == r.couplings.u);
}

TEST_CASE("likelihood of an isolated bit is its field")
{
    const FactorGraph g(ParityCheckMatrix::from_rows(3, {{0, 1}}), {});
    ChannelCouplings c;
    c.u = {0.4, -0.2, 2.0};
    auto s = FieldState::initial(g);
    for (int it = 0; it < 5; ++it) {
        s = update_fields(g, c, s);
        CHECK(likelihoods(g, s, c)[2] == 2.0);
    }
}

TEST_CASE("field update matches the fixed-point equations written out")
{
    const auto h = load_alist(test::fixture("mackay_495_433"));
    const auto target = PrTarget::parse("1-D^2");
    const auto g = FactorGraph::build(h, target);
    const auto r = receive(h, derive_generator(h), target, 3.0, 2);
    auto s = FieldState::initial(g);
    for (int it = 0; it < 3; ++it)
        s = update_fields(g, r.couplings, s);
    const auto next = update_fields(g, r.couplings, s);
    for (std::size_t i = 0; i < g.n_vars(); i += 7) {
        double mu_all = 0.0, z_all = 0.0;
        for (auto e : g.var_check_edges(i))
            mu_all += check_message(g, s, e);
        for (auto f : g.var_isi_edges(i))
            z_all += isi_message(g, s, r.couplings, f);
        for (auto e : g.var_check_edges(i))
            CHECK(next.eta_check[e] ==
                  Approx(r.couplings.u[i] + mu_all - check_message(g, s, e) - z_all).epsilon(1e-12));
        for (auto f : g.var_isi_edges(i))
            CHECK(next.eta_isi[f] ==
                  Approx(r.couplings.u[i] - (z_all - isi_message(g, s, r.couplings, f)) + mu_all).epsilon(1e-12));
    }
}

TEST_CASE("storage order does not change the fields")
{
    const auto h = load_alist(test::fixture("mackay_495_433"));
    const auto target = PrTarget::parse("1-D");
    const auto g = FactorGraph::build(h, target);
    const auto r = receive(h, derive_generator(h), target, 3.0, 3);

    // reversed check order and reversed ISI node order
    auto rows = h.check_rows();
    std::reverse(rows.begin(), rows.end());
    auto isi = g.isi_nodes();
    std::reverse(isi.begin(), isi.end());
    const FactorGraph p(ParityCheckMatrix::from_rows(h.n_vars(), rows), isi);

    auto a = FieldState::initial(g), b = FieldState::initial(p);
    for (int it = 0; it < 6; ++it) {
        a = update_fields(g, r.couplings, a);
        b = update_fields(p, r.couplings, b);
        const auto la = likelihoods(g, a, r.couplings), lb = likelihoods(p, b, r.couplings);
        for (std::size_t i = 0; i < la.size(); ++i)
            REQUIRE(la[i] == Approx(lb[i]).epsilon(1e-12));
        // compare the variable-to-ISI fields through the node identities
        const std::size_t k = isi.size();
        for (std::size_t n = 0; n < k; ++n) {
            REQUIRE(a.eta_isi[2 * n] == Approx(b.eta_isi[2 * (k - 1 - n)]).epsilon(1e-12));
            REQUIRE(a.eta_isi[2 * n + 1] == Approx(b.eta_isi[2 * (k - 1 - n) + 1]).epsilon(1e-12));
        }
    }
}

TEST_CASE("negating the channel negates every field")
{
    // Needs even check degrees so that the all-ones word is a codeword.
    const auto h = load_alist(test::fixture("margulis_2640_1320"));
    const auto gen = derive_generator(h);
    for (const auto *t : {"1-D", "1+0.5D"}) {
        const auto target = PrTarget::parse(t);
        const auto g = FactorGraph::build(h, target);
        const auto noise = NoiseSpec::from_snr_db(target, 3.0);
        CounterRng rng(41);
        Bits msg(gen.message_len());
        for (auto &b : msg)
            b = rng.bit();
        const auto y = transmit(to_bipolar(gen.encode(msg)), target, noise, rng, 1);
        std::vector<double> neg(y.size());
        std::transform(y.begin(), y.end(), neg.begin(), [](double v) { return -v; });
        const auto ca = compute_couplings(y, target, noise, 1, Convention::paper);
        const auto cb = compute_couplings(neg, target, noise, -1, Convention::paper);
        CHECK(ca.q == cb.q);
        auto a = FieldState::initial(g), b = FieldState::initial(g);
        for (int it = 0; it < 5; ++it) {
            a = update_fields(g, ca, a);
            b = update_fields(g, cb, b);
            for (std::size_t e = 0; e < a.eta_check.size(); ++e)
                REQUIRE(a.eta_check[e] == -b.eta_check[e]);
            for (std::size_t f = 0; f < a.eta_isi.size(); ++f)
                REQUIRE(a.eta_isi[f] == -b.eta_isi[f]);
            const auto la = likelihoods(g, a, ca), lb = likelihoods(g, b, cb);
            for (std::size_t i = 0; i < la.size(); ++i)
                REQUIRE(la[i] == -lb[i]);
        }
    }
}

TEST_CASE("counted update gives the same fields and tallies the model cost")
{
    const auto h = load_alist(test::fixture("margulis_2640_1320"));
    const auto gen = derive_generator(h);
    for (const auto *t : {"1-D", "1-D^2", "1+0.5D+0.25D^2", "1"}) {
        const auto target = PrTarget::parse(t);
        const auto g = FactorGraph::build(h, target);
        const auto r = receive(h, gen, target, 2.0, 5);
        auto a = FieldState::initial(g), b = FieldState::initial(g);
        OpCounter ops(g.n_vars());
        for (int it = 0; it < 4; ++it) {
            a = update_fields(g, r.couplings, a);
            FieldState next;
            update_fields_counted(g, r.couplings, b, next, ops);
            b = std::move(next);
            REQUIRE(a.eta_check == b.eta_check);
            REQUIRE(a.eta_isi == b.eta_isi);
            REQUIRE(a.mu == b.mu);
            REQUIRE(a.zeta == b.zeta);
        }
        CHECK(ops.total() == prbp_iteration_cost(g) * 4);
    }
}

TEST_CASE("per-symbol cost of a (3,6) code on the dicode channel")
{
    const auto h = load_alist(test::fixture("margulis_2640_1320"));
    const auto g = FactorGraph::build(h, PrTarget::parse("1-D"));
    const auto r = receive(h, derive_generator(h), PrTarget::parse("1-D"), 2.0, 6);
    OpCounter ops(g.n_vars());
    FieldState next;
    update_fields_counted(g, r.couplings, FieldState::initial(g), next, ops);
    for (std::size_t i = 1; i + 1 < g.n_vars(); ++i)
        REQUIRE(ops.symbol(i) == OpCount{26, 18});
    // the two end symbols have a single ISI neighbour
    CHECK(ops.symbol(0).mults == 25);
    const auto per = ops.per_symbol(1);
    CHECK(per.mults == 26.0);
    CHECK(per.adds == 18.0);
}

TEST_CASE("noiseless decoding")
{
    const auto h = load_alist(test::fixture("mackay_495_433"));
    const auto gen = derive_generator(h);
    CounterRng rng(8);
    Bits msg(gen.message_len());
    for (auto &b : msg)
        b = rng.bit();
    const auto word = gen.encode(msg);

    SUBCASE("memoryless channel converges in one iteration")
    {
        const auto target = PrTarget::parse("1");
        const auto y = transmit_noiseless(to_bipolar(word), target, 1);
        const auto cp = compute_couplings(y, target, NoiseSpec::from_snr_db(target, 30.0), 1, Convention::paper);
        const auto res = decode(FactorGraph::build(h, target), cp);
        CHECK(res.converged);
        CHECK(res.iterations_used == 1);
        CHECK(res.hard_bits == word);
    }
    SUBCASE("dicode channel recovers the word")
    {
        // The channel fields alone are zero wherever three neighbouring
        // symbols agree, so the ISI messages need a few iterations.
        const auto target = PrTarget::parse("1-D");
        const auto y = transmit_noiseless(to_bipolar(word), target, 1);
        const auto cp = compute_couplings(y, target, NoiseSpec::from_snr_db(target, 30.0), 1, Convention::paper);
        const auto res = decode(FactorGraph::build(h, target), cp);
        CHECK(res.converged);
        CHECK(res.hard_bits == word);
        CHECK(res.iterations_used <= 5);
    }
}

TEST_CASE("decoder result contract")
{
    const auto h = load_alist(test::fixture("margulis_2640_1320"));
    const auto target = PrTarget::parse("1-D");
    const auto g = FactorGraph::build(h, target);
    const auto gen = derive_generator(h);
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const auto r = receive(h, gen, target, 3.0 + 0.5 * static_cast<double>(seed % 3), 100 + seed);
        const auto res = decode(g, r.couplings);
        CHECK(res.converged == is_codeword(h, res.hard_bits));
        CHECK(res.hard_bits == hard_decision(res.lambdas));
        CHECK(res.iterations_used >= 1);
        CHECK(res.iterations_used <= 20);
        if (!res.converged)
            CHECK(res.iterations_used == 20);
    }
    CHECK_THROWS(decode(g, ChannelCouplings{}, {}));
    DecodeOptions zero;
    zero.max_iter = 0;
    CHECK_THROWS(decode(g, receive(h, gen, target, 3.0, 1).couplings, zero));
}

TEST_CASE("saturated fixed point satisfies the fixed-point equations")
{
    const auto h = load_alist(test::fixture("margulis_2640_1320"));
    const auto target = PrTarget::parse("1-D");
    const auto g = FactorGraph::build(h, target);
    const auto r = receive(h, derive_generator(h), target, 6.0, 12);
    DecodeOptions opt;
    opt.max_iter = 80;
    opt.early_stop = false;
    opt.keep_snapshot = true;
    const auto res = decode(g, r.couplings, opt);
    REQUIRE(res.converged);
    CHECK(res.hard_bits == r.word);
    CHECK(stationarity_residual(g, *res.field_snapshot, r.couplings) < 1e-6);
}

TEST_CASE("decoding a moderately noisy word on a (3,6) code")
{
    const auto h = load_alist(test::fixture("margulis_2640_1320"));
    const auto target = PrTarget::parse("1-D");
    const auto g = FactorGraph::build(h, target);
    const auto gen = derive_generator(h);
    std::size_t ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = receive(h, gen, target, 5.0, 500 + seed);
        const auto res = decode(g, r.couplings);
        ok += res.converged && res.hard_bits == r.word;
    }
    CHECK(ok == 20);
}

TEST_CASE("trace output")
{
    const auto h = load_alist(test::fixture("mackay_495_433"));
    const auto target = PrTarget::parse("1-D");
    const auto g = FactorGraph::build(h, target);
    const auto r = receive(h, derive_generator(h), target, 6.0, 9);
    std::vector<TraceRow> trace;
    std::vector<std::size_t> seen;
    DecodeOptions opt;
    opt.trace = &trace;
    opt.on_iteration = [&](std::size_t it, std::span<const double> lambda) {
        CHECK(lambda.size() == h.n_vars());
        seen.push_back(it);
    };
    const auto res = decode(g, r.couplings, opt);
    REQUIRE(trace.size() == res.iterations_used);
    CHECK(seen.size() == res.iterations_used);
    CHECK(trace.back().syndrome_weight == (res.converged ? 0U : trace.back().syndrome_weight));
    for (const auto &row : trace) {
        CHECK(row.min_abs_eta <= row.mean_abs_eta);
        CHECK(row.mean_abs_eta <= row.max_abs_eta);
    }
    std::ostringstream out;
    write_trace_csv(out, trace);
    const auto text = out.str();
    CHECK(text.rfind("iteration,min_abs_eta,max_abs_eta,mean_abs_eta,syndrome_weight\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(trace.size() + 1));
}

TEST_CASE("clamping keeps fields finite")
{
    const FactorGraph g(ParityCheckMatrix::from_rows(3, {{0, 1, 2}}), {{0, 1, 1}, {1, 2, 1}});
    ChannelCouplings c;
    c.u = {1e3, 1e3, -1e3};
    c.q = {-500.0};
    DecodeOptions opt;
    opt.max_iter = 10;
    opt.early_stop = false;
    opt.keep_snapshot = true;
    const auto res = decode(g, c, opt);
    for (double v : res.lambdas)
        CHECK(std::isfinite(v));
    for (double v : res.field_snapshot->mu)
        CHECK(std::abs(v) <= 346.0);
}

#include "doctest.h"

#include <filesystem>
#include <set>
#include <sstream>

#include "prldpc/ldpc.hpp"
#include "prldpc/random.hpp"
#include "test_support.hpp"

using namespace prldpc;

namespace {

const char *kToy = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 3\n";

// Reference rank: plain Gaussian elimination on a dense bool matrix.
std::size_t dense_rank(const ParityCheckMatrix &h)
{
    std::vector<std::vector<bool>> a(h.n_checks(), std::vector<bool>(h.n_vars(), false));
    for (std::size_t j = 0; j < h.n_checks(); ++j)
        for (auto v : h.row(j))
            a[j][v] = true;
    std::size_t rank = 0;
    for (std::size_t col = 0; col < h.n_vars() && rank < a.size(); ++col) {
        std::size_t piv = rank;
        while (piv < a.size() && !a[piv][col])
            ++piv;
        if (piv == a.size())
            continue;
        std::swap(a[piv], a[rank]);
        for (std::size_t r = 0; r < a.size(); ++r)
            if (r != rank && a[r][col])
                for (std::size_t c = 0; c < h.n_vars(); ++c)
                    a[r][c] = a[r][c] != a[rank][c];
        ++rank;
    }
    return rank;
}

std::set<std::pair<std::uint32_t, std::uint32_t>> edges(const ParityCheckMatrix &h)
{
    std::set<std::pair<std::uint32_t, std::uint32_t>> e;
    for (std::size_t j = 0; j < h.n_checks(); ++j)
        for (auto v : h.row(j))
            e.insert({static_cast<std::uint32_t>(j), v});
    return e;
}

} // namespace

TEST_CASE("toy alist parses to the two-check chain")
{
    const auto h = parse_alist(std::string(kToy));
    CHECK(h.n_vars() == 3);
    CHECK(h.n_checks() == 2);
    CHECK(h.var_degree(0) == 1);
    CHECK(h.var_degree(1) == 2);
    CHECK(h.var_degree(2) == 1);
    CHECK(h.check_degree(0) == 2);
    CHECK(h.check_degree(1) == 2);
    CHECK(h.n_edges() == 4);
}

TEST_CASE("alist errors carry line numbers")
{
    SUBCASE("bad header")
    {
        try {
            parse_alist(std::string("3 x\n"));
            FAIL("expected an error");
        } catch (const AlistError &e) {
            CHECK(e.line() == 1);
        }
    }
    SUBCASE("index out of range")
    {
        const std::string text = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 2\n2 4\n";
        try {
            parse_alist(text);
            FAIL("expected an error");
        } catch (const AlistError &e) {
            CHECK(e.line() == 9);
        }
    }
    SUBCASE("row and column lists disagree")
    {
        const std::string text = "3 2\n2 2\n1 2 1\n2 2\n1 0\n1 2\n2 0\n1 3\n2 3\n";
        CHECK_THROWS_AS(parse_alist(text), AlistError);
    }
    SUBCASE("truncated input")
    {
        CHECK_THROWS_AS(parse_alist(std::string("3 2\n2 2\n1 2 1\n")), AlistError);
    }
}

TEST_CASE("alist round trip preserves the edge set")
{
    for (const auto *name : {"toy_3_1", "mackay_495_433", "margulis_2640_1320"}) {
        const auto h = load_alist(test::fixture(name));
        const auto again = parse_alist(to_alist(h));
        CHECK(edges(again) == edges(h));
        CHECK(again == h);
    }
}

TEST_CASE("column view is the transpose of the row view")
{
    for (const auto *name : {"mackay_495_433", "mackay_4095_3358", "margulis_2640_1320", "mackay_4000_2000"}) {
        const auto h = load_alist(test::fixture(name));
        std::vector<std::vector<std::uint32_t>> cols(h.n_vars());
        for (std::size_t j = 0; j < h.n_checks(); ++j)
            for (auto v : h.row(j))
                cols[v].push_back(static_cast<std::uint32_t>(j));
        CHECK(cols == h.var_cols());
    }
}

TEST_CASE("from_rows rejects duplicates and out-of-range indices")
{
    CHECK_THROWS(ParityCheckMatrix::from_rows(3, {{0, 0}}));
    CHECK_THROWS(ParityCheckMatrix::from_rows(3, {{0, 3}}));
}

TEST_CASE("generator of the repetition code")
{
    const auto h = ParityCheckMatrix::from_rows(3, {{0, 1}, {1, 2}});
    const auto g = derive_generator(h);
    CHECK(g.message_len() == 1);
    CHECK(g.encode(Bits{1}) == Bits{1, 1, 1});
    CHECK(g.encode(Bits{0}) == Bits{0, 0, 0});
    CHECK_THROWS(g.encode(Bits{1, 0}));
}

TEST_CASE("rank-deficient H")
{
    const auto h = ParityCheckMatrix::from_rows(2, {{0, 1}, {0, 1}});
    CHECK(gf2_rank(h) == 1);
    CHECK(derive_generator(h).message_len() == 1);
}

TEST_CASE("gf2_rank agrees with dense elimination on random matrices")
{
    CounterRng rng(7);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + rng.below(20), m = 1 + rng.below(12);
        std::vector<std::vector<std::uint32_t>> rows(m);
        for (auto &r : rows)
            for (std::uint32_t v = 0; v < n; ++v)
                if (rng.bit())
                    r.push_back(v);
        const auto h = ParityCheckMatrix::from_rows(n, rows);
        CHECK(gf2_rank(h) == dense_rank(h));
        CHECK(derive_generator(h).message_len() == n - dense_rank(h));
    }
}

TEST_CASE("encoder output always satisfies the checks")
{
    for (const auto *name : {"mackay_495_433", "mackay_4095_3358", "margulis_2640_1320", "mackay_4000_2000"}) {
        const auto h = load_alist(test::fixture(name));
        const auto g = derive_generator(h);
        CounterRng rng(derive_key(11, g.message_len()));
        Bits msg(g.message_len());
        for (int t = 0; t < 1000; ++t) {
            for (auto &b : msg)
                b = rng.bit();
            const auto x = g.encode(msg);
            REQUIRE(is_codeword(h, x));
            // systematic up to the permutation
            for (std::size_t k = 0; k < msg.size(); k += 97)
                CHECK(x[g.permutation()[k]] == msg[k]);
        }
        CHECK(is_codeword(h, g.encode(Bits(g.message_len(), 0))));
    }
}

TEST_CASE("syndrome")
{
    const auto h = ParityCheckMatrix::from_rows(3, {{0, 1}, {1, 2}});
    CHECK(syndrome(h, Bits{1, 1, 0}) == Bits{0, 1});
    CHECK_THROWS(syndrome(h, Bits{1, 1}));

    const auto m = load_alist(test::fixture("margulis_2640_1320"));
    const auto g = derive_generator(m);
    CounterRng rng(3);
    Bits msg(g.message_len());
    for (auto &b : msg)
        b = rng.bit();
    auto x = g.encode(msg);
    x[17] ^= 1U;
    const auto s = syndrome(m, x);
    CHECK(std::count(s.begin(), s.end(), 1) == 3);
}

TEST_CASE("bipolar mapping")
{
    CHECK(to_bipolar(Bits{0}) == Symbols{1});
    CHECK(to_bipolar(Bits{1}) == Symbols{-1});
    CHECK(to_bipolar(Bits{0, 1, 1, 0}) == Symbols{1, -1, -1, 1});
    const Bits b{1, 0, 0, 1, 1};
    CHECK(from_bipolar(to_bipolar(b)) == b);
}

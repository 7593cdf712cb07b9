// Generates the bundled parity-check fixtures: seeded random codes with the
// block length, check count, degree profile and rank of the published codes.
//
//   make_fixtures <output-dir>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prldpc/ldpc.hpp"
#include "prldpc/random.hpp"

namespace {

using prldpc::CounterRng;
using prldpc::ParityCheckMatrix;

struct Profile {
    std::string name;
    std::size_t n;
    std::size_t col_weight;
    std::vector<std::size_t> row_weights;
    std::size_t rank;
};

// Progressive assignment: each variable picks its checks one at a time among
// those with spare capacity, preferring checks that share no variable with
// checks it already has (no 4-cycles), then the emptiest ones.
ParityCheckMatrix build(const Profile &p, CounterRng &rng)
{
    const std::size_t m = p.row_weights.size();
    std::vector<std::size_t> capacity = p.row_weights;
    std::vector<std::vector<std::uint32_t>> rows(m);
    std::vector<std::vector<std::uint32_t>> cols(p.n);
    std::vector<std::uint32_t> mark(p.n, 0);
    std::uint32_t stamp = 0;

    std::vector<std::uint32_t> order(p.n);
    for (std::uint32_t i = 0; i < p.n; ++i)
        order[i] = i;
    for (std::size_t k = p.n; k > 1; --k)
        std::swap(order[k - 1], order[rng.below(k)]);

    for (auto v : order) {
        for (std::size_t d = 0; d < p.col_weight; ++d) {
            ++stamp;
            for (auto c : cols[v])
                for (auto u : rows[c])
                    mark[u] = stamp;
            std::size_t best_overlap = SIZE_MAX, best_cap = 0, ties = 0, pick = m;
            for (std::size_t c = 0; c < m; ++c) {
                if (capacity[c] == 0 || std::find(cols[v].begin(), cols[v].end(), c) != cols[v].end())
                    continue;
                std::size_t overlap = 0;
                for (auto u : rows[c])
                    overlap += mark[u] == stamp;
                if (overlap < best_overlap || (overlap == best_overlap && capacity[c] > best_cap)) {
                    best_overlap = overlap;
                    best_cap = capacity[c];
                    ties = 1;
                    pick = c;
                } else if (overlap == best_overlap && capacity[c] == best_cap && rng.below(++ties) == 0) {
                    pick = c;
                }
            }
            if (pick == m)
                throw std::runtime_error("ran out of check capacity");
            --capacity[pick];
            rows[pick].push_back(v);
            cols[v].push_back(static_cast<std::uint32_t>(pick));
        }
    }
    return ParityCheckMatrix::from_rows(p.n, std::move(rows));
}

std::size_t four_cycles(const ParityCheckMatrix &h)
{
    // Variables i < u sharing s checks close s(s-1)/2 four-cycles.
    std::size_t count = 0;
    std::vector<std::uint32_t> shared(h.n_vars(), 0);
    std::vector<std::uint32_t> touched;
    for (std::size_t i = 0; i < h.n_vars(); ++i) {
        touched.clear();
        for (auto a : h.col(i))
            for (auto u : h.row(a))
                if (u > i && shared[u]++ == 0)
                    touched.push_back(u);
        for (auto u : touched) {
            count += std::size_t{shared[u]} * (shared[u] - 1) / 2;
            shared[u] = 0;
        }
    }
    return count;
}

} // namespace

int main(int argc, char **argv)
{
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <output-dir>\n";
        return 1;
    }
    const std::filesystem::path dir = argv[1];
    std::filesystem::create_directories(dir);

    auto repeat = [](std::size_t count, std::size_t w) { return std::vector<std::size_t>(count, w); };
    std::vector<Profile> profiles;
    {
        auto rows = repeat(59, 24);
        auto tail = repeat(3, 23);
        rows.insert(rows.end(), tail.begin(), tail.end());
        profiles.push_back({"mackay_495_433", 495, 3, rows, 62});
    }
    {
        auto rows = repeat(594, 22);
        auto tail = repeat(144, 23);
        rows.insert(rows.end(), tail.begin(), tail.end());
        profiles.push_back({"mackay_4095_3358", 4095, 4, rows, 737});
    }
    profiles.push_back({"margulis_2640_1320", 2640, 3, repeat(1320, 6), 1320});
    profiles.push_back({"mackay_4000_2000", 4000, 3, repeat(2000, 6), 2000});

    for (std::size_t k = 0; k < profiles.size(); ++k) {
        const auto &p = profiles[k];
        for (std::uint64_t attempt = 0;; ++attempt) {
            CounterRng rng(prldpc::derive_key(prldpc::derive_key(0x5EED, k), attempt));
            const auto h = build(p, rng);
            const auto rank = prldpc::gf2_rank(h);
            if (rank != p.rank)
                continue;
            std::ofstream out(dir / (p.name + ".alist"));
            out << prldpc::to_alist(h);
            std::cout << p.name << ": N=" << h.n_vars() << " M=" << h.n_checks() << " rank=" << rank
                      << " four-cycles=" << four_cycles(h) << " attempt=" << attempt << '\n';
            break;
        }
    }
    std::ofstream(dir / "toy_3_1.alist") << prldpc::to_alist(ParityCheckMatrix::from_rows(3, {{0, 1}, {1, 2}}));
    return 0;
}

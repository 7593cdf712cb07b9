#include "prldpc/ldpc.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>

namespace prldpc {

AlistError::AlistError(std::size_t line, const std::string &what)
    : std::runtime_error("alist line " + std::to_string(line) + ": " + what), line_(line)
{
}

ParityCheckMatrix ParityCheckMatrix::from_rows(std::size_t n_vars, std::vector<std::vector<std::uint32_t>> rows)
{
    ParityCheckMatrix h;
    h.cols_.assign(n_vars, {});
    for (std::size_t j = 0; j < rows.size(); ++j) {
        auto &r = rows[j];
        std::sort(r.begin(), r.end());
        if (std::adjacent_find(r.begin(), r.end()) != r.end())
            throw std::invalid_argument("check " + std::to_string(j) + " lists a variable twice");
        for (auto v : r) {
            if (v >= n_vars)
                throw std::invalid_argument("check " + std::to_string(j) + " references variable " +
                                            std::to_string(v) + " >= N");
            h.cols_[v].push_back(static_cast<std::uint32_t>(j));
        }
        h.n_edges_ += r.size();
    }
    h.rows_ = std::move(rows);
    return h;
}

std::map<std::size_t, std::size_t> ParityCheckMatrix::var_degree_histogram() const
{
    std::map<std::size_t, std::size_t> hist;
    for (const auto &c : cols_)
        ++hist[c.size()];
    return hist;
}

std::map<std::size_t, std::size_t> ParityCheckMatrix::check_degree_histogram() const
{
    std::map<std::size_t, std::size_t> hist;
    for (const auto &r : rows_)
        ++hist[r.size()];
    return hist;
}

bool ParityCheckMatrix::is_regular() const
{
    return var_degree_histogram().size() <= 1 && check_degree_histogram().size() <= 1;
}

// ---------------------------------------------------------------------------
// alist

namespace {

struct Line {
    std::size_t number;
    std::vector<long long> values;
};

std::vector<Line> tokenize(std::istream &in)
{
    std::vector<Line> lines;
    std::string text;
    std::size_t number = 0;
    while (std::getline(in, text)) {
        ++number;
        std::istringstream ss(text);
        Line line{number, {}};
        std::string tok;
        while (ss >> tok) {
            long long v = 0;
            std::size_t used = 0;
            try {
                v = std::stoll(tok, &used);
            } catch (const std::exception &) {
                throw AlistError(number, "non-integer token '" + tok + "'");
            }
            if (used != tok.size())
                throw AlistError(number, "non-integer token '" + tok + "'");
            line.values.push_back(v);
        }
        if (!line.values.empty())
            lines.push_back(std::move(line));
    }
    return lines;
}

} // namespace

ParityCheckMatrix parse_alist(std::istream &in)
{
    const auto lines = tokenize(in);
    std::size_t cursor = 0;
    auto next = [&](const char *what) -> const Line & {
        if (cursor >= lines.size()) {
            const std::size_t last = lines.empty() ? 0 : lines.back().number;
            throw AlistError(last + 1, std::string("unexpected end of input, expected ") + what);
        }
        return lines[cursor++];
    };

    const Line &dims = next("header 'N M'");
    if (dims.values.size() != 2 || dims.values[0] <= 0 || dims.values[1] <= 0)
        throw AlistError(dims.number, "malformed header, expected two positive integers 'N M'");
    const auto n = static_cast<std::size_t>(dims.values[0]);
    const auto m = static_cast<std::size_t>(dims.values[1]);

    const Line &maxdeg = next("maximum degrees");
    if (maxdeg.values.size() != 2 || maxdeg.values[0] < 0 || maxdeg.values[1] < 0)
        throw AlistError(maxdeg.number, "malformed header, expected 'max_col_degree max_row_degree'");
    const auto max_q = static_cast<std::size_t>(maxdeg.values[0]);
    const auto max_p = static_cast<std::size_t>(maxdeg.values[1]);

    auto read_degrees = [&](std::size_t count, std::size_t max_deg, const char *what) {
        const Line &l = next(what);
        if (l.values.size() != count)
            throw AlistError(l.number, std::string(what) + ": expected " + std::to_string(count) + " entries, got " +
                                           std::to_string(l.values.size()));
        std::vector<std::size_t> deg;
        deg.reserve(count);
        for (auto v : l.values) {
            if (v < 0 || static_cast<std::size_t>(v) > max_deg)
                throw AlistError(l.number, std::string(what) + ": degree " + std::to_string(v) + " outside [0, " +
                                               std::to_string(max_deg) + "]");
            deg.push_back(static_cast<std::size_t>(v));
        }
        return deg;
    };
    const auto q = read_degrees(n, max_q, "column degrees");
    const auto p = read_degrees(m, max_p, "row degrees");

    auto read_lists = [&](const std::vector<std::size_t> &deg, std::size_t range, const char *what) {
        std::vector<std::vector<std::uint32_t>> lists(deg.size());
        std::vector<std::size_t> line_of(deg.size());
        for (std::size_t k = 0; k < deg.size(); ++k) {
            const Line &l = next(what);
            line_of[k] = l.number;
            for (auto v : l.values) {
                if (v == 0)
                    continue; // zero padding
                if (v < 0 || static_cast<std::size_t>(v) > range)
                    throw AlistError(l.number, std::string(what) + ": index " + std::to_string(v) +
                                                   " out of range [1, " + std::to_string(range) + "]");
                lists[k].push_back(static_cast<std::uint32_t>(v - 1));
            }
            if (lists[k].size() != deg[k])
                throw AlistError(l.number, std::string(what) + " " + std::to_string(k + 1) + ": declared degree " +
                                               std::to_string(deg[k]) + ", found " + std::to_string(lists[k].size()) +
                                               " indices");
            auto sorted = lists[k];
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw AlistError(l.number, std::string(what) + " " + std::to_string(k + 1) + ": duplicate index");
            lists[k] = std::move(sorted);
        }
        return std::pair{std::move(lists), std::move(line_of)};
    };
    auto [cols, col_lines] = read_lists(q, m, "column list");
    auto [rows, row_lines] = read_lists(p, n, "row list");

    if (cursor != lines.size())
        throw AlistError(lines[cursor].number, "trailing data after row lists");

    // Rebuild columns from rows and compare with the listed columns.
    std::vector<std::vector<std::uint32_t>> from_rows(n);
    for (std::size_t j = 0; j < m; ++j)
        for (auto v : rows[j])
            from_rows[v].push_back(static_cast<std::uint32_t>(j));
    for (std::size_t i = 0; i < n; ++i) {
        if (from_rows[i] != cols[i])
            throw AlistError(col_lines[i], "column list " + std::to_string(i + 1) +
                                               " is inconsistent with the row lists (transpose mismatch)");
    }

    return ParityCheckMatrix::from_rows(n, std::move(rows));
}

ParityCheckMatrix parse_alist(const std::string &text)
{
    std::istringstream in(text);
    return parse_alist(in);
}

ParityCheckMatrix load_alist(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open alist file " + path.string());
    return parse_alist(in);
}

std::string to_alist(const ParityCheckMatrix &h)
{
    std::ostringstream out;
    std::size_t max_q = 0, max_p = 0;
    for (const auto &c : h.var_cols())
        max_q = std::max(max_q, c.size());
    for (const auto &r : h.check_rows())
        max_p = std::max(max_p, r.size());

    out << h.n_vars() << ' ' << h.n_checks() << '\n' << max_q << ' ' << max_p << '\n';
    auto degrees = [&](const auto &lists) {
        for (std::size_t k = 0; k < lists.size(); ++k)
            out << (k ? " " : "") << lists[k].size();
        out << '\n';
    };
    degrees(h.var_cols());
    degrees(h.check_rows());
    auto write_lists = [&](const auto &lists, std::size_t width) {
        for (const auto &l : lists) {
            for (std::size_t k = 0; k < width; ++k)
                out << (k ? " " : "") << (k < l.size() ? l[k] + 1 : 0);
            out << '\n';
        }
    };
    write_lists(h.var_cols(), max_q);
    write_lists(h.check_rows(), max_p);
    return out.str();
}

// ---------------------------------------------------------------------------
// GF(2) elimination

namespace {

using PackedRow = std::vector<std::uint64_t>;

std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

bool test_bit(const PackedRow &r, std::size_t c) { return (r[c >> 6] >> (c & 63)) & 1U; }
void flip_bit(PackedRow &r, std::size_t c) { r[c >> 6] ^= std::uint64_t{1} << (c & 63); }

std::vector<PackedRow> dense_rows(const ParityCheckMatrix &h)
{
    const std::size_t w = words_for(h.n_vars());
    std::vector<PackedRow> rows(h.n_checks(), PackedRow(w, 0));
    for (std::size_t j = 0; j < h.n_checks(); ++j)
        for (auto v : h.row(j))
            flip_bit(rows[j], v);
    return rows;
}

/// Gauss-Jordan in place; returns pivot columns of the leading `rank` rows.
std::vector<std::uint32_t> reduce(std::vector<PackedRow> &rows, std::size_t n_cols)
{
    std::vector<std::uint32_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < n_cols && r < rows.size(); ++c) {
        std::size_t sel = r;
        while (sel < rows.size() && !test_bit(rows[sel], c))
            ++sel;
        if (sel == rows.size())
            continue;
        std::swap(rows[r], rows[sel]);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (k != r && test_bit(rows[k], c)) {
                for (std::size_t w = c >> 6; w < rows[k].size(); ++w)
                    rows[k][w] ^= rows[r][w];
            }
        }
        pivots.push_back(static_cast<std::uint32_t>(c));
        ++r;
    }
    rows.resize(r);
    return pivots;
}

} // namespace

std::size_t gf2_rank(const ParityCheckMatrix &h)
{
    auto rows = dense_rows(h);
    return reduce(rows, h.n_vars()).size();
}

GeneratorSpec::GeneratorSpec(std::size_t n, std::vector<std::uint32_t> permutation,
                             std::vector<std::vector<std::uint64_t>> rows)
    : n_(n), perm_(std::move(permutation)), rows_(std::move(rows))
{
}

Bits GeneratorSpec::row(std::size_t k) const
{
    const auto &r = rows_.at(k);
    Bits out(n_);
    for (std::size_t c = 0; c < n_; ++c)
        out[c] = static_cast<std::uint8_t>(test_bit(r, c));
    return out;
}

Bits GeneratorSpec::encode(std::span<const std::uint8_t> msg) const
{
    if (msg.size() != rows_.size())
        throw std::invalid_argument("encode: message length " + std::to_string(msg.size()) + " != K " +
                                    std::to_string(rows_.size()));
    PackedRow acc(words_for(n_), 0);
    for (std::size_t k = 0; k < msg.size(); ++k) {
        if (msg[k] & 1U) {
            const auto &r = rows_[k];
            for (std::size_t w = 0; w < acc.size(); ++w)
                acc[w] ^= r[w];
        }
    }
    Bits out(n_);
    for (std::size_t c = 0; c < n_; ++c)
        out[c] = static_cast<std::uint8_t>(test_bit(acc, c));
    return out;
}

GeneratorSpec derive_generator(const ParityCheckMatrix &h)
{
    if (h.n_vars() == 0)
        throw std::invalid_argument("derive_generator: empty parity-check matrix");
    const std::size_t n = h.n_vars();
    auto rows = dense_rows(h);
    const auto pivots = reduce(rows, n);

    std::vector<bool> is_pivot(n, false);
    for (auto c : pivots)
        is_pivot[c] = true;
    std::vector<std::uint32_t> perm;
    perm.reserve(n);
    for (std::uint32_t c = 0; c < n; ++c)
        if (!is_pivot[c])
            perm.push_back(c);
    const std::size_t k_len = perm.size();
    perm.insert(perm.end(), pivots.begin(), pivots.end());

    // Codeword for unit message e_k: free column f_k set, and each pivot bit
    // equals the reduced-row coefficient on f_k.
    std::vector<PackedRow> gen(k_len, PackedRow(words_for(n), 0));
    for (std::size_t k = 0; k < k_len; ++k) {
        const auto f = perm[k];
        flip_bit(gen[k], f);
        for (std::size_t r = 0; r < pivots.size(); ++r)
            if (test_bit(rows[r], f))
                flip_bit(gen[k], pivots[r]);
    }
    return GeneratorSpec(n, std::move(perm), std::move(gen));
}

Bits syndrome(const ParityCheckMatrix &h, std::span<const std::uint8_t> x)
{
    if (x.size() != h.n_vars())
        throw std::invalid_argument("syndrome: word length " + std::to_string(x.size()) + " != N " +
                                    std::to_string(h.n_vars()));
    Bits s(h.n_checks(), 0);
    for (std::size_t j = 0; j < h.n_checks(); ++j) {
        std::uint8_t acc = 0;
        for (auto v : h.row(j))
            acc ^= x[v] & 1U;
        s[j] = acc;
    }
    return s;
}

bool is_codeword(const ParityCheckMatrix &h, std::span<const std::uint8_t> x)
{
    const auto s = syndrome(h, x);
    return std::all_of(s.begin(), s.end(), [](auto b) { return b == 0; });
}

Symbols to_bipolar(std::span<const std::uint8_t> bits)
{
    Symbols out(bits.size());
    std::transform(bits.begin(), bits.end(), out.begin(),
                   [](std::uint8_t b) { return static_cast<std::int8_t>((b & 1U) ? -1 : 1); });
    return out;
}

Bits from_bipolar(std::span<const std::int8_t> symbols)
{
    Bits out(symbols.size());
    std::transform(symbols.begin(), symbols.end(), out.begin(),
                   [](std::int8_t s) { return static_cast<std::uint8_t>(s < 0 ? 1 : 0); });
    return out;
}

} // namespace prldpc

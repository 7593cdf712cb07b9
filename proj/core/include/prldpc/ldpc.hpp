#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prldpc {

using Bits = std::vector<std::uint8_t>;
using Symbols = std::vector<std::int8_t>;

/// Raised for malformed alist input. Carries the 1-based line number.
class AlistError : public std::runtime_error {
public:
    AlistError(std::size_t line, const std::string &what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/**
 * Sparse binary parity-check matrix H (M checks by N variables).
 *
 * Both adjacency directions are kept: check_rows()[j] lists the variables of
 * check j, var_cols()[i] lists the checks containing variable i. Both are
 * sorted, duplicate-free and describe the same edge set.
 */
class ParityCheckMatrix {
public:
    ParityCheckMatrix() = default;

    /// Validates indices and duplicates, sorts rows, builds the column view.
    static ParityCheckMatrix from_rows(std::size_t n_vars, std::vector<std::vector<std::uint32_t>> rows);

    std::size_t n_vars() const noexcept { return cols_.size(); }
    std::size_t n_checks() const noexcept { return rows_.size(); }
    std::size_t n_edges() const noexcept { return n_edges_; }

    const std::vector<std::vector<std::uint32_t>> &check_rows() const noexcept { return rows_; }
    const std::vector<std::vector<std::uint32_t>> &var_cols() const noexcept { return cols_; }
    std::span<const std::uint32_t> row(std::size_t j) const { return rows_.at(j); }
    std::span<const std::uint32_t> col(std::size_t i) const { return cols_.at(i); }

    std::size_t var_degree(std::size_t i) const { return cols_.at(i).size(); }
    std::size_t check_degree(std::size_t j) const { return rows_.at(j).size(); }

    /// degree -> number of variables (resp. checks) with that degree.
    std::map<std::size_t, std::size_t> var_degree_histogram() const;
    std::map<std::size_t, std::size_t> check_degree_histogram() const;
    bool is_regular() const;

    friend bool operator==(const ParityCheckMatrix &, const ParityCheckMatrix &) = default;

private:
    std::vector<std::vector<std::uint32_t>> rows_;
    std::vector<std::vector<std::uint32_t>> cols_;
    std::size_t n_edges_ = 0;
};

ParityCheckMatrix parse_alist(std::istream &in);
ParityCheckMatrix parse_alist(const std::string &text);
ParityCheckMatrix load_alist(const std::filesystem::path &path);
std::string to_alist(const ParityCheckMatrix &h);

std::size_t gf2_rank(const ParityCheckMatrix &h);

/**
 * Systematic generator obtained by GF(2) Gauss-Jordan elimination of H.
 *
 * Pivots are taken at the lowest-index column that still has a nonzero entry
 * in the remaining rows. Free (non-pivot) columns carry the message:
 * codeword[permutation()[k]] = msg[k] for k < K, and permutation()[K + r] is
 * the pivot column of reduced row r.
 */
class GeneratorSpec {
public:
    GeneratorSpec() = default;
    GeneratorSpec(std::size_t n, std::vector<std::uint32_t> permutation, std::vector<std::vector<std::uint64_t>> rows);

    std::size_t block_len() const noexcept { return n_; }
    std::size_t message_len() const noexcept { return rows_.size(); }
    double rate() const noexcept { return n_ == 0 ? 0.0 : static_cast<double>(message_len()) / static_cast<double>(n_); }
    const std::vector<std::uint32_t> &permutation() const noexcept { return perm_; }

    /// Row k of G as unpacked bits.
    Bits row(std::size_t k) const;

    Bits encode(std::span<const std::uint8_t> msg) const;

private:
    std::size_t n_ = 0;
    std::vector<std::uint32_t> perm_;
    std::vector<std::vector<std::uint64_t>> rows_; // packed, 64 columns per word
};

GeneratorSpec derive_generator(const ParityCheckMatrix &h);

Bits syndrome(const ParityCheckMatrix &h, std::span<const std::uint8_t> x);
bool is_codeword(const ParityCheckMatrix &h, std::span<const std::uint8_t> x);

/// bit 0 -> +1, bit 1 -> -1.
Symbols to_bipolar(std::span<const std::uint8_t> bits);
Bits from_bipolar(std::span<const std::int8_t> symbols);

} // namespace prldpc

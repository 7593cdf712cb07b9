#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prldpc/baseline.hpp"
#include "prldpc/channel.hpp"
#include "prldpc/decoder.hpp"
#include "prldpc/ldpc.hpp"
#include "prldpc/ops.hpp"

namespace prldpc {

enum class DecoderKind { prbp, turbo, sumproduct_memoryless };

std::string_view to_string(DecoderKind d);
DecoderKind parse_decoder(std::string_view text);

/// Flat run configuration; every key has a default.
struct SimConfig {
    std::string code;                 ///< alist path
    std::string target = "1-D";
    DecoderKind decoder = DecoderKind::prbp;
    std::size_t iterations = 20;      ///< PR-BP / sum-product iteration budget
    TurboSchedule schedule{3, 6};
    std::vector<double> snr_db{3.0};  ///< plot SNR grid
    bool rate_penalty = true;
    Convention convention = Convention::paper;
    std::uint64_t seed = 1;
    std::uint64_t min_bit_errors = 100;
    std::uint64_t min_word_errors = 0;
    std::uint64_t max_codewords = 10'000'000;
    int pad = 1;
    bool early_stop = true;
    std::size_t threads = 1;
    std::size_t batch = 64;

    /// JSON text with every key; `from_json` accepts any subset and rejects unknown keys.
    std::string to_json(int indent = 2) const;
    static SimConfig from_json(std::string_view text);
    /// Overlay the keys present in `text` onto this config.
    void merge_json(std::string_view text);
    void validate() const;
};

struct BerRecord {
    double snr_plot_db = 0.0;
    double snr_channel_db = 0.0;
    std::uint64_t codewords = 0;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t word_errors = 0;
    double ber = 0.0;
    double wer = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double mean_iters = 0.0;
    double mults_per_sym = 0.0;
    double adds_per_sym = 0.0;
};

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval at 95% for k successes in n trials.
Interval wilson_interval(std::uint64_t k, std::uint64_t n);

/// Outcome of one simulated codeword.
struct TrialOutcome {
    std::uint64_t bit_errors = 0;
    std::size_t iterations = 0;
    double mults = 0.0; ///< per symbol
    double adds = 0.0;  ///< per symbol
};

struct TrialDetail {
    Bits codeword;
    DecodeResult result;
    TrialOutcome outcome;
};

/**
 * A loaded experiment: code, generator, graph and channel model, ready to run
 * trials. Trial t at grid point k draws everything from the stream
 * derive_key(derive_key(seed, k), t).
 */
class Simulation {
public:
    explicit Simulation(SimConfig config);

    const SimConfig &config() const noexcept { return cfg_; }
    const ParityCheckMatrix &code() const noexcept { return code_; }
    const GeneratorSpec &generator() const noexcept { return gen_; }
    /// Channel actually simulated (h = 1 for the memoryless decoder).
    const PrTarget &channel() const noexcept { return channel_; }

    double channel_snr_db(double snr_plot_db) const;

    TrialOutcome run_trial(std::size_t snr_index, std::uint64_t trial) const;
    /// run_trial keeping the codeword and the decoder output; `trace` is filled by PR-BP only.
    TrialDetail decode_trial(std::size_t snr_index, std::uint64_t trial, std::vector<TraceRow> *trace = nullptr) const;
    BerRecord run_point(std::size_t snr_index) const;

private:
    SimConfig cfg_;
    ParityCheckMatrix code_;
    GeneratorSpec gen_;
    PrTarget channel_;
    FactorGraph graph_;
    std::optional<Trellis> trellis_;
    OpCount prbp_cost_, sp_cost_;
};

inline constexpr std::string_view kCsvHeader = "snr_plot_db,snr_channel_db,codewords,bits,bit_errors,word_errors,ber,"
                                               "wer,ci_lo,ci_hi,mean_iters,mults_per_sym,adds_per_sym";

std::string format_csv_row(const BerRecord &r);
BerRecord parse_csv_row(std::string_view line);

/// Git blob SHA-1 of a file's bytes, as lowercase hex.
std::string git_blob_sha1(const std::filesystem::path &path);

struct SweepOutput {
    std::filesystem::path csv;
    std::filesystem::path json;
};

/**
 * Runs every grid point, appending each record to the CSV as soon as it is
 * done and rewriting the JSON sidecar. With `resume`, points already present
 * in an existing CSV written under the same configuration are kept.
 */
std::vector<BerRecord> sweep(const SimConfig &config, const SweepOutput &out, bool resume = false,
                             std::ostream *progress = nullptr);

/// Per-symbol operation counts measured by running the instrumented decoders.
struct MeasuredOps {
    PerSymbolOps per_symbol;           ///< averaged over interior symbols
    std::size_t iterations = 0;
    OpCount overhead;
};

/// PR-BP run for exactly `iterations` iterations on a noiseless all-zero word.
MeasuredOps measure_prbp_ops(const ParityCheckMatrix &h, const PrTarget &target, std::size_t iterations);
/// Sum-product on the memoryless channel, exactly `iterations` iterations.
MeasuredOps measure_sum_product_ops(const ParityCheckMatrix &h, std::size_t iterations);
/// One BCJR pass over N symbols.
MeasuredOps measure_bcjr_ops(const PrTarget &target, std::size_t n_symbols);
/// Turbo equalization with early stopping disabled.
MeasuredOps measure_turbo_ops(const ParityCheckMatrix &h, const PrTarget &target, const TurboSchedule &schedule);

} // namespace prldpc

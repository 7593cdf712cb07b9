#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "prldpc/ldpc.hpp"
#include "prldpc/oracle.hpp"
#include "prldpc/sim.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace prldpc;

namespace {

// Usage problems found after parsing (bad values, missing inputs) exit with 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A code argument may be a path, or a fixture name looked up in
/// $PRLDPC_FIXTURE_DIR and then in the fixtures shipped with the sources.
fs::path resolve_code(const std::string &arg)
{
    if (arg.empty() || fs::exists(arg))
        return arg;
    std::vector<fs::path> dirs;
    if (const char *env = std::getenv("PRLDPC_FIXTURE_DIR"))
        dirs.emplace_back(env);
    dirs.emplace_back(PRLDPC_DEFAULT_FIXTURE_DIR);
    for (const auto &d : dirs)
        for (const auto &cand : {d / arg, d / (arg + ".alist")})
            if (fs::exists(cand))
                return cand;
    throw std::runtime_error("code not found: " + arg);
}

std::string bits_string(const Bits &b)
{
    std::string s(b.size(), '0');
    for (std::size_t i = 0; i < b.size(); ++i)
        s[i] = b[i] ? '1' : '0';
    return s;
}

json op_json(const OpCount &c) { return {{"mults", c.mults}, {"adds", c.adds}}; }
json op_json(const PerSymbolOps &c) { return {{"mults", c.mults}, {"adds", c.adds}}; }

void print(const json &j) { std::cout << j.dump(2) << '\n'; }

/// Flags shared by `decode` and `ber`; only the ones given override the config file.
struct SimFlags {
    std::string config_file;
    std::string code, target, decoder, schedule, convention;
    std::vector<double> snr;
    std::size_t iterations = 0, threads = 0;
    std::uint64_t seed = 0;
    int pad = 1;
    bool rate_penalty = true, early_stop = true, show_config = false;
    std::vector<CLI::Option *> given;

    void attach(CLI::App *app, bool grid)
    {
        app->add_option("--config", config_file, "JSON config file (any subset of keys)")->check(CLI::ExistingFile);
        given = {
            app->add_option("--code", code, "alist path or fixture name"),
            app->add_option("--target", target, "PR target, e.g. 1-D, 1-D^2, 1+0.5D"),
            app->add_option("--decoder", decoder, "prbp | turbo | sumproduct"),
            app->add_option("--iterations", iterations, "PR-BP / sum-product iteration budget"),
            app->add_option("--schedule", schedule, "turbo schedule TxS"),
            app->add_option("--convention", convention, "paper | exact"),
            app->add_option("--seed", seed, "master seed"),
            app->add_option("--pad", pad, "known padding symbol (1 or -1)"),
            app->add_option("--threads", threads, "worker threads"),
            app->add_flag("--rate-penalty,!--no-rate-penalty", rate_penalty, "shift plot SNR by 10 log10(rate)"),
            app->add_flag("--early-stop,!--no-early-stop", early_stop, "stop when the syndrome is zero"),
        };
        auto *snr_opt = grid ? app->add_option("--snr", snr, "plot SNR grid in dB")->delimiter(',')
                             : app->add_option("--snr", snr, "plot SNR in dB")->expected(1);
        given.push_back(snr_opt);
        app->add_flag("--show-config", show_config, "print the effective configuration and exit");
    }

    json overrides() const
    {
        json j = json::object();
        auto set = [&](const char *flag, const char *key, auto value) {
            for (auto *o : given)
                if (o->check_lname(flag + 2) && o->count() > 0)
                    j[key] = value;
        };
        set("--code", "code", code);
        set("--target", "target", target);
        set("--decoder", "decoder", decoder);
        set("--iterations", "iterations", iterations);
        set("--schedule", "schedule", schedule);
        set("--convention", "convention", convention);
        set("--seed", "seed", seed);
        set("--pad", "pad", pad);
        set("--threads", "threads", threads);
        set("--rate-penalty", "rate_penalty", rate_penalty);
        set("--early-stop", "early_stop", early_stop);
        set("--snr", "snr_db", snr);
        return j;
    }

    SimConfig load(const json &extra) const
    {
        SimConfig cfg;
        try {
            if (!config_file.empty()) {
                std::ifstream in(config_file);
                std::stringstream text;
                text << in.rdbuf();
                cfg = SimConfig::from_json(text.str());
            }
            auto over = overrides();
            over.update(extra);
            cfg.merge_json(over.dump());
        } catch (const std::exception &e) {
            throw UsageError(e.what());
        }
        if (!cfg.code.empty())
            cfg.code = resolve_code(cfg.code).string();
        try {
            cfg.validate();
        } catch (const std::exception &e) {
            throw UsageError(e.what());
        }
        return cfg;
    }
};

int cmd_code_info(const std::string &arg)
{
    const auto path = resolve_code(arg);
    const auto h = load_alist(path);
    const auto gen = derive_generator(h);
    json vd = json::object(), cd = json::object();
    for (auto [deg, count] : h.var_degree_histogram())
        vd[std::to_string(deg)] = count;
    for (auto [deg, count] : h.check_degree_histogram())
        cd[std::to_string(deg)] = count;
    json out = {
        {"path", path.string()},
        {"git_blob_sha1", git_blob_sha1(path)},
        {"n", h.n_vars()},
        {"m", h.n_checks()},
        {"k", gen.message_len()},
        {"rank", h.n_vars() - gen.message_len()},
        {"rate", gen.rate()},
        {"edges", h.n_edges()},
        {"var_degrees", vd},
        {"check_degrees", cd},
        {"regular", h.is_regular()},
    };
    print(out);
    return 0;
}

int cmd_decode(const SimFlags &flags, std::uint64_t trial, const std::string &trace_path)
{
    const auto cfg = flags.load(json::object());
    if (flags.show_config) {
        std::cout << cfg.to_json() << '\n';
        return 0;
    }
    if (cfg.snr_db.size() != 1)
        throw UsageError("decode takes exactly one --snr value");
    if (!trace_path.empty() && cfg.decoder != DecoderKind::prbp)
        throw UsageError("--trace is only available for the prbp decoder");
    const Simulation sim(cfg);
    std::vector<TraceRow> trace;
    const auto d = sim.decode_trial(0, trial, trace_path.empty() ? nullptr : &trace);
    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out)
            throw std::runtime_error("cannot write " + trace_path);
        write_trace_csv(out, trace);
    }
    json out = {
        {"config", json::parse(cfg.to_json())},
        {"trial", trial},
        {"snr_plot_db", cfg.snr_db[0]},
        {"snr_channel_db", sim.channel_snr_db(cfg.snr_db[0])},
        {"converged", d.result.converged},
        {"iterations", d.result.iterations_used},
        {"bit_errors", d.outcome.bit_errors},
        {"codeword", bits_string(d.codeword)},
        {"hard_bits", bits_string(d.result.hard_bits)},
        {"lambdas", d.result.lambdas},
    };
    if (cfg.decoder == DecoderKind::turbo) {
        out["detector_passes"] = d.result.detector_passes;
        out["inner_iterations"] = d.result.inner_iterations;
    }
    print(out);
    return 0;
}

int cmd_ber(const SimFlags &flags, const json &extra, const fs::path &out_dir, const std::string &name, bool resume)
{
    const auto cfg = flags.load(extra);
    if (flags.show_config) {
        std::cout << cfg.to_json() << '\n';
        return 0;
    }
    fs::create_directories(out_dir);
    const SweepOutput out{out_dir / (name + ".csv"), out_dir / (name + ".json")};
    const auto records = sweep(cfg, out, resume, &std::cerr);
    print({{"csv", out.csv.string()}, {"json", out.json.string()}, {"points", records.size()}});
    return 0;
}

int cmd_oracle_check(std::size_t size, std::size_t count, std::uint64_t seed, const std::vector<std::string> &targets,
                     double snr_db)
{
    if (size == 0 || size > 16)
        throw UsageError("--size must be between 1 and 16");
    std::vector<PrTarget> parsed;
    for (const auto &t : targets)
        parsed.push_back(PrTarget::parse(t));
    const auto s = run_tree_checks(size, count, seed, parsed, snr_db);
    const bool ok = s.max_marginal_error < 1e-8 && s.max_stationarity < 1e-9 && s.max_free_energy_gap < 1e-6;
    print({
        {"size", size},
        {"count", count},
        {"seed", seed},
        {"targets", targets},
        {"snr_db", snr_db},
        {"instances", s.instances},
        {"max_marginal_error", s.max_marginal_error},
        {"max_stationarity", s.max_stationarity},
        {"max_free_energy_gap", s.max_free_energy_gap},
        {"max_consistency", s.max_consistency},
        {"max_iterations", s.max_iterations},
        {"within_thresholds", ok},
    });
    return 0;
}

int cmd_predict_ops(std::uint64_t q, std::uint64_t p, std::uint64_t iterations, const std::string &schedule_text,
                    std::uint64_t states, const std::string &measure, const std::string &target_text)
{
    TurboSchedule schedule;
    try {
        schedule = TurboSchedule::parse(schedule_text);
    } catch (const std::exception &e) {
        throw UsageError(e.what());
    }
    json out = {
        {"q", q},
        {"p", p},
        {"iterations", iterations},
        {"schedule", schedule.to_string()},
        {"states", states},
        {"prbp", {{"per_iteration", op_json(predicted_ops(q, p, true, 1))},
                  {"total", op_json(predicted_ops(q, p, true, iterations))}}},
        {"sum_product", {{"per_iteration", op_json(predicted_ops(q, p, false, 1))},
                         {"total", op_json(predicted_ops(q, p, false, iterations))}}},
        {"bcjr", op_json(predicted_bcjr_ops(states))},
        {"turbo", op_json(predicted_turbo_ops(q, p, states, schedule.outer, schedule.inner))},
    };
    if (!measure.empty()) {
        const auto path = resolve_code(measure);
        const auto h = load_alist(path);
        const auto target = PrTarget::parse(target_text);
        out["measured"] = {
            {"code", path.string()},
            {"target", target.to_string()},
            {"prbp", op_json(measure_prbp_ops(h, target, iterations).per_symbol)},
            {"sum_product", op_json(measure_sum_product_ops(h, iterations).per_symbol)},
            {"bcjr", op_json(measure_bcjr_ops(target, h.n_vars()).per_symbol)},
            {"turbo", op_json(measure_turbo_ops(h, target, schedule).per_symbol)},
        };
    }
    print(out);
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Joint detection and decoding of LDPC codes on partial-response channels", "prldpc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "prldpc 0.1.0");

    std::string info_code;
    auto *info = app.add_subcommand("code-info", "summarize a parity-check matrix");
    info->add_option("code", info_code, "alist path or fixture name")->required();

    SimFlags decode_flags;
    std::uint64_t trial = 0;
    std::string trace_path;
    auto *dec = app.add_subcommand("decode", "simulate and decode one codeword");
    decode_flags.attach(dec, false);
    dec->add_option("--trial", trial, "trial index within the seed stream");
    dec->add_option("--trace", trace_path, "write a per-iteration CSV trace (prbp)");

    SimFlags ber_flags;
    std::uint64_t min_bit_errors = 0, min_word_errors = 0, max_codewords = 0;
    std::size_t batch = 0;
    std::string out_dir = ".", name = "ber";
    bool resume = false;
    auto *ber = app.add_subcommand("ber", "run a BER/WER sweep and write CSV + JSON");
    ber_flags.attach(ber, true);
    auto *o_mbe = ber->add_option("--min-bit-errors", min_bit_errors, "stop a point after this many bit errors");
    auto *o_mwe = ber->add_option("--min-word-errors", min_word_errors, "and this many word errors");
    auto *o_mcw = ber->add_option("--max-codewords", max_codewords, "or after this many codewords");
    auto *o_batch = ber->add_option("--batch", batch, "trials per scheduling batch");
    ber->add_option("--out-dir", out_dir, "output directory");
    ber->add_option("--name", name, "output file stem");
    ber->add_flag("--resume", resume, "continue an interrupted sweep");

    std::size_t size = 12, count = 200;
    std::uint64_t oracle_seed = 1;
    std::vector<std::string> targets{"1-D", "1-D^2"};
    double oracle_snr = 2.0;
    auto *orc = app.add_subcommand("oracle-check", "compare PR-BP with exhaustive enumeration on random trees");
    orc->add_option("--size", size, "variables per instance (at most 16)");
    orc->add_option("--count", count, "instances per target");
    orc->add_option("--seed", oracle_seed, "seed");
    orc->add_option("--targets", targets, "comma-separated PR targets")->delimiter(',');
    orc->add_option("--snr", oracle_snr, "channel SNR in dB used to draw couplings");

    std::uint64_t q = 3, p = 6, iterations = 20, states = 2;
    std::string schedule = "3x6", measure, target = "1-D";
    auto *ops = app.add_subcommand("predict-ops", "per-symbol multiplication and addition counts");
    ops->add_option("--q", q, "column weight");
    ops->add_option("--p", p, "row weight");
    ops->add_option("--iterations", iterations, "PR-BP / sum-product iterations");
    ops->add_option("--schedule", schedule, "turbo schedule TxS");
    ops->add_option("--states", states, "trellis states for BCJR");
    ops->add_option("--measure", measure, "also measure with the instrumented decoders on this code");
    ops->add_option("--target", target, "PR target for --measure");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*info)
            return cmd_code_info(info_code);
        if (*dec)
            return cmd_decode(decode_flags, trial, trace_path);
        if (*ber) {
            json extra = json::object();
            if (o_mbe->count())
                extra["min_bit_errors"] = min_bit_errors;
            if (o_mwe->count())
                extra["min_word_errors"] = min_word_errors;
            if (o_mcw->count())
                extra["max_codewords"] = max_codewords;
            if (o_batch->count())
                extra["batch"] = batch;
            return cmd_ber(ber_flags, extra, out_dir, name, resume);
        }
        if (*orc)
            return cmd_oracle_check(size, count, oracle_seed, targets, oracle_snr);
        if (*ops)
            return cmd_predict_ops(q, p, iterations, schedule, states, measure, target);
    } catch (const UsageError &e) {
        std::cerr << "prldpc: " << e.what() << '\n';
        return 1;
    } catch (const std::exception &e) {
        std::cerr << "prldpc: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

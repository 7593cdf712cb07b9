#include "prldpc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <openssl/evp.h>

#include "json.hpp"

namespace prldpc {

using nlohmann::json;

std::string_view to_string(DecoderKind d)
{
    switch (d) {
    case DecoderKind::prbp:
        return "prbp";
    case DecoderKind::turbo:
        return "turbo";
    case DecoderKind::sumproduct_memoryless:
        return "sumproduct-memoryless";
    }
    return "?";
}

DecoderKind parse_decoder(std::string_view text)
{
    if (text == "prbp")
        return DecoderKind::prbp;
    if (text == "turbo")
        return DecoderKind::turbo;
    if (text == "sumproduct-memoryless" || text == "sumproduct")
        return DecoderKind::sumproduct_memoryless;
    throw std::invalid_argument("unknown decoder '" + std::string(text) +
                                "' (expected prbp, turbo or sumproduct-memoryless)");
}

namespace {

json config_to_json(const SimConfig &c)
{
    return json{
        {"code", c.code},
        {"target", c.target},
        {"decoder", std::string(to_string(c.decoder))},
        {"iterations", c.iterations},
        {"schedule", c.schedule.to_string()},
        {"snr_db", c.snr_db},
        {"rate_penalty", c.rate_penalty},
        {"convention", std::string(to_string(c.convention))},
        {"seed", c.seed},
        {"min_bit_errors", c.min_bit_errors},
        {"min_word_errors", c.min_word_errors},
        {"max_codewords", c.max_codewords},
        {"pad", c.pad},
        {"early_stop", c.early_stop},
        {"threads", c.threads},
        {"batch", c.batch},
    };
}

template <class T>
T get_as(const json &v, const std::string &key)
{
    try {
        return v.get<T>();
    } catch (const json::exception &) {
        throw std::invalid_argument("config key '" + key + "' has the wrong type");
    }
}

void apply_json(SimConfig &c, const json &j)
{
    if (!j.is_object())
        throw std::invalid_argument("config must be a JSON object");
    for (const auto &[key, v] : j.items()) {
        if (key == "code")
            c.code = get_as<std::string>(v, key);
        else if (key == "target")
            c.target = get_as<std::string>(v, key);
        else if (key == "decoder")
            c.decoder = parse_decoder(get_as<std::string>(v, key));
        else if (key == "iterations")
            c.iterations = get_as<std::size_t>(v, key);
        else if (key == "schedule")
            c.schedule = TurboSchedule::parse(get_as<std::string>(v, key));
        else if (key == "snr_db")
            c.snr_db = v.is_array() ? get_as<std::vector<double>>(v, key) : std::vector<double>{get_as<double>(v, key)};
        else if (key == "rate_penalty")
            c.rate_penalty = get_as<bool>(v, key);
        else if (key == "convention")
            c.convention = parse_convention(get_as<std::string>(v, key));
        else if (key == "seed")
            c.seed = get_as<std::uint64_t>(v, key);
        else if (key == "min_bit_errors")
            c.min_bit_errors = get_as<std::uint64_t>(v, key);
        else if (key == "min_word_errors")
            c.min_word_errors = get_as<std::uint64_t>(v, key);
        else if (key == "max_codewords")
            c.max_codewords = get_as<std::uint64_t>(v, key);
        else if (key == "pad")
            c.pad = get_as<int>(v, key);
        else if (key == "early_stop")
            c.early_stop = get_as<bool>(v, key);
        else if (key == "threads")
            c.threads = get_as<std::size_t>(v, key);
        else if (key == "batch")
            c.batch = get_as<std::size_t>(v, key);
        else
            throw std::invalid_argument("unknown config key '" + key + "'");
    }
}

json parse_json(std::string_view text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
    }
}

} // namespace

std::string SimConfig::to_json(int indent) const { return config_to_json(*this).dump(indent); }

SimConfig SimConfig::from_json(std::string_view text)
{
    SimConfig c;
    apply_json(c, parse_json(text));
    return c;
}

void SimConfig::merge_json(std::string_view text) { apply_json(*this, parse_json(text)); }

void SimConfig::validate() const
{
    if (code.empty())
        throw std::invalid_argument("config: 'code' (alist path) is required");
    if (snr_db.empty())
        throw std::invalid_argument("config: 'snr_db' must list at least one point");
    for (double s : snr_db)
        if (!std::isfinite(s))
            throw std::invalid_argument("config: 'snr_db' values must be finite");
    if (!std::is_sorted(snr_db.begin(), snr_db.end(), std::less_equal<>()))
        throw std::invalid_argument("config: 'snr_db' must be strictly increasing");
    if (iterations == 0)
        throw std::invalid_argument("config: 'iterations' must be positive");
    if (schedule.outer == 0)
        throw std::invalid_argument("config: 'schedule' needs at least one outer iteration");
    if (min_bit_errors == 0 || max_codewords == 0)
        throw std::invalid_argument("config: stop rules must be positive");
    if (pad != 1 && pad != -1)
        throw std::invalid_argument("config: 'pad' must be 1 or -1");
    if (threads == 0 || batch == 0)
        throw std::invalid_argument("config: 'threads' and 'batch' must be positive");
    const auto t = PrTarget::parse(target);
    if (decoder == DecoderKind::turbo && t.isi_len() == 0)
        throw std::invalid_argument("config: turbo equalization needs a target with memory");
}

Interval wilson_interval(std::uint64_t k, std::uint64_t n)
{
    if (n == 0)
        return {0.0, 1.0};
    constexpr double z = 1.959963984540054;
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double denom = 1.0 + z * z / nn;
    const double centre = (p + z * z / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

Simulation::Simulation(SimConfig config) : cfg_(std::move(config)), channel_(std::vector<double>{1.0})
{
    cfg_.validate();
    code_ = load_alist(cfg_.code);
    gen_ = derive_generator(code_);
    if (gen_.message_len() == 0)
        throw std::invalid_argument("code has no information bits");
    if (cfg_.decoder != DecoderKind::sumproduct_memoryless)
        channel_ = PrTarget::parse(cfg_.target);
    graph_ = FactorGraph::build(code_, channel_);
    if (cfg_.decoder == DecoderKind::turbo)
        trellis_.emplace(channel_);
    prbp_cost_ = prbp_iteration_cost(graph_);
    sp_cost_ = sum_product_iteration_cost(code_);
}

double Simulation::channel_snr_db(double snr_plot_db) const
{
    return cfg_.rate_penalty ? apply_rate_penalty(snr_plot_db, gen_.rate()) : snr_plot_db;
}

TrialOutcome Simulation::run_trial(std::size_t snr_index, std::uint64_t trial) const
{
    return decode_trial(snr_index, trial).outcome;
}

TrialDetail Simulation::decode_trial(std::size_t snr_index, std::uint64_t trial, std::vector<TraceRow> *trace) const
{
    CounterRng rng(derive_key(derive_key(cfg_.seed, snr_index), trial));
    Bits msg(gen_.message_len());
    for (auto &b : msg)
        b = rng.bit();
    const Bits word = gen_.encode(msg);
    const Symbols x = to_bipolar(word);
    const auto pad = static_cast<std::int8_t>(cfg_.pad);
    const auto noise = NoiseSpec::from_snr_db(channel_, channel_snr_db(cfg_.snr_db.at(snr_index)));
    const auto y = transmit(x, channel_, noise, rng, pad);
    const double c = precision_coefficient(channel_, noise, cfg_.convention);
    const double n = static_cast<double>(code_.n_vars());

    TrialDetail detail;
    auto &out = detail.outcome;
    auto &res = detail.result;
    switch (cfg_.decoder) {
    case DecoderKind::prbp: {
        const auto cp = couplings_with_precision(y, channel_, c, pad);
        DecodeOptions opt;
        opt.max_iter = cfg_.iterations;
        opt.early_stop = cfg_.early_stop;
        opt.trace = trace;
        res = decode(graph_, cp, opt);
        out.mults = static_cast<double>(prbp_cost_.mults) / n * static_cast<double>(res.iterations_used);
        out.adds = static_cast<double>(prbp_cost_.adds) / n * static_cast<double>(res.iterations_used);
        break;
    }
    case DecoderKind::sumproduct_memoryless: {
        const auto cp = couplings_with_precision(y, channel_, c, pad);
        SumProductOptions opt;
        opt.max_iter = cfg_.iterations;
        opt.early_stop = cfg_.early_stop;
        res = sum_product_decode(code_, cp.u, opt);
        out.mults = static_cast<double>(sp_cost_.mults) / n * static_cast<double>(res.iterations_used);
        out.adds = static_cast<double>(sp_cost_.adds) / n * static_cast<double>(res.iterations_used);
        break;
    }
    case DecoderKind::turbo: {
        TurboOptions opt;
        opt.schedule = cfg_.schedule;
        opt.early_stop = cfg_.early_stop;
        res = turbo_equalize(code_, *trellis_, y, c, pad, opt);
        const auto bcjr_cost = predicted_bcjr_ops(trellis_->n_states());
        const auto passes = static_cast<double>(res.detector_passes);
        const auto inner = static_cast<double>(res.inner_iterations);
        out.mults = static_cast<double>(bcjr_cost.mults) * passes + static_cast<double>(sp_cost_.mults) / n * inner;
        out.adds = static_cast<double>(bcjr_cost.adds) * passes + static_cast<double>(sp_cost_.adds) / n * inner;
        break;
    }
    }
    out.iterations = res.iterations_used;
    for (std::size_t i = 0; i < word.size(); ++i)
        out.bit_errors += res.hard_bits[i] != word[i];
    detail.codeword = word;
    return detail;
}

BerRecord Simulation::run_point(std::size_t snr_index) const
{
    BerRecord r;
    r.snr_plot_db = cfg_.snr_db.at(snr_index);
    r.snr_channel_db = channel_snr_db(r.snr_plot_db);

    double iters = 0.0, mults = 0.0, adds = 0.0;
    std::vector<TrialOutcome> batch;
    bool done = false;
    std::uint64_t next = 0;
    while (!done) {
        const std::uint64_t count = std::min<std::uint64_t>(cfg_.batch, cfg_.max_codewords - next);
        batch.assign(count, {});
        const std::size_t workers = std::min<std::size_t>(cfg_.threads, count);
        if (workers <= 1) {
            for (std::uint64_t t = 0; t < count; ++t)
                batch[t] = run_trial(snr_index, next + t);
        } else {
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    for (std::uint64_t t = w; t < count; t += workers)
                        batch[t] = run_trial(snr_index, next + t);
                });
            for (auto &th : pool)
                th.join();
        }
        // Aggregate in trial order so the stopping trial does not depend on scheduling.
        for (const auto &o : batch) {
            ++r.codewords;
            r.bit_errors += o.bit_errors;
            r.word_errors += o.bit_errors > 0;
            iters += static_cast<double>(o.iterations);
            mults += o.mults;
            adds += o.adds;
            if ((r.bit_errors >= cfg_.min_bit_errors && r.word_errors >= cfg_.min_word_errors) ||
                r.codewords >= cfg_.max_codewords) {
                done = true;
                break;
            }
        }
        next += count;
    }

    r.bits = r.codewords * code_.n_vars();
    r.ber = static_cast<double>(r.bit_errors) / static_cast<double>(r.bits);
    r.wer = static_cast<double>(r.word_errors) / static_cast<double>(r.codewords);
    const auto ci = wilson_interval(r.bit_errors, r.bits);
    r.ci_lo = ci.lo;
    r.ci_hi = ci.hi;
    const auto cw = static_cast<double>(r.codewords);
    r.mean_iters = iters / cw;
    r.mults_per_sym = mults / cw;
    r.adds_per_sym = adds / cw;
    return r;
}

std::string format_csv_row(const BerRecord &r)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%llu,%llu,%llu,%llu,%.6e,%.6e,%.6e,%.6e,%.4f,%.3f,%.3f", r.snr_plot_db,
                  r.snr_channel_db, static_cast<unsigned long long>(r.codewords),
                  static_cast<unsigned long long>(r.bits), static_cast<unsigned long long>(r.bit_errors),
                  static_cast<unsigned long long>(r.word_errors), r.ber, r.wer, r.ci_lo, r.ci_hi, r.mean_iters,
                  r.mults_per_sym, r.adds_per_sym);
    return buf;
}

BerRecord parse_csv_row(std::string_view line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in{std::string(line)};
    while (std::getline(in, cell, ','))
        cells.push_back(cell);
    if (cells.size() != 13)
        throw std::runtime_error("malformed BER record: " + std::string(line));
    BerRecord r;
    try {
        r.snr_plot_db = std::stod(cells[0]);
        r.snr_channel_db = std::stod(cells[1]);
        r.codewords = std::stoull(cells[2]);
        r.bits = std::stoull(cells[3]);
        r.bit_errors = std::stoull(cells[4]);
        r.word_errors = std::stoull(cells[5]);
        r.ber = std::stod(cells[6]);
        r.wer = std::stod(cells[7]);
        r.ci_lo = std::stod(cells[8]);
        r.ci_hi = std::stod(cells[9]);
        r.mean_iters = std::stod(cells[10]);
        r.mults_per_sym = std::stod(cells[11]);
        r.adds_per_sym = std::stod(cells[12]);
    } catch (const std::logic_error &) {
        throw std::runtime_error("malformed BER record: " + std::string(line));
    }
    return r;
}

std::string git_blob_sha1(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    const std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string header = "blob " + std::to_string(body.size()) + '\0';

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX *ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx, body.data(), body.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("SHA-1 computation failed");
    }
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i)
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    return hex.str();
}

namespace {

json record_to_json(const BerRecord &r)
{
    return json{{"snr_plot_db", r.snr_plot_db},     {"snr_channel_db", r.snr_channel_db},
                {"codewords", r.codewords},         {"bits", r.bits},
                {"bit_errors", r.bit_errors},       {"word_errors", r.word_errors},
                {"ber", r.ber},                     {"wer", r.wer},
                {"ci_lo", r.ci_lo},                 {"ci_hi", r.ci_hi},
                {"mean_iters", r.mean_iters},       {"mults_per_sym", r.mults_per_sym},
                {"adds_per_sym", r.adds_per_sym}};
}

// The worker count changes nothing in the records, so it is ignored when resuming.
json resume_key(const SimConfig &c)
{
    auto j = config_to_json(c);
    j.erase("threads");
    return j;
}

void write_sidecar(const SimConfig &config, const std::string &fixture_hash, const std::vector<BerRecord> &records,
                   const std::filesystem::path &path)
{
    json j;
    j["config"] = config_to_json(config);
    j["seed"] = config.seed;
    j["fixtures"] = json{{"code", json{{"path", config.code}, {"git_blob_sha1", fixture_hash}}}};
    j["completed_points"] = records.size();
    j["complete"] = records.size() == config.snr_db.size();
    j["records"] = json::array();
    for (const auto &r : records)
        j["records"].push_back(record_to_json(r));

    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out)
            throw std::runtime_error("cannot write " + tmp);
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

} // namespace

std::vector<BerRecord> sweep(const SimConfig &config, const SweepOutput &out, bool resume, std::ostream *progress)
{
    const Simulation sim(config);
    const auto hash = git_blob_sha1(config.code);
    std::vector<BerRecord> records;

    if (resume && std::filesystem::exists(out.csv) && std::filesystem::exists(out.json)) {
        std::ifstream js(out.json);
        json prev;
        try {
            prev = json::parse(js);
        } catch (const json::parse_error &e) {
            throw std::runtime_error("cannot resume: unreadable sidecar " + out.json.string());
        }
        auto prev_cfg = prev.at("config");
        prev_cfg.erase("threads");
        if (prev_cfg != resume_key(config) || prev.at("fixtures").at("code").at("git_blob_sha1") != hash)
            throw std::runtime_error("cannot resume: " + out.json.string() + " was written with a different configuration");
        std::ifstream csv(out.csv, std::ios::binary);
        std::stringstream text;
        text << csv.rdbuf();
        const std::string body = text.str();
        // only newline-terminated lines are complete records
        std::size_t pos = 0;
        bool header = true;
        for (auto nl = body.find('\n'); nl != std::string::npos; pos = nl + 1, nl = body.find('\n', pos)) {
            const auto line = body.substr(pos, nl - pos);
            if (header) {
                if (line != kCsvHeader)
                    throw std::runtime_error("cannot resume: unexpected CSV header in " + out.csv.string());
                header = false;
            } else if (!line.empty()) {
                records.push_back(parse_csv_row(line));
            }
        }
        if (header)
            throw std::runtime_error("cannot resume: missing CSV header in " + out.csv.string());
        if (records.size() > config.snr_db.size())
            throw std::runtime_error("cannot resume: CSV has more rows than grid points");
        // rewrite so a partially written trailing line cannot survive
        std::ofstream rewrite(out.csv, std::ios::trunc);
        rewrite << kCsvHeader << '\n';
        for (const auto &r : records)
            rewrite << format_csv_row(r) << '\n';
    } else {
        std::ofstream csv(out.csv, std::ios::trunc);
        if (!csv)
            throw std::runtime_error("cannot write " + out.csv.string());
        csv << kCsvHeader << '\n';
    }
    write_sidecar(config, hash, records, out.json);

    for (std::size_t k = records.size(); k < config.snr_db.size(); ++k) {
        const auto r = sim.run_point(k);
        records.push_back(r);
        {
            std::ofstream csv(out.csv, std::ios::app);
            csv << format_csv_row(r) << '\n';
            if (!csv)
                throw std::runtime_error("cannot append to " + out.csv.string());
        }
        write_sidecar(config, hash, records, out.json);
        if (progress)
            *progress << "point " << k + 1 << '/' << config.snr_db.size() << ": " << format_csv_row(r) << std::endl;
    }
    return records;
}

namespace {

MeasuredOps finish(const OpCounter &ops, std::size_t skip, std::size_t iterations)
{
    MeasuredOps m;
    m.per_symbol = ops.per_symbol(skip);
    m.iterations = iterations;
    m.overhead = ops.overhead();
    return m;
}

} // namespace

MeasuredOps measure_prbp_ops(const ParityCheckMatrix &h, const PrTarget &target, std::size_t iterations)
{
    const auto g = FactorGraph::build(h, target);
    const Symbols x(h.n_vars(), 1);
    const auto y = transmit_noiseless(x, target, 1);
    const auto noise = NoiseSpec::from_snr_db(target, 3.0);
    const auto cp = compute_couplings(y, target, noise, 1, Convention::paper);
    OpCounter ops(h.n_vars());
    DecodeOptions opt;
    opt.max_iter = iterations;
    opt.early_stop = false;
    opt.ops = &ops;
    const auto res = decode(g, cp, opt);
    return finish(ops, target.isi_len(), res.iterations_used);
}

MeasuredOps measure_sum_product_ops(const ParityCheckMatrix &h, std::size_t iterations)
{
    const std::vector<double> llr(h.n_vars(), 2.0);
    OpCounter ops(h.n_vars());
    SumProductOptions opt;
    opt.max_iter = iterations;
    opt.early_stop = false;
    opt.ops = &ops;
    const auto res = sum_product_decode(h, llr, opt);
    return finish(ops, 0, res.iterations_used);
}

MeasuredOps measure_bcjr_ops(const PrTarget &target, std::size_t n_symbols)
{
    const Trellis trellis(target);
    const Symbols x(n_symbols, 1);
    const auto y = transmit_noiseless(x, target, 1);
    OpCounter ops(n_symbols);
    bcjr_counted(trellis, y, {}, NoiseSpec::from_snr_db(target, 3.0).snr_linear, 1, ops);
    return finish(ops, 0, 1);
}

MeasuredOps measure_turbo_ops(const ParityCheckMatrix &h, const PrTarget &target, const TurboSchedule &schedule)
{
    const Trellis trellis(target);
    const Symbols x(h.n_vars(), 1);
    const auto y = transmit_noiseless(x, target, 1);
    OpCounter ops(h.n_vars());
    TurboOptions opt;
    opt.schedule = schedule;
    opt.early_stop = false;
    opt.ops = &ops;
    const auto res = turbo_equalize(h, trellis, y, NoiseSpec::from_snr_db(target, 3.0).snr_linear, 1, opt);
    return finish(ops, 0, res.iterations_used);
}

} // namespace prldpc

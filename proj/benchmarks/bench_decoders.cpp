#include <benchmark/benchmark.h>

#include <cstdlib>
#include <filesystem>

#include "prldpc/baseline.hpp"
#include "prldpc/channel.hpp"
#include "prldpc/decoder.hpp"
#include "prldpc/ldpc.hpp"

using namespace prldpc;

namespace {

// One noisy Margulis block over a target at 3 dB channel SNR.
struct Setup {
    ParityCheckMatrix h;
    PrTarget target;
    NoiseSpec noise;
    std::vector<double> y;
    ChannelCouplings couplings;

    explicit Setup(const char *target_text)
        : h(load_alist(fixture_path())), target(PrTarget::parse(target_text)),
          noise(NoiseSpec::from_snr_db(target, 3.0))
    {
        const auto gen = derive_generator(h);
        CounterRng rng(7);
        Bits msg(gen.message_len());
        for (auto &b : msg)
            b = rng.bit();
        y = transmit(to_bipolar(gen.encode(msg)), target, noise, rng, 1);
        couplings = compute_couplings(y, target, noise, 1, Convention::paper);
    }

    static std::filesystem::path fixture_path()
    {
        const char *env = std::getenv("PRLDPC_FIXTURE_DIR");
        return std::filesystem::path(env ? env : PRLDPC_SOURCE_FIXTURES) / "margulis_2640_1320.alist";
    }
};

const Setup &dicode()
{
    static const Setup s("1-D");
    return s;
}

const Setup &memoryless()
{
    static const Setup s("1");
    return s;
}

void BM_PrbpIteration(benchmark::State &state)
{
    const auto &s = dicode();
    const auto g = FactorGraph::build(s.h, s.target);
    auto in = FieldState::initial(g);
    auto out = in;
    for (auto _ : state) {
        update_fields(g, s.couplings, in, out);
        std::swap(in, out);
        benchmark::DoNotOptimize(in.mu.data());
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(s.h.n_vars()));
}
BENCHMARK(BM_PrbpIteration);

void BM_PrbpDecode(benchmark::State &state)
{
    const auto &s = dicode();
    const auto g = FactorGraph::build(s.h, s.target);
    DecodeOptions opt;
    opt.early_stop = false;
    for (auto _ : state)
        benchmark::DoNotOptimize(decode(g, s.couplings, opt));
    state.SetItemsProcessed(state.iterations() * std::int64_t(s.h.n_vars()));
}
BENCHMARK(BM_PrbpDecode)->Unit(benchmark::kMillisecond);

void BM_SumProductIteration(benchmark::State &state)
{
    const auto &s = memoryless();
    SumProductDecoder dec(s.h);
    for (auto _ : state) {
        dec.iterate(s.couplings.u);
        benchmark::DoNotOptimize(dec.messages().data());
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(s.h.n_vars()));
}
BENCHMARK(BM_SumProductIteration);

void BM_Bcjr(benchmark::State &state)
{
    const auto &s = dicode();
    const Trellis tr(s.target);
    for (auto _ : state)
        benchmark::DoNotOptimize(bcjr(tr, s.y, {}, s.noise.snr_linear, 1));
    state.SetItemsProcessed(state.iterations() * std::int64_t(s.h.n_vars()));
}
BENCHMARK(BM_Bcjr);

void BM_TurboDecode(benchmark::State &state)
{
    const auto &s = dicode();
    const Trellis tr(s.target);
    TurboOptions opt;
    opt.early_stop = false;
    for (auto _ : state)
        benchmark::DoNotOptimize(turbo_equalize(s.h, tr, s.y, s.noise.snr_linear, 1, opt));
    state.SetItemsProcessed(state.iterations() * std::int64_t(s.h.n_vars()));
}
BENCHMARK(BM_TurboDecode)->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State &state)
{
    const auto gen = derive_generator(memoryless().h);
    CounterRng rng(1);
    Bits msg(gen.message_len());
    for (auto &b : msg)
        b = rng.bit();
    for (auto _ : state)
        benchmark::DoNotOptimize(gen.encode(msg));
}
BENCHMARK(BM_Encode);

} // namespace

BENCHMARK_MAIN();

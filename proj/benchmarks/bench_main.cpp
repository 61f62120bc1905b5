#include "ghzw/belltest.hpp"
#include "ghzw/protocols.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace ghzw;

void BM_beam_splitter(benchmark::State& state) {
    fock::ModeRegistry reg({"a", "b"});
    ShotRng rng(1, 0, 0);
    std::vector<fock::Term> terms;
    for (int i = 0; i <= 2; ++i)
        for (int j = 0; j <= 2; ++j)
            terms.emplace_back(fock::Occupation{std::uint8_t(i), std::uint8_t(j)},
                               fock::Complex(rng.uniform(), rng.uniform()));
    auto s = fock::normalize(fock::StateVector(reg, std::move(terms)));
    for (auto _ : state) {
        auto out = optics::beam_splitter(s, {reg.mode("a"), reg.mode("b")});
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_beam_splitter);

void BM_prepare_pair(benchmark::State& state) {
    for (auto _ : state) {
        auto herald = protocols::prepare_pair({0.01, 0.3}, {0.1, 0.0});
        benchmark::DoNotOptimize(herald);
    }
}
BENCHMARK(BM_prepare_pair);

void BM_exact_battery(benchmark::State& state) {
    auto prepared = protocols::ideal_ghz_component({});
    bell::BellConfig cfg;
    cfg.protocol = protocols::Protocol::ghz;
    for (auto _ : state) {
        auto battery = bell::ghz_battery(prepared, bell::EngineKind::exact, cfg);
        benchmark::DoNotOptimize(battery);
    }
}
BENCHMARK(BM_exact_battery);

void BM_sample_correlation(benchmark::State& state) {
    auto prepared = protocols::ideal_ghz_component({});
    bell::BellConfig cfg;
    cfg.protocol = protocols::Protocol::ghz;
    using S = bell::MeasurementSetting;
    for (auto _ : state) {
        auto est = bell::sample_correlation(prepared, {S::X, S::X, S::X}, cfg,
                                            state.range(0), 1);
        benchmark::DoNotOptimize(est);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_sample_correlation)->Arg(1000);

void BM_simulate_attempts(benchmark::State& state) {
    for (auto _ : state) {
        auto stats = protocols::simulate_attempts(protocols::Protocol::ghz,
                                                  {0.1, 0.0}, {}, 1000, 1);
        benchmark::DoNotOptimize(stats);
    }
}
BENCHMARK(BM_simulate_attempts);

} // namespace

BENCHMARK_MAIN();

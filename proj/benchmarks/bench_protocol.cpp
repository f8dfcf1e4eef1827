#include <benchmark/benchmark.h>

#include <semproto/inference.hpp>
#include <semproto/spm.hpp>
#include <semproto/train.hpp>

using namespace semproto;

namespace {

NPModel make_model() {
    Rng rng(42);
    return NPModel::make(NpmArchitecture{}, rng);
}

Spm make_spm(const NPModel& model) {
    EnvConfig env;
    Rng rng(43);
    const EpisodicMemory memory = collect_memory(model, env, 10, rng);
    return construct_spm(model, memory, SpmOptions{});
}

}  // namespace

static void BM_NpmFullCycleForward(benchmark::State& state) {
    const NPModel model = make_model();
    std::array<int, 2> buffers{3, 2};
    for (auto _ : state) {
        benchmark::DoNotOptimize(full_cycle_forward(model, buffers));
    }
}
BENCHMARK(BM_NpmFullCycleForward);

static void BM_SpmSelect(benchmark::State& state) {
    const NPModel model = make_model();
    const Spm spm = make_spm(model);
    const BufferPair b = *spm.domain().begin();
    for (auto _ : state) {
        benchmark::DoNotOptimize(select(spm, b));
    }
}
BENCHMARK(BM_SpmSelect);

static void BM_ExtractAndMerge(benchmark::State& state) {
    const NPModel model = make_model();
    const auto domain = full_grid_domain(5);
    for (auto _ : state) {
        ProtocolGraph graph = extract_graph(model, domain);
        graph = merge_activation_aware(graph);
        graph = merge_connection_aware(graph);
        benchmark::DoNotOptimize(graph);
    }
}
BENCHMARK(BM_ExtractAndMerge);

static void BM_Episode(benchmark::State& state) {
    const NPModel model = make_model();
    const Spm spm = make_spm(model);
    EnvConfig env;
    std::uint64_t episode = 0;
    for (auto _ : state) {
        SpmPolicy policy(spm);
        Rng rng = Rng::substream(7, episode++);
        benchmark::DoNotOptimize(run_episode(policy, env, rng));
    }
}
BENCHMARK(BM_Episode);

BENCHMARK_MAIN();

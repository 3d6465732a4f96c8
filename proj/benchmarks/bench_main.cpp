#include "chainforge/backend.hpp"
#include "chainforge/command.hpp"
#include "chainforge/dpo.hpp"
#include "chainforge/engine.hpp"
#include "chainforge/metrics.hpp"
#include "chainforge/pack.hpp"
#include "chainforge/random.hpp"

#include <benchmark/benchmark.h>

using namespace chainforge;

static void BM_ParseCall(benchmark::State& state) {
    const std::string line = R"(ActsIn(actor="Tom Hanks", movie_title="Cast Away"))";
    for (auto _ : state) benchmark::DoNotOptimize(parse_call(line));
}
BENCHMARK(BM_ParseCall);

static void BM_ParseSyntaxError(benchmark::State& state) {
    const std::string line = "Reasoning(reasoning=Check if Tom Hanks is an actor)";
    for (auto _ : state) benchmark::DoNotOptimize(parse_call(line));
}
BENCHMARK(BM_ParseSyntaxError);

static void BM_DpoLoss(benchmark::State& state) {
    Rng rng(7);
    std::vector<dpo::PairLogProbs> batch(static_cast<std::size_t>(state.range(0)));
    for (auto& p : batch) {
        p = {-10 * uniform01(rng), -10 * uniform01(rng), -10 * uniform01(rng), -10 * uniform01(rng)};
    }
    for (auto _ : state) benchmark::DoNotOptimize(dpo::dpo_loss(batch, 0.1));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DpoLoss)->Arg(64)->Arg(4096);

static void BM_DpoGradient(benchmark::State& state) {
    Rng rng(11);
    const auto policy = dpo::ToyPolicy::random(32, 8, rng);
    const auto ref = dpo::ToyPolicy::random(32, 8, rng);
    std::vector<dpo::PreferenceIndex> batch;
    for (std::size_t p = 0; p < 32; ++p) batch.push_back({p, uniform_below(rng, 4), 4 + uniform_below(rng, 4)});
    for (auto _ : state) benchmark::DoNotOptimize(dpo::dpo_gradient(batch, policy, ref, 0.1));
}
BENCHMARK(BM_DpoGradient);

static void BM_WilcoxonExact(benchmark::State& state) {
    Rng rng(3);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < state.range(0); ++i) pairs.emplace_back(uniform01(rng), uniform01(rng));
    for (auto _ : state) benchmark::DoNotOptimize(eval::wilcoxon_signed_rank(pairs, 0.05, eval::PValueMethod::Exact));
}
BENCHMARK(BM_WilcoxonExact)->Arg(12)->Arg(20);

static void BM_MockChain(benchmark::State& state) {
    const auto pack = load_problem_pack(std::string(CHAINFORGE_SOURCE_DIR) + "/data/problems.json");
    const FunctionRegistry registry(pack.facts);
    MockBackend backend(0.2, 0.05);
    const auto& problem = *pack.find(Task::Fol, 0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto session = backend.open(problem, seed++);
        benchmark::DoNotOptimize(run_chain(problem, registry, *session, 20));
    }
}
BENCHMARK(BM_MockChain);

BENCHMARK_MAIN();

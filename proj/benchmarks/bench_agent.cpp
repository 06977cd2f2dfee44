#include <benchmark/benchmark.h>

#include <random>

#include "fixtures.hpp"
#include "studentsim/agent_engine.hpp"
#include "studentsim/mock_provider.hpp"

namespace {

using namespace studentsim;

void BM_BuildPrompt(benchmark::State& state) {
  const auto templates = PromptTemplates::builtin();
  const auto previous = testing::make_slide(1, 5, 6);
  const auto slide = testing::make_slide(2, 5, 6, 2);
  std::mt19937_64 rng(1);
  const auto persona = testing::random_persona(rng);
  MemoryStore memory(render_persona_text(persona));
  std::vector<BehaviorRecord> behaviors;
  for (const auto& t : previous.transcripts) behaviors.push_back({1, t.index, 2, 3, testing::random_cognitive(rng), false});
  memory.remember(previous, behaviors);
  const SimulationConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(build_prompt(persona, slide, 10, memory, config, templates));
}
BENCHMARK(BM_BuildPrompt);

void BM_ParseStructured(benchmark::State& state) {
  const auto slide = testing::make_slide(1, 5, static_cast<int>(state.range(0)), 2);
  llm::ChatRequest req;
  req.system_text = "s";
  req.user_text = "u";
  req.context = llm::StepContext{0, 7, std::nullopt, slide, 0};
  const auto reply = llm::mock_reply(llm::MockPolicy::standard(), req);
  const auto schema = llm::schema_for(slide);
  for (auto _ : state) benchmark::DoNotOptimize(llm::parse_structured(reply, schema));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(reply.size()));
}
BENCHMARK(BM_ParseStructured)->Arg(3)->Arg(30);

void BM_MockExperiment2(benchmark::State& state) {
  const auto lecture = testing::make_lecture(10);
  const auto templates = PromptTemplates::builtin();
  SimulationConfig config;
  for (auto _ : state) {
    auto provider = llm::make_provider(llm::ProviderConfig{});
    benchmark::DoNotOptimize(run_experiment2(lecture, static_cast<std::size_t>(state.range(0)), config, *provider, templates, 1));
  }
}
BENCHMARK(BM_MockExperiment2)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

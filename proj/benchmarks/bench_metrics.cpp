#include <benchmark/benchmark.h>

#include <random>

#include "fixtures.hpp"
#include "studentsim/dataset.hpp"
#include "studentsim/metrics.hpp"

namespace {

using namespace studentsim;

std::vector<MaybeAoi> random_sequence(std::size_t n) {
  std::mt19937_64 rng(1);
  std::vector<MaybeAoi> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<int>(rng() % 9);
    out.push_back(v == 0 ? MaybeAoi{} : MaybeAoi{v});
  }
  return out;
}

void BM_SequenceEntropy(benchmark::State& state) {
  const auto seq = random_sequence(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::sequence_entropy(seq));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SequenceEntropy)->Range(8, 4096);

void BM_Pearson(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u;
  std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = u(rng);
    y[i] = u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::pearson(x, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Pearson)->Range(8, 4096);

void BM_ReplayScores(benchmark::State& state) {
  const auto lecture = testing::make_lecture(static_cast<int>(state.range(0)));
  std::mt19937_64 rng(3);
  const auto a = testing::random_record(lecture, rng, "a");
  const auto b = testing::random_record(lecture, rng, "a");
  for (auto _ : state) benchmark::DoNotOptimize(metrics::replay_scores(a, b, lecture));
}
BENCHMARK(BM_ReplayScores)->Arg(10)->Arg(40);

void BM_CorrelationMatrix(benchmark::State& state) {
  const auto lecture = testing::make_lecture(10);
  std::mt19937_64 rng(4);
  std::vector<StudentRecord> cohort;
  for (int i = 0; i < state.range(0); ++i) cohort.push_back(testing::random_record(lecture, rng, std::to_string(i)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::correlation_matrix(cohort, lecture));
}
BENCHMARK(BM_CorrelationMatrix)->Arg(100)->Arg(700);

void BM_DeriveCognitiveStates(benchmark::State& state) {
  const auto slide = testing::make_slide(1, 6, 1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  std::vector<RawSecondSample> samples;
  for (long t = 0; t < state.range(0); ++t) samples.push_back(RawSecondSample{t, Point{u(rng), u(rng)}, std::nullopt, true, false});
  for (auto _ : state) {
    benchmark::DoNotOptimize(derive_cognitive_states(samples, slide, {0, static_cast<long>(state.range(0))}, 1));
  }
}
BENCHMARK(BM_DeriveCognitiveStates)->Arg(10)->Arg(600);

}  // namespace

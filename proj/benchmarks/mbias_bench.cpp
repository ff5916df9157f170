#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "mbias/binary_restore.hpp"
#include "mbias/dist_core.hpp"
#include "mbias/dsep_test.hpp"
#include "mbias/linear_sem.hpp"
#include "mbias/matrix_restore.hpp"
#include "mbias/simulate.hpp"

using namespace mbias;

namespace {

// Binary X, Y and k binary proxy components; observed = pushforward of a
// strictly positive latent table, so restoration never clips.
struct Problem {
  ErrorMatrix factored;
  std::vector<ErrorMatrix> factors;
  JointTable observed;
};

Problem make_problem(std::size_t k) {
  Problem p;
  for (std::size_t i = 0; i < k; ++i) {
    p.factors.push_back(ErrorMatrix::from_binary({0.05 + 0.01 * i, 0.1 - 0.005 * i}));
  }
  p.factored = ErrorMatrix::factored(p.factors);
  const std::size_t card_v = std::size_t{1} << k;
  std::vector<double> counts(4 * card_v);
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = 1.0 + static_cast<double>(i % 7);
  const auto latent = JointTable::from_counts(2, 2, card_v, counts, VKind::Z);
  p.observed = push_forward(latent, p.factored);
  return p;
}

void BM_RestoreFactored(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(restore_joint(p.observed, p.factored));
}
BENCHMARK(BM_RestoreFactored)->DenseRange(2, 10, 2);

void BM_RestoreDense(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)));
  const auto dense = expand_factored(p.factors);
  for (auto _ : state) benchmark::DoNotOptimize(restore_joint(p.observed, dense));
}
BENCHMARK(BM_RestoreDense)->DenseRange(2, 10, 2);

void BM_EffectBinary(benchmark::State& state) {
  const auto p = make_problem(1);
  const auto obs = BinaryJoint::from_table(p.observed);
  const BinaryErrorParams err{0.05, 0.1};
  for (auto _ : state) benchmark::DoNotOptimize(causal_effect_binary(obs, err, 1, 1));
}
BENCHMARK(BM_EffectBinary);

void BM_TwoStageTest(benchmark::State& state) {
  LinearSemSpec spec;
  spec.c0 = 0.2;
  spec.c1 = 0.9;
  spec.c2 = 0.8;
  spec.var_ew = 0.5;
  const auto rows = simulate_linear(spec, static_cast<std::size_t>(state.range(0)), 7).rows;
  const double alpha = population_cov(spec).var_w - spec.var_ew;
  for (auto _ : state) benchmark::DoNotOptimize(two_stage_test(rows, alpha));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TwoStageTest)->RangeMultiplier(10)->Range(1000, 100000);

}  // namespace

BENCHMARK_MAIN();

#include <benchmark/benchmark.h>

#include <vector>

#include "synparse/attention.hpp"
#include "synparse/deptree.hpp"
#include "synparse/tensor.hpp"

using namespace synparse;

namespace {

constexpr std::size_t kDim = 64;

Tensor random_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> data(n * d);
  for (double& x : data) x = rng.uniform(-1.0, 1.0);
  return Tensor::from({n, d}, data);
}

// Chain tree: token i attaches to i-1, token 0 is the root.
Sentence chain_sentence(std::size_t n) {
  Sentence s;
  for (std::size_t i = 0; i < n; ++i) {
    s.tokens.push_back("t" + std::to_string(i));
    s.heads.push_back(i == 0 ? 0 : i - 1);
  }
  return s;
}

ConstituentPrior chain_prior(std::size_t n) {
  Rng rng(7);
  std::vector<double> links(n - 1);
  for (double& x : links) x = rng.uniform();
  return constituent_prior(LinkProbabilities{links});
}

void bench_standard(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor q = random_matrix(n, kDim, 1);
  Tensor k = random_matrix(n, kDim, 2);
  Tensor v = random_matrix(n, kDim, 3);
  Mask mask = Mask::all(n, n);
  for (auto _ : state) {
    Tensor out = standard_attention(q, k, v, mask);
    benchmark::DoNotOptimize(out.values().data());
  }
}

void bench_pascal(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor q = random_matrix(n, kDim, 1);
  Tensor k = random_matrix(n, kDim, 2);
  Tensor v = random_matrix(n, kDim, 3);
  Mask mask = Mask::all(n, n);
  DistanceMatrix d = distance_matrix(chain_sentence(n));
  for (auto _ : state) {
    Tensor out = pascal_attention(q, k, v, d, mask);
    benchmark::DoNotOptimize(out.values().data());
  }
}

void bench_ca(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor q = random_matrix(n, kDim, 1);
  Tensor k = random_matrix(n, kDim, 2);
  Tensor v = random_matrix(n, kDim, 3);
  Mask mask = Mask::all(n, n);
  ConstituentPrior c = chain_prior(n);
  for (auto _ : state) {
    Tensor out = ca_attention(q, k, v, c, mask);
    benchmark::DoNotOptimize(out.values().data());
  }
}

void bench_pascal_ca(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor q = random_matrix(n, kDim, 1);
  Tensor k = random_matrix(n, kDim, 2);
  Tensor v = random_matrix(n, kDim, 3);
  Mask mask = Mask::all(n, n);
  DistanceMatrix d = distance_matrix(chain_sentence(n));
  ConstituentPrior c = chain_prior(n);
  for (auto _ : state) {
    Tensor out = pascal_ca_attention(q, k, v, d, c, mask);
    benchmark::DoNotOptimize(out.values().data());
  }
}

void bench_link_update(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Tensor hidden = random_matrix(n, kDim, 4);
  LinkScorer scorer{random_matrix(kDim, 16, 5), random_matrix(kDim, 16, 6)};
  for (auto _ : state) {
    Tensor scores = adjacent_link_scores(hidden, scorer);
    Tensor probs = update_link_probs(scores);
    benchmark::DoNotOptimize(probs.values().data());
  }
}

}  // namespace

BENCHMARK(bench_standard)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_pascal)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_ca)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_pascal_ca)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_link_update)->RangeMultiplier(2)->Range(8, 64);

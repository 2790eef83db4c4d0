#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "synparse/model.hpp"
#include "synparse/vocab.hpp"

using namespace synparse;

namespace {

Sentence chain_sentence(std::size_t n) {
  Sentence s;
  for (std::size_t i = 0; i < n; ++i) {
    s.tokens.push_back("t" + std::to_string(i));
    s.heads.push_back(i == 0 ? 0 : i - 1);
  }
  return s;
}

Model variant_model(const VariantFlags& variants) {
  ModelConfig cfg;
  cfg.d_model = 64;
  cfg.n_heads = 4;
  cfg.d_ff = 128;
  cfg.n_enc_layers = 2;
  cfg.n_dec_layers = 1;
  cfg.dropout = 0.0;
  cfg.variants = variants;
  cfg.sawr_dim = variants.sawrs ? 16 : 0;
  cfg.max_len = 128;

  std::vector<std::vector<std::string>> token_rows = {chain_sentence(64).tokens};
  Vocab vocab = Vocab::build(token_rows);
  cfg.src_vocab_size = vocab.size();
  cfg.tgt_vocab_size = vocab.size();

  Model m = build_model(cfg, 11);
  m.src_vocab = vocab;
  m.tgt_vocab = vocab;
  return m;
}

std::vector<double> sawr_input(std::size_t n, std::size_t dim) {
  Rng rng(13);
  std::vector<double> v(n * dim);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

void encode_bench(benchmark::State& state, const VariantFlags& variants) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Model m = variant_model(variants);
  Sentence s = chain_sentence(n);
  std::vector<double> sawr;
  const std::vector<double>* sawr_ptr = nullptr;
  if (variants.sawrs) {
    sawr = sawr_input(n, m.cfg.sawr_dim);
    sawr_ptr = &sawr;
  }
  for (auto _ : state) {
    Tensor out = encode(m, s, sawr_ptr);
    benchmark::DoNotOptimize(out.values().data());
  }
}

void bench_encode_baseline(benchmark::State& state) { encode_bench(state, {}); }
void bench_encode_pascal(benchmark::State& state) {
  encode_bench(state, {true, false, false});
}
void bench_encode_sawrs(benchmark::State& state) {
  encode_bench(state, {false, true, false});
}
void bench_encode_ca(benchmark::State& state) {
  encode_bench(state, {false, false, true});
}
void bench_encode_all(benchmark::State& state) {
  encode_bench(state, {true, true, true});
}

void bench_greedy_decode(benchmark::State& state) {
  Model m = variant_model({});
  m.cfg.max_len = 32;  // bounds the decode loop on an untrained model
  Sentence s = chain_sentence(9);
  for (auto _ : state) {
    Prediction p = predict_greedy(m, s, nullptr);
    benchmark::DoNotOptimize(p.score);
  }
}

}  // namespace

BENCHMARK(bench_encode_baseline)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_encode_pascal)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_encode_sawrs)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_encode_ca)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_encode_all)->RangeMultiplier(2)->Range(8, 64);
BENCHMARK(bench_greedy_decode);

BENCHMARK_MAIN();

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "synparse/error.hpp"
#include "synparse/model.hpp"
#include "synparse/ops.hpp"
#include "synparse/optim.hpp"
#include "synparse/vocab.hpp"

using namespace synparse;

namespace {

ModelConfig tiny_config(VariantFlags v = {}) {
  ModelConfig cfg;
  cfg.d_model = 16;
  cfg.n_heads = 2;
  cfg.d_ff = 32;
  cfg.n_enc_layers = 2;
  cfg.n_dec_layers = 2;
  cfg.dropout = 0.0;
  cfg.variants = v;
  cfg.sawr_dim = 6;
  cfg.d_link = 8;
  cfg.max_len = 12;
  cfg.src_vocab_size = 10;
  cfg.tgt_vocab_size = 10;
  return cfg;
}

Model tiny_model(VariantFlags v = {}, std::uint64_t seed = 11) {
  Vocab src = Vocab::build({{"the", "cat", "sat", "on", "mat", "dog"}});
  Vocab tgt = Vocab::build({{"(", ")", "and", "f", "g", "x"}});
  ModelConfig cfg = tiny_config(v);
  cfg.src_vocab_size = src.size();
  cfg.tgt_vocab_size = tgt.size();
  Model m = build_model(cfg, seed);
  m.src_vocab = src;
  m.tgt_vocab = tgt;
  return m;
}

Sentence chain_sentence(std::vector<std::string> tokens) {
  Sentence s;
  s.tokens = std::move(tokens);
  s.heads.resize(s.tokens.size());
  for (std::size_t i = 0; i < s.heads.size(); ++i) s.heads[i] = i == 0 ? 0 : i - 1;
  return s;
}

bool same_values(const Tensor& a, const Tensor& b) {
  return a.numel() == b.numel() &&
         std::memcmp(a.values().data(), b.values().data(),
                     a.numel() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  }
  return m;
}

// Closed-form parameter total for a baseline configuration.
std::size_t expected_baseline_params(const ModelConfig& c) {
  const std::size_t d = c.d_model, ff = c.d_ff;
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t norm = 2 * d;
  const std::size_t ffn = d * ff + ff + ff * d + d;
  std::size_t total = c.src_vocab_size * d + c.tgt_vocab_size * d;
  total += c.n_enc_layers * (attn + ffn + 2 * norm);
  total += c.n_dec_layers * (2 * attn + ffn + 3 * norm);
  total += d * c.tgt_vocab_size + c.tgt_vocab_size;
  return total;
}

}  // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("variant tags are stable") {
  CHECK(VariantFlags{}.tag() == "baseline");
  CHECK(VariantFlags{true, false, false}.tag() == "pascal");
  CHECK(VariantFlags{false, true, false}.tag() == "sawrs");
  CHECK(VariantFlags{true, false, true}.tag() == "pascal+ca");
  CHECK(VariantFlags{true, true, true}.tag() == "pascal+sawrs+ca");
}

TEST_CASE("config validation names the offending field") {
  ModelConfig cfg = tiny_config();
  cfg.d_model = 513;
  cfg.n_heads = 8;
  CHECK_THROWS_WITH_AS(cfg.validate(),
                       "d_model 513 is not divisible by n_heads 8", ConfigError);

  cfg = tiny_config();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = tiny_config({true, false, false});
  cfg.pascal_layers = {5};
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = tiny_config({false, true, false});
  cfg.sawr_dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = tiny_config();
  cfg.src_vocab_size = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("defaults mirror the reference setup") {
  ModelConfig cfg;
  CHECK(cfg.d_model == 512);
  CHECK(cfg.n_heads == 8);
  CHECK(cfg.d_ff == 2048);
  CHECK(cfg.dropout == 0.1);
  CHECK(cfg.n_enc_layers == 2);
  CHECK(cfg.n_dec_layers == 3);
}

TEST_CASE("identical config and seed build identical parameters") {
  Model a = tiny_model({}, 7);
  Model b = tiny_model({}, 7);
  Model c = tiny_model({}, 8);
  CHECK(a.checksum() == b.checksum());
  CHECK(a.checksum() != c.checksum());
}

TEST_CASE("parameter count matches the closed form") {
  Model m = tiny_model();
  CHECK(m.param_count() == expected_baseline_params(m.cfg));
}

TEST_CASE("variant parameter accounting") {
  const std::size_t base = tiny_model().param_count();
  Model pascal = tiny_model({true, false, false});
  Model ca = tiny_model({false, false, true});
  Model sawrs = tiny_model({false, true, false});

  CHECK(pascal.param_count() == base);
  const auto& c = ca.cfg;
  CHECK(ca.param_count() == base + c.n_enc_layers * 2 * c.d_model * c.d_link);
  const auto& s = sawrs.cfg;
  CHECK(sawrs.param_count() == base + (s.sawr_dim + s.d_model) * s.d_model + s.d_model);
}

TEST_CASE("unknown parameter name throws") {
  Model m = tiny_model();
  CHECK_THROWS_AS(m.param("enc9.attn.wq"), ConfigError);
  CHECK(m.has_param("enc0.attn.wq"));
}

TEST_CASE("positional encoding closed form") {
  Tensor pe = positional_encoding(4, 6);
  CHECK(pe.shape() == Shape{4, 6});
  for (std::size_t i = 0; i < 6; i += 2) {
    CHECK(pe.at(0, i) == 0.0);
    CHECK(pe.at(0, i + 1) == 1.0);
  }
  CHECK(pe.at(1, 0) == std::sin(1.0));
  CHECK(pe.at(1, 1) == std::cos(1.0));
  CHECK(pe.at(3, 0) == std::sin(3.0));
  const double rate = std::pow(10000.0, 2.0 / 6.0);
  CHECK(pe.at(2, 2) == std::sin(2.0 / rate));
  for (std::size_t i = 0; i < pe.numel(); ++i) {
    CHECK(std::abs(pe.values()[i]) <= 1.0);
  }
}

TEST_CASE("encode output shape and length bounds") {
  Model m = tiny_model();
  for (std::size_t n = 1; n <= 5; ++n) {
    std::vector<std::string> toks(n, "cat");
    Tensor out = encode(m, chain_sentence(toks), nullptr);
    CHECK(out.shape() == Shape{n, m.cfg.d_model});
  }
  CHECK_THROWS_AS(encode(m, Sentence{}, nullptr), InputError);
  std::vector<std::string> toolong(m.cfg.max_len + 1, "cat");
  CHECK_THROWS_AS(encode(m, chain_sentence(toolong), nullptr), InputError);
}

TEST_CASE("baseline forward ignores trees and sawr vectors") {
  Model m = tiny_model();
  Sentence a = chain_sentence({"the", "cat", "sat"});
  Sentence b = a;
  b.heads = {1, 1, 1};  // different tree, same tokens
  std::vector<double> junk(3 * m.cfg.sawr_dim, 123.0);

  ForwardTrace trace;
  EncodeOptions opts;
  opts.trace = &trace;
  Tensor out_a = encode(m, a, nullptr, opts);
  Tensor out_b = encode(m, b, &junk);
  CHECK(same_values(out_a, out_b));
  CHECK_FALSE(trace.used_tree);
  CHECK_FALSE(trace.used_sawr);
  CHECK(trace.links.empty());
}

TEST_CASE("sawrs path reads the provided vectors") {
  Model m = tiny_model({false, true, false});
  Sentence s = chain_sentence({"the", "cat"});
  std::vector<double> v(2 * m.cfg.sawr_dim, 0.1);

  CHECK_THROWS_AS(encode(m, s, nullptr), InputError);
  std::vector<double> bad(3, 0.0);
  CHECK_THROWS_AS(encode(m, s, &bad), DataError);

  ForwardTrace trace;
  EncodeOptions opts;
  opts.trace = &trace;
  Tensor out = encode(m, s, &v, opts);
  CHECK(trace.used_sawr);

  std::vector<double> v2 = v;
  v2[0] += 0.5;
  Tensor out2 = encode(m, s, &v2);
  CHECK(max_abs_diff(out, out2) > 0.0);
}

TEST_CASE("pascal requires heads and reacts to the root choice") {
  Model m = tiny_model({true, false, false});
  Sentence no_heads;
  no_heads.tokens = {"cat", "cat", "cat"};
  CHECK_THROWS_AS(encode(m, no_heads, nullptr), InputError);

  // Identical embeddings, different root: only the distance matrix changes,
  // and the first-layer attention weights must move with it.
  Sentence root0;
  root0.tokens = {"cat", "cat", "cat"};
  root0.heads = {0, 0, 0};
  Sentence root1 = root0;
  root1.heads = {1, 1, 1};

  ForwardTrace t0, t1;
  EncodeOptions o0, o1;
  o0.trace = &t0;
  o1.trace = &t1;
  encode(m, root0, nullptr, o0);
  encode(m, root1, nullptr, o1);
  CHECK(t0.used_tree);
  CHECK(t0.has_distance);
  REQUIRE(t0.enc_weights.size() == m.cfg.n_enc_layers);
  REQUIRE(t0.enc_weights[0].size() == m.cfg.n_heads);
  CHECK(max_abs_diff(t0.enc_weights[0][0], t1.enc_weights[0][0]) > 1e-9);

  Model base = tiny_model();
  ForwardTrace b0, b1;
  EncodeOptions ob0, ob1;
  ob0.trace = &b0;
  ob1.trace = &b1;
  encode(base, root0, nullptr, ob0);
  encode(base, root1, nullptr, ob1);
  CHECK(same_values(b0.enc_weights[0][0], b1.enc_weights[0][0]));
}

TEST_CASE("pascal restricted to configured layers and heads") {
  VariantFlags v{true, false, false};
  Model m = tiny_model(v);
  m.cfg.pascal_layers = {0};
  m.cfg.pascal_heads = 1;

  Sentence s;
  s.tokens = {"cat", "cat", "cat"};
  s.heads = {0, 0, 0};
  Sentence s2 = s;
  s2.heads = {1, 1, 1};

  ForwardTrace ta, tb;
  EncodeOptions oa, ob;
  oa.trace = &ta;
  ob.trace = &tb;
  encode(m, s, nullptr, oa);
  encode(m, s2, nullptr, ob);
  // Head 0 of layer 0 is scaled, head 1 of layer 0 is not.
  CHECK(max_abs_diff(ta.enc_weights[0][0], tb.enc_weights[0][0]) > 1e-9);
  CHECK(same_values(ta.enc_weights[0][1], tb.enc_weights[0][1]));
}

TEST_CASE("ca trace carries links and priors per layer") {
  Model m = tiny_model({false, false, true});
  Sentence s = chain_sentence({"the", "cat", "sat", "on"});
  ForwardTrace trace;
  EncodeOptions opts;
  opts.trace = &trace;
  encode(m, s, nullptr, opts);

  REQUIRE(trace.links.size() == m.cfg.n_enc_layers);
  REQUIRE(trace.priors.size() == m.cfg.n_enc_layers);
  for (std::size_t l = 0; l < trace.links.size(); ++l) {
    CHECK(trace.links[l].a.size() == s.size() - 1);
    CHECK(trace.priors[l].n == s.size());
    CHECK(trace.priors[l].layer == l);
  }
  // Hierarchical update only grows link strength across layers.
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    CHECK(trace.links[1].a[k] >= trace.links[0].a[k]);
  }
  // Damped rows sum to at most one; undamped rows to exactly one.
  for (std::size_t h = 0; h < m.cfg.n_heads; ++h) {
    const auto& w = trace.enc_weights[0][h].values();
    for (std::size_t i = 0; i < s.size(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < s.size(); ++j) sum += w[i * s.size() + j];
      CHECK(sum <= 1.0 + 1e-9);
    }
  }
  Model base = tiny_model();
  ForwardTrace bt;
  EncodeOptions bo;
  bo.trace = &bt;
  encode(base, s, nullptr, bo);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double sum = 0.0;
    const auto& w = bt.enc_weights[0][0].values();
    for (std::size_t j = 0; j < s.size(); ++j) sum += w[i * s.size() + j];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("training dropout needs a random stream and perturbs the output") {
  Model m = tiny_model();
  m.cfg.dropout = 0.3;
  Sentence s = chain_sentence({"the", "cat"});

  EncodeOptions train_opts;
  train_opts.training = true;
  CHECK_THROWS_AS(encode(m, s, nullptr, train_opts), ConfigError);

  Rng r1(5), r2(5), r3(6);
  train_opts.rng = &r1;
  Tensor a = encode(m, s, nullptr, train_opts);
  train_opts.rng = &r2;
  Tensor b = encode(m, s, nullptr, train_opts);
  train_opts.rng = &r3;
  Tensor c = encode(m, s, nullptr, train_opts);
  CHECK(same_values(a, b));
  CHECK(max_abs_diff(a, c) > 0.0);

  Tensor eval_out = encode(m, s, nullptr);
  CHECK(max_abs_diff(a, eval_out) > 0.0);
}

TEST_CASE("uniform logits give log-vocab loss") {
  Model m = tiny_model();
  std::fill(m.param("out.w").mutable_values().begin(),
            m.param("out.w").mutable_values().end(), 0.0);
  std::fill(m.param("out.b").mutable_values().begin(),
            m.param("out.b").mutable_values().end(), 0.0);
  Sentence s = chain_sentence({"the", "cat"});
  Tensor enc = encode(m, s, nullptr);
  Tensor loss = decode_train_loss(m, enc, {"(", "f", "x", ")", "<eos>"});
  CHECK(loss.item() ==
        doctest::Approx(std::log(static_cast<double>(m.cfg.tgt_vocab_size)))
            .epsilon(1e-9));
}

TEST_CASE("decode input validation") {
  Model m = tiny_model();
  Sentence s = chain_sentence({"the"});
  Tensor enc = encode(m, s, nullptr);
  CHECK_THROWS_AS(decode_train_loss(m, enc, {}), InputError);
  CHECK_THROWS_AS(decode_train_loss(m, enc, {"(", "f"}), InputError);
  CHECK_THROWS_AS(decode_train_loss(m, enc, {"unknown_token", "<eos>"}), VocabError);
  CHECK_THROWS_AS(decode_logits(m, enc, {}), InputError);
  CHECK_THROWS_AS(decode_logits(m, enc, {99}), DataError);
}

TEST_CASE("decoder is causal") {
  Model m = tiny_model();
  Sentence s = chain_sentence({"the", "cat", "sat"});
  Tensor enc = encode(m, s, nullptr);
  int f = m.tgt_vocab.id("f");
  int g = m.tgt_vocab.id("g");
  int x = m.tgt_vocab.id("x");
  Tensor l1 = decode_logits(m, enc, {Vocab::kSos, f, g, x});
  Tensor l2 = decode_logits(m, enc, {Vocab::kSos, f, x, g});
  const std::size_t v = m.cfg.tgt_vocab_size;
  CHECK(std::memcmp(l1.values().data(), l2.values().data(),
                    2 * v * sizeof(double)) == 0);
  double diff = 0.0;
  for (std::size_t j = 0; j < v; ++j) {
    diff = std::max(diff, std::abs(l1.values()[2 * v + j] - l2.values()[2 * v + j]));
  }
  CHECK(diff > 0.0);
}

TEST_CASE("loss decreases over fifty optimizer steps") {
  Model m = tiny_model();
  Sentence s = chain_sentence({"the", "cat", "sat"});
  std::vector<std::string> target = {"(", "f", "x", ")", "<eos>"};
  AdamWConfig ocfg;
  ocfg.lr = 1e-3;
  AdamW opt(m.param_tensors(), ocfg);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 50; ++step) {
    opt.zero_grad();
    Tensor loss = decode_train_loss(m, encode(m, s, nullptr), target);
    if (step == 0) first = loss.item();
    last = loss.item();
    loss.backward();
    opt.step();
  }
  CHECK(last < first);
}

TEST_CASE("gradients of the loss match finite differences") {
  Model m = tiny_model();
  Sentence s = chain_sentence({"the", "cat"});
  std::vector<std::string> target = {"(", "f", ")", "<eos>"};

  auto loss_value = [&]() {
    return decode_train_loss(m, encode(m, s, nullptr), target).item();
  };
  for (Tensor t : m.param_tensors()) t.zero_grad();
  Tensor loss = decode_train_loss(m, encode(m, s, nullptr), target);
  loss.backward();

  struct Probe {
    const char* name;
    std::size_t coord;
  };
  const std::size_t used_row = static_cast<std::size_t>(m.src_vocab.id("cat"));
  std::vector<Probe> probes = {
      {"src_embed", used_row * m.cfg.d_model + 3},
      {"enc0.attn.wq", 5},
      {"enc1.ff1_w", 17},
      {"dec0.cross.wv", 9},
      {"dec1.ln3.gain", 2},
      {"out.b", 4},
  };
  const double eps = 1e-5;
  for (const auto& probe : probes) {
    CAPTURE(probe.name);
    Tensor p = m.param(probe.name);
    const double analytic = p.grad()[probe.coord];
    auto& vals = p.mutable_values();
    const double orig = vals[probe.coord];
    vals[probe.coord] = orig + eps;
    const double up = loss_value();
    vals[probe.coord] = orig - eps;
    const double down = loss_value();
    vals[probe.coord] = orig;
    const double fd = (up - down) / (2.0 * eps);
    const double rel =
        std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-8});
    CHECK(rel < 1e-3);
  }
}

TEST_CASE("greedy prediction is deterministic and bounded") {
  Model m = tiny_model();
  Sentence s = chain_sentence({"the", "cat"});
  Prediction a = predict_greedy(m, s, nullptr);
  Prediction b = predict_greedy(m, s, nullptr);
  CHECK(a.output_tokens == b.output_tokens);
  CHECK(a.score == b.score);
  CHECK(a.output_tokens.size() <= m.cfg.max_len);
  CHECK(a.score <= 0.0);
}

TEST_CASE("overfitted model reproduces its training target") {
  VariantFlags v{};
  Model m = tiny_model(v, 3);
  Sentence s = chain_sentence({"the", "cat", "sat"});
  std::vector<std::string> target = {"(", "and", "(", "f", "x", ")", "(", "g",
                                     "x", ")", ")", "<eos>"};
  AdamWConfig ocfg;
  ocfg.lr = 5e-3;
  AdamW opt(m.param_tensors(), ocfg);
  double loss_val = 1e9;
  for (int step = 0; step < 400 && loss_val > 0.01; ++step) {
    opt.zero_grad();
    Tensor loss = decode_train_loss(m, encode(m, s, nullptr), target);
    loss_val = loss.item();
    loss.backward();
    opt.step();
  }
  REQUIRE(loss_val <= 0.01);
  Prediction p = predict_greedy(m, s, nullptr);
  CHECK(p.output_tokens == target);
  std::vector<std::string> surface(target.begin(), target.end() - 1);
  CHECK(p.surface_tokens() == surface);
  CHECK(p.score > -1.0);
}

TEST_SUITE_END();

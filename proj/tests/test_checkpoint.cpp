#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "synparse/checkpoint.hpp"
#include "synparse/error.hpp"
#include "synparse/model.hpp"
#include "synparse/sawr.hpp"
#include "synparse/vocab.hpp"

using namespace synparse;
namespace fs = std::filesystem;

namespace {

Model small_model(VariantFlags v = {}) {
  Vocab src = Vocab::build({{"a", "b", "c"}});
  Vocab tgt = Vocab::build({{"(", ")", "f", "x"}});
  ModelConfig cfg;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.n_enc_layers = 1;
  cfg.n_dec_layers = 1;
  cfg.dropout = 0.0;
  cfg.variants = v;
  cfg.sawr_dim = 8;
  cfg.d_link = 4;
  cfg.max_len = 8;
  cfg.src_vocab_size = src.size();
  cfg.tgt_vocab_size = tgt.size();
  Model m = build_model(cfg, 42);
  m.src_vocab = src;
  m.tgt_vocab = tgt;
  return m;
}

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "synparse_ckpt_tests";
  fs::create_directories(dir);
  return dir / name;
}

Sentence simple_sentence() {
  Sentence s;
  s.tokens = {"a", "b"};
  s.heads = {0, 0};
  return s;
}

}  // namespace

TEST_SUITE_BEGIN("checkpoint");

TEST_CASE("round trip preserves parameters, config, and vocabularies") {
  Model m = small_model();
  fs::path path = temp_file("baseline.ckpt");
  save_checkpoint(path.string(), m);
  LoadedCheckpoint loaded = load_checkpoint(path.string());

  CHECK(loaded.model.checksum() == m.checksum());
  CHECK(loaded.model.cfg.d_model == m.cfg.d_model);
  CHECK(loaded.model.cfg.variants.tag() == "baseline");
  CHECK(loaded.model.src_vocab.tokens() == m.src_vocab.tokens());
  CHECK(loaded.model.tgt_vocab.tokens() == m.tgt_vocab.tokens());
  CHECK(loaded.provider == nullptr);

  Prediction before = predict_greedy(m, simple_sentence(), nullptr);
  Prediction after = predict_greedy(loaded.model, simple_sentence(), nullptr);
  CHECK(before.output_tokens == after.output_tokens);
  CHECK(before.score == after.score);
}

TEST_CASE("loaded parameters stay trainable leaves") {
  Model m = small_model({true, false, true});
  fs::path path = temp_file("variants.ckpt");
  save_checkpoint(path.string(), m);
  LoadedCheckpoint loaded = load_checkpoint(path.string());
  CHECK(loaded.model.cfg.variants.tag() == "pascal+ca");
  for (const auto& [name, t] : loaded.model.params()) {
    CAPTURE(name);
    CHECK(t.is_leaf());
    CHECK(t.requires_grad());
  }
}

TEST_CASE("embedded provider survives the round trip") {
  Sentence s1;
  s1.tokens = {"v", "n1", "n2"};
  s1.heads = {0, 0, 0};
  Sentence s2;
  s2.tokens = {"n1", "v"};
  s2.heads = {1, 1};
  TrainedSawrProvider p = train_sawr_provider({s1, s2, s1, s2}, 8, 7);

  Model m = small_model({false, true, false});
  fs::path path = temp_file("with_provider.ckpt");
  save_checkpoint(path.string(), m, &p);
  LoadedCheckpoint loaded = load_checkpoint(path.string());

  REQUIRE(loaded.provider != nullptr);
  CHECK(loaded.provider->dim() == p.dim());
  std::vector<double> a = p.vectors(0, s1);
  std::vector<double> b = loaded.provider->vectors(0, s1);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

TEST_CASE("missing file raises an io error") {
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/m.ckpt"), IoError);
}

TEST_CASE("bad magic raises a format error") {
  fs::path path = temp_file("bad_magic.ckpt");
  std::ofstream(path, std::ios::binary) << "NOTMAGICxxxxxxxxxxxxxxxx";
  CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
}

TEST_CASE("truncated payload raises a format error") {
  Model m = small_model();
  fs::path full = temp_file("full.ckpt");
  save_checkpoint(full.string(), m);
  fs::path cut = temp_file("cut.ckpt");
  fs::copy_file(full, cut, fs::copy_options::overwrite_existing);
  fs::resize_file(cut, fs::file_size(cut) - 16);
  CHECK_THROWS_AS(load_checkpoint(cut.string()), FormatError);
}

TEST_SUITE_END();

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "synparse/error.hpp"
#include "synparse/sawr.hpp"
#include "synparse/tensor.hpp"

using namespace synparse;
namespace fs = std::filesystem;

namespace {

// One verb-like anchor token per sentence; every other token attaches to it.
// Head prediction reduces to spotting the anchor, which a recurrent encoder
// learns quickly.
std::vector<Sentence> star_corpus(std::size_t count, std::uint64_t seed) {
  const std::vector<std::string> fillers = {"n1", "n2", "n3"};
  Rng rng(seed);
  std::vector<Sentence> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t n = 3 + rng.index(5);
    const std::size_t vpos = rng.index(n);
    Sentence s;
    for (std::size_t i = 0; i < n; ++i) {
      s.tokens.push_back(i == vpos ? "v" : fillers[rng.index(fillers.size())]);
      s.heads.push_back(vpos);
    }
    out.push_back(std::move(s));
  }
  return out;
}

fs::path temp_file(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "synparse_sawr_tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE_BEGIN("sawr");

TEST_CASE("training input validation") {
  CHECK_THROWS_AS(train_sawr_provider({}, 8, 1), InputError);
  std::vector<Sentence> data = star_corpus(4, 1);
  CHECK_THROWS_AS(train_sawr_provider(data, 7, 1), ConfigError);
  CHECK_THROWS_AS(train_sawr_provider(data, 0, 1), ConfigError);
  data[2].heads.clear();
  CHECK_THROWS_AS(train_sawr_provider(data, 8, 1), DataError);
}

TEST_CASE("trained provider reaches held-out attachment accuracy") {
  std::vector<Sentence> data = star_corpus(68, 20260822);
  SawrTrainReport report;
  TrainedSawrProvider p = train_sawr_provider(data, 16, 5, &report);

  CHECK(p.dim() == 16);
  CHECK(report.train_sentences + report.held_out_sentences == data.size());
  CHECK(report.held_out_sentences >= 1);
  CHECK(report.epochs_run >= 1);
  CHECK(report.held_out_uas >= 0.95);

  for (const auto& s : {data[0], data[1]}) {
    std::vector<double> v = p.vectors(0, s);
    CHECK(v.size() == s.size() * p.dim());
  }
}

TEST_CASE("same seed trains identical providers") {
  std::vector<Sentence> data = star_corpus(24, 9);
  TrainedSawrProvider a = train_sawr_provider(data, 8, 77);
  TrainedSawrProvider b = train_sawr_provider(data, 8, 77);
  std::vector<double> va = a.vectors(0, data[3]);
  std::vector<double> vb = b.vectors(0, data[3]);
  REQUIRE(va.size() == vb.size());
  CHECK(std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) == 0);
}

TEST_CASE("provider handles unseen tokens through unk") {
  std::vector<Sentence> data = star_corpus(12, 4);
  TrainedSawrProvider p = train_sawr_provider(data, 8, 3);
  Sentence s;
  s.tokens = {"v", "zzz_token"};
  s.heads = {0, 0};
  std::vector<double> v = p.vectors(0, s);
  CHECK(v.size() == 2 * p.dim());
}

TEST_CASE("restore rebuilds an identical provider") {
  std::vector<Sentence> data = star_corpus(12, 4);
  TrainedSawrProvider p = train_sawr_provider(data, 8, 3);
  TrainedSawrProvider q = TrainedSawrProvider::restore(
      p.vocab(), p.embed_dim(), p.hidden(),
      {p.params().begin(), p.params().end()});
  std::vector<double> vp = p.vectors(0, data[0]);
  std::vector<double> vq = q.vectors(0, data[0]);
  CHECK(std::memcmp(vp.data(), vq.data(), vp.size() * sizeof(double)) == 0);

  CHECK_THROWS_AS(TrainedSawrProvider::restore(p.vocab(), p.embed_dim(), p.hidden(), {}),
                  FormatError);
  auto bad = std::vector<std::pair<std::string, Tensor>>{p.params().begin(),
                                                         p.params().end()};
  bad[0].second = Tensor::zeros({2, 2});
  CHECK_THROWS_AS(
      TrainedSawrProvider::restore(p.vocab(), p.embed_dim(), p.hidden(), bad),
      FormatError);
}

TEST_CASE("file provider serves stored vectors by index") {
  FileSawrProvider p(2, {{1.0, 2.0, 3.0, 4.0}, {5.0, 6.0}});
  Sentence two;
  two.tokens = {"a", "b"};
  Sentence one;
  one.tokens = {"a"};

  CHECK(p.vectors(0, two) == std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(p.vectors(1, one) == std::vector<double>{5.0, 6.0});
  CHECK_THROWS_WITH_AS(p.vectors(2, one),
                       "sentence index 2 not present (file holds 2 sentences)",
                       DataError);
  CHECK_THROWS_AS(p.vectors(0, one), DataError);  // row count mismatch
  CHECK_THROWS_AS(FileSawrProvider(3, {{1.0, 2.0}}), DataError);
}

TEST_CASE("sawr file round trip") {
  fs::path path = temp_file("roundtrip.json");
  std::vector<std::vector<double>> sentences = {{0.25, -1.5, 3.0, 0.125},
                                                {1.0 / 3.0, 2.0 / 7.0}};
  save_sawr_file(path.string(), 2, sentences);
  FileSawrProvider p = load_sawr_file(path.string());
  CHECK(p.dim() == 2);
  CHECK(p.sentence_count() == 2);
  Sentence two;
  two.tokens = {"a", "b"};
  CHECK(p.vectors(0, two) == sentences[0]);
  Sentence one;
  one.tokens = {"a"};
  CHECK(p.vectors(1, one) == sentences[1]);
}

TEST_CASE("sawr file error handling") {
  CHECK_THROWS_AS(load_sawr_file("/nonexistent/sawr.json"), IoError);
  fs::path bad = temp_file("bad.json");
  std::ofstream(bad) << "not json at all {";
  CHECK_THROWS_AS(load_sawr_file(bad.string()), FormatError);
  fs::path missing = temp_file("missing_keys.json");
  std::ofstream(missing) << "{\"dim\": 4}";
  CHECK_THROWS_AS(load_sawr_file(missing.string()), FormatError);
}

TEST_CASE("exported trained vectors reload identically") {
  std::vector<Sentence> data = star_corpus(10, 6);
  TrainedSawrProvider p = train_sawr_provider(data, 8, 13);
  fs::path path = temp_file("exported.json");
  export_sawr_vectors(p, data, path.string());
  FileSawrProvider f = load_sawr_file(path.string());
  REQUIRE(f.sentence_count() == data.size());
  CHECK(f.dim() == p.dim());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> a = p.vectors(i, data[i]);
    std::vector<double> b = f.vectors(i, data[i]);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
}

TEST_SUITE_END();

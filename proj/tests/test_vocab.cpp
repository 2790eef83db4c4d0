#include <vector>

#include "doctest.h"
#include "synparse/error.hpp"
#include "synparse/vocab.hpp"

using namespace synparse;

TEST_SUITE_BEGIN("vocab");

TEST_CASE("reserved symbols occupy the first four ids") {
  Vocab v;
  CHECK(v.size() == 4);
  CHECK(v.token(Vocab::kPad) == "<pad>");
  CHECK(v.token(Vocab::kUnk) == "<unk>");
  CHECK(v.token(Vocab::kSos) == "<sos>");
  CHECK(v.token(Vocab::kEos) == "<eos>");
  CHECK(v.id("<eos>") == 3);
}

TEST_CASE("build assigns ids in first-occurrence order") {
  Vocab v = Vocab::build({{"b", "a", "b"}, {"a", "c"}});
  CHECK(v.size() == 7);
  CHECK(v.id("b") == 4);
  CHECK(v.id("a") == 5);
  CHECK(v.id("c") == 6);
}

TEST_CASE("build is deterministic") {
  std::vector<std::vector<std::string>> seqs = {{"x", "y"}, {"z", "x"}};
  Vocab a = Vocab::build(seqs);
  Vocab b = Vocab::build(seqs);
  CHECK(a.tokens() == b.tokens());
}

TEST_CASE("lenient lookup maps unseen tokens to unk") {
  Vocab v = Vocab::build({{"a"}});
  CHECK(v.id("nope") == Vocab::kUnk);
  CHECK(v.contains("a"));
  CHECK_FALSE(v.contains("nope"));
}

TEST_CASE("strict lookup throws on unseen tokens") {
  Vocab v = Vocab::build({{"a"}});
  CHECK(v.id_strict("a") == 4);
  CHECK_THROWS_AS(v.id_strict("nope"), VocabError);
}

TEST_CASE("token lookup bounds") {
  Vocab v;
  CHECK_THROWS_AS(v.token(4), DataError);
  CHECK_THROWS_AS(v.token(-1), DataError);
}

TEST_CASE("from_tokens round trip") {
  Vocab v = Vocab::build({{"cat", "dog"}});
  Vocab w = Vocab::from_tokens(v.tokens());
  CHECK(w.tokens() == v.tokens());
  CHECK(w.id("dog") == v.id("dog"));
}

TEST_CASE("from_tokens validates the reserved prefix and duplicates") {
  CHECK_THROWS_AS(Vocab::from_tokens({"<pad>", "<unk>", "<sos>"}), FormatError);
  CHECK_THROWS_AS(Vocab::from_tokens({"a", "<unk>", "<sos>", "<eos>"}), FormatError);
  CHECK_THROWS_AS(Vocab::from_tokens({"<pad>", "<unk>", "<sos>", "<eos>", "a", "a"}),
                  FormatError);
}

TEST_SUITE_END();

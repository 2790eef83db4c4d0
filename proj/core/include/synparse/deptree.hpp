#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "synparse/tensor.hpp"

namespace synparse {

// A dependency-parsed utterance. heads[i] is the 0-based index of token i's
// parent; the root points to itself. Labels are dropped.
struct Sentence {
  std::vector<std::string> tokens;
  std::vector<std::size_t> heads;
  std::optional<std::vector<std::string>> target;

  std::size_t size() const { return tokens.size(); }
};

// Throws DataError unless `s` is a well-formed single-rooted tree.
void validate_sentence(const Sentence& s);

// Parent-proximity matrix: row t is a Gaussian bump centered on token t's
// parent. Entries are clamped away from zero so the downstream elementwise
// product can never zero out a score row.
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;

  double at(std::size_t t, std::size_t s) const { return values[t * n + s]; }
  Tensor as_tensor() const { return Tensor::from({n, n}, values); }
};

DistanceMatrix distance_matrix(const Sentence& s, double sigma = 1.0);

// D' = (D + D^T) / 2, exactly symmetric entry by entry.
DistanceMatrix symmetrize(const DistanceMatrix& d);

// Reader/writer for the CoNLL-U subset that carries ID, FORM and HEAD.
// Full 10-column rows (HEAD in column 7) and compact "ID FORM HEAD" rows are
// both accepted; '#' lines are comments; a blank line ends a sentence.
std::vector<Sentence> parse_conll(std::istream& in);
std::vector<Sentence> parse_conll_text(const std::string& text);
std::vector<Sentence> parse_conll_file(const std::string& path);

void serialize_conll(const std::vector<Sentence>& sentences, std::ostream& out);
std::string serialize_conll_text(const std::vector<Sentence>& sentences);
void serialize_conll_file(const std::vector<Sentence>& sentences, const std::string& path);

}  // namespace synparse

#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

namespace synparse {

// Parenthesized logic form: "( head child* )" groups or bare atoms. A
// sequence of several top-level expressions is wrapped under this label.
inline constexpr const char* kLogicRoot = "<root>";

struct LogicTree {
  std::string label;
  std::vector<LogicTree> children;

  bool operator==(const LogicTree&) const = default;
};

const std::set<std::string>& default_commutative();

std::vector<std::string> split_tokens(const std::string& text);
std::string join_tokens(const std::vector<std::string>& tokens);

LogicTree parse_logic(const std::vector<std::string>& tokens);
std::vector<std::string> serialize_logic(const LogicTree& t);

// Total order on trees: label, then arity, then children recursively.
// Used to sort the children of commutative operators bottom-up.
int compare_trees(const LogicTree& a, const LogicTree& b);

LogicTree canonicalize(const LogicTree& t,
                       const std::set<std::string>& commutative = default_commutative());

bool exact_match(const std::vector<std::string>& pred, const std::vector<std::string>& gold);
// Structural equality after canonicalization. An unparseable prediction is a
// plain miss; an unparseable gold is a data error.
bool tree_match(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                const std::set<std::string>& commutative = default_commutative());

double corpus_exact(const std::vector<std::vector<std::string>>& preds,
                    const std::vector<std::vector<std::string>>& golds);
double corpus_tree(const std::vector<std::vector<std::string>>& preds,
                   const std::vector<std::vector<std::string>>& golds,
                   const std::set<std::string>& commutative = default_commutative());

struct SentenceScore {
  std::size_t id = 0;
  bool exact = false;
  bool tree = false;
};

struct ScoreReport {
  double exact_match = 0.0;  // percentage
  double tree_match = 0.0;   // percentage
  std::vector<SentenceScore> per_sentence;
};

ScoreReport score_corpus(const std::vector<std::vector<std::string>>& preds,
                         const std::vector<std::vector<std::string>>& golds,
                         const std::set<std::string>& commutative = default_commutative());
std::string score_report_json(const ScoreReport& report);

}  // namespace synparse

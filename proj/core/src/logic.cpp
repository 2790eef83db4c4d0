#include "synparse/logic.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "synparse/error.hpp"

namespace synparse {

const std::set<std::string>& default_commutative() {
  static const std::set<std::string> ops = {"and", "or"};
  return ops;
}

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string tok;
  while (is >> tok) out.push_back(std::move(tok));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

namespace {

LogicTree parse_expr(const std::vector<std::string>& tokens, std::size_t& pos) {
  if (tokens[pos] == ")") {
    throw LogicParseError("stray ')' at token " + std::to_string(pos));
  }
  if (tokens[pos] != "(") {
    LogicTree leaf;
    leaf.label = tokens[pos++];
    return leaf;
  }
  const std::size_t open = pos++;
  if (pos >= tokens.size() || tokens[pos] == ")") {
    throw LogicParseError("empty group opened at token " + std::to_string(open));
  }
  if (tokens[pos] == "(") {
    throw LogicParseError("group opened at token " + std::to_string(open) +
                          " starts with a subgroup instead of a label");
  }
  LogicTree node;
  node.label = tokens[pos++];
  while (pos < tokens.size() && tokens[pos] != ")") {
    node.children.push_back(parse_expr(tokens, pos));
  }
  if (pos >= tokens.size()) {
    throw LogicParseError("unbalanced '(' at token " + std::to_string(open));
  }
  ++pos;  // consume ')'
  return node;
}

void serialize_into(const LogicTree& t, std::vector<std::string>& out) {
  if (t.children.empty()) {
    out.push_back(t.label);
    return;
  }
  out.push_back("(");
  out.push_back(t.label);
  for (const LogicTree& c : t.children) serialize_into(c, out);
  out.push_back(")");
}

}  // namespace

LogicTree parse_logic(const std::vector<std::string>& tokens) {
  if (tokens.empty()) throw LogicParseError("no tokens");
  std::size_t pos = 0;
  std::vector<LogicTree> exprs;
  while (pos < tokens.size()) exprs.push_back(parse_expr(tokens, pos));
  if (exprs.size() == 1) return std::move(exprs[0]);
  LogicTree root;
  root.label = kLogicRoot;
  root.children = std::move(exprs);
  return root;
}

std::vector<std::string> serialize_logic(const LogicTree& t) {
  std::vector<std::string> out;
  if (t.label == kLogicRoot && t.children.size() > 1) {
    for (const LogicTree& c : t.children) serialize_into(c, out);
  } else {
    serialize_into(t, out);
  }
  return out;
}

int compare_trees(const LogicTree& a, const LogicTree& b) {
  if (a.label != b.label) return a.label < b.label ? -1 : 1;
  if (a.children.size() != b.children.size()) {
    return a.children.size() < b.children.size() ? -1 : 1;
  }
  for (std::size_t i = 0; i < a.children.size(); ++i) {
    int c = compare_trees(a.children[i], b.children[i]);
    if (c != 0) return c;
  }
  return 0;
}

LogicTree canonicalize(const LogicTree& t, const std::set<std::string>& commutative) {
  LogicTree out;
  out.label = t.label;
  out.children.reserve(t.children.size());
  for (const LogicTree& c : t.children) out.children.push_back(canonicalize(c, commutative));
  if (commutative.count(out.label)) {
    std::stable_sort(out.children.begin(), out.children.end(),
                     [](const LogicTree& a, const LogicTree& b) {
                       return compare_trees(a, b) < 0;
                     });
  }
  return out;
}

bool exact_match(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  return pred == gold;
}

bool tree_match(const std::vector<std::string>& pred, const std::vector<std::string>& gold,
                const std::set<std::string>& commutative) {
  LogicTree gold_tree;
  try {
    gold_tree = parse_logic(gold);
  } catch (const LogicParseError& e) {
    throw DataError(std::string("malformed gold logic form: ") + e.what());
  }
  LogicTree pred_tree;
  try {
    pred_tree = parse_logic(pred);
  } catch (const LogicParseError&) {
    return false;
  }
  return canonicalize(pred_tree, commutative) == canonicalize(gold_tree, commutative);
}

namespace {
void check_corpus(const std::vector<std::vector<std::string>>& preds,
                  const std::vector<std::vector<std::string>>& golds) {
  if (preds.size() != golds.size()) {
    throw InputError("corpus size mismatch: " + std::to_string(preds.size()) +
                     " predictions vs " + std::to_string(golds.size()) + " golds");
  }
  if (preds.empty()) throw InputError("empty corpus");
}
}  // namespace

double corpus_exact(const std::vector<std::vector<std::string>>& preds,
                    const std::vector<std::vector<std::string>>& golds) {
  check_corpus(preds, golds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (exact_match(preds[i], golds[i])) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

double corpus_tree(const std::vector<std::vector<std::string>>& preds,
                   const std::vector<std::vector<std::string>>& golds,
                   const std::set<std::string>& commutative) {
  check_corpus(preds, golds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (tree_match(preds[i], golds[i], commutative)) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(preds.size());
}

ScoreReport score_corpus(const std::vector<std::vector<std::string>>& preds,
                         const std::vector<std::vector<std::string>>& golds,
                         const std::set<std::string>& commutative) {
  check_corpus(preds, golds);
  ScoreReport report;
  std::size_t exact_hits = 0, tree_hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    SentenceScore s;
    s.id = i;
    s.exact = exact_match(preds[i], golds[i]);
    s.tree = tree_match(preds[i], golds[i], commutative);
    exact_hits += s.exact ? 1 : 0;
    tree_hits += s.tree ? 1 : 0;
    report.per_sentence.push_back(s);
  }
  const double n = static_cast<double>(preds.size());
  report.exact_match = 100.0 * static_cast<double>(exact_hits) / n;
  report.tree_match = 100.0 * static_cast<double>(tree_hits) / n;
  return report;
}

std::string score_report_json(const ScoreReport& report) {
  nlohmann::json j;
  j["exact_match"] = report.exact_match;
  j["tree_match"] = report.tree_match;
  j["per_sentence"] = nlohmann::json::array();
  for (const SentenceScore& s : report.per_sentence) {
    j["per_sentence"].push_back({{"id", s.id}, {"exact", s.exact}, {"tree", s.tree}});
  }
  return j.dump(2);
}

}  // namespace synparse

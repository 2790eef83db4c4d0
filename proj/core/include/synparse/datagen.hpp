#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synparse/deptree.hpp"

namespace synparse {

// Deterministic template grammar: "V P E [that M1 [and M2]]" paired with a
// lambda-style logic form whose conjunct order mirrors the utterance, so
// structural and token-level metrics can disagree by construction.
struct GrammarSpec {
  std::uint64_t seed = 17;
  std::size_t n_train = 500;
  std::size_t n_dev = 100;
  std::size_t n_test = 100;
  std::size_t max_modifiers = 2;
  std::vector<std::string> verbs = {"list", "show", "find"};
  std::vector<std::string> predicates = {"flights", "trains", "buses", "meals"};
  std::vector<std::string> entities = {"boston", "denver", "dallas",
                                       "seattle", "atlanta", "chicago"};
  std::vector<std::string> modifiers = {"nonstop", "daily", "cheap",
                                        "early", "late", "express"};

  void validate() const;
  std::size_t instantiation_count() const;
};

struct GeneratedData {
  std::vector<Sentence> train;
  std::vector<Sentence> dev;
  std::vector<Sentence> test;
};

GeneratedData generate(const GrammarSpec& spec);

// dir/{train,dev,test}.tsv plus dir/{train,dev,test}.conll.
void export_datasets(const GeneratedData& data, const std::string& dir);
GeneratedData import_datasets(const std::string& dir);

// prefix.tsv ("source<TAB>target", space-joined tokens) with aligned trees in
// prefix.conll.
void save_split(const std::vector<Sentence>& data, const std::string& prefix);
std::vector<Sentence> load_split(const std::string& prefix);

// Sources-only variant: prefix.tsv must not carry targets (the transductive
// test-side contract), prefix.conll still supplies trees.
std::vector<Sentence> load_sources(const std::string& prefix);

GrammarSpec grammar_spec_from_json_file(const std::string& path);
void grammar_spec_to_json_file(const GrammarSpec& spec, const std::string& path);
// `where` names the source in error messages.
GrammarSpec grammar_spec_from_json_text(const std::string& text,
                                        const std::string& where = "text");
std::string grammar_spec_to_json_text(const GrammarSpec& spec);

}  // namespace synparse

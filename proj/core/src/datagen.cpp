#include "synparse/datagen.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "synparse/error.hpp"
#include "synparse/logic.hpp"
#include "synparse/tensor.hpp"

namespace synparse {
namespace {

void check_token_list(const std::vector<std::string>& list, const char* field) {
  if (list.empty()) {
    throw ConfigError(std::string(field) + " must not be empty");
  }
  std::set<std::string> seen;
  for (const auto& tok : list) {
    if (tok.empty() || tok.find_first_of(" \t\n") != std::string::npos) {
      throw ConfigError(std::string(field) + " entries must be single tokens");
    }
    if (!seen.insert(tok).second) {
      throw ConfigError(std::string(field) + " has a duplicate entry: " + tok);
    }
  }
}

Sentence instantiate(const std::string& verb, const std::string& pred,
                     const std::string& entity, const std::vector<std::string>& mods) {
  Sentence s;
  s.tokens = {verb, pred, entity};
  s.heads = {0, 0, 1};
  if (!mods.empty()) {
    s.tokens.push_back("that");
    s.heads.push_back(1);
    s.tokens.push_back(mods[0]);
    s.heads.push_back(1);
    if (mods.size() > 1) {
      s.tokens.push_back("and");
      s.heads.push_back(4);
      s.tokens.push_back(mods[1]);
      s.heads.push_back(4);
    }
  }

  std::vector<std::string> t = {"(", "lambda", "x", "(", "and",
                                "(", pred, "x", ")",
                                "(", "eq", "x", entity, ")"};
  for (const auto& m : mods) {
    t.insert(t.end(), {"(", m, "x", ")"});
  }
  t.insert(t.end(), {")", ")"});
  s.target = std::move(t);
  return s;
}

}  // namespace

void GrammarSpec::validate() const {
  if (n_train == 0 || n_dev == 0 || n_test == 0) {
    throw ConfigError("split sizes must all be at least 1");
  }
  if (max_modifiers > 2) {
    throw ConfigError("max_modifiers above 2 does not fit the utterance template");
  }
  check_token_list(verbs, "verbs");
  check_token_list(predicates, "predicates");
  check_token_list(entities, "entities");
  check_token_list(modifiers, "modifiers");
  const std::size_t total = instantiation_count();
  if (n_train + n_dev + n_test > total) {
    std::ostringstream os;
    os << "requested " << n_train + n_dev + n_test << " examples but the grammar has only "
       << total << " unique instantiations";
    throw ConfigError(os.str());
  }
}

std::size_t GrammarSpec::instantiation_count() const {
  const std::size_t m = modifiers.size();
  std::size_t mod_seqs = 1;
  if (max_modifiers >= 1) mod_seqs += m;
  if (max_modifiers >= 2) mod_seqs += m * (m - 1);
  return verbs.size() * predicates.size() * entities.size() * mod_seqs;
}

GeneratedData generate(const GrammarSpec& spec) {
  spec.validate();

  std::vector<Sentence> all;
  all.reserve(spec.instantiation_count());
  for (const auto& v : spec.verbs) {
    for (const auto& p : spec.predicates) {
      for (const auto& e : spec.entities) {
        all.push_back(instantiate(v, p, e, {}));
        if (spec.max_modifiers >= 1) {
          for (const auto& m1 : spec.modifiers) {
            all.push_back(instantiate(v, p, e, {m1}));
          }
        }
        if (spec.max_modifiers >= 2) {
          for (const auto& m1 : spec.modifiers) {
            for (const auto& m2 : spec.modifiers) {
              if (m1 != m2) all.push_back(instantiate(v, p, e, {m1, m2}));
            }
          }
        }
      }
    }
  }

  Rng rng(spec.seed);
  shuffle(all, rng);

  GeneratedData data;
  auto it = all.begin();
  data.train.assign(it, it + static_cast<std::ptrdiff_t>(spec.n_train));
  it += static_cast<std::ptrdiff_t>(spec.n_train);
  data.dev.assign(it, it + static_cast<std::ptrdiff_t>(spec.n_dev));
  it += static_cast<std::ptrdiff_t>(spec.n_dev);
  data.test.assign(it, it + static_cast<std::ptrdiff_t>(spec.n_test));
  for (const auto& split : {&data.train, &data.dev, &data.test}) {
    for (const auto& s : *split) validate_sentence(s);
  }
  return data;
}

void save_split(const std::vector<Sentence>& data, const std::string& prefix) {
  std::ofstream tsv(prefix + ".tsv");
  if (!tsv) throw IoError("cannot write dataset file: " + prefix + ".tsv");
  for (const auto& s : data) {
    if (!s.target.has_value()) {
      throw DataError("sentence without a target cannot be saved to a labeled split");
    }
    tsv << join_tokens(s.tokens) << "\t" << join_tokens(*s.target) << "\n";
  }
  if (!tsv) throw IoError("short write on " + prefix + ".tsv");
  serialize_conll_file(data, prefix + ".conll");
}

namespace {

std::vector<Sentence> read_tsv(const std::string& path, bool allow_targets) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::vector<Sentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    Sentence s;
    if (tab == std::string::npos) {
      if (allow_targets) {
        std::ostringstream os;
        os << path << " line " << line_no << " has no target column";
        throw FormatError(os.str());
      }
      s.tokens = split_tokens(line);
    } else {
      if (!allow_targets) {
        std::ostringstream os;
        os << path << " line " << line_no
           << " carries a target, but this input must be sources-only";
        throw InputError(os.str());
      }
      s.tokens = split_tokens(line.substr(0, tab));
      s.target = split_tokens(line.substr(tab + 1));
      if (line.find('\t', tab + 1) != std::string::npos) {
        std::ostringstream os;
        os << path << " line " << line_no << " has more than two columns";
        throw FormatError(os.str());
      }
    }
    if (s.tokens.empty()) {
      std::ostringstream os;
      os << path << " line " << line_no << " has an empty source";
      throw FormatError(os.str());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> load_with_trees(const std::string& prefix, bool allow_targets) {
  std::vector<Sentence> data = read_tsv(prefix + ".tsv", allow_targets);
  std::vector<Sentence> trees = parse_conll_file(prefix + ".conll");
  if (trees.size() != data.size()) {
    std::ostringstream os;
    os << prefix << ".conll holds " << trees.size() << " trees for " << data.size()
       << " sentences";
    throw DataError(os.str());
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (trees[i].tokens != data[i].tokens) {
      std::ostringstream os;
      os << prefix << " sentence " << i << " differs between .tsv and .conll";
      throw DataError(os.str());
    }
    data[i].heads = trees[i].heads;
  }
  return data;
}

}  // namespace

std::vector<Sentence> load_split(const std::string& prefix) {
  return load_with_trees(prefix, true);
}

std::vector<Sentence> load_sources(const std::string& prefix) {
  return load_with_trees(prefix, false);
}

void export_datasets(const GeneratedData& data, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory: " + dir);
  save_split(data.train, dir + "/train");
  save_split(data.dev, dir + "/dev");
  save_split(data.test, dir + "/test");
}

GeneratedData import_datasets(const std::string& dir) {
  GeneratedData data;
  data.train = load_split(dir + "/train");
  data.dev = load_split(dir + "/dev");
  data.test = load_split(dir + "/test");
  return data;
}

GrammarSpec grammar_spec_from_json_text(const std::string& text,
                                        const std::string& where) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("grammar spec " + where + " is not valid JSON: " + e.what());
  }
  GrammarSpec spec;
  try {
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("n_train")) spec.n_train = j.at("n_train").get<std::size_t>();
    if (j.contains("n_dev")) spec.n_dev = j.at("n_dev").get<std::size_t>();
    if (j.contains("n_test")) spec.n_test = j.at("n_test").get<std::size_t>();
    if (j.contains("max_modifiers")) {
      spec.max_modifiers = j.at("max_modifiers").get<std::size_t>();
    }
    if (j.contains("verbs")) spec.verbs = j.at("verbs").get<std::vector<std::string>>();
    if (j.contains("predicates")) {
      spec.predicates = j.at("predicates").get<std::vector<std::string>>();
    }
    if (j.contains("entities")) {
      spec.entities = j.at("entities").get<std::vector<std::string>>();
    }
    if (j.contains("modifiers")) {
      spec.modifiers = j.at("modifiers").get<std::vector<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("grammar spec " + where + " has a malformed field: " + e.what());
  }
  spec.validate();
  return spec;
}

GrammarSpec grammar_spec_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grammar spec: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return grammar_spec_from_json_text(text.str(), path);
}

std::string grammar_spec_to_json_text(const GrammarSpec& spec) {
  nlohmann::json j;
  j["seed"] = spec.seed;
  j["n_train"] = spec.n_train;
  j["n_dev"] = spec.n_dev;
  j["n_test"] = spec.n_test;
  j["max_modifiers"] = spec.max_modifiers;
  j["verbs"] = spec.verbs;
  j["predicates"] = spec.predicates;
  j["entities"] = spec.entities;
  j["modifiers"] = spec.modifiers;
  return j.dump(2) + "\n";
}

void grammar_spec_to_json_file(const GrammarSpec& spec, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write grammar spec: " + path);
  out << grammar_spec_to_json_text(spec);
}

}  // namespace synparse

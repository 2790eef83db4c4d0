#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "synparse/checkpoint.hpp"
#include "synparse/datagen.hpp"
#include "synparse/error.hpp"
#include "synparse/heatmap.hpp"
#include "synparse/logic.hpp"
#include "synparse/model.hpp"
#include "synparse/sawr.hpp"
#include "synparse/training.hpp"

namespace synparse::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

std::string abs_path(const std::string& p) {
  return fs::absolute(fs::path(p)).lexically_normal().string();
}

fs::path prepare_out(const std::string& out_dir) {
  fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output dir " + out_dir);
  return dir;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw FormatError(path + " is not valid JSON: " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

void write_rows(const fs::path& path, const std::vector<json>& rows) {
  std::ostringstream os;
  for (const json& row : rows) os << row.dump() << "\n";
  write_text(path, os.str());
}

void write_manifest(const fs::path& out_dir, const std::string& command,
                    const json& inputs, const json& resolved, std::uint64_t seed,
                    const std::string& variants) {
  json m;
  m["version"] = 1;
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["out"] = abs_path(out_dir.string());
  m["seed"] = seed;
  m["variants"] = variants;
  m["inputs"] = inputs;
  m["resolved"] = resolved;
  write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

void write_timing_total(const fs::path& out_dir, const Timer& timer) {
  write_rows(out_dir / "timing.jsonl", {json{{"total_seconds", timer.seconds()}}});
}

// Per-epoch optimization wall times, then the command total.
void write_timing_epochs(const fs::path& out_dir,
                         const std::vector<EpochRecord>& history,
                         const Timer& timer) {
  std::vector<json> rows;
  for (const EpochRecord& rec : history) {
    rows.push_back(json{{"epoch", rec.epoch}, {"seconds", rec.wall_seconds}});
  }
  rows.push_back(json{{"total_seconds", timer.seconds()}});
  write_rows(out_dir / "timing.jsonl", rows);
}

void check_known_keys(const json& j, const std::vector<std::string>& known,
                      const std::string& section) {
  for (const auto& item : j.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw ConfigError("unknown field \"" + item.key() + "\" in " + section);
    }
  }
}

void check_version(const json& j, const std::string& path) {
  if (!j.contains("version")) {
    throw ConfigError(path + " is missing the \"version\" field");
  }
  if (j.at("version") != 1) {
    throw ConfigError(path + " has unsupported version " + j.at("version").dump());
  }
}

VariantFlags parse_variants(const std::string& tag) {
  VariantFlags v;
  if (tag.empty() || tag == "baseline") return v;
  std::stringstream ss(tag);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "pascal") {
      v.pascal = true;
    } else if (part == "sawrs") {
      v.sawrs = true;
    } else if (part == "ca") {
      v.ca = true;
    } else {
      throw ConfigError("unknown variant \"" + part +
                        "\" (expected baseline, pascal, sawrs, ca)");
    }
  }
  return v;
}

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

ModelConfig model_from_json(const json& j) {
  check_known_keys(j,
                   {"d_model", "n_heads", "d_ff", "n_enc_layers", "n_dec_layers",
                    "dropout", "variants", "pascal_layers", "pascal_heads", "sigma",
                    "sawr_dim", "d_link", "max_len"},
                   "the model section");
  ModelConfig c;
  try {
    take(j, "d_model", c.d_model);
    take(j, "n_heads", c.n_heads);
    take(j, "d_ff", c.d_ff);
    take(j, "n_enc_layers", c.n_enc_layers);
    take(j, "n_dec_layers", c.n_dec_layers);
    take(j, "dropout", c.dropout);
    if (j.contains("variants")) {
      c.variants = {};
      for (const auto& v : j.at("variants")) {
        VariantFlags one = parse_variants(v.get<std::string>());
        c.variants.pascal |= one.pascal;
        c.variants.sawrs |= one.sawrs;
        c.variants.ca |= one.ca;
      }
    }
    take(j, "pascal_layers", c.pascal_layers);
    take(j, "pascal_heads", c.pascal_heads);
    take(j, "sigma", c.sigma);
    take(j, "sawr_dim", c.sawr_dim);
    take(j, "d_link", c.d_link);
    take(j, "max_len", c.max_len);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model section: ") + e.what());
  }
  return c;
}

json model_to_json(const ModelConfig& c) {
  json j;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["d_ff"] = c.d_ff;
  j["n_enc_layers"] = c.n_enc_layers;
  j["n_dec_layers"] = c.n_dec_layers;
  j["dropout"] = c.dropout;
  json variants = json::array();
  if (c.variants.pascal) variants.push_back("pascal");
  if (c.variants.sawrs) variants.push_back("sawrs");
  if (c.variants.ca) variants.push_back("ca");
  j["variants"] = variants;
  j["pascal_layers"] = c.pascal_layers;
  j["pascal_heads"] = c.pascal_heads;
  j["sigma"] = c.sigma;
  j["sawr_dim"] = c.sawr_dim;
  j["d_link"] = c.d_link;
  j["max_len"] = c.max_len;
  return j;
}

TrainConfig train_from_json(const json& j) {
  check_known_keys(j,
                   {"epochs", "batch_size", "lr", "weight_decay", "seed",
                    "eval_every", "precision", "stop_at_dev_exact"},
                   "the train section");
  TrainConfig c;
  try {
    take(j, "epochs", c.epochs);
    take(j, "batch_size", c.batch_size);
    take(j, "lr", c.lr);
    take(j, "weight_decay", c.weight_decay);
    take(j, "seed", c.seed);
    take(j, "eval_every", c.eval_every);
    take(j, "precision", c.precision);
    take(j, "stop_at_dev_exact", c.stop_at_dev_exact);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed train section: ") + e.what());
  }
  return c;
}

json train_to_json(const TrainConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["eval_every"] = c.eval_every;
  j["precision"] = c.precision;
  j["stop_at_dev_exact"] = c.stop_at_dev_exact;
  return j;
}

TelConfig tel_from_json(const json& j) {
  check_known_keys(j,
                   {"tel_epochs", "selected_only", "batch_size", "lr",
                    "weight_decay", "seed"},
                   "the tel section");
  TelConfig c;
  try {
    take(j, "tel_epochs", c.tel_epochs);
    take(j, "selected_only", c.selected_only);
    take(j, "batch_size", c.batch_size);
    take(j, "lr", c.lr);
    take(j, "weight_decay", c.weight_decay);
    take(j, "seed", c.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed tel section: ") + e.what());
  }
  return c;
}

json tel_to_json(const TelConfig& c) {
  json j;
  j["tel_epochs"] = c.tel_epochs;
  j["selected_only"] = c.selected_only;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.lr;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  return j;
}

// Labeled when the first data line carries a tab, sources-only otherwise.
std::vector<Sentence> load_any(const std::string& prefix) {
  std::ifstream in(prefix + ".tsv");
  if (!in) throw IoError("cannot open " + prefix + ".tsv");
  std::string line;
  bool labeled = false;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    labeled = line.find('\t') != std::string::npos;
    break;
  }
  in.close();
  return labeled ? load_split(prefix) : load_sources(prefix);
}

struct LoadedModel {
  Model model;
  std::shared_ptr<TrainedSawrProvider> provider;

  const SawrProvider* sawr() const { return provider.get(); }
};

LoadedModel load_model(const std::string& path) {
  LoadedCheckpoint lc = load_checkpoint(path);
  if (lc.model.cfg.variants.sawrs && lc.provider == nullptr) {
    throw DataError(path + " is a sawrs checkpoint without an embedded provider");
  }
  return {std::move(lc.model), std::move(lc.provider)};
}

std::vector<json> prediction_rows(const Model& m, const std::vector<Sentence>& data,
                                  const SawrProvider* sawr, bool with_gold) {
  std::vector<json> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Sentence& s = data[i];
    std::vector<double> vec;
    const std::vector<double>* ptr = nullptr;
    if (m.cfg.variants.sawrs) {
      vec = sawr->vectors(i, s);
      ptr = &vec;
    }
    json row;
    row["index"] = i;
    row["source"] = join_tokens(s.tokens);
    try {
      Prediction p = predict_greedy(m, s, ptr);
      std::vector<std::string> surface = p.surface_tokens();
      row["prediction"] = join_tokens(surface);
      row["score"] = p.score;
      if (with_gold) {
        row["exact"] = exact_match(surface, *s.target);
        row["tree"] = tree_match(surface, *s.target);
      }
    } catch (const Error& e) {
      row["prediction"] = "";
      row["error"] = e.what();
      if (with_gold) {
        row["exact"] = false;
        row["tree"] = false;
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---- gen-data ----

struct GenRun {
  GrammarSpec spec;
  std::string out;
};

int run_gen(const GenRun& run, std::ostream& sout) {
  Timer timer;
  fs::path out_dir = prepare_out(run.out);
  GeneratedData data = generate(run.spec);
  export_datasets(data, out_dir.string());
  write_text(out_dir / "spec.json", grammar_spec_to_json_text(run.spec));

  std::vector<json> metrics = {
      json{{"split", "train"}, {"sentences", data.train.size()}},
      json{{"split", "dev"}, {"sentences", data.dev.size()}},
      json{{"split", "test"}, {"sentences", data.test.size()}},
  };
  write_rows(out_dir / "metrics.jsonl", metrics);
  write_timing_total(out_dir, timer);

  json resolved;
  resolved["spec"] = json::parse(grammar_spec_to_json_text(run.spec));
  write_manifest(out_dir, "gen-data", json::object(), resolved, run.spec.seed, "");
  sout << "generated " << data.train.size() << "/" << data.dev.size() << "/"
       << data.test.size() << " examples under " << out_dir.string() << "\n";
  return 0;
}

// ---- train ----

struct TrainRun {
  ModelConfig model;  // vocab sizes filled from data at run time
  TrainConfig train;
  std::uint64_t sawr_seed = 1;
  std::string data_dir;
  std::string out;
};

json train_resolved(const TrainRun& run) {
  json resolved;
  resolved["model"] = model_to_json(run.model);
  resolved["train"] = train_to_json(run.train);
  resolved["sawr_seed"] = run.sawr_seed;
  resolved["data"] = abs_path(run.data_dir);
  return resolved;
}

int run_train(TrainRun run, std::ostream& sout) {
  Timer timer;
  fs::path out_dir = prepare_out(run.out);
  const json resolved = train_resolved(run);

  std::vector<Sentence> train_set = load_split(run.data_dir + "/train");
  std::vector<Sentence> dev_set;
  if (fs::exists(fs::path(run.data_dir) / "dev.tsv")) {
    dev_set = load_split(run.data_dir + "/dev");
  } else {
    // No dev split: hold out a deterministic tail fold of the training set.
    const std::size_t fold = std::max<std::size_t>(1, train_set.size() / 10);
    dev_set.assign(train_set.end() - fold, train_set.end());
    train_set.erase(train_set.end() - fold, train_set.end());
    sout << "no dev split found; holding out " << fold
         << " training sentences for validation\n";
  }

  std::vector<std::vector<std::string>> src;
  std::vector<std::vector<std::string>> tgt;
  for (const Sentence& s : train_set) {
    src.push_back(s.tokens);
    if (s.target.has_value()) tgt.push_back(*s.target);
  }
  Vocab src_vocab = Vocab::build(src);
  Vocab tgt_vocab = Vocab::build(tgt);
  run.model.src_vocab_size = src_vocab.size();
  run.model.tgt_vocab_size = tgt_vocab.size();

  Model m = build_model(run.model, run.train.seed);
  m.src_vocab = src_vocab;
  m.tgt_vocab = tgt_vocab;

  std::unique_ptr<TrainedSawrProvider> provider;
  if (run.model.variants.sawrs) {
    SawrTrainReport report;
    provider = std::make_unique<TrainedSawrProvider>(train_sawr_provider(
        train_set, run.model.sawr_dim, run.sawr_seed, &report));
    sout << "syntactic vector provider: held-out UAS " << report.held_out_uas
         << " after " << report.epochs_run << " epochs\n";
  }

  TrainConfig cfg = run.train;
  cfg.checkpoint_dir = out_dir.string();
  TrainResult result =
      train(m, train_set, dev_set, cfg, provider.get(), provider.get(),
            provider.get());

  save_checkpoint((out_dir / "best.ckpt").string(), m, provider.get());
  write_timing_epochs(out_dir, result.history, timer);

  json inputs;
  inputs["data"] = abs_path(run.data_dir);
  write_manifest(out_dir, "train", inputs, resolved, run.train.seed,
                 run.model.variants.tag());
  sout << "trained " << run.model.variants.tag() << " for "
       << result.history.size() << " epochs; best dev exact "
       << result.best_dev_exact << " at epoch " << result.best_epoch << "\n";
  return 0;
}

// ---- eval ----

struct EvalRun {
  std::string ckpt;
  std::string data_prefix;
  std::string out;
};

int run_eval(const EvalRun& run, std::ostream& sout) {
  Timer timer;
  fs::path out_dir = prepare_out(run.out);
  LoadedModel lm = load_model(run.ckpt);
  std::vector<Sentence> data = load_split(run.data_prefix);

  std::vector<json> rows = prediction_rows(lm.model, data, lm.sawr(), true);
  std::vector<std::vector<std::string>> preds;
  std::vector<std::vector<std::string>> golds;
  for (std::size_t i = 0; i < data.size(); ++i) {
    preds.push_back(split_tokens(rows[i].at("prediction").get<std::string>()));
    golds.push_back(*data[i].target);
  }
  ScoreReport report = score_corpus(preds, golds);
  write_text(out_dir / "report.json", score_report_json(report) + "\n");
  write_rows(out_dir / "predictions.jsonl", rows);

  std::size_t n_exact = 0;
  std::size_t n_tree = 0;
  for (const SentenceScore& s : report.per_sentence) {
    n_exact += s.exact ? 1 : 0;
    n_tree += s.tree ? 1 : 0;
  }
  const double denom = static_cast<double>(data.size());
  const double exact_frac = n_exact / denom;
  const double tree_frac = n_tree / denom;
  write_rows(out_dir / "metrics.jsonl",
             {json{{"count", data.size()},
                   {"exact", exact_frac},
                   {"tree", tree_frac}}});
  write_timing_total(out_dir, timer);

  json inputs;
  inputs["ckpt"] = abs_path(run.ckpt);
  inputs["data"] = abs_path(run.data_prefix);
  json resolved;
  resolved["ckpt"] = abs_path(run.ckpt);
  resolved["data"] = abs_path(run.data_prefix);
  write_manifest(out_dir, "eval", inputs, resolved, 0,
                 lm.model.cfg.variants.tag());
  sout << "exact " << exact_frac << " tree " << tree_frac << " over "
       << data.size() << " sentences\n";
  return 0;
}

// ---- predict ----

struct PredictRun {
  std::string ckpt;
  std::string input_prefix;
  std::string out;
};

int run_predict(const PredictRun& run, std::ostream& sout) {
  Timer timer;
  fs::path out_dir = prepare_out(run.out);
  LoadedModel lm = load_model(run.ckpt);
  std::vector<Sentence> data = load_any(run.input_prefix);

  std::vector<json> rows = prediction_rows(lm.model, data, lm.sawr(), false);
  write_rows(out_dir / "predictions.jsonl", rows);
  write_rows(out_dir / "metrics.jsonl", {json{{"count", data.size()}}});
  write_timing_total(out_dir, timer);

  json inputs;
  inputs["ckpt"] = abs_path(run.ckpt);
  inputs["input"] = abs_path(run.input_prefix);
  json resolved;
  resolved["ckpt"] = abs_path(run.ckpt);
  resolved["input"] = abs_path(run.input_prefix);
  write_manifest(out_dir, "predict", inputs, resolved, 0,
                 lm.model.cfg.variants.tag());
  sout << "predicted " << data.size() << " sentences\n";
  return 0;
}

// ---- tel ----

struct TelRun {
  std::vector<std::string> ckpts;
  std::string dev_prefix;
  std::string test_prefix;
  TelConfig cfg;
  std::string out;
};

int run_tel(const TelRun& run, std::ostream& sout) {
  Timer timer;
  fs::path out_dir = prepare_out(run.out);
  if (run.ckpts.empty()) {
    throw InputError("transductive ensembling needs at least one checkpoint");
  }

  std::vector<LoadedModel> loaded;
  for (const std::string& path : run.ckpts) loaded.push_back(load_model(path));
  std::vector<Model> models;
  for (LoadedModel& lm : loaded) models.push_back(std::move(lm.model));

  // One shared provider: the first sawrs checkpoint's. Ensemble members are
  // expected to come from the same training data, where providers coincide.
  const SawrProvider* shared = nullptr;
  for (const LoadedModel& lm : loaded) {
    if (lm.provider != nullptr) {
      shared = lm.provider.get();
      break;
    }
  }

  std::vector<Sentence> dev_set = load_split(run.dev_prefix);
  // Sources-only by contract: a labeled test file is rejected.
  std::vector<Sentence> test_set = load_sources(run.test_prefix);

  TelConfig cfg = run.cfg;
  cfg.checkpoint_dir = out_dir.string();
  TelProviders providers{shared, shared, shared};
  SyntheticCorpus corpus;
  TelAudit audit = tel(models, dev_set, test_set, cfg, providers, &corpus);

  const LoadedModel& selected = loaded[audit.selected_model];
  save_checkpoint((out_dir / "fine_tuned.ckpt").string(),
                  models[audit.selected_model], selected.provider.get());
  write_text(out_dir / "tel_audit.json", tel_audit_json(audit) + "\n");
  write_timing_epochs(out_dir, audit.fine_tune.history, timer);

  json inputs;
  json ckpts = json::array();
  for (const std::string& path : run.ckpts) ckpts.push_back(abs_path(path));
  inputs["ckpts"] = ckpts;
  inputs["dev"] = abs_path(run.dev_prefix);
  inputs["test"] = abs_path(run.test_prefix);
  json resolved;
  resolved["ckpts"] = ckpts;
  resolved["dev"] = abs_path(run.dev_prefix);
  resolved["test"] = abs_path(run.test_prefix);
  resolved["tel"] = tel_to_json(run.cfg);
  write_manifest(out_dir, "tel", inputs, resolved, run.cfg.seed,
                 models[audit.selected_model].cfg.variants.tag());
  sout << "selected model " << audit.selected_model << " (dev exact "
       << audit.before.exact << "), corpus " << audit.corpus_size
       << " pairs, after fine-tune dev exact " << audit.after.exact << "\n";
  return 0;
}

// ---- heatmap ----

struct HeatRun {
  std::string ckpt;
  std::string data_prefix;
  std::size_t index = 0;
  std::string out;
};

int run_heatmap(const HeatRun& run, std::ostream& sout) {
  Timer timer;
  fs::path out_dir = prepare_out(run.out);
  LoadedModel lm = load_model(run.ckpt);
  std::vector<Sentence> data = load_any(run.data_prefix);
  if (run.index >= data.size()) {
    std::ostringstream os;
    os << "sentence index " << run.index << " is out of range (dataset holds "
       << data.size() << ")";
    throw DataError(os.str());
  }

  HeatmapExport ex = export_heatmap(lm.model, data[run.index], lm.sawr(),
                                    run.index, out_dir.string());
  write_rows(out_dir / "metrics.jsonl", {json{{"files", ex.files}}});
  write_timing_total(out_dir, timer);

  json inputs;
  inputs["ckpt"] = abs_path(run.ckpt);
  inputs["data"] = abs_path(run.data_prefix);
  json resolved;
  resolved["ckpt"] = abs_path(run.ckpt);
  resolved["data"] = abs_path(run.data_prefix);
  resolved["index"] = run.index;
  write_manifest(out_dir, "heatmap", inputs, resolved, 0,
                 lm.model.cfg.variants.tag());
  sout << "wrote " << ex.files.size() << " heatmap files\n";
  return 0;
}

// ---- rerun ----

int dispatch_resolved(const std::string& command, const json& resolved,
                      const std::string& out, std::ostream& sout) {
  try {
    if (command == "gen-data") {
      GenRun run;
      run.spec = grammar_spec_from_json_text(resolved.at("spec").dump(),
                                             "manifest resolved.spec");
      run.out = out;
      return run_gen(run, sout);
    }
    if (command == "train") {
      TrainRun run;
      run.model = model_from_json(resolved.at("model"));
      run.train = train_from_json(resolved.at("train"));
      run.sawr_seed = resolved.at("sawr_seed").get<std::uint64_t>();
      run.data_dir = resolved.at("data").get<std::string>();
      run.out = out;
      return run_train(run, sout);
    }
    if (command == "eval") {
      EvalRun run;
      run.ckpt = resolved.at("ckpt").get<std::string>();
      run.data_prefix = resolved.at("data").get<std::string>();
      run.out = out;
      return run_eval(run, sout);
    }
    if (command == "predict") {
      PredictRun run;
      run.ckpt = resolved.at("ckpt").get<std::string>();
      run.input_prefix = resolved.at("input").get<std::string>();
      run.out = out;
      return run_predict(run, sout);
    }
    if (command == "tel") {
      TelRun run;
      run.ckpts = resolved.at("ckpts").get<std::vector<std::string>>();
      run.dev_prefix = resolved.at("dev").get<std::string>();
      run.test_prefix = resolved.at("test").get<std::string>();
      run.cfg = tel_from_json(resolved.at("tel"));
      run.out = out;
      return run_tel(run, sout);
    }
    if (command == "heatmap") {
      HeatRun run;
      run.ckpt = resolved.at("ckpt").get<std::string>();
      run.data_prefix = resolved.at("data").get<std::string>();
      run.index = resolved.at("index").get<std::size_t>();
      run.out = out;
      return run_heatmap(run, sout);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest resolved section is malformed: ") +
                      e.what());
  }
  throw FormatError("manifest names unknown command \"" + command + "\"");
}

int run_rerun(const std::string& manifest_path, const std::string& out,
              std::ostream& sout) {
  json m = read_json_file(manifest_path);
  check_version(m, manifest_path);
  std::string command;
  json resolved;
  try {
    command = m.at("command").get<std::string>();
    resolved = m.at("resolved");
  } catch (const json::exception& e) {
    throw FormatError(manifest_path + " is not a run manifest: " + e.what());
  }
  sout << "re-running " << command << " from " << manifest_path << "\n";
  return dispatch_resolved(command, resolved, out, sout);
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& sout, std::ostream& serr) {
  CLI::App app{"dependency-aware transformer semantic parser"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_spec;
  std::string gen_out;
  gen->add_option("--spec", gen_spec, "grammar spec JSON (defaults when omitted)");
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train one variant combination");
  std::string train_config;
  std::string train_data;
  std::string train_out;
  std::string train_variants;
  std::uint64_t train_seed = 0;
  std::uint64_t train_sawr_seed = 0;
  std::size_t f_epochs = 0, f_batch = 0, f_eval_every = 0;
  double f_lr = 0.0, f_wd = 0.0, f_stop = 0.0;
  std::size_t f_d_model = 0, f_heads = 0, f_dff = 0, f_enc = 0, f_dec = 0;
  std::size_t f_sawr_dim = 0, f_max_len = 0;
  double f_dropout = 0.0, f_sigma = 0.0;
  train_cmd->add_option("--config", train_config, "train config JSON");
  train_cmd->add_option("--data", train_data, "dataset directory")->required();
  train_cmd->add_option("--out", train_out, "run directory")->required();
  train_cmd->add_option("--variants", train_variants,
                        "variant tag, e.g. baseline or pascal+ca");
  train_cmd->add_option("--seed", train_seed, "training and init seed");
  train_cmd->add_option("--sawr-seed", train_sawr_seed, "provider training seed");
  train_cmd->add_option("--epochs", f_epochs, "training epochs");
  train_cmd->add_option("--batch-size", f_batch, "mini-batch size");
  train_cmd->add_option("--eval-every", f_eval_every, "dev eval cadence");
  train_cmd->add_option("--lr", f_lr, "learning rate");
  train_cmd->add_option("--weight-decay", f_wd, "decoupled weight decay");
  train_cmd->add_option("--stop-at-dev-exact", f_stop, "early stop threshold");
  train_cmd->add_option("--d-model", f_d_model, "model width");
  train_cmd->add_option("--n-heads", f_heads, "attention heads");
  train_cmd->add_option("--d-ff", f_dff, "feed-forward width");
  train_cmd->add_option("--enc-layers", f_enc, "encoder layers");
  train_cmd->add_option("--dec-layers", f_dec, "decoder layers");
  train_cmd->add_option("--dropout", f_dropout, "dropout rate");
  train_cmd->add_option("--sigma", f_sigma, "parent-proximity bandwidth");
  train_cmd->add_option("--sawr-dim", f_sawr_dim, "syntactic vector width");
  train_cmd->add_option("--max-len", f_max_len, "maximum sequence length");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a dataset");
  std::string eval_ckpt, eval_data, eval_out;
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--data", eval_data, "dataset prefix (.tsv/.conll)")
      ->required();
  eval_cmd->add_option("--out", eval_out, "output directory")->required();

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "decode inputs");
  std::string pred_ckpt, pred_input, pred_out;
  predict_cmd->add_option("--ckpt", pred_ckpt, "checkpoint file")->required();
  predict_cmd->add_option("--input", pred_input, "input prefix (.tsv/.conll)")
      ->required();
  predict_cmd->add_option("--out", pred_out, "output directory")->required();

  // tel
  auto* tel_cmd = app.add_subcommand("tel", "transductive ensemble fine-tuning");
  std::vector<std::string> tel_ckpts;
  std::string tel_dev, tel_test, tel_config, tel_out;
  std::size_t tel_epochs_flag = 0;
  bool tel_selected_only = false;
  std::uint64_t tel_seed = 0;
  tel_cmd->add_option("--ckpt", tel_ckpts, "checkpoint file (repeatable)")
      ->required();
  tel_cmd->add_option("--dev", tel_dev, "labeled dev prefix")->required();
  tel_cmd->add_option("--test", tel_test, "sources-only test prefix")->required();
  tel_cmd->add_option("--config", tel_config, "tel config JSON");
  tel_cmd->add_option("--out", tel_out, "output directory")->required();
  tel_cmd->add_option("--tel-epochs", tel_epochs_flag, "fine-tune epochs");
  tel_cmd->add_flag("--selected-only", tel_selected_only,
                    "label the corpus with the selected model only");
  tel_cmd->add_option("--seed", tel_seed, "fine-tune seed");

  // heatmap
  auto* heat_cmd = app.add_subcommand("heatmap", "export attention heat maps");
  std::string heat_ckpt, heat_data, heat_out;
  std::size_t heat_index = 0;
  heat_cmd->add_option("--ckpt", heat_ckpt, "checkpoint file")->required();
  heat_cmd->add_option("--data", heat_data, "dataset prefix (.tsv/.conll)")
      ->required();
  heat_cmd->add_option("--index", heat_index, "sentence index")->required();
  heat_cmd->add_option("--out", heat_out, "output directory")->required();

  // rerun
  auto* rerun_cmd = app.add_subcommand("rerun", "replay a command from its manifest");
  std::string rerun_manifest, rerun_out;
  rerun_cmd->add_option("--manifest", rerun_manifest, "manifest.json path")
      ->required();
  rerun_cmd->add_option("--out", rerun_out, "new output directory")->required();

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, sout, serr);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      GenRun run;
      if (!gen_spec.empty()) run.spec = grammar_spec_from_json_file(gen_spec);
      run.out = gen_out;
      return run_gen(run, sout);
    }

    if (train_cmd->parsed()) {
      TrainRun run;
      if (!train_config.empty()) {
        json j = read_json_file(train_config);
        check_version(j, train_config);
        check_known_keys(j, {"version", "model", "train", "sawr_seed"},
                         train_config);
        if (j.contains("model")) run.model = model_from_json(j.at("model"));
        if (j.contains("train")) run.train = train_from_json(j.at("train"));
        if (j.contains("sawr_seed")) {
          run.sawr_seed = j.at("sawr_seed").get<std::uint64_t>();
        }
      }
      if (train_cmd->count("--variants") > 0) {
        run.model.variants = parse_variants(train_variants);
      }
      if (train_cmd->count("--seed") > 0) run.train.seed = train_seed;
      if (train_cmd->count("--sawr-seed") > 0) run.sawr_seed = train_sawr_seed;
      if (train_cmd->count("--epochs") > 0) run.train.epochs = f_epochs;
      if (train_cmd->count("--batch-size") > 0) run.train.batch_size = f_batch;
      if (train_cmd->count("--eval-every") > 0) run.train.eval_every = f_eval_every;
      if (train_cmd->count("--lr") > 0) run.train.lr = f_lr;
      if (train_cmd->count("--weight-decay") > 0) run.train.weight_decay = f_wd;
      if (train_cmd->count("--stop-at-dev-exact") > 0) {
        run.train.stop_at_dev_exact = f_stop;
      }
      if (train_cmd->count("--d-model") > 0) run.model.d_model = f_d_model;
      if (train_cmd->count("--n-heads") > 0) run.model.n_heads = f_heads;
      if (train_cmd->count("--d-ff") > 0) run.model.d_ff = f_dff;
      if (train_cmd->count("--enc-layers") > 0) run.model.n_enc_layers = f_enc;
      if (train_cmd->count("--dec-layers") > 0) run.model.n_dec_layers = f_dec;
      if (train_cmd->count("--dropout") > 0) run.model.dropout = f_dropout;
      if (train_cmd->count("--sigma") > 0) run.model.sigma = f_sigma;
      if (train_cmd->count("--sawr-dim") > 0) run.model.sawr_dim = f_sawr_dim;
      if (train_cmd->count("--max-len") > 0) run.model.max_len = f_max_len;
      run.data_dir = train_data;
      run.out = train_out;
      return run_train(std::move(run), sout);
    }

    if (eval_cmd->parsed()) {
      return run_eval({eval_ckpt, eval_data, eval_out}, sout);
    }
    if (predict_cmd->parsed()) {
      return run_predict({pred_ckpt, pred_input, pred_out}, sout);
    }

    if (tel_cmd->parsed()) {
      TelRun run;
      run.ckpts = tel_ckpts;
      run.dev_prefix = tel_dev;
      run.test_prefix = tel_test;
      run.out = tel_out;
      if (!tel_config.empty()) {
        json j = read_json_file(tel_config);
        check_version(j, tel_config);
        check_known_keys(j, {"version", "tel"}, tel_config);
        if (j.contains("tel")) run.cfg = tel_from_json(j.at("tel"));
      }
      if (tel_cmd->count("--tel-epochs") > 0) run.cfg.tel_epochs = tel_epochs_flag;
      if (tel_cmd->count("--selected-only") > 0) {
        run.cfg.selected_only = tel_selected_only;
      }
      if (tel_cmd->count("--seed") > 0) run.cfg.seed = tel_seed;
      return run_tel(run, sout);
    }

    if (heat_cmd->parsed()) {
      return run_heatmap({heat_ckpt, heat_data, heat_index, heat_out}, sout);
    }
    if (rerun_cmd->parsed()) {
      return run_rerun(rerun_manifest, rerun_out, sout);
    }
  } catch (const ConfigError& e) {
    serr << "error: " << e.what() << "\n";
    return 2;
  } catch (const FormatError& e) {
    serr << "error: " << e.what() << "\n";
    return 2;
  } catch (const LogicParseError& e) {
    serr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    serr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    serr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    serr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    serr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    serr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace synparse::cli

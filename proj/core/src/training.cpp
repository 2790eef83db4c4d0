#include "synparse/training.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "synparse/checkpoint.hpp"
#include "synparse/error.hpp"
#include "synparse/logic.hpp"
#include "synparse/optim.hpp"

namespace synparse {
namespace {

namespace fs = std::filesystem;

void require_targets(const std::vector<Sentence>& data, const char* what) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data[i].target.has_value()) {
      std::ostringstream os;
      os << what << " sentence " << i << " has no gold target";
      throw DataError(os.str());
    }
  }
}

void require_provider(const Model& m, const SawrProvider* p, const char* which) {
  if (!m.cfg.variants.sawrs) return;
  if (p == nullptr) {
    throw ConfigError(std::string("the sawrs variant needs a ") + which +
                      " vector provider");
  }
  if (p->dim() != m.cfg.sawr_dim) {
    std::ostringstream os;
    os << which << " provider serves dim " << p->dim() << " but the model expects "
       << m.cfg.sawr_dim;
    throw ConfigError(os.str());
  }
}

std::vector<std::vector<double>> copy_param_values(const Model& m) {
  std::vector<std::vector<double>> out;
  out.reserve(m.params().size());
  for (const auto& [name, t] : m.params()) out.push_back(t.values());
  return out;
}

void restore_param_values(Model& m, const std::vector<std::vector<double>>& vals) {
  const auto& params = m.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor t = params[i].second;
    t.mutable_values() = vals[i];
  }
}

std::vector<std::string> with_eos(const std::vector<std::string>& target) {
  std::vector<std::string> out = target;
  out.push_back("<eos>");
  return out;
}

std::string metrics_row(const EpochRecord& rec, bool best) {
  nlohmann::json j;
  j["epoch"] = rec.epoch;
  j["train_loss"] = rec.train_loss;
  if (rec.evaluated) {
    j["dev_exact"] = rec.dev.exact;
    j["dev_tree"] = rec.dev.tree;
    j["best"] = best;
  }
  return j.dump();
}

// Per-model greedy labels for one dataset, failures as empty outputs.
std::vector<std::vector<std::string>> predict_corpus(
    const Model& m, const std::vector<Sentence>& data, const SawrProvider* sawr) {
  std::vector<std::vector<std::string>> preds;
  preds.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<double> vec;
    const std::vector<double>* ptr = nullptr;
    if (m.cfg.variants.sawrs) {
      vec = sawr->vectors(i, data[i]);
      ptr = &vec;
    }
    try {
      preds.push_back(predict_greedy(m, data[i], ptr).surface_tokens());
    } catch (const Error&) {
      preds.push_back({});
    }
  }
  return preds;
}

EvalResult score_predictions(const std::vector<std::vector<std::string>>& preds,
                             const std::vector<Sentence>& data) {
  EvalResult out;
  out.count = data.size();
  if (data.empty()) return out;
  std::vector<std::vector<std::string>> golds;
  golds.reserve(data.size());
  for (const auto& s : data) golds.push_back(*s.target);
  ScoreReport report = score_corpus(preds, golds);
  std::size_t exact = 0;
  std::size_t tree = 0;
  for (const auto& row : report.per_sentence) {
    exact += row.exact ? 1 : 0;
    tree += row.tree ? 1 : 0;
  }
  out.exact = static_cast<double>(exact) / static_cast<double>(data.size());
  out.tree = static_cast<double>(tree) / static_cast<double>(data.size());
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (weight_decay < 0.0 || !std::isfinite(weight_decay)) {
    throw ConfigError("weight_decay must be non-negative");
  }
  if (precision != "f64") {
    throw ConfigError("precision \"" + precision +
                      "\" is not supported; this build trains in f64");
  }
  if (stop_at_dev_exact < 0.0 || stop_at_dev_exact > 1.0) {
    throw ConfigError("stop_at_dev_exact must lie in [0, 1]");
  }
}

EvalResult evaluate(const Model& m, const std::vector<Sentence>& dataset,
                    const SawrProvider* sawr) {
  require_targets(dataset, "evaluation");
  require_provider(m, sawr, "evaluation");
  return score_predictions(predict_corpus(m, dataset, sawr), dataset);
}

TrainResult train(Model& m, const std::vector<Sentence>& train_set,
                  const std::vector<Sentence>& dev_set, const TrainConfig& cfg,
                  const SawrProvider* train_sawr, const SawrProvider* dev_sawr,
                  const TrainedSawrProvider* embedded) {
  cfg.validate();
  if (train_set.empty()) throw InputError("training needs at least one example");
  require_targets(train_set, "training");
  require_targets(dev_set, "dev");
  require_provider(m, train_sawr, "training");
  if (!dev_set.empty()) require_provider(m, dev_sawr, "dev");

  AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  AdamW opt(m.param_tensors(), opt_cfg);

  Rng shuffle_rng(cfg.seed);
  Rng dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  EncodeOptions train_opts;
  train_opts.training = true;
  train_opts.rng = &dropout_rng;

  std::ofstream metrics;
  if (!cfg.checkpoint_dir.empty()) {
    std::error_code ec;
    fs::create_directories(cfg.checkpoint_dir, ec);
    if (ec) throw IoError("cannot create checkpoint dir " + cfg.checkpoint_dir);
    metrics.open(fs::path(cfg.checkpoint_dir) / "metrics.jsonl",
                 std::ios::trunc);
    if (!metrics) {
      throw IoError("cannot write metrics under " + cfg.checkpoint_dir);
    }
  }

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  double best_exact = -1.0;
  std::vector<std::vector<double>> best_values;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto epoch_start = std::chrono::steady_clock::now();
    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0, batch = 1; begin < n;
         begin += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(begin + cfg.batch_size, n);
      try {
        Tensor total;
        for (std::size_t k = begin; k < end; ++k) {
          const Sentence& s = train_set[order[k]];
          std::vector<double> vec;
          const std::vector<double>* ptr = nullptr;
          if (m.cfg.variants.sawrs) {
            vec = train_sawr->vectors(order[k], s);
            ptr = &vec;
          }
          Tensor enc = encode(m, s, ptr, train_opts);
          Tensor loss = decode_train_loss(m, enc, with_eos(*s.target), train_opts);
          total = (k == begin) ? loss : add(total, loss);
        }
        Tensor batch_loss = scale(total, 1.0 / static_cast<double>(end - begin));
        const double value = batch_loss.values()[0];
        if (!std::isfinite(value)) throw NumericError("loss is not finite");
        loss_sum += value * static_cast<double>(end - begin);
        opt.zero_grad();
        batch_loss.backward();
        opt.step();
      } catch (const TrainingError&) {
        throw;
      } catch (const NumericError& e) {
        std::ostringstream os;
        os << "training diverged at epoch " << epoch << " batch " << batch << ": "
           << e.what();
        throw TrainingError(os.str());
      }
    }
    result.steps = opt.step_count();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(n);
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      epoch_start)
            .count();
    const bool eval_now =
        !dev_set.empty() && (epoch % cfg.eval_every == 0 || epoch == cfg.epochs);
    bool is_best = false;
    if (eval_now) {
      rec.evaluated = true;
      rec.dev = evaluate(m, dev_set, dev_sawr);
      if (rec.dev.exact > best_exact) {
        best_exact = rec.dev.exact;
        best_values = copy_param_values(m);
        result.best_epoch = epoch;
        result.best_dev_exact = rec.dev.exact;
        is_best = true;
      }
    }
    result.history.push_back(rec);

    if (!cfg.checkpoint_dir.empty()) {
      if (eval_now || (dev_set.empty() && epoch == cfg.epochs)) {
        std::ostringstream name;
        name << "epoch_" << epoch << ".ckpt";
        save_checkpoint((fs::path(cfg.checkpoint_dir) / name.str()).string(), m,
                        embedded);
      }
      metrics << metrics_row(rec, is_best) << "\n";
      metrics.flush();
    }

    if (cfg.stop_at_dev_exact > 0.0 && rec.evaluated &&
        rec.dev.exact >= cfg.stop_at_dev_exact) {
      result.stopped_early = true;
      break;
    }
  }

  if (result.best_epoch > 0) {
    restore_param_values(m, best_values);
  } else {
    result.best_epoch = result.history.back().epoch;
  }
  return result;
}

void TelConfig::validate() const {
  if (tel_epochs < 1) throw ConfigError("tel_epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be positive");
  if (weight_decay < 0.0 || !std::isfinite(weight_decay)) {
    throw ConfigError("weight_decay must be non-negative");
  }
}

TelAudit tel(std::vector<Model>& models, const std::vector<Sentence>& dev_set,
             const std::vector<Sentence>& test_set, const TelConfig& cfg,
             const TelProviders& providers, SyntheticCorpus* corpus_out) {
  cfg.validate();
  if (models.empty()) {
    throw InputError("transductive ensembling needs at least one model");
  }
  require_targets(dev_set, "dev");
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (models[i].tgt_vocab.tokens() != models[0].tgt_vocab.tokens()) {
      std::ostringstream os;
      os << "model " << i << " disagrees with model 0 on the target vocabulary";
      throw DataError(os.str());
    }
  }
  for (const Model& m : models) {
    if (!dev_set.empty()) require_provider(m, providers.dev, "dev");
    if (!test_set.empty()) require_provider(m, providers.test, "test");
  }

  // The transductive side contributes inputs only.
  std::vector<Sentence> test_inputs = test_set;
  for (Sentence& s : test_inputs) s.target.reset();

  TelAudit audit;
  std::vector<std::vector<std::vector<std::string>>> dev_preds;
  std::vector<std::vector<std::vector<std::string>>> test_preds;
  for (const Model& m : models) {
    dev_preds.push_back(predict_corpus(m, dev_set, providers.dev));
    test_preds.push_back(predict_corpus(m, test_inputs, providers.test));
    audit.dev_exact.push_back(score_predictions(dev_preds.back(), dev_set).exact);
  }

  std::size_t selected = 0;
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (audit.dev_exact[i] > audit.dev_exact[selected]) selected = i;
  }
  audit.selected_model = selected;
  require_provider(models[selected], providers.tune, "fine-tune");
  audit.selected_checksum = models[selected].checksum();
  audit.before = evaluate(models[selected], dev_set, providers.dev);

  SyntheticCorpus corpus;
  for (std::size_t i = 0; i < models.size(); ++i) {
    if (cfg.selected_only && i != selected) continue;
    for (std::size_t k = 0; k < dev_set.size(); ++k) {
      SyntheticPair pair;
      pair.input = dev_set[k];
      pair.input.target = dev_preds[i][k];
      pair.model_index = i;
      pair.from_dev = true;
      corpus.pairs.push_back(std::move(pair));
    }
    for (std::size_t k = 0; k < test_inputs.size(); ++k) {
      SyntheticPair pair;
      pair.input = test_inputs[k];
      pair.input.target = test_preds[i][k];
      pair.model_index = i;
      corpus.pairs.push_back(std::move(pair));
    }
  }
  audit.corpus_size = corpus.pairs.size();

  std::vector<Sentence> tune_set;
  tune_set.reserve(corpus.pairs.size());
  for (const SyntheticPair& pair : corpus.pairs) tune_set.push_back(pair.input);

  TrainConfig ft;
  ft.epochs = cfg.tel_epochs;
  ft.batch_size = cfg.batch_size;
  ft.lr = cfg.lr;
  ft.weight_decay = cfg.weight_decay;
  ft.seed = cfg.seed;
  ft.eval_every = 1;
  ft.checkpoint_dir = cfg.checkpoint_dir;
  ft.stop_at_dev_exact = 1.0;
  audit.fine_tune =
      train(models[selected], tune_set, dev_set, ft, providers.tune, providers.dev);

  audit.after = evaluate(models[selected], dev_set, providers.dev);
  if (corpus_out != nullptr) *corpus_out = std::move(corpus);
  return audit;
}

std::string tel_audit_json(const TelAudit& audit) {
  nlohmann::json j;
  j["corpus_size"] = audit.corpus_size;
  j["selected_model"] = audit.selected_model;
  j["dev_exact"] = audit.dev_exact;
  j["selected_checksum"] = audit.selected_checksum;
  j["before"] = {{"exact", audit.before.exact}, {"tree", audit.before.tree}};
  j["after"] = {{"exact", audit.after.exact}, {"tree", audit.after.tree}};
  j["fine_tune_epochs"] = audit.fine_tune.history.size();
  j["fine_tune_steps"] = audit.fine_tune.steps;
  return j.dump(2);
}

}  // namespace synparse

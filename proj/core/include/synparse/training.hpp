#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synparse/deptree.hpp"
#include "synparse/model.hpp"
#include "synparse/sawr.hpp"

namespace synparse {

struct TrainConfig {
  std::size_t epochs = 45;
  std::size_t batch_size = 16;
  double lr = 1e-4;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  std::size_t eval_every = 1;
  std::string precision = "f64";  // the only mode this build accepts
  std::string checkpoint_dir;     // empty: nothing written to disk
  double stop_at_dev_exact = 0.0;  // fraction; 0 disables early stop

  void validate() const;
};

struct EvalResult {
  double exact = 0.0;  // fractions in [0, 1]
  double tree = 0.0;
  std::size_t count = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean per-sentence teacher-forced loss
  bool evaluated = false;
  EvalResult dev;
  // Kept out of metrics.jsonl so that file stays run-to-run identical.
  double wall_seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t steps = 0;       // optimizer steps taken
  std::size_t best_epoch = 0;  // epoch whose parameters the model ends with
  double best_dev_exact = 0.0;
  bool stopped_early = false;
};

// Greedy decoding scored against gold targets. Prediction failures (for
// example an over-length source) count as misses; a sentence without a gold
// target is a data error.
EvalResult evaluate(const Model& m, const std::vector<Sentence>& dataset,
                    const SawrProvider* sawr = nullptr);

// Mini-batch training, in place. Batches are drawn from a seeded shuffle each
// epoch; the dev set is scored every eval_every epochs (and at the last one),
// and on return the model holds the parameters of the best dev Exact Match
// epoch, earlier epoch winning ties. An empty dev set skips evaluation and
// keeps the final parameters. With a checkpoint_dir, each evaluated epoch is
// saved as epoch_{k}.ckpt next to a streaming metrics.jsonl, one row per
// epoch; `embedded` rides along inside those checkpoints.
//
// Dataset targets carry no end marker; the loop appends one. Providers are
// consulted with each sentence's position in its own set, so file-backed
// vectors stay aligned under shuffling.
TrainResult train(Model& m, const std::vector<Sentence>& train_set,
                  const std::vector<Sentence>& dev_set, const TrainConfig& cfg,
                  const SawrProvider* train_sawr = nullptr,
                  const SawrProvider* dev_sawr = nullptr,
                  const TrainedSawrProvider* embedded = nullptr);

struct TelConfig {
  std::size_t tel_epochs = 5;
  bool selected_only = false;  // label the corpus with the selected model only
  std::size_t batch_size = 16;
  double lr = 1e-4;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;
  std::string checkpoint_dir;  // fine-tune checkpoints, optional

  void validate() const;
};

struct SyntheticPair {
  Sentence input;  // target replaced by the producing model's prediction
  std::size_t model_index = 0;
  bool from_dev = false;
};

struct SyntheticCorpus {
  std::vector<SyntheticPair> pairs;
};

struct TelAudit {
  std::size_t corpus_size = 0;
  std::size_t selected_model = 0;
  std::vector<double> dev_exact;        // per candidate, selection order
  std::uint64_t selected_checksum = 0;  // selected model before fine-tuning
  EvalResult before;                    // selected model on dev
  EvalResult after;                     // fine-tuned model on dev
  TrainResult fine_tune;
};

struct TelProviders {
  const SawrProvider* dev = nullptr;
  const SawrProvider* test = nullptr;
  // Consulted in synthetic-corpus order during fine-tuning, so it must not
  // depend on sentence indices (a trained provider qualifies).
  const SawrProvider* tune = nullptr;
};

// Transductive ensembling: every model labels the dev and test inputs, the
// best model by dev Exact Match (ties: lowest index) is fine-tuned on the
// pooled predictions for tel_epochs, dev-early-stopped at a perfect score.
// The selected model is fine-tuned in place; the audit names it. Test-side
// gold targets, if present, are stripped before anything reads them. Models
// must agree on the target vocabulary.
TelAudit tel(std::vector<Model>& models, const std::vector<Sentence>& dev_set,
             const std::vector<Sentence>& test_set, const TelConfig& cfg,
             const TelProviders& providers = {},
             SyntheticCorpus* corpus_out = nullptr);

std::string tel_audit_json(const TelAudit& audit);

}  // namespace synparse

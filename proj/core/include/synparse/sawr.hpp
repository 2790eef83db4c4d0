#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "synparse/deptree.hpp"
#include "synparse/tensor.hpp"
#include "synparse/vocab.hpp"

namespace synparse {

// Source of syntax-aware token vectors, one n x dim row-major matrix per
// sentence. `index` is the sentence's position in the active dataset; trained
// providers ignore it, file-backed ones use it for alignment.
class SawrProvider {
 public:
  virtual ~SawrProvider() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> vectors(std::size_t index, const Sentence& s) const = 0;
};

struct SawrTrainReport {
  double held_out_uas = 0.0;
  std::size_t epochs_run = 0;
  std::size_t train_sentences = 0;
  std::size_t held_out_sentences = 0;
};

// Single-layer bidirectional GRU over token embeddings with a bilinear
// dep/head scorer on top. The provider output is the concatenated forward and
// backward hidden state per token (dim = 2 * hidden).
class TrainedSawrProvider : public SawrProvider {
 public:
  std::size_t dim() const override { return 2 * hidden_; }
  std::vector<double> vectors(std::size_t index, const Sentence& s) const override;

  // Scores[i][j]: how strongly token j looks like the head of token i, with
  // the root scored on the diagonal. Used by training and diagnostics.
  Tensor head_scores(const Sentence& s) const;

  std::size_t hidden() const { return hidden_; }
  std::size_t embed_dim() const { return embed_dim_; }
  const Vocab& vocab() const { return vocab_; }
  const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }

  // Rebuild from checkpointed state; validates names and shapes.
  static TrainedSawrProvider restore(Vocab vocab, std::size_t embed_dim,
                                     std::size_t hidden,
                                     std::vector<std::pair<std::string, Tensor>> params);

  friend TrainedSawrProvider train_sawr_provider(const std::vector<Sentence>& dataset,
                                                 std::size_t dim, std::uint64_t seed,
                                                 SawrTrainReport* report);

 private:
  TrainedSawrProvider() = default;
  Tensor param(const std::string& name) const;
  Tensor states(const Sentence& s) const;  // n x 2*hidden

  Vocab vocab_;
  std::size_t embed_dim_ = 0;
  std::size_t hidden_ = 0;
  std::vector<std::pair<std::string, Tensor>> params_;
};

// Trains the recurrent head-prediction parser on sentences with gold heads,
// holding out a deterministic tail split to report attachment accuracy.
TrainedSawrProvider train_sawr_provider(const std::vector<Sentence>& dataset,
                                        std::size_t dim, std::uint64_t seed,
                                        SawrTrainReport* report = nullptr);

// Unlabeled attachment score of the provider's head scorer on `dataset`.
double sawr_uas(const TrainedSawrProvider& provider, const std::vector<Sentence>& dataset);

// Precomputed vectors keyed by dataset order.
class FileSawrProvider : public SawrProvider {
 public:
  FileSawrProvider(std::size_t dim, std::vector<std::vector<double>> sentences);
  std::size_t dim() const override { return dim_; }
  std::vector<double> vectors(std::size_t index, const Sentence& s) const override;
  std::size_t sentence_count() const { return sentences_.size(); }

 private:
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> sentences_;
};

FileSawrProvider load_sawr_file(const std::string& path);
void save_sawr_file(const std::string& path, std::size_t dim,
                    const std::vector<std::vector<double>>& sentences);

// Evaluates `provider` on every sentence and writes the result in the same
// file format, so trained vectors can be exported and reloaded.
void export_sawr_vectors(const SawrProvider& provider,
                         const std::vector<Sentence>& dataset, const std::string& path);

}  // namespace synparse

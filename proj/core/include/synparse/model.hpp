#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "synparse/attention.hpp"
#include "synparse/deptree.hpp"
#include "synparse/ops.hpp"
#include "synparse/tensor.hpp"
#include "synparse/vocab.hpp"

namespace synparse {

struct VariantFlags {
  bool pascal = false;
  bool sawrs = false;
  bool ca = false;

  // Stable name for files and logs: "baseline", "pascal+ca", ...
  std::string tag() const;
  bool any() const { return pascal || sawrs || ca; }
};

struct ModelConfig {
  std::size_t d_model = 512;
  std::size_t n_heads = 8;
  std::size_t d_ff = 2048;
  std::size_t n_enc_layers = 2;
  std::size_t n_dec_layers = 3;
  double dropout = 0.1;
  VariantFlags variants;
  std::vector<std::size_t> pascal_layers = {0};
  std::size_t pascal_heads = 0;  // 0 = every head of each listed layer
  double sigma = 1.0;
  std::size_t sawr_dim = 0;
  std::size_t d_link = 32;
  std::size_t max_len = 64;
  std::size_t src_vocab_size = 0;
  std::size_t tgt_vocab_size = 0;

  void validate() const;  // ConfigError naming the offending field
};

// Named parameter registry plus the two vocabularies. Parameters are leaves
// with gradients enabled, registered in a fixed order so seeded
// initialization and checksums are reproducible.
class Model {
 public:
  ModelConfig cfg;
  Vocab src_vocab;
  Vocab tgt_vocab;

  void add_param(const std::string& name, Tensor t);
  Tensor param(const std::string& name) const;
  bool has_param(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& params() const { return params_; }
  std::vector<Tensor> param_tensors() const;
  std::size_t param_count() const;
  std::uint64_t checksum() const;

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

Model build_model(const ModelConfig& cfg, std::uint64_t seed);

// Fixed sinusoidal position table, no parameters.
Tensor positional_encoding(std::size_t n, std::size_t d_model);

// What a forward pass actually consumed and produced, for purity assertions
// and heat-map export.
struct ForwardTrace {
  bool used_tree = false;
  bool used_sawr = false;
  bool has_distance = false;
  DistanceMatrix distance;
  std::vector<std::vector<Tensor>> enc_weights;  // [layer][head], n x n each
  std::vector<LinkProbabilities> links;          // one per encoder layer when CA is on
  std::vector<ConstituentPrior> priors;          // same indexing as links
};

struct EncodeOptions {
  bool training = false;
  Rng* rng = nullptr;  // dropout draws; required when training with dropout > 0
  ForwardTrace* trace = nullptr;
};

Tensor encode(const Model& m, const Sentence& s, const std::vector<double>* sawr,
              const EncodeOptions& opts = {});

// Causally masked decoder logits, one row per input position. `input_ids` are
// target-side ids starting with <sos>.
Tensor decode_logits(const Model& m, const Tensor& enc_out,
                     const std::vector<int>& input_ids, const EncodeOptions& opts = {});

// Teacher-forced mean token cross-entropy. `target` are surface target tokens
// ending with "<eos>"; unknown tokens raise VocabError.
Tensor decode_train_loss(const Model& m, const Tensor& enc_out,
                         const std::vector<std::string>& target,
                         const EncodeOptions& opts = {});

struct Prediction {
  Sentence source;
  std::vector<std::string> output_tokens;  // includes the trailing <eos> when emitted
  double score = 0.0;                      // sum of chosen-token log-probabilities

  // Output without the trailing <eos>, for scoring against gold.
  std::vector<std::string> surface_tokens() const;
};

Prediction predict_greedy(const Model& m, const Sentence& s,
                          const std::vector<double>* sawr,
                          ForwardTrace* trace = nullptr);

}  // namespace synparse

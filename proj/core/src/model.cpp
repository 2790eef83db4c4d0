#include "synparse/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

#include "synparse/error.hpp"

namespace synparse {

std::string VariantFlags::tag() const {
  std::string out;
  auto push = [&out](const char* name) {
    if (!out.empty()) out += '+';
    out += name;
  };
  if (pascal) push("pascal");
  if (sawrs) push("sawrs");
  if (ca) push("ca");
  return out.empty() ? "baseline" : out;
}

void ModelConfig::validate() const {
  if (d_model == 0) throw ConfigError("d_model must be positive");
  if (n_heads == 0) throw ConfigError("n_heads must be positive");
  if (d_model % n_heads != 0) {
    std::ostringstream os;
    os << "d_model " << d_model << " is not divisible by n_heads " << n_heads;
    throw ConfigError(os.str());
  }
  if (d_ff == 0) throw ConfigError("d_ff must be positive");
  if (n_enc_layers == 0) throw ConfigError("n_enc_layers must be positive");
  if (n_dec_layers == 0) throw ConfigError("n_dec_layers must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (max_len < 2) throw ConfigError("max_len must be at least 2");
  if (src_vocab_size < 5) throw ConfigError("src_vocab_size must cover the reserved symbols plus data");
  if (tgt_vocab_size < 5) throw ConfigError("tgt_vocab_size must cover the reserved symbols plus data");
  if (variants.pascal) {
    if (pascal_layers.empty()) throw ConfigError("pascal_layers must name at least one encoder layer");
    for (std::size_t l : pascal_layers) {
      if (l >= n_enc_layers) {
        std::ostringstream os;
        os << "pascal_layers entry " << l << " is out of range for " << n_enc_layers
           << " encoder layers";
        throw ConfigError(os.str());
      }
    }
    if (pascal_heads > n_heads) {
      std::ostringstream os;
      os << "pascal_heads " << pascal_heads << " exceeds n_heads " << n_heads;
      throw ConfigError(os.str());
    }
  }
  if (variants.sawrs && sawr_dim == 0) {
    throw ConfigError("sawr_dim must be positive when the sawrs variant is enabled");
  }
  if (variants.ca && d_link == 0) {
    throw ConfigError("d_link must be positive when the ca variant is enabled");
  }
}

void Model::add_param(const std::string& name, Tensor t) {
  if (index_.count(name)) throw ConfigError("duplicate parameter name: " + name);
  index_[name] = params_.size();
  params_.emplace_back(name, std::move(t));
}

Tensor Model::param(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter name: " + name);
  return params_[it->second].second;
}

bool Model::has_param(const std::string& name) const { return index_.count(name) != 0; }

std::vector<Tensor> Model::param_tensors() const {
  std::vector<Tensor> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(t);
  return out;
}

std::size_t Model::param_count() const {
  std::size_t total = 0;
  for (const auto& [name, t] : params_) total += t.numel();
  return total;
}

std::uint64_t Model::checksum() const {
  // FNV-1a over names, shapes, and raw value bytes, in registry order.
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& [name, t] : params_) {
    mix(name.data(), name.size());
    for (std::size_t dim : t.shape()) {
      std::uint64_t d = dim;
      mix(&d, sizeof d);
    }
    const auto& v = t.values();
    mix(v.data(), v.size() * sizeof(double));
  }
  return h;
}

namespace {

Tensor uniform_init(Shape shape, double bound, Rng& rng) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(std::move(shape), std::move(v), true);
}

// Fan-in scaled uniform for a {rows, cols} weight applied as x * W.
Tensor weight_init(std::size_t rows, std::size_t cols, Rng& rng) {
  return uniform_init({rows, cols}, 1.0 / std::sqrt(static_cast<double>(rows)), rng);
}

void add_attention_block(Model& m, const std::string& prefix, Rng& rng) {
  const std::size_t d = m.cfg.d_model;
  m.add_param(prefix + ".wq", weight_init(d, d, rng));
  m.add_param(prefix + ".bq", Tensor::zeros({d}, true));
  m.add_param(prefix + ".wk", weight_init(d, d, rng));
  m.add_param(prefix + ".bk", Tensor::zeros({d}, true));
  m.add_param(prefix + ".wv", weight_init(d, d, rng));
  m.add_param(prefix + ".bv", Tensor::zeros({d}, true));
  m.add_param(prefix + ".wo", weight_init(d, d, rng));
  m.add_param(prefix + ".bo", Tensor::zeros({d}, true));
}

void add_norm(Model& m, const std::string& name, std::size_t d) {
  m.add_param(name + ".gain", Tensor::ones({d}, true));
  m.add_param(name + ".bias", Tensor::zeros({d}, true));
}

void add_ffn(Model& m, const std::string& prefix, Rng& rng) {
  const std::size_t d = m.cfg.d_model;
  const std::size_t f = m.cfg.d_ff;
  m.add_param(prefix + ".ff1_w", weight_init(d, f, rng));
  m.add_param(prefix + ".ff1_b", Tensor::zeros({f}, true));
  m.add_param(prefix + ".ff2_w", weight_init(f, d, rng));
  m.add_param(prefix + ".ff2_b", Tensor::zeros({d}, true));
}

}  // namespace

Model build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  Rng rng(seed);
  const std::size_t d = cfg.d_model;

  m.add_param("src_embed", uniform_init({cfg.src_vocab_size, d},
                                        1.0 / std::sqrt(static_cast<double>(d)), rng));
  m.add_param("tgt_embed", uniform_init({cfg.tgt_vocab_size, d},
                                        1.0 / std::sqrt(static_cast<double>(d)), rng));
  if (cfg.variants.sawrs) {
    m.add_param("sawr_proj.w", weight_init(cfg.sawr_dim + d, d, rng));
    m.add_param("sawr_proj.b", Tensor::zeros({d}, true));
  }
  for (std::size_t l = 0; l < cfg.n_enc_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);
    add_attention_block(m, p + ".attn", rng);
    add_norm(m, p + ".ln1", d);
    add_ffn(m, p, rng);
    add_norm(m, p + ".ln2", d);
    if (cfg.variants.ca) {
      m.add_param(p + ".link_left", weight_init(d, cfg.d_link, rng));
      m.add_param(p + ".link_right", weight_init(d, cfg.d_link, rng));
    }
  }
  for (std::size_t l = 0; l < cfg.n_dec_layers; ++l) {
    const std::string p = "dec" + std::to_string(l);
    add_attention_block(m, p + ".self", rng);
    add_norm(m, p + ".ln1", d);
    add_attention_block(m, p + ".cross", rng);
    add_norm(m, p + ".ln2", d);
    add_ffn(m, p, rng);
    add_norm(m, p + ".ln3", d);
  }
  m.add_param("out.w", weight_init(d, cfg.tgt_vocab_size, rng));
  m.add_param("out.b", Tensor::zeros({cfg.tgt_vocab_size}, true));
  return m;
}

Tensor positional_encoding(std::size_t n, std::size_t d_model) {
  std::vector<double> v(n * d_model);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t i = 0; i + 1 < d_model; i += 2) {
      double rate = std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d_model));
      double angle = static_cast<double>(pos) / rate;
      v[pos * d_model + i] = std::sin(angle);
      v[pos * d_model + i + 1] = std::cos(angle);
    }
    if (d_model % 2 == 1) {
      double rate = std::pow(10000.0, static_cast<double>(d_model - 1) /
                                          static_cast<double>(d_model));
      v[pos * d_model + d_model - 1] = std::sin(static_cast<double>(pos) / rate);
    }
  }
  return Tensor::from({n, d_model}, std::move(v));
}

namespace {

Rng& dropout_rng(const Model& m, const EncodeOptions& opts) {
  static Rng unused(0);
  if (!opts.training || m.cfg.dropout == 0.0) return unused;
  if (opts.rng == nullptr) {
    throw ConfigError("training forward pass with dropout needs a random stream");
  }
  return *opts.rng;
}

Tensor maybe_dropout(const Model& m, const Tensor& x, const EncodeOptions& opts) {
  return dropout(x, m.cfg.dropout, dropout_rng(m, opts), opts.training);
}

// Multi-head attention over full projections, heads carved out by column
// slices. `pascal_head_count` heads receive the distance scaling; the prior,
// when defined, damps every head.
Tensor multi_head(const Model& m, const std::string& prefix, const Tensor& x_q,
                  const Tensor& x_kv, const Mask& mask, const Tensor& distance,
                  std::size_t pascal_head_count, const Tensor& prior,
                  std::vector<Tensor>* weights_out) {
  const std::size_t d = m.cfg.d_model;
  const std::size_t n_heads = m.cfg.n_heads;
  const std::size_t dh = d / n_heads;

  Tensor q_full = linear(x_q, m.param(prefix + ".wq"), m.param(prefix + ".bq"));
  Tensor k_full = linear(x_kv, m.param(prefix + ".wk"), m.param(prefix + ".bk"));
  Tensor v_full = linear(x_kv, m.param(prefix + ".wv"), m.param(prefix + ".bv"));

  Tensor merged;
  for (std::size_t h = 0; h < n_heads; ++h) {
    Tensor qh = slice_cols(q_full, h * dh, dh);
    Tensor kh = slice_cols(k_full, h * dh, dh);
    Tensor vh = slice_cols(v_full, h * dh, dh);
    const Tensor& dist = (h < pascal_head_count) ? distance : Tensor();
    AttentionResult r = attend(qh, kh, vh, mask, dist, prior);
    if (weights_out) weights_out->push_back(r.weights);
    merged = merged.defined() ? concat_last_dim(merged, r.output) : r.output;
  }
  return linear(merged, m.param(prefix + ".wo"), m.param(prefix + ".bo"));
}

Tensor ffn_block(const Model& m, const std::string& prefix, const Tensor& x) {
  Tensor h = relu(linear(x, m.param(prefix + ".ff1_w"), m.param(prefix + ".ff1_b")));
  return linear(h, m.param(prefix + ".ff2_w"), m.param(prefix + ".ff2_b"));
}

Tensor post_norm(const Model& m, const std::string& name, const Tensor& residual,
                 const Tensor& sublayer) {
  return layer_norm(add(residual, sublayer), m.param(name + ".gain"),
                    m.param(name + ".bias"));
}

std::vector<int> source_ids(const Model& m, const Sentence& s) {
  std::vector<int> ids;
  ids.reserve(s.size());
  for (const auto& tok : s.tokens) ids.push_back(m.src_vocab.id(tok));
  return ids;
}

}  // namespace

Tensor encode(const Model& m, const Sentence& s, const std::vector<double>* sawr,
              const EncodeOptions& opts) {
  const std::size_t n = s.size();
  if (n == 0) throw InputError("cannot encode an empty sentence");
  if (n > m.cfg.max_len) {
    std::ostringstream os;
    os << "sentence length " << n << " exceeds max_len " << m.cfg.max_len;
    throw InputError(os.str());
  }
  const std::size_t d = m.cfg.d_model;

  Tensor we = scale(embedding_lookup(m.param("src_embed"), source_ids(m, s)),
                    std::sqrt(static_cast<double>(d)));
  Tensor x;
  if (m.cfg.variants.sawrs) {
    if (sawr == nullptr) {
      throw InputError("sawrs variant needs syntax-aware vectors for the sentence");
    }
    if (sawr->size() != n * m.cfg.sawr_dim) {
      std::ostringstream os;
      os << "syntax-aware vectors have " << sawr->size() << " values, expected "
         << n * m.cfg.sawr_dim;
      throw DataError(os.str());
    }
    Tensor sv = Tensor::from({n, m.cfg.sawr_dim}, *sawr);
    x = linear(concat_last_dim(sv, we), m.param("sawr_proj.w"), m.param("sawr_proj.b"));
    if (opts.trace) opts.trace->used_sawr = true;
  } else {
    x = we;
  }
  x = maybe_dropout(m, add(x, positional_encoding(n, d)), opts);

  Tensor distance;
  if (m.cfg.variants.pascal) {
    if (s.heads.size() != n) {
      throw InputError("pascal variant needs a dependency head for every token");
    }
    DistanceMatrix dm = distance_matrix(s, m.cfg.sigma);
    distance = dm.as_tensor();
    if (opts.trace) {
      opts.trace->used_tree = true;
      opts.trace->has_distance = true;
      opts.trace->distance = std::move(dm);
    }
  }
  const std::size_t pascal_all = m.cfg.pascal_heads == 0 ? m.cfg.n_heads : m.cfg.pascal_heads;

  Mask mask = Mask::all(n, n);
  Tensor link_prev;
  for (std::size_t l = 0; l < m.cfg.n_enc_layers; ++l) {
    const std::string p = "enc" + std::to_string(l);

    Tensor prior;
    if (m.cfg.variants.ca) {
      LinkScorer scorer{m.param(p + ".link_left"), m.param(p + ".link_right")};
      Tensor scores = adjacent_link_scores(x, scorer);
      Tensor a = update_link_probs(scores, link_prev);
      prior = span_product(a);
      link_prev = a;
      if (opts.trace) {
        LinkProbabilities lp{a.values()};
        opts.trace->links.push_back(lp);
        opts.trace->priors.push_back(constituent_prior(lp, l));
      }
    }

    bool use_pascal = m.cfg.variants.pascal &&
                      std::find(m.cfg.pascal_layers.begin(), m.cfg.pascal_layers.end(), l) !=
                          m.cfg.pascal_layers.end();
    std::size_t pascal_count = use_pascal ? pascal_all : 0;

    std::vector<Tensor> head_weights;
    Tensor attn = multi_head(m, p + ".attn", x, x, mask,
                             use_pascal ? distance : Tensor(), pascal_count, prior,
                             opts.trace ? &head_weights : nullptr);
    if (opts.trace) opts.trace->enc_weights.push_back(std::move(head_weights));
    x = post_norm(m, p + ".ln1", x, maybe_dropout(m, attn, opts));
    x = post_norm(m, p + ".ln2", x, maybe_dropout(m, ffn_block(m, p, x), opts));
  }
  return x;
}

namespace {

// Decoder stack: token ids in, pre-output-projection states out.
Tensor decoder_states(const Model& m, const Tensor& enc_out,
                      const std::vector<int>& input_ids, const EncodeOptions& opts) {
  const std::size_t t_len = input_ids.size();
  const std::size_t d = m.cfg.d_model;
  Tensor x = scale(embedding_lookup(m.param("tgt_embed"), input_ids),
                   std::sqrt(static_cast<double>(d)));
  x = maybe_dropout(m, add(x, positional_encoding(t_len, d)), opts);

  Mask self_mask = Mask::causal(t_len);
  Mask cross_mask = Mask::all(t_len, enc_out.rows());
  for (std::size_t l = 0; l < m.cfg.n_dec_layers; ++l) {
    const std::string p = "dec" + std::to_string(l);
    Tensor self_attn = multi_head(m, p + ".self", x, x, self_mask, {}, 0, {}, nullptr);
    x = post_norm(m, p + ".ln1", x, maybe_dropout(m, self_attn, opts));
    Tensor cross_attn = multi_head(m, p + ".cross", x, enc_out, cross_mask, {}, 0, {}, nullptr);
    x = post_norm(m, p + ".ln2", x, maybe_dropout(m, cross_attn, opts));
    x = post_norm(m, p + ".ln3", x, maybe_dropout(m, ffn_block(m, p, x), opts));
  }
  return x;
}

}  // namespace

Tensor decode_logits(const Model& m, const Tensor& enc_out,
                     const std::vector<int>& input_ids, const EncodeOptions& opts) {
  if (input_ids.empty()) throw InputError("decoder input is empty");
  for (int id : input_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= m.cfg.tgt_vocab_size) {
      throw DataError("decoder input id out of vocabulary range");
    }
  }
  Tensor states = decoder_states(m, enc_out, input_ids, opts);
  return linear(states, m.param("out.w"), m.param("out.b"));
}

Tensor decode_train_loss(const Model& m, const Tensor& enc_out,
                         const std::vector<std::string>& target,
                         const EncodeOptions& opts) {
  if (target.empty()) throw InputError("target sequence is empty");
  if (target.back() != "<eos>") {
    throw InputError("target sequence must end with <eos>");
  }
  std::vector<int> labels;
  labels.reserve(target.size());
  for (const auto& tok : target) labels.push_back(m.tgt_vocab.id_strict(tok));

  std::vector<int> inputs;
  inputs.reserve(target.size());
  inputs.push_back(Vocab::kSos);
  inputs.insert(inputs.end(), labels.begin(), labels.end() - 1);

  return cross_entropy_rows(decode_logits(m, enc_out, inputs, opts), labels);
}

std::vector<std::string> Prediction::surface_tokens() const {
  std::vector<std::string> out = output_tokens;
  if (!out.empty() && out.back() == "<eos>") out.pop_back();
  return out;
}

Prediction predict_greedy(const Model& m, const Sentence& s,
                          const std::vector<double>* sawr, ForwardTrace* trace) {
  EncodeOptions opts;
  opts.trace = trace;
  Tensor enc_out = encode(m, s, sawr, opts);

  Prediction pred;
  pred.source = s;
  std::vector<int> ids = {Vocab::kSos};
  EncodeOptions dec_opts;
  while (ids.size() <= m.cfg.max_len) {
    Tensor probs = softmax_rows(decode_logits(m, enc_out, ids, dec_opts));

    const std::size_t last = ids.size() - 1;
    const std::size_t v = m.cfg.tgt_vocab_size;
    const auto& pv = probs.values();
    std::size_t best = 0;
    for (std::size_t j = 1; j < v; ++j) {
      if (pv[last * v + j] > pv[last * v + best]) best = j;
    }
    pred.score += std::log(pv[last * v + best]);
    pred.output_tokens.push_back(m.tgt_vocab.token(static_cast<int>(best)));
    ids.push_back(static_cast<int>(best));
    if (static_cast<int>(best) == Vocab::kEos) break;
  }
  return pred;
}

}  // namespace synparse

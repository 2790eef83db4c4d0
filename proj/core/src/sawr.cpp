#include "synparse/sawr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "synparse/error.hpp"
#include "synparse/ops.hpp"
#include "synparse/optim.hpp"

namespace synparse {
namespace {

const char* kGateNames[] = {"wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh"};

void check_gold_heads(const Sentence& s, std::size_t index) {
  if (s.heads.size() != s.tokens.size()) {
    std::ostringstream os;
    os << "sentence " << index << " has no gold heads";
    throw DataError(os.str());
  }
}

std::vector<int> provider_ids(const Vocab& vocab, const Sentence& s) {
  std::vector<int> ids;
  ids.reserve(s.size());
  for (const auto& tok : s.tokens) ids.push_back(vocab.id(tok));
  return ids;
}

// One GRU direction; `order` walks the positions, states come back indexed by
// position.
std::vector<Tensor> gru_direction(const Tensor& emb, const std::vector<Tensor>& gates,
                                  const std::vector<std::size_t>& order,
                                  std::size_t hidden) {
  const Tensor &wz = gates[0], &uz = gates[1], &bz = gates[2];
  const Tensor &wr = gates[3], &ur = gates[4], &br = gates[5];
  const Tensor &wh = gates[6], &uh = gates[7], &bh = gates[8];
  Tensor ones = Tensor::ones({1, hidden});
  Tensor h = Tensor::zeros({1, hidden});
  std::vector<Tensor> states(order.size());
  for (std::size_t t : order) {
    Tensor x = slice_rows(emb, t, 1);
    Tensor z = sigmoid(add_rowvec(add(matmul(x, wz), matmul(h, uz)), bz));
    Tensor r = sigmoid(add_rowvec(add(matmul(x, wr), matmul(h, ur)), br));
    Tensor cand =
        tanh_op(add_rowvec(add(matmul(x, wh), matmul(elementwise_mul(r, h), uh)), bh));
    h = add(elementwise_mul(sub(ones, z), h), elementwise_mul(z, cand));
    states[t] = h;
  }
  return states;
}

}  // namespace

Tensor TrainedSawrProvider::param(const std::string& name) const {
  for (const auto& [pname, t] : params_) {
    if (pname == name) return t;
  }
  throw ConfigError("unknown provider parameter: " + name);
}

Tensor TrainedSawrProvider::states(const Sentence& s) const {
  if (s.size() == 0) throw InputError("cannot embed an empty sentence");
  Tensor emb = embedding_lookup(param("embed"), provider_ids(vocab_, s));

  std::vector<std::size_t> fwd_order(s.size()), bwd_order(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    fwd_order[i] = i;
    bwd_order[i] = s.size() - 1 - i;
  }
  auto gates = [this](const char* prefix) {
    std::vector<Tensor> out;
    for (const char* g : kGateNames) out.push_back(param(std::string(prefix) + g));
    return out;
  };
  std::vector<Tensor> fwd = gru_direction(emb, gates("fwd."), fwd_order, hidden_);
  std::vector<Tensor> bwd = gru_direction(emb, gates("bwd."), bwd_order, hidden_);

  std::vector<Tensor> rows;
  rows.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    rows.push_back(concat_last_dim(fwd[i], bwd[i]));
  }
  return stack_rows(rows);
}

std::vector<double> TrainedSawrProvider::vectors(std::size_t, const Sentence& s) const {
  return states(s).values();
}

Tensor TrainedSawrProvider::head_scores(const Sentence& s) const {
  Tensor h = states(s);
  Tensor dep = matmul(h, param("dep_w"));
  Tensor head = matmul(h, param("head_w"));
  const double rank = static_cast<double>(param("dep_w").cols());
  Tensor bilinear = scale(matmul(dep, transpose(head)), 1.0 / std::sqrt(rank));
  // Candidate-head bias, the affine half of the biaffine form: how head-like
  // token j is regardless of the dependent.
  Tensor head_bias = reshape(matmul(h, param("head_b")), {s.size()});
  return add_rowvec(bilinear, head_bias);
}

TrainedSawrProvider TrainedSawrProvider::restore(
    Vocab vocab, std::size_t embed_dim, std::size_t hidden,
    std::vector<std::pair<std::string, Tensor>> params) {
  if (embed_dim == 0 || hidden == 0) throw ConfigError("provider dims must be positive");
  TrainedSawrProvider p;
  p.vocab_ = std::move(vocab);
  p.embed_dim_ = embed_dim;
  p.hidden_ = hidden;
  p.params_ = std::move(params);
  const std::size_t expected = 1 + 2 * 9 + 3;
  if (p.params_.size() != expected) {
    throw FormatError("provider parameter list has the wrong length");
  }
  auto expect_shape = [&p](const std::string& name, const Shape& shape) {
    Tensor t = p.param(name);
    if (t.shape() != shape) {
      throw FormatError("provider parameter " + name + " has shape " +
                        shape_str(t.shape()) + ", expected " + shape_str(shape));
    }
  };
  expect_shape("embed", {p.vocab_.size(), embed_dim});
  for (const char* prefix : {"fwd.", "bwd."}) {
    expect_shape(std::string(prefix) + "wz", {embed_dim, hidden});
    expect_shape(std::string(prefix) + "uz", {hidden, hidden});
    expect_shape(std::string(prefix) + "bz", {hidden});
    expect_shape(std::string(prefix) + "wr", {embed_dim, hidden});
    expect_shape(std::string(prefix) + "ur", {hidden, hidden});
    expect_shape(std::string(prefix) + "br", {hidden});
    expect_shape(std::string(prefix) + "wh", {embed_dim, hidden});
    expect_shape(std::string(prefix) + "uh", {hidden, hidden});
    expect_shape(std::string(prefix) + "bh", {hidden});
  }
  expect_shape("dep_w", {2 * hidden, hidden});
  expect_shape("head_w", {2 * hidden, hidden});
  expect_shape("head_b", {2 * hidden, 1});
  return p;
}

double sawr_uas(const TrainedSawrProvider& provider, const std::vector<Sentence>& dataset) {
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Sentence& s = dataset[i];
    check_gold_heads(s, i);
    const Tensor scores_t = provider.head_scores(s);
    const auto& scores = scores_t.values();
    const std::size_t n = s.size();
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t best = 0;
      for (std::size_t j = 1; j < n; ++j) {
        if (scores[t * n + j] > scores[t * n + best]) best = j;
      }
      if (best == s.heads[t]) ++correct;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

TrainedSawrProvider train_sawr_provider(const std::vector<Sentence>& dataset,
                                        std::size_t dim, std::uint64_t seed,
                                        SawrTrainReport* report) {
  if (dataset.empty()) throw InputError("sawr training needs a non-empty dataset");
  if (dim == 0 || dim % 2 != 0) {
    throw ConfigError("sawr dim must be a positive even number (two directions)");
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) check_gold_heads(dataset[i], i);

  const std::size_t hidden = dim / 2;
  const std::size_t embed_dim = hidden;

  std::vector<std::vector<std::string>> token_seqs;
  token_seqs.reserve(dataset.size());
  for (const auto& s : dataset) token_seqs.push_back(s.tokens);

  TrainedSawrProvider p;
  p.vocab_ = Vocab::build(token_seqs);
  p.embed_dim_ = embed_dim;
  p.hidden_ = hidden;

  Rng rng(seed);
  auto init = [&rng](Shape shape, double fan_in) {
    std::vector<double> v(shape_numel(shape));
    const double bound = 1.0 / std::sqrt(fan_in);
    for (double& x : v) x = rng.uniform(-bound, bound);
    return Tensor::from(std::move(shape), std::move(v), true);
  };
  p.params_.emplace_back("embed",
                         init({p.vocab_.size(), embed_dim}, static_cast<double>(embed_dim)));
  for (const char* prefix : {"fwd.", "bwd."}) {
    for (const char* g : kGateNames) {
      std::string name = std::string(prefix) + g;
      if (g[0] == 'b') {
        p.params_.emplace_back(name, Tensor::zeros({hidden}, true));
      } else if (g[0] == 'w') {
        p.params_.emplace_back(name, init({embed_dim, hidden},
                                          static_cast<double>(embed_dim)));
      } else {
        p.params_.emplace_back(name, init({hidden, hidden}, static_cast<double>(hidden)));
      }
    }
  }
  p.params_.emplace_back("dep_w", init({2 * hidden, hidden}, 2.0 * hidden));
  p.params_.emplace_back("head_w", init({2 * hidden, hidden}, 2.0 * hidden));
  p.params_.emplace_back("head_b", init({2 * hidden, 1}, 2.0 * hidden));

  // Deterministic tail split for the attachment-accuracy report.
  const std::size_t held = dataset.size() >= 10 ? dataset.size() / 10 : 1;
  const std::size_t train_n = dataset.size() > held ? dataset.size() - held : dataset.size();
  std::vector<Sentence> train_split(dataset.begin(), dataset.begin() + train_n);
  std::vector<Sentence> held_split(dataset.begin() + train_n, dataset.end());
  if (held_split.empty()) held_split = train_split;

  std::vector<Tensor> tensors;
  for (const auto& [name, t] : p.params_) tensors.push_back(t);
  AdamWConfig ocfg;
  ocfg.lr = 5e-3;
  AdamW opt(tensors, ocfg);

  const std::size_t max_epochs = 40;
  double uas = 0.0;
  std::size_t epochs_run = 0;
  std::vector<std::size_t> order(train_split.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t idx : order) {
      const Sentence& s = train_split[idx];
      std::vector<int> targets(s.heads.begin(), s.heads.end());
      opt.zero_grad();
      Tensor loss = cross_entropy_rows(p.head_scores(s), targets);
      if (!std::isfinite(loss.item())) {
        throw TrainingError("sawr training diverged at epoch " + std::to_string(epoch));
      }
      loss.backward();
      opt.step();
    }
    ++epochs_run;
    uas = sawr_uas(p, held_split);
    if (uas >= 0.98) break;
  }
  if (report) {
    report->held_out_uas = uas;
    report->epochs_run = epochs_run;
    report->train_sentences = train_split.size();
    report->held_out_sentences = held_split.size();
  }
  return p;
}

FileSawrProvider::FileSawrProvider(std::size_t dim,
                                   std::vector<std::vector<double>> sentences)
    : dim_(dim), sentences_(std::move(sentences)) {
  if (dim_ == 0) throw ConfigError("sawr dim must be positive");
  for (std::size_t i = 0; i < sentences_.size(); ++i) {
    if (sentences_[i].size() % dim_ != 0) {
      std::ostringstream os;
      os << "sentence " << i << " holds " << sentences_[i].size()
         << " values, not a multiple of dim " << dim_;
      throw DataError(os.str());
    }
  }
}

std::vector<double> FileSawrProvider::vectors(std::size_t index, const Sentence& s) const {
  if (index >= sentences_.size()) {
    std::ostringstream os;
    os << "sentence index " << index << " not present (file holds "
       << sentences_.size() << " sentences)";
    throw DataError(os.str());
  }
  const auto& stored = sentences_[index];
  if (stored.size() != s.size() * dim_) {
    std::ostringstream os;
    os << "sentence " << index << " has " << stored.size() / dim_
       << " stored rows but " << s.size() << " tokens";
    throw DataError(os.str());
  }
  return stored;
}

FileSawrProvider load_sawr_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sawr file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("sawr file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("dim") || !j.contains("sentences")) {
    throw FormatError("sawr file " + path + " needs {\"dim\", \"sentences\"}");
  }
  try {
    std::size_t dim = j.at("dim").get<std::size_t>();
    std::vector<std::vector<double>> sentences;
    for (const auto& sent : j.at("sentences")) {
      std::vector<double> flat;
      for (const auto& row : sent) {
        for (const auto& v : row) flat.push_back(v.get<double>());
      }
      sentences.push_back(std::move(flat));
    }
    return FileSawrProvider(dim, std::move(sentences));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("sawr file " + path + " has a malformed entry: " + e.what());
  }
}

void save_sawr_file(const std::string& path, std::size_t dim,
                    const std::vector<std::vector<double>>& sentences) {
  if (dim == 0) throw ConfigError("sawr dim must be positive");
  nlohmann::json j;
  j["dim"] = dim;
  j["sentences"] = nlohmann::json::array();
  for (const auto& flat : sentences) {
    if (flat.size() % dim != 0) throw DataError("sentence values not a multiple of dim");
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r * dim < flat.size(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t c = 0; c < dim; ++c) row.push_back(flat[r * dim + c]);
      rows.push_back(std::move(row));
    }
    j["sentences"].push_back(std::move(rows));
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sawr file: " + path);
  out << j.dump(2) << "\n";
}

void export_sawr_vectors(const SawrProvider& provider,
                         const std::vector<Sentence>& dataset, const std::string& path) {
  std::vector<std::vector<double>> sentences;
  sentences.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    sentences.push_back(provider.vectors(i, dataset[i]));
  }
  save_sawr_file(path, provider.dim(), sentences);
}

}  // namespace synparse

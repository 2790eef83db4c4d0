#include "synparse/heatmap.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "synparse/error.hpp"

namespace synparse {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// Plain-text PGM, one matrix per file, scaled to the matrix maximum.
std::string to_pgm(const std::vector<double>& values, std::size_t rows,
                   std::size_t cols) {
  double max = 0.0;
  for (double v : values) max = std::max(max, v);
  std::ostringstream os;
  os << "P2\n" << cols << " " << rows << "\n255\n";
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      int level = 0;
      if (max > 0.0) {
        level = static_cast<int>(std::lround(values[i * cols + j] / max * 255.0));
        level = std::min(255, std::max(0, level));
      }
      os << level << (j + 1 < cols ? " " : "\n");
    }
  }
  return os.str();
}

nlohmann::json matrix_json(const std::vector<double>& values, std::size_t n) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < n; ++j) row.push_back(values[i * n + j]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> sawr_vector(const Model& m, const Sentence& s,
                                const SawrProvider* sawr, std::size_t index) {
  if (!m.cfg.variants.sawrs) return {};
  if (sawr == nullptr) {
    throw ConfigError("the sawrs variant needs a vector provider");
  }
  return sawr->vectors(index, s);
}

}  // namespace

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw DimensionError("pearson needs two equal-length non-empty vectors");
  }
  const double n = static_cast<double>(a.size());
  double mean_a = 0.0;
  double mean_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mean_a += a[i];
    mean_b += b[i];
  }
  mean_a /= n;
  mean_b /= n;
  double cov = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - mean_a;
    const double db = b[i] - mean_b;
    cov += da * db;
    var_a += da * da;
    var_b += db * db;
  }
  if (var_a <= 0.0 || var_b <= 0.0) {
    throw NumericError("pearson is undefined for a constant input");
  }
  return cov / std::sqrt(var_a * var_b);
}

std::vector<double> row_normalized(const DistanceMatrix& d) {
  std::vector<double> out(d.values);
  for (std::size_t i = 0; i < d.n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < d.n; ++j) sum += out[i * d.n + j];
    if (sum <= 0.0) throw NumericError("proximity row sums to zero");
    for (std::size_t j = 0; j < d.n; ++j) out[i * d.n + j] /= sum;
  }
  return out;
}

std::vector<double> mean_head_weights(const ForwardTrace& trace, std::size_t layer) {
  if (layer >= trace.enc_weights.size()) {
    std::ostringstream os;
    os << "layer " << layer << " is out of range; the trace holds "
       << trace.enc_weights.size() << " layers";
    throw InputError(os.str());
  }
  const auto& heads = trace.enc_weights[layer];
  std::vector<double> mean(heads[0].values().size(), 0.0);
  for (const Tensor& h : heads) {
    const auto& v = h.values();
    for (std::size_t i = 0; i < v.size(); ++i) mean[i] += v[i];
  }
  for (double& v : mean) v /= static_cast<double>(heads.size());
  return mean;
}

double distance_alignment(const Model& m, const std::vector<Sentence>& sentences,
                          std::size_t layer, const SawrProvider* sawr) {
  if (sentences.empty()) throw InputError("alignment needs at least one sentence");
  double sum = 0.0;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const Sentence& s = sentences[i];
    if (s.size() < 2) {
      throw InputError("alignment needs sentences of at least two tokens");
    }
    std::vector<double> vec = sawr_vector(m, s, sawr, i);
    ForwardTrace trace;
    EncodeOptions opts;
    opts.trace = &trace;
    encode(m, s, vec.empty() ? nullptr : &vec, opts);
    DistanceMatrix d = distance_matrix(s, m.cfg.sigma);
    sum += pearson(mean_head_weights(trace, layer), row_normalized(d));
  }
  return sum / static_cast<double>(sentences.size());
}

HeatmapExport export_heatmap(const Model& m, const Sentence& s,
                             const SawrProvider* sawr, std::size_t index,
                             const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create heatmap dir " + dir);

  std::vector<double> vec = sawr_vector(m, s, sawr, index);
  ForwardTrace trace;
  EncodeOptions opts;
  opts.trace = &trace;
  encode(m, s, vec.empty() ? nullptr : &vec, opts);

  HeatmapExport result;
  const std::size_t n = s.size();
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(fs::path(dir) / name, text);
    result.files.push_back(name);
  };

  nlohmann::json attention;
  attention["sentence_index"] = index;
  attention["tokens"] = s.tokens;
  attention["heads"] = s.heads;
  attention["variants"] = m.cfg.variants.tag();
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < trace.enc_weights.size(); ++l) {
    nlohmann::json layer;
    layer["layer"] = l;
    nlohmann::json heads = nlohmann::json::array();
    for (std::size_t h = 0; h < trace.enc_weights[l].size(); ++h) {
      const auto& w = trace.enc_weights[l][h].values();
      heads.push_back(matrix_json(w, n));
      std::ostringstream name;
      name << "attention_l" << l << "_h" << h << ".pgm";
      emit(name.str(), to_pgm(w, n, n));
    }
    layer["heads"] = std::move(heads);
    layers.push_back(std::move(layer));
  }
  attention["layers"] = std::move(layers);
  emit("attention.json", attention.dump(2) + "\n");

  if (m.cfg.variants.pascal) {
    DistanceMatrix d = distance_matrix(s, m.cfg.sigma);
    DistanceMatrix d_sym = symmetrize(d);
    nlohmann::json dist;
    dist["sigma"] = m.cfg.sigma;
    dist["d"] = matrix_json(d.values, n);
    dist["d_sym"] = matrix_json(d_sym.values, n);
    dist["d_row_normalized"] = matrix_json(row_normalized(d), n);
    emit("distance.json", dist.dump(2) + "\n");
    emit("distance.pgm", to_pgm(d.values, n, n));
    emit("distance_sym.pgm", to_pgm(d_sym.values, n, n));
  }

  if (m.cfg.variants.ca) {
    nlohmann::json ca;
    nlohmann::json ca_layers = nlohmann::json::array();
    for (std::size_t l = 0; l < trace.priors.size(); ++l) {
      nlohmann::json layer;
      layer["layer"] = trace.priors[l].layer;
      layer["links"] = trace.links[l].a;
      layer["c"] = matrix_json(trace.priors[l].values, n);
      ca_layers.push_back(std::move(layer));
      std::ostringstream name;
      name << "ca_prior_l" << l << ".pgm";
      emit(name.str(), to_pgm(trace.priors[l].values, n, n));
    }
    ca["layers"] = std::move(ca_layers);
    emit("ca_priors.json", ca.dump(2) + "\n");
  }

  return result;
}

}  // namespace synparse

#include "synparse/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"
#include "synparse/error.hpp"

namespace synparse {
namespace {

constexpr char kMagic[8] = {'S', 'Y', 'N', 'P', 'A', 'R', 'S', 'E'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["d_model"] = c.d_model;
  j["n_heads"] = c.n_heads;
  j["d_ff"] = c.d_ff;
  j["n_enc_layers"] = c.n_enc_layers;
  j["n_dec_layers"] = c.n_dec_layers;
  j["dropout"] = c.dropout;
  nlohmann::json variants = nlohmann::json::array();
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
  j["src_vocab_size"] = c.src_vocab_size;
  j["tgt_vocab_size"] = c.tgt_vocab_size;
  return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.n_enc_layers = j.at("n_enc_layers").get<std::size_t>();
  c.n_dec_layers = j.at("n_dec_layers").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.variants = {};
  for (const auto& v : j.at("variants")) {
    const std::string name = v.get<std::string>();
    if (name == "pascal") {
      c.variants.pascal = true;
    } else if (name == "sawrs") {
      c.variants.sawrs = true;
    } else if (name == "ca") {
      c.variants.ca = true;
    } else {
      throw FormatError("unknown variant in checkpoint: " + name);
    }
  }
  c.pascal_layers = j.at("pascal_layers").get<std::vector<std::size_t>>();
  c.pascal_heads = j.at("pascal_heads").get<std::size_t>();
  c.sigma = j.at("sigma").get<double>();
  c.sawr_dim = j.at("sawr_dim").get<std::size_t>();
  c.d_link = j.at("d_link").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.src_vocab_size = j.at("src_vocab_size").get<std::size_t>();
  c.tgt_vocab_size = j.at("tgt_vocab_size").get<std::size_t>();
  return c;
}

nlohmann::json param_manifest(const std::vector<std::pair<std::string, Tensor>>& params) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [name, t] : params) {
    out.push_back({{"name", name}, {"shape", t.shape()}});
  }
  return out;
}

void append_payload(std::vector<double>& payload,
                    const std::vector<std::pair<std::string, Tensor>>& params) {
  for (const auto& [name, t] : params) {
    payload.insert(payload.end(), t.values().begin(), t.values().end());
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& m,
                     const TrainedSawrProvider* provider) {
  nlohmann::json header;
  header["model"] = config_to_json(m.cfg);
  header["src_vocab"] = m.src_vocab.tokens();
  header["tgt_vocab"] = m.tgt_vocab.tokens();
  header["params"] = param_manifest(m.params());
  if (provider) {
    header["sawr_provider"] = {{"embed_dim", provider->embed_dim()},
                               {"hidden", provider->hidden()},
                               {"vocab", provider->vocab().tokens()},
                               {"params", param_manifest(provider->params())}};
  } else {
    header["sawr_provider"] = nullptr;
  }

  std::vector<double> payload;
  append_payload(payload, m.params());
  if (provider) append_payload(payload, provider->params());

  const std::string header_text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof kMagic);
  std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  std::uint64_t header_len = header_text.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof header_len);
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  std::uint64_t payload_len = payload.size();
  out.write(reinterpret_cast<const char*>(&payload_len), sizeof payload_len);
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
  if (!out) throw IoError("short write on checkpoint: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);

  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw FormatError("not a checkpoint file: " + path);
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (!in || version != kVersion) {
    throw FormatError("unsupported checkpoint version in " + path);
  }
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof header_len);
  if (!in) throw FormatError("truncated checkpoint header in " + path);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("truncated checkpoint header in " + path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint header is not valid JSON: " + std::string(e.what()));
  }

  std::uint64_t payload_len = 0;
  in.read(reinterpret_cast<char*>(&payload_len), sizeof payload_len);
  if (!in) throw FormatError("truncated checkpoint payload in " + path);
  std::vector<double> payload(payload_len);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload_len * sizeof(double)));
  if (!in) throw FormatError("truncated checkpoint payload in " + path);

  try {
    LoadedCheckpoint result;
    result.model.cfg = config_from_json(header.at("model"));
    result.model.cfg.validate();
    result.model.src_vocab =
        Vocab::from_tokens(header.at("src_vocab").get<std::vector<std::string>>());
    result.model.tgt_vocab =
        Vocab::from_tokens(header.at("tgt_vocab").get<std::vector<std::string>>());

    std::size_t offset = 0;
    auto take = [&payload, &offset, &path](const std::string& name, Shape shape) {
      const std::size_t n = shape_numel(shape);
      if (offset + n > payload.size()) {
        throw FormatError("checkpoint payload too short for parameter " + name + " in " +
                          path);
      }
      std::vector<double> v(payload.begin() + static_cast<std::ptrdiff_t>(offset),
                            payload.begin() + static_cast<std::ptrdiff_t>(offset + n));
      offset += n;
      return Tensor::from(std::move(shape), std::move(v), true);
    };

    for (const auto& entry : header.at("params")) {
      result.model.add_param(entry.at("name").get<std::string>(),
                             take(entry.at("name").get<std::string>(),
                                  entry.at("shape").get<Shape>()));
    }
    const auto& sp = header.at("sawr_provider");
    if (!sp.is_null()) {
      std::vector<std::pair<std::string, Tensor>> pparams;
      for (const auto& entry : sp.at("params")) {
        const std::string name = entry.at("name").get<std::string>();
        pparams.emplace_back(name, take(name, entry.at("shape").get<Shape>()));
      }
      result.provider = std::make_shared<TrainedSawrProvider>(TrainedSawrProvider::restore(
          Vocab::from_tokens(sp.at("vocab").get<std::vector<std::string>>()),
          sp.at("embed_dim").get<std::size_t>(), sp.at("hidden").get<std::size_t>(),
          std::move(pparams)));
    }
    if (offset != payload.size()) {
      throw FormatError("checkpoint payload has trailing data in " + path);
    }
    return result;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint header is missing fields: " + std::string(e.what()));
  }
}

}  // namespace synparse

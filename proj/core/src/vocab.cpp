#include "synparse/vocab.hpp"

#include "synparse/error.hpp"

namespace synparse {

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
  add("<sos>");
  add("<eos>");
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& sequences) {
  Vocab v;
  for (const auto& seq : sequences) {
    for (const std::string& tok : seq) {
      if (!v.token_to_id_.count(tok)) v.add(tok);
    }
  }
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < 4 || id_to_token[0] != "<pad>" || id_to_token[1] != "<unk>" ||
      id_to_token[2] != "<sos>" || id_to_token[3] != "<eos>") {
    throw FormatError("vocabulary list must start with <pad> <unk> <sos> <eos>");
  }
  Vocab v;
  v.id_to_token_.clear();
  v.token_to_id_.clear();
  for (std::string& tok : id_to_token) {
    if (v.token_to_id_.count(tok)) throw FormatError("duplicate vocabulary token " + tok);
    v.add(tok);
  }
  return v;
}

void Vocab::add(const std::string& token) {
  token_to_id_.emplace(token, static_cast<int>(id_to_token_.size()));
  id_to_token_.push_back(token);
}

int Vocab::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

int Vocab::id_strict(const std::string& token) const {
  auto it = token_to_id_.find(token);
  if (it == token_to_id_.end()) {
    throw VocabError("token '" + token + "' not in vocabulary");
  }
  return it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw DataError("vocabulary id " + std::to_string(id) + " out of range (size " +
                    std::to_string(id_to_token_.size()) + ")");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(const std::string& token) const {
  return token_to_id_.count(token) != 0;
}

}  // namespace synparse

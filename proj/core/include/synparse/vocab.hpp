#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace synparse {

// Closed vocabulary with four reserved symbols. Built from data in
// first-occurrence order, so identical corpora give identical id maps.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kSos = 2;
  static constexpr int kEos = 3;

  Vocab();
  static Vocab build(const std::vector<std::vector<std::string>>& sequences);
  static Vocab from_tokens(std::vector<std::string> id_to_token);

  // Lenient lookup: unseen tokens map to UNK.
  int id(const std::string& token) const;
  // Strict lookup: unseen tokens throw VocabError.
  int id_strict(const std::string& token) const;
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  void add(const std::string& token);
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace synparse

#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "nextcat/common.hpp"

namespace nextcat {

// Whitespace + punctuation tokenizer with a frequency-capped vocabulary.
// Punctuation characters become single-character tokens. The category
// label words and the special tokens are always in-vocabulary.
class Tokenizer {
public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kUnk = 3;

  Tokenizer() = default;

  // Build from a text corpus keeping at most max_vocab tokens (specials and
  // forced tokens included), most frequent first, ties lexicographic.
  static Tokenizer build(const std::vector<std::string>& corpus, int max_vocab);

  static std::vector<std::string> split(const std::string& text);

  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;
  int id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(int id) const;
  int vocab_size() const { return static_cast<int>(tokens_.size()); }

  void save(const std::string& path) const;  // JSON array of tokens
  static Tokenizer load(const std::string& path);

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  void rebuild_index();
};

}  // namespace nextcat

#include "nextcat/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

namespace nextcat {

namespace {

bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> v = {"<pad>", "<bos>", "<eos>", "<unk>"};
  return v;
}

// Label sentences must always tokenize without UNK.
const std::vector<std::string>& forced_tokens() {
  static const std::vector<std::string> v = {"Grocery", "Clothing", "Gas",
                                             "stations", "Other", "."};
  return v;
}

}  // namespace

std::vector<std::string> Tokenizer::split(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else if (is_punct(c)) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
      out.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Tokenizer Tokenizer::build(const std::vector<std::string>& corpus, int max_vocab) {
  if (max_vocab < 16) throw ConfigError("tokenizer: max_vocab too small");
  std::map<std::string, std::int64_t> freq;
  for (const auto& text : corpus)
    for (auto& tok : split(text)) freq[tok]++;

  Tokenizer t;
  t.tokens_ = special_tokens();
  for (const auto& tok : forced_tokens()) {
    t.tokens_.push_back(tok);
    freq.erase(tok);
  }

  std::vector<std::pair<std::string, std::int64_t>> ranked(freq.begin(),
                                                           freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     if (a.second != b.second) return a.second > b.second;
                     return a.first < b.first;
                   });
  for (const auto& [tok, count] : ranked) {
    if (static_cast<int>(t.tokens_.size()) >= max_vocab) break;
    (void)count;
    t.tokens_.push_back(tok);
  }
  t.rebuild_index();
  return t;
}

void Tokenizer::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    index_[tokens_[i]] = static_cast<int>(i);
}

std::vector<int> Tokenizer::encode(const std::string& text) const {
  std::vector<int> out;
  for (const auto& tok : split(text)) out.push_back(id_of(tok));
  return out;
}

std::string Tokenizer::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ' ';
    out += token_of(id);
  }
  return out;
}

int Tokenizer::id_of(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Tokenizer::token_of(int id) const {
  if (id < 0 || id >= vocab_size())
    throw DimensionError("tokenizer: id " + std::to_string(id) +
                         " outside vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

void Tokenizer::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << nlohmann::json(tokens_).dump() << '\n';
}

Tokenizer Tokenizer::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  Tokenizer t;
  nlohmann::json j = nlohmann::json::parse(f);
  t.tokens_ = j.get<std::vector<std::string>>();
  t.rebuild_index();
  return t;
}

}  // namespace nextcat

#include "nextcat/instructions.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace nextcat {

namespace {

constexpr const char* kTaskInstruction =
    "Task Instruction: Based on my demographic details and historical "
    "transaction data provided below, predict my next purchase category.";

const std::string& require(const std::optional<std::string>& field,
                           const char* name) {
  if (!field) throw Error(std::string("serialize: profile missing ") + name);
  return *field;
}

}  // namespace

InstructionSample serialize(const CustomerProfile& profile,
                            const std::vector<Transaction>& window,
                            Category label) {
  if (window.empty()) throw Error("serialize: empty transaction window");
  for (std::size_t i = 1; i < window.size(); ++i)
    if (window[i].timestamp < window[i - 1].timestamp)
      throw Error("serialize: window not chronologically ordered");
  if (!profile.income_group)
    throw Error("serialize: profile missing income_group");

  Money total = 0;
  std::string cats, dates, amounts;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (i > 0) {
      cats += ", ";
      dates += ", ";
      amounts += ", ";
    }
    cats += category_name(window[i].category);
    dates += window[i].timestamp.to_string();
    amounts += "$" + money_to_string(window[i].amount);
    total += window[i].amount;
  }

  std::ostringstream in;
  in << kTaskInstruction << '\n';
  in << "Task Input: I am " << profile.customer_id << ". I am " << profile.age
     << " years old, " << require(profile.marital_status, "marital_status")
     << ' ' << require(profile.gender, "gender") << ", "
     << require(profile.education, "education")
     << " graduate, and I am working as a " << require(profile.job, "job")
     << ". In terms of my income state, I belong to the "
     << income_group_name(*profile.income_group)
     << "-income group. Recently, I made " << window.size()
     << " transactions. In these transactions, I have spent a total of $"
     << money_to_string(total)
     << " dollars. I bought items from the following categories, "
        "chronologically: "
     << cats
     << ". I bought from these categories on the following dates, "
        "chronologically: "
     << dates
     << ". I spent the following money for these items, chronologically: "
     << amounts << ".";

  InstructionSample s;
  s.customer_id = profile.customer_id;
  s.instruction_input = in.str();
  s.instruction_output = category_output_sentence(label);
  s.label = label;
  s.seq_len = static_cast<int>(window.size());
  return s;
}

Corpus build_corpus(const Dataset& dataset, const WindowSpec& spec) {
  if (spec.seq_len < 1) throw ConfigError("seq_len must be >= 1");
  const int k = spec.seq_len;

  std::map<std::int64_t, const CustomerProfile*> profiles;
  for (const auto& p : dataset.profiles) profiles[p.customer_id] = &p;
  std::map<std::int64_t, std::vector<Transaction>> by_customer;
  for (const auto& t : dataset.transactions)
    by_customer[t.customer_id].push_back(t);

  Corpus corpus;
  for (const auto& [id, profile] : profiles) {
    auto it = by_customer.find(id);
    if (it == by_customer.end() ||
        static_cast<int>(it->second.size()) < k + 1) {
      corpus.skipped++;
      continue;
    }
    const auto& txs = it->second;
    std::vector<Transaction> window(txs.end() - (k + 1), txs.end() - 1);
    Category label = txs.back().category;
    corpus.samples.push_back(serialize(*profile, window, label));
  }
  return corpus;
}

void export_jsonl(const std::vector<InstructionSample>& samples,
                  const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  for (const auto& s : samples) {
    nlohmann::ordered_json j;
    j["customer_id"] = s.customer_id;
    j["seq_len"] = s.seq_len;
    j["instruction_input"] = s.instruction_input;
    j["instruction_output"] = s.instruction_output;
    f << j.dump() << '\n';
  }
  if (!f.good()) throw IoError("write failed for " + path);
}

std::vector<InstructionSample> import_jsonl(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  std::vector<InstructionSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    InstructionSample s;
    try {
      s.customer_id = j.at("customer_id");
      s.seq_len = j.at("seq_len");
      s.instruction_input = j.at("instruction_input");
      s.instruction_output = j.at("instruction_output");
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    auto label = category_from_output_sentence(s.instruction_output);
    if (!label)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": unknown instruction_output '" + s.instruction_output +
                       "'");
    s.label = *label;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace nextcat

#pragma once

#include <string>
#include <vector>

#include "nextcat/data.hpp"

namespace nextcat {

struct InstructionSample {
  std::int64_t customer_id = 0;
  std::string instruction_input;
  std::string instruction_output;  // "Grocery." | "Clothing." | "Gas stations." | "Other."
  Category label = Category::Other;
  int seq_len = 0;

  bool operator==(const InstructionSample&) const = default;
};

struct WindowSpec {
  int seq_len = 9;  // last seq_len transactions in, (seq_len+1)-th category out
};

// Instantiate the fixed instruction template for one customer window.
// Throws Error naming the missing field when the profile is incomplete.
InstructionSample serialize(const CustomerProfile& profile,
                            const std::vector<Transaction>& window,
                            Category label);

struct Corpus {
  std::vector<InstructionSample> samples;  // sorted by customer_id
  std::int64_t skipped = 0;  // customers with < seq_len+1 transactions
};

// One sample per eligible customer: the last (k+1)-transaction window.
Corpus build_corpus(const Dataset& dataset, const WindowSpec& spec);

void export_jsonl(const std::vector<InstructionSample>& samples,
                  const std::string& path);
std::vector<InstructionSample> import_jsonl(const std::string& path);

}  // namespace nextcat

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nextcat/common.hpp"

namespace nextcat {

// Merchant categories. The fourth bucket absorbs everything outside the
// three tracked ones.
enum class Category : int { Grocery = 0, Clothing = 1, GasStations = 2, Other = 3 };

inline constexpr int kNumCategories = 4;

// Narrative surface used both in the category list and (with a trailing
// period) as the instruction-output sentence.
const std::string& category_name(Category c);
std::optional<Category> category_from_name(const std::string& name);
std::string category_output_sentence(Category c);
std::optional<Category> category_from_output_sentence(const std::string& s);

// Calendar date at day resolution, stored as days since 1970-01-01.
class Date {
public:
  Date() : days_(0) {}
  explicit Date(std::int64_t days_since_epoch) : days_(days_since_epoch) {}
  static Date from_ymd(int year, int month, int day);
  static Date parse(const std::string& iso);  // YYYY-MM-DD

  std::int64_t days() const { return days_; }
  std::string to_string() const;  // ISO-8601 YYYY-MM-DD

  auto operator<=>(const Date&) const = default;

private:
  std::int64_t days_;
};

// Currency stored as integer cents so sums and 2-decimal formatting are exact.
using Money = std::int64_t;

std::string money_to_string(Money cents);              // "39.82"
Money money_parse(const std::string& s);               // inverse
Money money_from_dollars(double dollars);              // rounds half up

struct Transaction {
  std::int64_t customer_id = 0;
  Date timestamp;
  Money amount = 0;  // cents, > 0
  Category category = Category::Other;

  bool operator==(const Transaction&) const = default;
};

enum class IncomeGroup : int { Low = 0, Middle = 1, High = 2 };

const std::string& income_group_name(IncomeGroup g);
std::optional<IncomeGroup> income_group_from_name(const std::string& name);

// Demographic fields are optional strings; an absent value models the
// incomplete records the preprocessing stage must drop. Surfaces are the
// narrative strings used verbatim in instruction text ("married", "male",
// "secondary school", "private employee").
struct CustomerProfile {
  std::int64_t customer_id = 0;
  int age = 0;  // [18, 90]
  std::optional<std::string> gender;
  std::optional<std::string> marital_status;
  std::optional<std::string> education;
  std::optional<std::string> job;
  Money income = 0;  // annual, cents
  std::optional<IncomeGroup> income_group;

  bool complete() const {
    return gender && marital_status && education && job;
  }

  bool operator==(const CustomerProfile&) const = default;
};

struct Dataset {
  std::string name;  // "bank_a", "bank_b", or custom
  std::vector<CustomerProfile> profiles;
  // Sorted by (customer_id, timestamp, insertion order).
  std::vector<Transaction> transactions;

  bool operator==(const Dataset&) const = default;
};

// Canonical demographic value lists shared by the generator and the
// instruction serializer.
const std::vector<std::string>& gender_values();
const std::vector<std::string>& marital_values();
const std::vector<std::string>& education_values();
const std::vector<std::string>& job_values();

}  // namespace nextcat

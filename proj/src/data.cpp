#include "nextcat/data.hpp"

#include <cstdio>
#include <cstdlib>

namespace nextcat {

namespace {

const std::array<std::string, 4> kCategoryNames = {"Grocery", "Clothing",
                                                   "Gas stations", "Other"};
const std::array<std::string, 3> kIncomeGroupNames = {"low", "middle", "high"};

}  // namespace

const std::string& category_name(Category c) {
  return kCategoryNames[static_cast<int>(c)];
}

std::optional<Category> category_from_name(const std::string& name) {
  for (int i = 0; i < kNumCategories; ++i)
    if (kCategoryNames[i] == name) return static_cast<Category>(i);
  return std::nullopt;
}

std::string category_output_sentence(Category c) { return category_name(c) + "."; }

std::optional<Category> category_from_output_sentence(const std::string& s) {
  if (s.empty() || s.back() != '.') return std::nullopt;
  return category_from_name(s.substr(0, s.size() - 1));
}

// Civil-calendar conversions (proleptic Gregorian), day resolution.
static std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

static void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

Date Date::from_ymd(int year, int month, int day) {
  return Date(days_from_civil(year, month, day));
}

Date Date::parse(const std::string& iso) {
  int y = 0, m = 0, d = 0;
  if (std::sscanf(iso.c_str(), "%d-%d-%d", &y, &m, &d) != 3 || m < 1 ||
      m > 12 || d < 1 || d > 31)
    throw ParseError("bad date '" + iso + "', expected YYYY-MM-DD");
  Date date = from_ymd(y, m, d);
  int y2, m2, d2;
  civil_from_days(date.days_, y2, m2, d2);
  if (y2 != y || m2 != m || d2 != d)
    throw ParseError("bad date '" + iso + "', no such calendar day");
  return date;
}

std::string Date::to_string() const {
  int y, m, d;
  civil_from_days(days_, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

std::string money_to_string(Money cents) {
  bool neg = cents < 0;
  Money v = neg ? -cents : cents;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", neg ? "-" : "",
                static_cast<long long>(v / 100), static_cast<long long>(v % 100));
  return buf;
}

Money money_parse(const std::string& s) {
  auto dot = s.find('.');
  if (dot == std::string::npos || s.size() - dot != 3)
    throw ParseError("bad amount '" + s + "', expected 2 decimals");
  Money dollars = std::strtoll(s.substr(0, dot).c_str(), nullptr, 10);
  Money cents = std::strtoll(s.substr(dot + 1).c_str(), nullptr, 10);
  bool neg = !s.empty() && s[0] == '-';
  Money mag = (neg ? -dollars : dollars) * 100 + cents;
  return neg ? -mag : mag;
}

Money money_from_dollars(double dollars) {
  double c = dollars * 100.0;
  return static_cast<Money>(c >= 0 ? c + 0.5 : c - 0.5);
}

const std::string& income_group_name(IncomeGroup g) {
  return kIncomeGroupNames[static_cast<int>(g)];
}

std::optional<IncomeGroup> income_group_from_name(const std::string& name) {
  for (int i = 0; i < 3; ++i)
    if (kIncomeGroupNames[i] == name) return static_cast<IncomeGroup>(i);
  return std::nullopt;
}

const std::vector<std::string>& gender_values() {
  static const std::vector<std::string> v = {"male", "female"};
  return v;
}

const std::vector<std::string>& marital_values() {
  static const std::vector<std::string> v = {"married", "single", "divorced",
                                             "widowed"};
  return v;
}

const std::vector<std::string>& education_values() {
  static const std::vector<std::string> v = {
      "primary school", "secondary school", "high school", "university"};
  return v;
}

const std::vector<std::string>& job_values() {
  static const std::vector<std::string> v = {
      "private employee", "public employee", "self-employed", "teacher",
      "engineer",         "nurse",           "driver",        "accountant"};
  return v;
}

}  // namespace nextcat

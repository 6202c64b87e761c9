#include "nextcat/preprocess.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace nextcat {

namespace {

Dataset keep_users(const Dataset& dataset,
                   const std::unordered_set<std::int64_t>& keep) {
  Dataset out;
  out.name = dataset.name;
  for (const auto& p : dataset.profiles)
    if (keep.count(p.customer_id)) out.profiles.push_back(p);
  for (const auto& t : dataset.transactions)
    if (keep.count(t.customer_id)) out.transactions.push_back(t);
  return out;
}

}  // namespace

std::string report_to_json(const PreprocessReport& r) {
  nlohmann::ordered_json j;
  j["users_in"] = r.users_in;
  j["users_removed_incomplete"] = r.users_removed_incomplete;
  j["users_removed_low_activity"] = r.users_removed_low_activity;
  j["users_out"] = r.users_out;
  j["categories_in"] = r.categories_in;
  j["transactions_out"] = r.transactions_out;
  return j.dump(2);
}

PreprocessReport report_from_json(const std::string& json_text) {
  auto j = nlohmann::json::parse(json_text);
  PreprocessReport r;
  r.users_in = j.at("users_in");
  r.users_removed_incomplete = j.at("users_removed_incomplete");
  r.users_removed_low_activity = j.at("users_removed_low_activity");
  r.users_out = j.at("users_out");
  r.categories_in = j.at("categories_in");
  r.transactions_out = j.at("transactions_out");
  return r;
}

Dataset filter_complete_demographics(const Dataset& dataset) {
  std::unordered_set<std::int64_t> keep;
  for (const auto& p : dataset.profiles)
    if (p.complete()) keep.insert(p.customer_id);
  return keep_users(dataset, keep);
}

Dataset filter_min_activity(const Dataset& dataset, int min_tx,
                            int min_distinct) {
  if (min_tx < 1) throw ConfigError("min_tx must be >= 1");
  if (min_distinct < 1) throw ConfigError("min_distinct must be >= 1");
  std::unordered_map<std::int64_t, int> counts;
  std::unordered_map<std::int64_t, std::unordered_set<int>> cats;
  for (const auto& t : dataset.transactions) {
    counts[t.customer_id]++;
    cats[t.customer_id].insert(static_cast<int>(t.category));
  }
  std::unordered_set<std::int64_t> keep;
  for (const auto& p : dataset.profiles) {
    auto it = counts.find(p.customer_id);
    if (it != counts.end() && it->second >= min_tx &&
        static_cast<int>(cats[p.customer_id].size()) >= min_distinct)
      keep.insert(p.customer_id);
  }
  return keep_users(dataset, keep);
}

Dataset map_to_other(const Dataset& dataset, const std::set<Category>& kept) {
  if (kept.empty()) throw ConfigError("kept category set empty");
  Dataset out = dataset;
  for (auto& t : out.transactions)
    if (!kept.count(t.category)) t.category = Category::Other;
  return out;
}

Dataset derive_income_group(const Dataset& dataset) {
  Dataset out = dataset;
  const std::size_t n = out.profiles.size();
  if (n == 0) return out;
  std::vector<Money> incomes;
  incomes.reserve(n);
  for (const auto& p : out.profiles) {
    if (p.income <= 0) throw ConfigError("income must be positive for terciles");
    incomes.push_back(p.income);
  }
  std::sort(incomes.begin(), incomes.end());
  // Inclusive tercile cut points; equal incomes at a boundary fall into the
  // lower group.
  Money t1 = incomes[(n + 2) / 3 - 1];
  Money t2 = incomes[(2 * n + 2) / 3 - 1];
  for (auto& p : out.profiles) {
    if (p.income <= t1)
      p.income_group = IncomeGroup::Low;
    else if (p.income <= t2)
      p.income_group = IncomeGroup::Middle;
    else
      p.income_group = IncomeGroup::High;
  }
  return out;
}

std::pair<Dataset, PreprocessReport> run_pipeline(const Dataset& dataset,
                                                  int min_tx, int min_distinct) {
  PreprocessReport report;
  report.users_in = static_cast<std::int64_t>(dataset.profiles.size());
  std::unordered_set<int> raw_cats;
  for (const auto& t : dataset.transactions)
    raw_cats.insert(static_cast<int>(t.category));
  report.categories_in = static_cast<std::int64_t>(raw_cats.size());

  Dataset d = filter_complete_demographics(dataset);
  report.users_removed_incomplete =
      report.users_in - static_cast<std::int64_t>(d.profiles.size());

  d = map_to_other(d);

  std::int64_t before = static_cast<std::int64_t>(d.profiles.size());
  d = filter_min_activity(d, min_tx, min_distinct);
  report.users_removed_low_activity =
      before - static_cast<std::int64_t>(d.profiles.size());

  d = derive_income_group(d);

  report.users_out = static_cast<std::int64_t>(d.profiles.size());
  report.transactions_out = static_cast<std::int64_t>(d.transactions.size());
  return {std::move(d), report};
}

}  // namespace nextcat

#pragma once

#include <set>

#include "nextcat/data.hpp"

namespace nextcat {

struct PreprocessReport {
  std::int64_t users_in = 0;
  std::int64_t users_removed_incomplete = 0;
  std::int64_t users_removed_low_activity = 0;
  std::int64_t users_out = 0;
  std::int64_t categories_in = 0;
  std::int64_t transactions_out = 0;

  bool operator==(const PreprocessReport&) const = default;
};

std::string report_to_json(const PreprocessReport& r);
PreprocessReport report_from_json(const std::string& json_text);

// Drop profiles missing any demographic field, together with their transactions.
Dataset filter_complete_demographics(const Dataset& dataset);

// Keep users with >= min_tx transactions spanning >= min_distinct categories.
Dataset filter_min_activity(const Dataset& dataset, int min_tx = 10,
                            int min_distinct = 2);

// Consolidate categories outside `kept` into Other; order and all other
// fields untouched.
Dataset map_to_other(const Dataset& dataset,
                     const std::set<Category>& kept = {Category::Grocery,
                                                       Category::Clothing,
                                                       Category::GasStations});

// Income groups by empirical terciles over this dataset's profiles, ties
// toward the lower group.
Dataset derive_income_group(const Dataset& dataset);

// Fixed order: complete-demographics -> Other-mapping -> min-activity ->
// income groups. Distinct-category counts are therefore measured after
// consolidation.
std::pair<Dataset, PreprocessReport> run_pipeline(const Dataset& dataset,
                                                  int min_tx = 10,
                                                  int min_distinct = 2);

}  // namespace nextcat

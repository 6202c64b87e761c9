#pragma once

#include <array>
#include <map>
#include <vector>

#include "nextcat/data.hpp"

namespace nextcat {

// Time-period convention for the per-customer frequency counts. Per-event
// treats each transaction as its own period, which reduces the indicator
// average to the within-window relative frequency. Calendar-week groups
// transactions into ISO weeks before applying the indicator.
enum class PeriodScheme { PerEvent, CalendarWeek };

struct FrequencyModel {
  // customer_id -> probability vector over the 4 categories
  std::map<std::int64_t, std::array<double, 4>> probabilities;
  // argmax tie order, most preferred first (descending global training
  // frequency, ties by enum order)
  std::array<Category, 4> tie_order = {Category::Grocery, Category::Other,
                                       Category::GasStations, Category::Clothing};
};

// Fit from per-customer transaction windows.
FrequencyModel fit(const std::map<std::int64_t, std::vector<Transaction>>& windows,
                   PeriodScheme scheme = PeriodScheme::PerEvent);

Category predict(const FrequencyModel& model, std::int64_t customer_id);

void save_model(const FrequencyModel& model, const std::string& path);
FrequencyModel load_model(const std::string& path);

}  // namespace nextcat

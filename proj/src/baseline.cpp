#include "nextcat/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace nextcat {

FrequencyModel fit(const std::map<std::int64_t, std::vector<Transaction>>& windows,
                   PeriodScheme scheme) {
  FrequencyModel model;
  std::array<std::int64_t, 4> global_counts{};

  for (const auto& [id, window] : windows) {
    if (window.empty()) throw Error("baseline: empty window for customer " +
                                    std::to_string(id));
    std::array<double, 4> p{};
    if (scheme == PeriodScheme::PerEvent) {
      // one period per transaction: indicator average = relative frequency
      for (const auto& t : window) p[static_cast<int>(t.category)] += 1.0;
      for (auto& v : p) v /= static_cast<double>(window.size());
    } else {
      // periods = distinct ISO weeks touched by the window
      std::set<std::int64_t> weeks;
      for (const auto& t : window) weeks.insert((t.timestamp.days() + 3) / 7);
      std::array<std::set<std::int64_t>, 4> active;
      for (const auto& t : window)
        active[static_cast<int>(t.category)].insert((t.timestamp.days() + 3) / 7);
      for (int c = 0; c < 4; ++c)
        p[c] = static_cast<double>(active[c].size()) /
               static_cast<double>(weeks.size());
      double sum = p[0] + p[1] + p[2] + p[3];
      if (sum > 0)
        for (auto& v : p) v /= sum;
    }
    for (const auto& t : window) global_counts[static_cast<int>(t.category)]++;
    model.probabilities[id] = p;
  }

  // tie order: descending global training frequency, enum order on ties
  std::array<int, 4> idx = {0, 1, 2, 3};
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return global_counts[a] > global_counts[b];
  });
  for (int i = 0; i < 4; ++i) model.tie_order[i] = static_cast<Category>(idx[i]);
  return model;
}

Category predict(const FrequencyModel& model, std::int64_t customer_id) {
  auto it = model.probabilities.find(customer_id);
  if (it == model.probabilities.end())
    throw Error("baseline: unknown customer " + std::to_string(customer_id));
  const auto& p = it->second;
  Category best = model.tie_order[0];
  double best_p = -1.0;
  for (Category c : model.tie_order) {
    double v = p[static_cast<int>(c)];
    if (v > best_p + 1e-15) {
      best_p = v;
      best = c;
    }
  }
  return best;
}

void save_model(const FrequencyModel& model, const std::string& path) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json probs;
  for (const auto& [id, p] : model.probabilities)
    probs[std::to_string(id)] = p;
  j["probabilities"] = probs;
  nlohmann::json order = nlohmann::json::array();
  for (Category c : model.tie_order) order.push_back(static_cast<int>(c));
  j["tie_order"] = order;
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << j.dump(2) << '\n';
}

FrequencyModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  FrequencyModel model;
  for (const auto& [key, val] : j.at("probabilities").items()) {
    std::array<double, 4> p{};
    for (int i = 0; i < 4; ++i) p[i] = val.at(i);
    model.probabilities[std::stoll(key)] = p;
  }
  for (int i = 0; i < 4; ++i)
    model.tie_order[i] = static_cast<Category>(j.at("tie_order").at(i).get<int>());
  return model;
}

}  // namespace nextcat

#include "nextcat/eval.hpp"

#include <algorithm>
#include <map>
#include <thread>

namespace nextcat {

namespace {

struct EvalCase {
  const CustomerProfile* profile;
  std::vector<Transaction> history;  // first k of the window
  Category label;                    // category of transaction k+1
};

}  // namespace

std::vector<MetricsReport> run_protocol(const std::vector<Predictor>& models,
                                        const Dataset& test_set,
                                        const std::vector<int>& lengths) {
  if (models.empty()) throw ConfigError("run_protocol: no models");
  if (lengths.empty()) throw ConfigError("run_protocol: no sequence lengths");
  for (int k : lengths)
    if (k < 1) throw ConfigError("run_protocol: sequence length must be >= 1");

  std::map<std::int64_t, const CustomerProfile*> profiles;
  for (const auto& p : test_set.profiles) profiles[p.customer_id] = &p;

  // Transactions arrive sorted by (customer_id, timestamp), so grouping is a
  // single scan.
  std::map<std::int64_t, std::vector<const Transaction*>> by_customer;
  for (const auto& tx : test_set.transactions)
    by_customer[tx.customer_id].push_back(&tx);

  std::vector<MetricsReport> reports;
  for (const auto& model : models) {
    for (int k : lengths) {
      if (!model.only_lengths.empty() &&
          std::find(model.only_lengths.begin(), model.only_lengths.end(), k) ==
              model.only_lengths.end())
        continue;

      std::vector<EvalCase> cases;
      std::int64_t skipped = 0;
      for (const auto& [cid, txs] : by_customer) {
        auto pit = profiles.find(cid);
        if (pit == profiles.end())
          throw PrerequisiteError("run_protocol: customer " +
                                  std::to_string(cid) + " has no profile");
        if (static_cast<int>(txs.size()) < k + 1) {
          ++skipped;
          continue;
        }
        EvalCase ec;
        ec.profile = pit->second;
        std::size_t start = txs.size() - static_cast<std::size_t>(k + 1);
        for (std::size_t i = start; i + 1 < txs.size(); ++i)
          ec.history.push_back(*txs[i]);
        ec.label = txs.back()->category;
        cases.push_back(std::move(ec));
      }
      if (cases.empty())
        throw PrerequisiteError(
            "run_protocol: no customer in '" + test_set.name + "' has " +
            std::to_string(k + 1) + " transactions");

      // Each slot is owned by exactly one worker, so the result is identical
      // to a serial pass regardless of thread count.
      std::vector<Category> preds(cases.size(), Category::Other);
      unsigned hw = std::thread::hardware_concurrency();
      std::size_t n_threads = std::min<std::size_t>(hw ? hw : 1, cases.size());
      if (n_threads <= 1) {
        for (std::size_t i = 0; i < cases.size(); ++i)
          preds[i] = model.predict(*cases[i].profile, cases[i].history);
      } else {
        std::vector<std::thread> workers;
        for (std::size_t t = 0; t < n_threads; ++t) {
          workers.emplace_back([&, t]() {
            for (std::size_t i = t; i < cases.size(); i += n_threads)
              preds[i] = model.predict(*cases[i].profile, cases[i].history);
          });
        }
        for (auto& w : workers) w.join();
      }

      std::vector<Category> truths;
      truths.reserve(cases.size());
      for (const auto& ec : cases) truths.push_back(ec.label);

      MetricsReport r = compute_metrics(truths, preds);
      r.model = model.name;
      r.dataset = test_set.name;
      r.seq_len = k;
      r.skipped = skipped;
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

}  // namespace nextcat

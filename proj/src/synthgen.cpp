#include "nextcat/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nextcat/rng.hpp"

namespace nextcat {

EducationBucket education_bucket(const std::string& education) {
  if (education == "primary school" || education == "secondary school")
    return EducationBucket::Basic;
  return EducationBucket::Higher;
}

void validate(const GeneratorConfig& config) {
  if (config.n_customers < 0) throw ConfigError("n_customers must be >= 0");
  if (config.window_end < config.window_start)
    throw ConfigError("date_window is empty (end before start)");
  double tsum = 0.0;
  for (double t : config.target_marginals) {
    if (t < 0.0) throw ConfigError("target_marginals entry negative");
    tsum += t;
  }
  if (std::abs(tsum - 1.0) > 1e-9)
    throw ConfigError("target_marginals must sum to 1");
  if (config.segments.empty()) throw ConfigError("segments empty");
  bool covered[3][2] = {};
  for (const auto& seg : config.segments) {
    for (int r = 0; r < 4; ++r) {
      double rsum = 0.0;
      for (int c = 0; c < 4; ++c) {
        if (seg.transitions[r][c] < 0.0)
          throw ConfigError("segments: transition matrix entry negative");
        rsum += seg.transitions[r][c];
      }
      if (std::abs(rsum - 1.0) > 1e-9)
        throw ConfigError("segments: transition matrix row does not sum to 1");
    }
    bool& cell = covered[static_cast<int>(seg.income_group)]
                        [static_cast<int>(seg.education)];
    if (cell) throw ConfigError("segments: duplicate (income_group, education) cell");
    cell = true;
  }
  for (int g = 0; g < 3; ++g)
    for (int b = 0; b < 2; ++b)
      if (!covered[g][b])
        throw ConfigError("segments: missing (income_group, education) cell");
  if (config.min_tx < 1 || config.max_tx < config.min_tx)
    throw ConfigError("min_tx/max_tx range invalid");
  if (config.low_activity_min_tx < 1 ||
      config.low_activity_max_tx < config.low_activity_min_tx)
    throw ConfigError("low_activity tx range invalid");
  for (double r : {config.missing_demographics_rate, config.low_activity_rate})
    if (r < 0.0 || r > 1.0) throw ConfigError("planted-defect rate outside [0,1]");
  for (const auto& a : config.amounts)
    if (a.log_sigma < 0.0) throw ConfigError("amounts: log_sigma negative");
}

std::array<double, 4> stationary_distribution(const TransitionMatrix& m) {
  std::array<double, 4> pi = {0.25, 0.25, 0.25, 0.25};
  for (int it = 0; it < 2000; ++it) {
    std::array<double, 4> next{};
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) next[k] += pi[j] * m[j][k];
    double diff = 0.0;
    for (int k = 0; k < 4; ++k) diff += std::abs(next[k] - pi[k]);
    pi = next;
    if (diff < 1e-14) break;
  }
  return pi;
}

double segment_weight(const GeneratorConfig& config, const SegmentSpec& seg) {
  // income group uniform over 3; education label uniform over the lexicon
  int in_bucket = 0;
  for (const auto& e : education_values())
    if (education_bucket(e) == seg.education) ++in_bucket;
  (void)config;
  return (1.0 / 3.0) * in_bucket / static_cast<double>(education_values().size());
}

double bayes_accuracy(const GeneratorConfig& config, int seq_len) {
  validate(config);
  if (seq_len < 1) throw ConfigError("seq_len must be >= 1");
  double acc = 0.0;
  for (const auto& seg : config.segments) {
    std::array<double, 4> dist = stationary_distribution(seg.transitions);
    // state distribution after seq_len observations, the first of which is
    // drawn from the stationary distribution
    for (int step = 1; step < seq_len; ++step) {
      std::array<double, 4> next{};
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) next[k] += dist[j] * seg.transitions[j][k];
      dist = next;
    }
    double seg_acc = 0.0;
    for (int j = 0; j < 4; ++j) {
      double best = 0.0;
      for (int k = 0; k < 4; ++k) best = std::max(best, seg.transitions[j][k]);
      seg_acc += dist[j] * best;
    }
    acc += segment_weight(config, seg) * seg_acc;
  }
  return acc;
}

GeneratorConfig perturb_transitions(const GeneratorConfig& config, double epsilon) {
  GeneratorConfig out = config;
  for (auto& seg : out.segments)
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c)
        seg.transitions[r][c] =
            (1.0 - epsilon) * seg.transitions[r][c] + epsilon * 0.25;
  return out;
}

namespace {

const SegmentSpec& segment_for(const GeneratorConfig& config, IncomeGroup g,
                               EducationBucket b) {
  for (const auto& seg : config.segments)
    if (seg.income_group == g && seg.education == b) return seg;
  throw ConfigError("segments: missing (income_group, education) cell");
}

}  // namespace

Dataset generate(const GeneratorConfig& config) {
  validate(config);
  const int n = config.n_customers;
  Rng root(config.seed);

  // Exact planted-defect assignment: shuffle customer indices once, mark the
  // first floor(rate*n) incomplete and the following floor(rate*n) low-activity.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng plant = root.substream(0xD1CE);
  plant.shuffle(order);
  int n_incomplete = static_cast<int>(config.missing_demographics_rate * n);
  int n_low = static_cast<int>(config.low_activity_rate * n);
  std::vector<int> defect(n, 0);
  for (int i = 0; i < n_incomplete; ++i) defect[order[i]] = 1;
  for (int i = n_incomplete; i < n_incomplete + n_low && i < n; ++i)
    defect[order[i]] = 2;

  Dataset ds;
  ds.name = config.name;
  ds.profiles.reserve(n);
  const std::int64_t window_days =
      config.window_end.days() - config.window_start.days() + 1;

  for (int i = 0; i < n; ++i) {
    Rng rng = root.substream(static_cast<std::uint64_t>(i) + 1);
    CustomerProfile p;
    p.customer_id = 1000001 + i;
    p.age = static_cast<int>(rng.uniform_int(18, 90));
    p.gender = gender_values()[rng.next_u64() % gender_values().size()];
    p.marital_status = marital_values()[rng.next_u64() % marital_values().size()];
    p.education = education_values()[rng.next_u64() % education_values().size()];
    p.job = job_values()[rng.next_u64() % job_values().size()];
    IncomeGroup group = static_cast<IncomeGroup>(rng.uniform_int(0, 2));
    double dollars = 0.0;
    switch (group) {
      case IncomeGroup::Low: dollars = rng.uniform(15000.0, 40000.0); break;
      case IncomeGroup::Middle: dollars = rng.uniform(40001.0, 80000.0); break;
      case IncomeGroup::High: dollars = rng.uniform(80001.0, 200000.0); break;
    }
    p.income = money_from_dollars(dollars);

    const SegmentSpec& seg =
        segment_for(config, group, education_bucket(*p.education));

    int tx_count = defect[i] == 2
                       ? static_cast<int>(rng.uniform_int(
                             config.low_activity_min_tx, config.low_activity_max_tx))
                       : static_cast<int>(rng.uniform_int(config.min_tx,
                                                          config.max_tx));

    std::vector<std::int64_t> days(tx_count);
    for (auto& d : days)
      d = config.window_start.days() + rng.uniform_int(0, window_days - 1);
    std::sort(days.begin(), days.end());

    std::array<double, 4> init = stationary_distribution(seg.transitions);
    int state = static_cast<int>(
        rng.discrete({init[0], init[1], init[2], init[3]}));
    for (int t = 0; t < tx_count; ++t) {
      if (t > 0) {
        const auto& row = seg.transitions[state];
        state = static_cast<int>(rng.discrete({row[0], row[1], row[2], row[3]}));
      }
      Transaction tx;
      tx.customer_id = p.customer_id;
      tx.timestamp = Date(days[t]);
      const AmountSpec& am = config.amounts[state];
      double amount = rng.lognormal(am.log_mean, am.log_sigma);
      amount = std::min(std::max(amount, 0.5), 50000.0);
      tx.amount = money_from_dollars(amount);
      tx.category = static_cast<Category>(state);
      ds.transactions.push_back(tx);
    }

    if (defect[i] == 1) {
      // drop one demographic field
      switch (rng.next_u64() % 4) {
        case 0: p.gender.reset(); break;
        case 1: p.marital_status.reset(); break;
        case 2: p.education.reset(); break;
        default: p.job.reset(); break;
      }
    }
    ds.profiles.push_back(std::move(p));
  }

  std::stable_sort(ds.transactions.begin(), ds.transactions.end(),
                   [](const Transaction& a, const Transaction& b) {
                     if (a.customer_id != b.customer_id)
                       return a.customer_id < b.customer_id;
                     return a.timestamp < b.timestamp;
                   });
  return ds;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string opt_str(const std::optional<std::string>& v) { return v ? *v : ""; }

std::optional<std::string> parse_opt(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

}  // namespace

void export_csv(const Dataset& dataset, const std::string& profiles_path,
                const std::string& transactions_path) {
  std::ofstream pf(profiles_path, std::ios::binary);
  if (!pf) throw IoError("cannot write " + profiles_path);
  pf << "customer_id,age,gender,marital_status,education,job,income\n";
  for (const auto& p : dataset.profiles) {
    pf << p.customer_id << ',' << p.age << ',' << opt_str(p.gender) << ','
       << opt_str(p.marital_status) << ',' << opt_str(p.education) << ','
       << opt_str(p.job) << ',' << money_to_string(p.income) << '\n';
  }
  if (!pf.good()) throw IoError("write failed for " + profiles_path);

  std::ofstream tf(transactions_path, std::ios::binary);
  if (!tf) throw IoError("cannot write " + transactions_path);
  tf << "customer_id,date,amount,category\n";
  for (const auto& t : dataset.transactions) {
    tf << t.customer_id << ',' << t.timestamp.to_string() << ','
       << money_to_string(t.amount) << ',' << category_name(t.category) << '\n';
  }
  if (!tf.good()) throw IoError("write failed for " + transactions_path);
}

Dataset import_csv(const std::string& name, const std::string& profiles_path,
                   const std::string& transactions_path) {
  Dataset ds;
  ds.name = name;

  std::ifstream pf(profiles_path, std::ios::binary);
  if (!pf) throw IoError("cannot read " + profiles_path);
  std::string line;
  if (!std::getline(pf, line))
    throw ParseError(profiles_path + ": missing header row");
  int lineno = 1;
  while (std::getline(pf, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 7)
      throw ParseError(profiles_path + ":" + std::to_string(lineno) +
                       ": expected 7 fields");
    CustomerProfile p;
    p.customer_id = std::stoll(f[0]);
    p.age = std::stoi(f[1]);
    p.gender = parse_opt(f[2]);
    p.marital_status = parse_opt(f[3]);
    p.education = parse_opt(f[4]);
    p.job = parse_opt(f[5]);
    p.income = money_parse(f[6]);
    ds.profiles.push_back(std::move(p));
  }

  std::ifstream tf(transactions_path, std::ios::binary);
  if (!tf) throw IoError("cannot read " + transactions_path);
  if (!std::getline(tf, line))
    throw ParseError(transactions_path + ": missing header row");
  lineno = 1;
  while (std::getline(tf, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 4)
      throw ParseError(transactions_path + ":" + std::to_string(lineno) +
                       ": expected 4 fields");
    Transaction t;
    t.customer_id = std::stoll(f[0]);
    t.timestamp = Date::parse(f[1]);
    t.amount = money_parse(f[2]);
    auto cat = category_from_name(f[3]);
    if (!cat)
      throw ParseError(transactions_path + ":" + std::to_string(lineno) +
                       ": unknown category '" + f[3] + "'");
    t.category = *cat;
    ds.transactions.push_back(t);
  }
  return ds;
}

}  // namespace nextcat

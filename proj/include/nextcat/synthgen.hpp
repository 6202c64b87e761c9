#pragma once

#include <array>
#include <string>
#include <vector>

#include "nextcat/data.hpp"

namespace nextcat {

using TransitionMatrix = std::array<std::array<double, 4>, 4>;

// Education labels split into two buckets; together with the income group
// they select a customer's behavior segment.
enum class EducationBucket : int { Basic = 0, Higher = 1 };

EducationBucket education_bucket(const std::string& education);

struct SegmentSpec {
  IncomeGroup income_group = IncomeGroup::Low;
  EducationBucket education = EducationBucket::Basic;
  TransitionMatrix transitions{};
};

struct AmountSpec {
  double log_mean = 3.5;   // lognormal mu over dollars
  double log_sigma = 0.6;  // lognormal sigma
};

struct GeneratorConfig {
  std::string name = "bank_a";
  int n_customers = 0;
  Date window_start;
  Date window_end;
  std::vector<SegmentSpec> segments;  // must cover all 6 (group, bucket) cells
  std::array<double, 4> target_marginals{};
  std::array<AmountSpec, 4> amounts{};
  int min_tx = 10;
  int max_tx = 60;
  // Planted defects, applied to exact customer counts (floor(rate * n)).
  double missing_demographics_rate = 0.0;
  double low_activity_rate = 0.0;
  int low_activity_min_tx = 3;
  int low_activity_max_tx = 9;
  std::uint64_t seed = 0;
};

// Throws ConfigError naming the offending field.
void validate(const GeneratorConfig& config);

// Deterministic for a fixed (config, seed); per-customer streams are
// counter-derived so generation order never changes the output.
Dataset generate(const GeneratorConfig& config);

// Analytic next-category accuracy of the Bayes-optimal predictor that knows
// each segment's transition matrix: the expected max row probability under
// the distribution of the last observed state, mixed over segments.
double bayes_accuracy(const GeneratorConfig& config, int seq_len);

// Stationary distribution of a row-stochastic matrix (power iteration).
std::array<double, 4> stationary_distribution(const TransitionMatrix& m);

// Probability weight of a segment under the generator's demographic draws.
double segment_weight(const GeneratorConfig& config, const SegmentSpec& seg);

// Bank-B style shift: every transition row mixed toward uniform by epsilon,
// which keeps rows stochastic without re-normalization error.
GeneratorConfig perturb_transitions(const GeneratorConfig& config, double epsilon);

// CSV export/import per the documented schema (UTF-8, LF, header row).
void export_csv(const Dataset& dataset, const std::string& profiles_path,
                const std::string& transactions_path);
Dataset import_csv(const std::string& name, const std::string& profiles_path,
                   const std::string& transactions_path);

}  // namespace nextcat

#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "nextcat/data.hpp"

namespace nextcat {

struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 4>, 4> counts{};  // [true][pred]

  void add(Category truth, Category pred) {
    counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)]++;
  }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& row : counts)
      for (auto v : row) t += v;
    return t;
  }
  std::int64_t trace() const {
    std::int64_t t = 0;
    for (int i = 0; i < 4; ++i)
      t += counts[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
    return t;
  }
};

struct MetricsReport {
  std::string model;
  std::string dataset;
  int seq_len = 0;
  std::array<double, 4> precision{};
  std::array<double, 4> recall{};
  std::array<double, 4> f1{};
  std::array<std::int64_t, 4> support{};
  double accuracy = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  std::int64_t evaluated = 0;
  std::int64_t skipped = 0;
};

// Standard multiclass metrics; a class with no predicted positives gets
// precision 0 (and F1 0) rather than NaN.
MetricsReport compute_metrics(const std::vector<Category>& truths,
                              const std::vector<Category>& predictions);

// A model under evaluation: a pure window -> category function plus the
// lengths it should be scored at (empty = every sweep length).
struct Predictor {
  std::string name;
  std::function<Category(const CustomerProfile&,
                         const std::vector<Transaction>&)> predict;
  std::vector<int> only_lengths;
};

// Test-on-Bank-B sweep: for each predictor and length k, take each eligible
// customer's last k+1 transactions (first k in, last category as label),
// score, and emit one report. Customers with < k+1 transactions are skipped
// and counted. Prediction is parallel over customers; output order and
// content are deterministic.
std::vector<MetricsReport> run_protocol(const std::vector<Predictor>& models,
                                        const Dataset& test_set,
                                        const std::vector<int>& lengths = {4, 7,
                                                                           9,
                                                                           14});

enum class ReportFormat { Markdown, Csv, Json };

// Overall table plus class-wise F1 table (2 / 3 decimals); zero-support
// class-wise cells render "-".
std::string render_report(const std::vector<MetricsReport>& reports,
                          ReportFormat format);
void write_report(const std::vector<MetricsReport>& reports,
                  ReportFormat format, const std::string& path);

std::vector<MetricsReport> reports_from_json(const std::string& json_text);

}  // namespace nextcat

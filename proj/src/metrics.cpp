#include "nextcat/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace nextcat {

MetricsReport compute_metrics(const std::vector<Category>& truths,
                              const std::vector<Category>& predictions) {
  if (truths.size() != predictions.size())
    throw DimensionError("compute_metrics: " + std::to_string(truths.size()) +
                         " truths vs " + std::to_string(predictions.size()) +
                         " predictions");
  if (truths.empty()) throw Error("compute_metrics: empty input");

  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truths.size(); ++i)
    cm.add(truths[i], predictions[i]);

  MetricsReport r;
  const double n = static_cast<double>(cm.total());
  r.evaluated = cm.total();
  r.accuracy = static_cast<double>(cm.trace()) / n;
  for (int c = 0; c < 4; ++c) {
    std::int64_t tp = cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    std::int64_t pred_pos = 0, actual_pos = 0;
    for (int j = 0; j < 4; ++j) {
      pred_pos += cm.counts[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
      actual_pos += cm.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
    }
    std::size_t cc = static_cast<std::size_t>(c);
    r.support[cc] = actual_pos;
    r.precision[cc] = pred_pos > 0 ? static_cast<double>(tp) / pred_pos : 0.0;
    r.recall[cc] = actual_pos > 0 ? static_cast<double>(tp) / actual_pos : 0.0;
    double denom = r.precision[cc] + r.recall[cc];
    r.f1[cc] = denom > 0.0 ? 2.0 * r.precision[cc] * r.recall[cc] / denom : 0.0;
    double w = actual_pos / n;
    r.weighted_precision += w * r.precision[cc];
    r.weighted_recall += w * r.recall[cc];
    r.weighted_f1 += w * r.f1[cc];
  }
  return r;
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

const std::array<const char*, 4> kClassColumns = {"Clothing", "Gas Stations",
                                                  "Grocery", "Other"};
// column order per the class-wise table layout
const std::array<int, 4> kClassOrder = {static_cast<int>(Category::Clothing),
                                        static_cast<int>(Category::GasStations),
                                        static_cast<int>(Category::Grocery),
                                        static_cast<int>(Category::Other)};

std::string classwise_cell(const MetricsReport& r, int cls) {
  if (r.support[static_cast<std::size_t>(cls)] == 0) return "-";
  return fixed(r.f1[static_cast<std::size_t>(cls)], 3);
}

std::string render_markdown(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "# Evaluation Report\n\n## Overall Scores\n\n";
  out << "| Model | Dataset | Sequence Length | Accuracy | Precision | Recall "
         "| F1 (weighted) |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    out << "| " << r.model << " | " << r.dataset << " | last-" << r.seq_len
        << " | " << fixed(r.accuracy, 2) << " | " << fixed(r.weighted_precision, 2)
        << " | " << fixed(r.weighted_recall, 2) << " | "
        << fixed(r.weighted_f1, 2) << " |\n";
  }
  out << "\n## Class-wise F1 Scores\n\n";
  out << "| Model | Dataset | Sequence Length | Clothing | Gas Stations | "
         "Grocery | Other |\n";
  out << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : reports) {
    out << "| " << r.model << " | " << r.dataset << " | last-" << r.seq_len;
    for (int cls : kClassOrder) out << " | " << classwise_cell(r, cls);
    out << " |\n";
  }
  return out.str();
}

std::string render_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream out;
  out << "model,dataset,seq_len,accuracy,precision,recall,f1_weighted";
  for (const char* c : kClassColumns) {
    std::string col = c;
    for (auto& ch : col) {
      if (ch == ' ') ch = '_';
      ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
    out << ",f1_" << col;
  }
  out << ",evaluated,skipped\n";
  for (const auto& r : reports) {
    out << r.model << ',' << r.dataset << ',' << r.seq_len << ','
        << fixed(r.accuracy, 2) << ',' << fixed(r.weighted_precision, 2) << ','
        << fixed(r.weighted_recall, 2) << ',' << fixed(r.weighted_f1, 2);
    for (int cls : kClassOrder) {
      out << ',';
      out << (r.support[static_cast<std::size_t>(cls)] == 0
                  ? "-"
                  : fixed(r.f1[static_cast<std::size_t>(cls)], 3));
    }
    out << ',' << r.evaluated << ',' << r.skipped << '\n';
  }
  return out.str();
}

nlohmann::ordered_json report_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["dataset"] = r.dataset;
  j["seq_len"] = r.seq_len;
  j["accuracy"] = r.accuracy;
  j["weighted_precision"] = r.weighted_precision;
  j["weighted_recall"] = r.weighted_recall;
  j["weighted_f1"] = r.weighted_f1;
  nlohmann::ordered_json classes;
  for (int c = 0; c < 4; ++c) {
    std::size_t cc = static_cast<std::size_t>(c);
    nlohmann::ordered_json cj;
    cj["precision"] = r.precision[cc];
    cj["recall"] = r.recall[cc];
    cj["f1"] = r.f1[cc];
    cj["support"] = r.support[cc];
    classes[category_name(static_cast<Category>(c))] = cj;
  }
  j["classes"] = classes;
  j["evaluated"] = r.evaluated;
  j["skipped"] = r.skipped;
  return j;
}

}  // namespace

std::string render_report(const std::vector<MetricsReport>& reports,
                          ReportFormat format) {
  if (reports.empty()) throw Error("render_report: no reports");
  switch (format) {
    case ReportFormat::Markdown:
      return render_markdown(reports);
    case ReportFormat::Csv:
      return render_csv(reports);
    case ReportFormat::Json: {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& r : reports) arr.push_back(report_json(r));
      return arr.dump(2) + "\n";
    }
  }
  throw Error("render_report: unknown format");
}

void write_report(const std::vector<MetricsReport>& reports,
                  ReportFormat format, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << render_report(reports, format);
  if (!f.good()) throw IoError("write failed for " + path);
}

std::vector<MetricsReport> reports_from_json(const std::string& json_text) {
  auto arr = nlohmann::json::parse(json_text);
  std::vector<MetricsReport> out;
  for (const auto& j : arr) {
    MetricsReport r;
    r.model = j.at("model");
    r.dataset = j.at("dataset");
    r.seq_len = j.at("seq_len");
    r.accuracy = j.at("accuracy");
    r.weighted_precision = j.at("weighted_precision");
    r.weighted_recall = j.at("weighted_recall");
    r.weighted_f1 = j.at("weighted_f1");
    for (int c = 0; c < 4; ++c) {
      std::size_t cc = static_cast<std::size_t>(c);
      const auto& cj = j.at("classes").at(category_name(static_cast<Category>(c)));
      r.precision[cc] = cj.at("precision");
      r.recall[cc] = cj.at("recall");
      r.f1[cc] = cj.at("f1");
      r.support[cc] = cj.at("support");
    }
    r.evaluated = j.at("evaluated");
    r.skipped = j.at("skipped");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace nextcat

#include "nextcat/runconfig.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nextcat/seqmodels.hpp"

namespace nextcat {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Tracks which keys were consumed so leftovers can be reported as unknown,
// and accumulates every problem instead of stopping at the first.
class Section {
public:
  Section(const json& j, std::string prefix, std::vector<std::string>& errors)
      : j_(j), prefix_(std::move(prefix)), errors_(errors) {
    if (!j_.is_object())
      errors_.push_back(prefix_.empty() ? "config root is not an object"
                                        : prefix_ + ": not an object");
  }

  ~Section() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key()))
        errors_.push_back("unknown key '" + path(it.key()) + "'");
    }
  }

  bool has(const std::string& key) {
    return j_.is_object() && j_.contains(key);
  }

  const json* take(const std::string& key) {
    if (!j_.is_object() || !j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  template <typename T>
  void read(const std::string& key, T& out) {
    const json* v = take(key);
    if (!v) return;
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      errors_.push_back("key '" + path(key) + "' has the wrong type");
    }
  }

  std::string path(const std::string& key) const {
    return prefix_.empty() ? key : prefix_ + "." + key;
  }

  const json& raw() const { return j_; }

private:
  const json& j_;
  std::string prefix_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_marginals(Section& sec, const std::string& key,
                    std::array<double, 4>& out,
                    std::vector<std::string>& errors) {
  const json* v = sec.take(key);
  if (!v) return;
  if (!v->is_object()) {
    errors.push_back("key '" + sec.path(key) + "' must be an object");
    return;
  }
  std::set<std::string> known;
  for (int c = 0; c < kNumCategories; ++c)
    known.insert(category_name(static_cast<Category>(c)));
  for (auto it = v->begin(); it != v->end(); ++it) {
    if (!known.count(it.key())) {
      errors.push_back("unknown key '" + sec.path(key) + "." + it.key() + "'");
      continue;
    }
    auto cat = category_from_name(it.key());
    try {
      out[static_cast<std::size_t>(*cat)] = it.value().get<double>();
    } catch (const json::exception&) {
      errors.push_back("key '" + sec.path(key) + "." + it.key() +
                       "' has the wrong type");
    }
  }
}

ojson marginals_to_json(const std::array<double, 4>& m) {
  ojson j;
  for (int c = 0; c < kNumCategories; ++c)
    j[category_name(static_cast<Category>(c))] =
        m[static_cast<std::size_t>(c)];
  return j;
}

// Rows of the form p * e_target + (1 - p) * q, with q solved so the chain's
// stationary distribution equals the configured marginals exactly.
std::array<double, 4> normalized(std::array<double, 4> m) {
  double sum = m[0] + m[1] + m[2] + m[3];
  for (double& v : m) v /= sum;
  return m;
}

TransitionMatrix signal_matrix(std::array<double, 4> marginals,
                               const std::string& style, double p) {
  marginals = normalized(marginals);
  std::array<int, 4> partner{};
  if (style == "sticky") {
    partner = {0, 1, 2, 3};
  } else if (style == "cycle") {
    // Grocery <-> Other, Clothing <-> Gas stations (both involutions, so the
    // inverse map below is the map itself).
    partner = {static_cast<int>(Category::Other),
               static_cast<int>(Category::GasStations),
               static_cast<int>(Category::Clothing),
               static_cast<int>(Category::Grocery)};
  } else {
    throw ConfigError("generator.signal_style: expected 'cycle' or 'sticky', got '" +
                      style + "'");
  }

  std::array<double, 4> q{};
  for (int m = 0; m < 4; ++m) {
    std::size_t mm = static_cast<std::size_t>(m);
    std::size_t pre = static_cast<std::size_t>(partner[mm]);
    q[mm] = (marginals[mm] - p * marginals[pre]) / (1.0 - p);
    if (q[mm] < 0.0)
      throw ConfigError(
          "generator.signal_strength: " + std::to_string(p) +
          " is too high for the configured marginals (style '" + style + "')");
  }

  TransitionMatrix t{};
  for (int j = 0; j < 4; ++j) {
    std::size_t jj = static_cast<std::size_t>(j);
    for (int m = 0; m < 4; ++m)
      t[jj][static_cast<std::size_t>(m)] =
          (1.0 - p) * q[static_cast<std::size_t>(m)];
    t[jj][static_cast<std::size_t>(partner[jj])] += p;
  }
  return t;
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

RunConfig strong_signal_config() {
  RunConfig c;
  c.generator.signal_style = "sticky";
  c.generator.signal_strength = 0.8;
  c.out_dir = "out_strong";
  return c;
}

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config is not valid JSON: ") + e.what());
  }

  RunConfig c;
  std::vector<std::string> errors;
  {
    Section root(j, "", errors);
    root.read("seed", c.seed);
    root.read("out_dir", c.out_dir);
    root.read("train_seq_len", c.train_seq_len);
    root.read("eval_lengths", c.eval_lengths);

    if (const json* g = root.take("generator")) {
      Section sec(*g, "generator", errors);
      sec.read("bank_a_customers", c.generator.bank_a_customers);
      sec.read("bank_b_customers", c.generator.bank_b_customers);
      sec.read("bank_a_window_start", c.generator.bank_a_window_start);
      sec.read("bank_a_window_end", c.generator.bank_a_window_end);
      sec.read("bank_b_window_start", c.generator.bank_b_window_start);
      sec.read("bank_b_window_end", c.generator.bank_b_window_end);
      read_marginals(sec, "target_marginals", c.generator.target_marginals,
                     errors);
      sec.read("signal_style", c.generator.signal_style);
      sec.read("signal_strength", c.generator.signal_strength);
      sec.read("perturb_epsilon", c.generator.perturb_epsilon);
      sec.read("missing_demographics_rate",
               c.generator.missing_demographics_rate);
      sec.read("low_activity_rate", c.generator.low_activity_rate);
      sec.read("min_tx", c.generator.min_tx);
      sec.read("max_tx", c.generator.max_tx);
    }
    if (const json* p = root.take("preprocess")) {
      Section sec(*p, "preprocess", errors);
      sec.read("min_transactions", c.preprocess.min_transactions);
      sec.read("min_distinct_categories", c.preprocess.min_distinct_categories);
    }
    if (const json* b = root.take("baseline")) {
      Section sec(*b, "baseline", errors);
      sec.read("period_scheme", c.baseline.period_scheme);
    }
    if (const json* l = root.take("lstm")) {
      Section sec(*l, "lstm", errors);
      sec.read("hidden", c.lstm.hidden);
      sec.read("epochs", c.lstm.epochs);
      sec.read("lr", c.lstm.lr);
    }
    if (const json* n = root.take("cnn")) {
      Section sec(*n, "cnn", errors);
      sec.read("filters1", c.cnn.filters1);
      sec.read("filters2", c.cnn.filters2);
      sec.read("kernel", c.cnn.kernel);
      sec.read("pool_between", c.cnn.pool_between);
      sec.read("epochs", c.cnn.epochs);
      sec.read("lr", c.cnn.lr);
    }
    if (const json* m = root.take("lm")) {
      Section sec(*m, "lm", errors);
      sec.read("d_model", c.lm.d_model);
      sec.read("n_layers", c.lm.n_layers);
      sec.read("n_heads", c.lm.n_heads);
      sec.read("d_ff", c.lm.d_ff);
      sec.read("max_seq_len", c.lm.max_seq_len);
      sec.read("max_vocab", c.lm.max_vocab);
      sec.read("pretrain_epochs", c.lm.pretrain_epochs);
      sec.read("pretrain_lr", c.lm.pretrain_lr);
      sec.read("pretrain_max_samples", c.lm.pretrain_max_samples);
      sec.read("finetune_epochs", c.lm.finetune_epochs);
      sec.read("finetune_lr", c.lm.finetune_lr);
      sec.read("finetune_max_samples", c.lm.finetune_max_samples);
      sec.read("finetune_balance_classes", c.lm.finetune_balance_classes);
      sec.read("lora_rank", c.lm.lora_rank);
      sec.read("lora_alpha", c.lm.lora_alpha);
      sec.read("lora_targets", c.lm.lora_targets);
    }
  }  // Section destructors flag leftover keys.

  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "invalid config (" << errors.size() << " problem"
        << (errors.size() == 1 ? "" : "s") << "):";
    for (const auto& e : errors) msg << "\n  - " << e;
    throw ConfigError(msg.str());
  }
  validate(c);
  return c;
}

std::string config_to_json(const RunConfig& c) {
  ojson j;
  j["seed"] = c.seed;
  j["out_dir"] = c.out_dir;
  j["train_seq_len"] = c.train_seq_len;
  j["eval_lengths"] = c.eval_lengths;

  ojson g;
  g["bank_a_customers"] = c.generator.bank_a_customers;
  g["bank_b_customers"] = c.generator.bank_b_customers;
  g["bank_a_window_start"] = c.generator.bank_a_window_start;
  g["bank_a_window_end"] = c.generator.bank_a_window_end;
  g["bank_b_window_start"] = c.generator.bank_b_window_start;
  g["bank_b_window_end"] = c.generator.bank_b_window_end;
  g["target_marginals"] = marginals_to_json(c.generator.target_marginals);
  g["signal_style"] = c.generator.signal_style;
  g["signal_strength"] = c.generator.signal_strength;
  g["perturb_epsilon"] = c.generator.perturb_epsilon;
  g["missing_demographics_rate"] = c.generator.missing_demographics_rate;
  g["low_activity_rate"] = c.generator.low_activity_rate;
  g["min_tx"] = c.generator.min_tx;
  g["max_tx"] = c.generator.max_tx;
  j["generator"] = g;

  ojson p;
  p["min_transactions"] = c.preprocess.min_transactions;
  p["min_distinct_categories"] = c.preprocess.min_distinct_categories;
  j["preprocess"] = p;

  ojson b;
  b["period_scheme"] = c.baseline.period_scheme;
  j["baseline"] = b;

  ojson l;
  l["hidden"] = c.lstm.hidden;
  l["epochs"] = c.lstm.epochs;
  l["lr"] = c.lstm.lr;
  j["lstm"] = l;

  ojson n;
  n["filters1"] = c.cnn.filters1;
  n["filters2"] = c.cnn.filters2;
  n["kernel"] = c.cnn.kernel;
  n["pool_between"] = c.cnn.pool_between;
  n["epochs"] = c.cnn.epochs;
  n["lr"] = c.cnn.lr;
  j["cnn"] = n;

  ojson m;
  m["d_model"] = c.lm.d_model;
  m["n_layers"] = c.lm.n_layers;
  m["n_heads"] = c.lm.n_heads;
  m["d_ff"] = c.lm.d_ff;
  m["max_seq_len"] = c.lm.max_seq_len;
  m["max_vocab"] = c.lm.max_vocab;
  m["pretrain_epochs"] = c.lm.pretrain_epochs;
  m["pretrain_lr"] = c.lm.pretrain_lr;
  m["pretrain_max_samples"] = c.lm.pretrain_max_samples;
  m["finetune_epochs"] = c.lm.finetune_epochs;
  m["finetune_lr"] = c.lm.finetune_lr;
  m["finetune_max_samples"] = c.lm.finetune_max_samples;
  m["finetune_balance_classes"] = c.lm.finetune_balance_classes;
  m["lora_rank"] = c.lm.lora_rank;
  m["lora_alpha"] = c.lm.lora_alpha;
  m["lora_targets"] = c.lm.lora_targets;
  j["lm"] = m;

  return j.dump(2) + "\n";
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read config file " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return config_from_json(buf.str());
}

void save_config(const RunConfig& config, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write config file " + path);
  f << config_to_json(config);
}

void validate(const RunConfig& c) {
  std::vector<std::string> errors;
  auto require = [&](bool ok, const std::string& msg) {
    if (!ok) errors.push_back(msg);
  };

  require(!c.out_dir.empty(), "out_dir: must not be empty");
  require(c.train_seq_len >= 1 && c.train_seq_len <= kMaxSeqLen,
          "train_seq_len: must be in [1, " + std::to_string(kMaxSeqLen) + "]");
  require(!c.eval_lengths.empty(), "eval_lengths: must not be empty");
  for (int k : c.eval_lengths)
    require(k >= 1 && k <= kMaxSeqLen,
            "eval_lengths: " + std::to_string(k) + " outside [1, " +
                std::to_string(kMaxSeqLen) + "]");

  const auto& g = c.generator;
  require(g.bank_a_customers > 0, "generator.bank_a_customers: must be > 0");
  require(g.bank_b_customers > 0, "generator.bank_b_customers: must be > 0");
  double sum = 0.0;
  for (double m : g.target_marginals) {
    require(m >= 0.0, "generator.target_marginals: negative entry");
    sum += m;
  }
  // The published category shares are rounded to one decimal and only sum
  // to ~1; anything within half a point is accepted and renormalized.
  require(std::abs(sum - 1.0) < 5e-3,
          "generator.target_marginals: entries must sum to 1 (within 0.005)");
  require(g.signal_style == "cycle" || g.signal_style == "sticky",
          "generator.signal_style: expected 'cycle' or 'sticky'");
  require(g.signal_strength > 0.0 && g.signal_strength < 1.0,
          "generator.signal_strength: must be in (0, 1)");
  require(g.perturb_epsilon >= 0.0 && g.perturb_epsilon <= 1.0,
          "generator.perturb_epsilon: must be in [0, 1]");
  require(g.missing_demographics_rate >= 0.0 &&
              g.missing_demographics_rate < 1.0,
          "generator.missing_demographics_rate: must be in [0, 1)");
  require(g.low_activity_rate >= 0.0 && g.low_activity_rate < 1.0,
          "generator.low_activity_rate: must be in [0, 1)");
  require(g.min_tx >= 1 && g.max_tx >= g.min_tx,
          "generator.min_tx/max_tx: need 1 <= min_tx <= max_tx");

  require(c.preprocess.min_transactions >= 1,
          "preprocess.min_transactions: must be >= 1");
  require(c.preprocess.min_distinct_categories >= 1 &&
              c.preprocess.min_distinct_categories <= kNumCategories,
          "preprocess.min_distinct_categories: must be in [1, 4]");
  require(c.baseline.period_scheme == "per_event" ||
              c.baseline.period_scheme == "calendar_week",
          "baseline.period_scheme: expected 'per_event' or 'calendar_week'");

  require(c.lstm.hidden >= 1, "lstm.hidden: must be >= 1");
  require(c.lstm.epochs >= 1, "lstm.epochs: must be >= 1");
  require(c.lstm.lr > 0.0, "lstm.lr: must be > 0");
  require(c.cnn.filters1 >= 1 && c.cnn.filters2 >= 1,
          "cnn.filters1/filters2: must be >= 1");
  require(c.cnn.kernel >= 1, "cnn.kernel: must be >= 1");
  require(c.cnn.epochs >= 1, "cnn.epochs: must be >= 1");
  require(c.cnn.lr > 0.0, "cnn.lr: must be > 0");

  const auto& m = c.lm;
  require(m.d_model >= 1 && m.n_layers >= 1 && m.d_ff >= 1,
          "lm.d_model/n_layers/d_ff: must be >= 1");
  require(m.n_heads >= 1 && m.d_model % m.n_heads == 0,
          "lm.n_heads: must be >= 1 and divide d_model");
  require(m.max_seq_len >= 8, "lm.max_seq_len: must be >= 8");
  require(m.max_vocab >= 16, "lm.max_vocab: must be >= 16");
  require(m.pretrain_epochs >= 0 && m.finetune_epochs >= 0,
          "lm.pretrain_epochs/finetune_epochs: must be >= 0");
  require(m.pretrain_lr > 0.0 && m.finetune_lr > 0.0,
          "lm.pretrain_lr/finetune_lr: must be > 0");
  require(m.pretrain_max_samples >= 0 && m.finetune_max_samples >= 0,
          "lm.pretrain_max_samples/finetune_max_samples: must be >= 0");
  require(m.lora_rank >= 1, "lm.lora_rank: must be >= 1");
  require(m.lora_alpha > 0.0, "lm.lora_alpha: must be > 0");
  require(!m.lora_targets.empty(), "lm.lora_targets: must not be empty");

  if (!errors.empty()) {
    std::ostringstream msg;
    msg << "invalid config (" << errors.size() << " problem"
        << (errors.size() == 1 ? "" : "s") << "):";
    for (const auto& e : errors) msg << "\n  - " << e;
    throw ConfigError(msg.str());
  }

  // Fails if signal_strength is infeasible for the marginals.
  (void)signal_matrix(c.generator.target_marginals, c.generator.signal_style,
                      c.generator.signal_strength);
}

GeneratorConfig make_generator_config(const RunConfig& c,
                                      const std::string& bank) {
  if (bank != "bank_a" && bank != "bank_b")
    throw ConfigError("unknown bank '" + bank + "'");
  const auto& g = c.generator;
  bool is_a = bank == "bank_a";

  GeneratorConfig gc;
  gc.name = bank;
  gc.n_customers = is_a ? g.bank_a_customers : g.bank_b_customers;
  gc.window_start =
      Date::parse(is_a ? g.bank_a_window_start : g.bank_b_window_start);
  gc.window_end = Date::parse(is_a ? g.bank_a_window_end : g.bank_b_window_end);
  gc.target_marginals = normalized(g.target_marginals);
  gc.min_tx = g.min_tx;
  gc.max_tx = g.max_tx;
  gc.missing_demographics_rate = g.missing_demographics_rate;
  gc.low_activity_rate = g.low_activity_rate;
  // Distinct substreams so the two banks never share draws.
  gc.seed = c.seed * 2 + (is_a ? 0 : 1);

  TransitionMatrix base =
      signal_matrix(g.target_marginals, g.signal_style, g.signal_strength);
  for (int ig = 0; ig < 3; ++ig) {
    for (int eb = 0; eb < 2; ++eb) {
      SegmentSpec seg;
      seg.income_group = static_cast<IncomeGroup>(ig);
      seg.education = static_cast<EducationBucket>(eb);
      seg.transitions = base;
      gc.segments.push_back(seg);
    }
  }
  // Slightly different spend scales per category; cosmetic, not a signal.
  gc.amounts = {AmountSpec{3.6, 0.5}, AmountSpec{4.0, 0.6}, AmountSpec{3.5, 0.4},
                AmountSpec{3.8, 0.8}};

  if (!is_a && g.perturb_epsilon > 0.0)
    gc = perturb_transitions(gc, g.perturb_epsilon);
  return gc;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t config_hash(const RunConfig& config) {
  return fnv1a(config_to_json(config));
}

}  // namespace nextcat

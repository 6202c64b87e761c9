#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nextcat/eval.hpp"
#include "nextcat/pipeline.hpp"
#include "nextcat/runconfig.hpp"

using namespace nextcat;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / tag;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

// Small enough to run a full pipeline in a couple of seconds.
RunConfig tiny_config(const std::string& out_dir) {
  RunConfig c = default_config();
  c.out_dir = out_dir;
  c.generator.bank_a_customers = 60;
  c.generator.bank_b_customers = 30;
  c.lstm.hidden = 16;
  c.lstm.epochs = 1;
  c.cnn.epochs = 1;
  c.lm.d_model = 16;
  c.lm.n_layers = 1;
  c.lm.n_heads = 2;
  c.lm.d_ff = 32;
  c.lm.max_vocab = 300;
  c.lm.pretrain_epochs = 1;
  c.lm.pretrain_max_samples = 10;
  c.lm.finetune_epochs = 1;
  c.lm.finetune_max_samples = 10;
  c.lm.lora_rank = 2;
  return c;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)), {});
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("json round trip preserves every field") {
  RunConfig c = default_config();
  c.seed = 123;
  c.train_seq_len = 7;
  c.eval_lengths = {4, 7};
  c.generator.signal_style = "sticky";
  c.generator.signal_strength = 0.8;
  c.baseline.period_scheme = "calendar_week";
  c.lm.lora_targets = {"mlp.w1"};
  RunConfig back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back) == config_to_json(c));
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("different configs hash differently") {
  RunConfig a = default_config();
  RunConfig b = default_config();
  b.seed = 8;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("unknown keys are all reported at once") {
  std::string text = config_to_json(default_config());
  // splice two unknown keys into different sections
  auto pos = text.find("\"seed\"");
  REQUIRE(pos != std::string::npos);
  text.insert(pos, "\"sede\": 1, ");
  pos = text.find("\"hidden\"");
  REQUIRE(pos != std::string::npos);
  text.insert(pos, "\"hiden\": 2, ");
  CHECK_THROWS_WITH_AS(config_from_json(text), doctest::Contains("sede"),
                       ConfigError);
  try {
    config_from_json(text);
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("sede") != std::string::npos);
    CHECK(msg.find("hiden") != std::string::npos);
  }
}

TEST_CASE("validation collects every problem into one error") {
  RunConfig c = default_config();
  c.train_seq_len = 0;
  c.eval_lengths = {};
  c.generator.bank_a_customers = -1;
  c.lm.n_heads = 3;  // does not divide d_model 64
  try {
    validate(c);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("train_seq_len") != std::string::npos);
    CHECK(msg.find("eval_lengths") != std::string::npos);
    CHECK(msg.find("bank_a_customers") != std::string::npos);
    CHECK(msg.find("n_heads") != std::string::npos);
  }
}

TEST_CASE("malformed json is a ParseError, wrong types are ConfigError") {
  CHECK_THROWS_AS(config_from_json("{not json"), ParseError);
  std::string text = config_to_json(default_config());
  auto pos = text.find("\"seed\": 7");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 9, "\"seed\": \"seven\"");
  CHECK_THROWS_AS(config_from_json(text), ConfigError);
}

TEST_CASE("bank b inherits segments with perturbed transitions") {
  RunConfig c = default_config();
  GeneratorConfig a = make_generator_config(c, "bank_a");
  GeneratorConfig b = make_generator_config(c, "bank_b");
  CHECK(a.n_customers == 2000);
  CHECK(b.n_customers == 500);
  CHECK(a.seed != b.seed);
  CHECK(b.window_start == Date::parse("2013-06-01"));
  REQUIRE(a.segments.size() == b.segments.size());
  // same structure, softened dynamics
  for (std::size_t i = 0; i < a.segments.size(); ++i) {
    CHECK(a.segments[i].income_group == b.segments[i].income_group);
    CHECK(a.segments[i].transitions != b.segments[i].transitions);
  }
  CHECK_THROWS_AS(make_generator_config(c, "bank_c"), ConfigError);
}

TEST_CASE("strong signal config uses sticky dominant transitions") {
  RunConfig c = strong_signal_config();
  CHECK(c.generator.signal_style == "sticky");
  CHECK(c.generator.signal_strength >= 0.7);
  GeneratorConfig g = make_generator_config(c, "bank_a");
  for (const auto& seg : g.segments)
    for (int i = 0; i < 4; ++i)
      CHECK(seg.transitions[static_cast<std::size_t>(i)]
                           [static_cast<std::size_t>(i)] >= 0.7);
}

}  // TEST_SUITE

TEST_SUITE("pipeline") {

TEST_CASE("stages demand their prerequisites by command name") {
  TempDir dir("nextcat_pipe_prereq");
  Pipeline p(tiny_config(dir.str()));
  CHECK_THROWS_WITH_AS(p.preprocess(), doctest::Contains("gen-data"),
                       PrerequisiteError);
  CHECK_THROWS_WITH_AS(p.make_instructions(), doctest::Contains("preprocess"),
                       PrerequisiteError);
  CHECK_THROWS_WITH_AS(p.train("baseline"), doctest::Contains("preprocess"),
                       PrerequisiteError);
  CHECK_THROWS_WITH_AS(p.pretrain_lm(), doctest::Contains("make-instructions"),
                       PrerequisiteError);
  CHECK_THROWS_WITH_AS(p.finetune_lora(), doctest::Contains("pretrain-lm"),
                       PrerequisiteError);
  CHECK_THROWS_WITH_AS(p.report(), doctest::Contains("evaluate"),
                       PrerequisiteError);
  CHECK_THROWS_AS(p.train("svm"), ConfigError);
}

TEST_CASE("run-all produces every artifact and reruns are byte-identical") {
  TempDir dir("nextcat_pipe_full");
  RunConfig c = tiny_config(dir.str());
  Pipeline p(c);
  p.run_all();

  for (const char* artifact :
       {"bank_a_profiles.csv", "bank_a_transactions.csv", "bank_b_profiles.csv",
        "bank_b_transactions.csv", "clean_bank_a_profiles.csv",
        "clean_bank_b_transactions.csv", "preprocess_bank_a.json",
        "instructions_bank_a.jsonl", "baseline.json", "lstm.ckpt", "cnn.ckpt",
        "tokenizer.json", "lm_base.ckpt", "lora.ckpt", "report.json",
        "report.md", "report.csv", "manifest.json", "config.json"})
    CHECK(fs::exists(p.path(artifact)));

  // the sweep yields 4 lengths x 4 models, plus the raw LM at the train length
  auto reports = reports_from_json(slurp(p.path("report.json")));
  CHECK(reports.size() == 17);

  std::string first_report = slurp(p.path("report.json"));
  std::string first_manifest = slurp(p.path("manifest.json"));

  Pipeline again(c);
  again.run_all();
  CHECK(slurp(p.path("report.json")) == first_report);
  CHECK(slurp(p.path("manifest.json")) == first_manifest);
}

TEST_CASE("manifest records the config hash and a hash per artifact") {
  TempDir dir("nextcat_pipe_manifest");
  RunConfig c = tiny_config(dir.str());
  Pipeline p(c);
  p.gen_data();
  std::string manifest = slurp(p.path("manifest.json"));
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find("bank_a_transactions.csv") != std::string::npos);
}

TEST_CASE("selftest passes clean and fails with an injected gradient fault") {
  std::ostringstream log;
  CHECK(selftest(false, log) == 0);
  CHECK(log.str().find("gradients") != std::string::npos);
  std::ostringstream log2;
  CHECK(selftest(true, log2) != 0);
}

}  // TEST_SUITE

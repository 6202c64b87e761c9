#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "nextcat/instructions.hpp"

using namespace nextcat;

namespace {

CustomerProfile sample_profile() {
  CustomerProfile p;
  p.customer_id = 1695432;
  p.age = 48;
  p.gender = "male";
  p.marital_status = "married";
  p.education = "secondary school";
  p.job = "private employee";
  p.income = 9000000;
  p.income_group = IncomeGroup::High;
  return p;
}

Transaction tx(const char* date, const char* amount, Category c) {
  Transaction t;
  t.customer_id = 1695432;
  t.timestamp = Date::parse(date);
  t.amount = money_parse(amount);
  t.category = c;
  return t;
}

std::vector<Transaction> sample_window() {
  using C = Category;
  return {
      tx("2015-03-28", "39.82", C::Grocery),
      tx("2015-04-01", "47.25", C::Grocery),
      tx("2015-04-15", "27.81", C::Grocery),
      tx("2015-05-01", "124.97", C::Other),
      tx("2015-05-27", "105.97", C::Clothing),
      tx("2015-06-04", "24.95", C::Other),
      tx("2015-06-04", "49.99", C::Clothing),
      tx("2015-06-04", "99.95", C::Clothing),
      tx("2015-06-08", "39.90", C::Clothing),
  };
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

}  // namespace

TEST_SUITE("instructions") {

TEST_CASE("golden sample serializes byte for byte") {
  InstructionSample s =
      serialize(sample_profile(), sample_window(), Category::GasStations);
  std::string golden = read_file("data/golden_instruction.txt");
  CHECK(s.instruction_input + "\n" + s.instruction_output + "\n" == golden);
  // the advertised total is the exact 2-decimal sum of the nine amounts
  CHECK(s.instruction_input.find("$560.61") != std::string::npos);
  CHECK(s.instruction_output == "Gas stations.");
  CHECK(s.label == Category::GasStations);
  CHECK(s.seq_len == 9);
}

TEST_CASE("missing fields are named in the error") {
  auto window = sample_window();
  for (const char* field : {"gender", "marital_status", "education", "job"}) {
    CustomerProfile p = sample_profile();
    if (std::string(field) == "gender") p.gender.reset();
    if (std::string(field) == "marital_status") p.marital_status.reset();
    if (std::string(field) == "education") p.education.reset();
    if (std::string(field) == "job") p.job.reset();
    CHECK_THROWS_WITH_AS(serialize(p, window, Category::Other),
                         doctest::Contains(field), Error);
  }
  CustomerProfile p = sample_profile();
  p.income_group.reset();
  CHECK_THROWS_WITH_AS(serialize(p, window, Category::Other),
                       doctest::Contains("income_group"), Error);
}

TEST_CASE("serialization rejects empty or unsorted windows") {
  CHECK_THROWS_AS(serialize(sample_profile(), {}, Category::Other), Error);
  auto window = sample_window();
  std::swap(window[0], window[8]);
  CHECK_THROWS_AS(serialize(sample_profile(), window, Category::Other), Error);
}

TEST_CASE("corpus holds one last-window sample per eligible customer") {
  Dataset ds;
  ds.name = "bank_a";
  for (int u = 0; u < 3; ++u) {
    CustomerProfile p = sample_profile();
    p.customer_id = 100 + u;
    p.income_group = IncomeGroup::Low;
    ds.profiles.push_back(p);
  }
  // customer 100: 12 tx, 101: exactly 10, 102: only 5 (skipped at k=9)
  auto add = [&ds](std::int64_t id, int n) {
    for (int i = 0; i < n; ++i) {
      Transaction t;
      t.customer_id = id;
      t.timestamp = Date(16436 + i);
      t.amount = 100 + i;
      t.category = static_cast<Category>(i % 4);
      ds.transactions.push_back(t);
    }
  };
  add(100, 12);
  add(101, 10);
  add(102, 5);

  Corpus c = build_corpus(ds, WindowSpec{9});
  REQUIRE(c.samples.size() == 2);
  CHECK(c.skipped == 1);
  CHECK(c.samples[0].customer_id == 100);
  CHECK(c.samples[1].customer_id == 101);
  CHECK(c.samples[0].seq_len == 9);
  // label is the category of the final transaction: index 11 -> 11 % 4 = 3
  CHECK(c.samples[0].label == Category::Other);
  // window is the 9 transactions before it: "I made 9 transactions"
  CHECK(c.samples[0].instruction_input.find("I made 9 transactions") !=
        std::string::npos);
}

TEST_CASE("jsonl export and import round trip") {
  InstructionSample s =
      serialize(sample_profile(), sample_window(), Category::GasStations);
  auto dir = std::filesystem::temp_directory_path() / "nextcat_jsonl_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "c.jsonl").string();
  export_jsonl({s, s}, path);
  auto back = import_jsonl(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == s);
  CHECK(back[1] == s);
  std::filesystem::remove_all(dir);
}

TEST_CASE("jsonl parse errors carry line numbers") {
  auto dir = std::filesystem::temp_directory_path() / "nextcat_jsonl_err";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "bad.jsonl").string();
  {
    std::ofstream f(path);
    f << R"({"customer_id":1,"seq_len":9,"instruction_input":"x","instruction_output":"Grocery."})"
      << "\n";
    f << "this is not json\n";
  }
  CHECK_THROWS_WITH_AS(import_jsonl(path), doctest::Contains(":2"), ParseError);
  {
    std::ofstream f(path);
    f << R"({"customer_id":1,"seq_len":9,"instruction_input":"x","instruction_output":"Pets."})"
      << "\n";
  }
  CHECK_THROWS_WITH_AS(import_jsonl(path), doctest::Contains("Pets."),
                       ParseError);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE

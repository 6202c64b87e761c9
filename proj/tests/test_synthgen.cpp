#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "nextcat/preprocess.hpp"
#include "nextcat/runconfig.hpp"
#include "nextcat/synthgen.hpp"

using namespace nextcat;

namespace {

TransitionMatrix uniform_matrix() {
  TransitionMatrix t{};
  for (auto& row : t) row = {0.25, 0.25, 0.25, 0.25};
  return t;
}

TransitionMatrix identity_matrix() {
  TransitionMatrix t{};
  for (int i = 0; i < 4; ++i) t[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
  return t;
}

GeneratorConfig base_config(const TransitionMatrix& m, int n_customers) {
  GeneratorConfig c;
  c.n_customers = n_customers;
  c.window_start = Date::parse("2015-01-01");
  c.window_end = Date::parse("2015-12-31");
  for (int g = 0; g < 3; ++g)
    for (int b = 0; b < 2; ++b)
      c.segments.push_back({static_cast<IncomeGroup>(g),
                            static_cast<EducationBucket>(b), m});
  c.target_marginals = {0.25, 0.25, 0.25, 0.25};
  c.seed = 99;
  return c;
}

// Exhaustive enumeration over all category sequences of length `seq_len`:
// the optimal predictor emits argmax of the last state's transition row, so
// expected accuracy is the probability mass it captures.
double bayes_by_enumeration(const GeneratorConfig& config, int seq_len) {
  double total = 0.0;
  for (const auto& seg : config.segments) {
    auto pi = stationary_distribution(seg.transitions);
    double seg_acc = 0.0;
    std::vector<int> seq(static_cast<std::size_t>(seq_len), 0);
    while (true) {
      double p = pi[static_cast<std::size_t>(seq[0])];
      for (int t = 1; t < seq_len; ++t)
        p *= seg.transitions[static_cast<std::size_t>(seq[static_cast<std::size_t>(t - 1)])]
                            [static_cast<std::size_t>(seq[static_cast<std::size_t>(t)])];
      double best = 0.0;
      const auto& row = seg.transitions[static_cast<std::size_t>(seq.back())];
      for (double v : row) best = std::max(best, v);
      seg_acc += p * best;
      int i = seq_len - 1;
      while (i >= 0 && seq[static_cast<std::size_t>(i)] == 3) {
        seq[static_cast<std::size_t>(i)] = 0;
        --i;
      }
      if (i < 0) break;
      seq[static_cast<std::size_t>(i)]++;
    }
    total += segment_weight(config, seg) * seg_acc;
  }
  return total;
}

}  // namespace

TEST_SUITE("synthgen") {

TEST_CASE("validation names the offending field") {
  auto c = base_config(uniform_matrix(), 10);
  SUBCASE("bad transition row") {
    c.segments[0].transitions[1][2] = 0.9;
    CHECK_THROWS_WITH_AS(validate(c),
                         doctest::Contains("transition matrix row"),
                         ConfigError);
  }
  SUBCASE("missing cell") {
    c.segments.pop_back();
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("missing"),
                         ConfigError);
  }
  SUBCASE("bad marginals") {
    c.target_marginals = {0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("target_marginals"),
                         ConfigError);
  }
  SUBCASE("empty window") {
    c.window_end = Date::parse("2014-01-01");
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("date_window"),
                         ConfigError);
  }
  SUBCASE("bad tx range") {
    c.min_tx = 0;
    CHECK_THROWS_WITH_AS(validate(c), doctest::Contains("min_tx"), ConfigError);
  }
}

TEST_CASE("generation is deterministic for a fixed config and seed") {
  auto c = base_config(uniform_matrix(), 40);
  Dataset a = generate(c);
  Dataset b = generate(c);
  CHECK(a == b);
  c.seed = 100;
  Dataset d = generate(c);
  CHECK(a.transactions != d.transactions);
}

TEST_CASE("identity transitions produce constant per-customer sequences") {
  auto c = base_config(identity_matrix(), 30);
  Dataset ds = generate(c);
  std::map<std::int64_t, std::set<Category>> seen;
  for (const auto& t : ds.transactions) seen[t.customer_id].insert(t.category);
  for (const auto& [id, cats] : seen) CHECK(cats.size() == 1);
}

TEST_CASE("transactions arrive sorted and timestamps stay in the window") {
  auto c = base_config(uniform_matrix(), 50);
  Dataset ds = generate(c);
  for (std::size_t i = 1; i < ds.transactions.size(); ++i) {
    const auto& prev = ds.transactions[i - 1];
    const auto& cur = ds.transactions[i];
    CHECK((prev.customer_id < cur.customer_id ||
           (prev.customer_id == cur.customer_id &&
            prev.timestamp <= cur.timestamp)));
  }
  for (const auto& t : ds.transactions) {
    CHECK(t.timestamp >= c.window_start);
    CHECK(t.timestamp <= c.window_end);
    CHECK(t.amount > 0);
  }
  for (const auto& p : ds.profiles) {
    CHECK(p.age >= 18);
    CHECK(p.age <= 90);
    CHECK(p.income > 0);
  }
}

TEST_CASE("per-customer transaction counts respect the configured range") {
  auto c = base_config(uniform_matrix(), 60);
  c.min_tx = 12;
  c.max_tx = 20;
  Dataset ds = generate(c);
  std::map<std::int64_t, int> counts;
  for (const auto& t : ds.transactions) counts[t.customer_id]++;
  CHECK(counts.size() == 60);
  for (const auto& [id, n] : counts) {
    CHECK(n >= 12);
    CHECK(n <= 20);
  }
}

TEST_CASE("target marginals are hit within 2 points over 100k transactions") {
  RunConfig rc = default_config();
  rc.generator.bank_a_customers = 3200;  // ~112k transactions expected
  GeneratorConfig gc = make_generator_config(rc, "bank_a");
  Dataset ds = generate(gc);
  REQUIRE(ds.transactions.size() >= 100000);
  std::array<double, 4> freq{};
  for (const auto& t : ds.transactions)
    freq[static_cast<std::size_t>(t.category)] += 1.0;
  for (auto& f : freq) f /= static_cast<double>(ds.transactions.size());
  CHECK(std::abs(freq[0] - 0.313) < 0.02);
  CHECK(std::abs(freq[1] - 0.112) < 0.02);
  CHECK(std::abs(freq[2] - 0.119) < 0.02);
  CHECK(std::abs(freq[3] - 0.455) < 0.02);
}

TEST_CASE("planted defects are exact and removed exactly by preprocessing") {
  auto c = base_config(uniform_matrix(), 20);
  c.missing_demographics_rate = 0.15;  // floor(0.15*20) = 3 customers
  c.low_activity_rate = 0.10;          // floor(0.10*20) = 2 customers
  Dataset ds = generate(c);

  int incomplete = 0;
  for (const auto& p : ds.profiles)
    if (!p.complete()) incomplete++;
  CHECK(incomplete == 3);

  std::map<std::int64_t, int> counts;
  for (const auto& t : ds.transactions) counts[t.customer_id]++;
  int low = 0;
  for (const auto& [id, n] : counts)
    if (n < c.min_tx) {
      low++;
      CHECK(n >= c.low_activity_min_tx);
      CHECK(n <= c.low_activity_max_tx);
    }
  CHECK(low == 2);

  auto [clean, rep] = run_pipeline(ds, c.min_tx, 2);
  CHECK(rep.users_in == 20);
  CHECK(rep.users_removed_incomplete == 3);
  // an incomplete user could also be low-activity; with disjoint planting
  // (by construction) the removals match the planted counts exactly
  CHECK(rep.users_removed_low_activity == 2);
  CHECK(rep.users_out == 15);
  CHECK(clean.profiles.size() == 15);
}

TEST_CASE("stationary distribution of a known matrix") {
  TransitionMatrix m{};
  // two-state flip inside a 4x4 embedding: stationary = (0.5, 0.5, 0, 0)
  m[0] = {0.2, 0.8, 0.0, 0.0};
  m[1] = {0.8, 0.2, 0.0, 0.0};
  m[2] = {0.0, 0.0, 1.0, 0.0};
  m[3] = {0.0, 0.0, 0.0, 1.0};
  // start mass only reaches states 0/1 from the uniform init in equal shares
  auto pi = stationary_distribution(m);
  CHECK(pi[0] == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(pi[1] == doctest::Approx(0.25).epsilon(1e-9));

  TransitionMatrix r{};
  for (auto& row : r) row = {0.1, 0.2, 0.3, 0.4};
  auto pr = stationary_distribution(r);
  CHECK(pr[0] == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(pr[3] == doctest::Approx(0.4).epsilon(1e-9));
}

TEST_CASE("bayes accuracy matches exhaustive enumeration") {
  TransitionMatrix sticky{};
  for (int i = 0; i < 4; ++i) {
    sticky[static_cast<std::size_t>(i)] = {0.1, 0.1, 0.1, 0.1};
    sticky[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 0.7;
  }
  TransitionMatrix skewed{};
  skewed[0] = {0.05, 0.65, 0.2, 0.1};
  skewed[1] = {0.5, 0.1, 0.15, 0.25};
  skewed[2] = {0.3, 0.3, 0.2, 0.2};
  skewed[3] = {0.1, 0.4, 0.4, 0.1};

  // two behavior profiles spread over the six demographic cells
  GeneratorConfig c = base_config(sticky, 10);
  c.segments[1].transitions = skewed;
  c.segments[3].transitions = skewed;
  c.segments[5].transitions = skewed;

  for (int k : {1, 2, 3, 4}) {
    CHECK(bayes_accuracy(c, k) ==
          doctest::Approx(bayes_by_enumeration(c, k)).epsilon(1e-10));
  }
  // non-uniform rows: beats the best marginal guess
  auto pi = stationary_distribution(sticky);
  double best_marginal = std::max({pi[0], pi[1], pi[2], pi[3]});
  CHECK(bayes_accuracy(c, 4) > best_marginal);
}

TEST_CASE("perturbation mixes rows toward uniform and keeps them stochastic") {
  auto c = base_config(identity_matrix(), 5);
  auto p = perturb_transitions(c, 0.2);
  for (const auto& seg : p.segments) {
    for (int r = 0; r < 4; ++r) {
      double sum = 0.0;
      for (int col = 0; col < 4; ++col) sum += seg.transitions[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(seg.transitions[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] ==
            doctest::Approx(0.85).epsilon(1e-12));
    }
  }
  auto u = perturb_transitions(c, 1.0);
  CHECK(u.segments[0].transitions[0][3] == doctest::Approx(0.25));
}

TEST_CASE("csv export and import round trip") {
  auto c = base_config(uniform_matrix(), 15);
  c.missing_demographics_rate = 0.2;  // exercise empty optional fields
  Dataset ds = generate(c);
  auto dir = std::filesystem::temp_directory_path() / "nextcat_csv_test";
  std::filesystem::create_directories(dir);
  std::string pp = (dir / "p.csv").string(), tp = (dir / "t.csv").string();
  export_csv(ds, pp, tp);
  Dataset back = import_csv(ds.name, pp, tp);
  CHECK(back == ds);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE

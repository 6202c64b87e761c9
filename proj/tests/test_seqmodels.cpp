#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "nextcat/checkpoint.hpp"
#include "nextcat/gradcheck.hpp"
#include "nextcat/rng.hpp"
#include "nextcat/seqmodels.hpp"

using namespace nextcat;

namespace {

// A corpus following an exact rule the models should be able to learn:
// the next category repeats the last one seen.
std::vector<CategorySample> copy_rule_corpus(int n, int len, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CategorySample> out;
  for (int i = 0; i < n; ++i) {
    CategorySample s;
    for (int t = 0; t < len; ++t)
      s.window.push_back(static_cast<Category>(rng.uniform_int(0, 3)));
    s.label = s.window.back();
    out.push_back(s);
  }
  return out;
}

template <typename Model>
double accuracy_on(const Model& model, const std::vector<CategorySample>& data) {
  int hits = 0;
  for (const auto& s : data)
    if (model.predict(s.window).category == s.label) hits++;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace

TEST_SUITE("seqmodels") {

TEST_CASE("encode left-pads to l_max with one-hot rows") {
  using C = Category;
  ad::Tensor x = encode({C::Clothing, C::Other}, 5);
  REQUIRE(x.shape() == std::vector<int>{5, kSeqAlphabet});
  // first three rows are PAD
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < kSeqAlphabet; ++c)
      CHECK(x.value()[static_cast<std::size_t>(r * kSeqAlphabet + c)] ==
            (c == kPadIndex ? 1.0 : 0.0));
  CHECK(x.value()[3 * kSeqAlphabet + 1] == 1.0);  // Clothing
  CHECK(x.value()[4 * kSeqAlphabet + 3] == 1.0);  // Other
  // each row sums to exactly one
  for (int r = 0; r < 5; ++r) {
    double s = 0.0;
    for (int c = 0; c < kSeqAlphabet; ++c)
      s += x.value()[static_cast<std::size_t>(r * kSeqAlphabet + c)];
    CHECK(s == 1.0);
  }
  CHECK_THROWS_AS(encode(std::vector<Category>(6, C::Other), 5),
                  DimensionError);
  CHECK_THROWS_AS(encode({}, 5), Error);
}

TEST_CASE("lstm gradients agree with finite differences") {
  LstmClassifier model(6, /*seed=*/11);
  ad::Tensor x = encode({Category::Grocery, Category::Other, Category::Clothing},
                        7);
  auto loss_fn = [&]() {
    return ad::cross_entropy(model.forward(x), {2});
  };
  auto result = ad::grad_check(loss_fn, model.parameters());
  INFO(result.worst_location, " rel err ", result.worst_rel_err);
  CHECK(result.passed);
}

TEST_CASE("cnn gradients agree with finite differences") {
  CnnClassifier::Arch arch;
  arch.filters1 = 3;
  arch.filters2 = 4;
  CnnClassifier model(arch, /*seed=*/12, /*l_max=*/8);
  // conv windows that see only padding produce a preactivation equal to the
  // bias, and the zero-initialized bias puts that exactly on the relu kink,
  // where finite differences are invalid; nudge the biases off zero first
  Rng rng(17);
  for (auto& [name, t] : model.named_parameters())
    if (name == "cnn.b1" || name == "cnn.b2")
      for (double& v : t.value()) v = rng.normal(0.1, 0.2);
  ad::Tensor x = encode({Category::Grocery, Category::GasStations,
                         Category::Clothing, Category::Other, Category::Grocery},
                        8);
  auto loss_fn = [&]() {
    return ad::cross_entropy(model.forward(x), {0});
  };
  auto result = ad::grad_check(loss_fn, model.parameters());
  INFO(result.worst_location, " rel err ", result.worst_rel_err);
  CHECK(result.passed);
}

TEST_CASE("lstm learns the copy rule") {
  auto train = copy_rule_corpus(300, 9, 1);
  auto test = copy_rule_corpus(100, 9, 2);
  LstmClassifier model(24, /*seed=*/3);
  TrainOptions opt;
  opt.epochs = 4;
  opt.lr = 0.01;
  opt.seed = 4;
  auto losses = train_classifier(model, train, opt);
  REQUIRE(losses.size() == 4);
  CHECK(losses.back() < losses.front());
  CHECK(accuracy_on(model, test) > 0.95);
}

TEST_CASE("cnn learns the copy rule") {
  auto train = copy_rule_corpus(400, 9, 5);
  auto test = copy_rule_corpus(100, 9, 6);
  CnnClassifier::Arch arch;
  CnnClassifier model(arch, /*seed=*/7);
  TrainOptions opt;
  opt.epochs = 10;
  opt.lr = 0.01;
  opt.seed = 8;
  auto losses = train_classifier(model, train, opt);
  CHECK(losses.back() < losses.front());
  // pooling discards some positional precision, so the bar sits lower than
  // the lstm's but still far above the 0.25 chance level
  CHECK(accuracy_on(model, test) > 0.7);
}

TEST_CASE("models trained at length 9 accept every sweep length") {
  auto train = copy_rule_corpus(150, 9, 9);
  LstmClassifier lstm(16, 10);
  CnnClassifier cnn(CnnClassifier::Arch{}, 11);
  TrainOptions opt;
  opt.epochs = 1;
  opt.seed = 12;
  train_classifier(lstm, train, opt);
  train_classifier(cnn, train, opt);
  Rng rng(13);
  for (int k : {4, 7, 9, 14}) {
    std::vector<Category> w;
    for (int i = 0; i < k; ++i)
      w.push_back(static_cast<Category>(rng.uniform_int(0, 3)));
    CHECK_NOTHROW(lstm.predict(w));
    CHECK_NOTHROW(cnn.predict(w));
  }
  // beyond the padded maximum is a hard error, not silent truncation
  std::vector<Category> too_long(kMaxSeqLen + 1, Category::Other);
  CHECK_THROWS_AS(lstm.predict(too_long), DimensionError);
  CHECK_THROWS_AS(cnn.predict(too_long), DimensionError);
}

TEST_CASE("training is deterministic in the seed") {
  auto train = copy_rule_corpus(100, 9, 20);
  TrainOptions opt;
  opt.epochs = 1;
  opt.seed = 21;
  LstmClassifier a(8, 22), b(8, 22);
  auto la = train_classifier(a, train, opt);
  auto lb = train_classifier(b, train, opt);
  CHECK(la == lb);
  CHECK(a.named_parameters().at("lstm.wx").value() ==
        b.named_parameters().at("lstm.wx").value());
}

TEST_CASE("checkpoint round trip restores identical predictions") {
  auto train = copy_rule_corpus(120, 9, 30);
  LstmClassifier model(12, 31);
  TrainOptions opt;
  opt.epochs = 1;
  opt.seed = 32;
  train_classifier(model, train, opt);

  auto dir = std::filesystem::temp_directory_path() / "nextcat_seq_ckpt";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "m.ckpt").string();
  ad::save_checkpoint(model.named_parameters(), path);

  LstmClassifier fresh(12, 999);
  fresh.load_parameters(ad::load_checkpoint(path));
  auto test = copy_rule_corpus(40, 9, 33);
  for (const auto& s : test) {
    auto p1 = model.predict(s.window);
    auto p2 = fresh.predict(s.window);
    CHECK(p1.category == p2.category);
    CHECK(p1.logits == p2.logits);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint files are byte-identical for identical weights") {
  LstmClassifier model(8, 40);
  auto dir = std::filesystem::temp_directory_path() / "nextcat_seq_ckpt2";
  std::filesystem::create_directories(dir);
  std::string p1 = (dir / "a.ckpt").string(), p2 = (dir / "b.ckpt").string();
  ad::save_checkpoint(model.named_parameters(), p1);
  ad::save_checkpoint(model.named_parameters(), p2);
  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  CHECK(!s1.empty());
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE

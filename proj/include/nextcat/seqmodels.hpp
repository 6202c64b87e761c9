#pragma once

#include <map>
#include <string>
#include <vector>

#include "nextcat/autodiff.hpp"
#include "nextcat/data.hpp"
#include "nextcat/optim.hpp"

namespace nextcat {

// One-hot alphabet for encoded sequences: the 4 categories plus PAD.
inline constexpr int kSeqAlphabet = 5;
inline constexpr int kPadIndex = 4;
inline constexpr int kMaxSeqLen = 14;

struct CategorySample {
  std::vector<Category> window;
  Category label = Category::Other;
};

// Left-padded one-hot matrix of shape (l_max, 5); rows [0, l_max - len) are PAD.
ad::Tensor encode(const std::vector<Category>& window, int l_max = kMaxSeqLen);

struct TrainOptions {
  int epochs = 3;
  double lr = 0.005;
  std::uint64_t seed = 0;
  ad::OptimizerKind optimizer = ad::OptimizerKind::Adam;
};

struct Prediction {
  Category category = Category::Other;
  std::array<double, 4> logits{};
};

class LstmClassifier {
public:
  LstmClassifier(int hidden, std::uint64_t seed, int input = kSeqAlphabet);

  ad::Tensor forward(const ad::Tensor& sequence) const;  // (L,5) -> (1,4)
  Prediction predict(const std::vector<Category>& window) const;

  std::vector<ad::Tensor> parameters() const;
  std::map<std::string, ad::Tensor> named_parameters() const;
  void load_parameters(const std::map<std::string, ad::Tensor>& named);
  int hidden() const { return hidden_; }

private:
  int input_;
  int hidden_;
  ad::Tensor wx_, wh_, b_;     // gates packed i|f|g|o
  ad::Tensor w_out_, b_out_;
};

class CnnClassifier {
public:
  struct Arch {
    int filters1 = 8;
    int filters2 = 16;
    int kernel = 3;
    bool pool_between = false;  // true: pool after each conv instead of once
  };

  CnnClassifier(const Arch& arch, std::uint64_t seed, int l_max = kMaxSeqLen);

  ad::Tensor forward(const ad::Tensor& sequence) const;  // (L,5) -> (1,4)
  Prediction predict(const std::vector<Category>& window) const;

  std::vector<ad::Tensor> parameters() const;
  std::map<std::string, ad::Tensor> named_parameters() const;
  void load_parameters(const std::map<std::string, ad::Tensor>& named);

private:
  Arch arch_;
  int l_max_;
  int flat_;
  ad::Tensor w1_, b1_, w2_, b2_, w_out_, b_out_;
};

// Epoch-mean training losses. Loss is cross-entropy on the final-step
// logits only; PAD rows still feed the models. Throws on NaN loss.
template <typename Model>
std::vector<double> train_classifier(Model& model,
                                     const std::vector<CategorySample>& corpus,
                                     const TrainOptions& options);

extern template std::vector<double> train_classifier<LstmClassifier>(
    LstmClassifier&, const std::vector<CategorySample>&, const TrainOptions&);
extern template std::vector<double> train_classifier<CnnClassifier>(
    CnnClassifier&, const std::vector<CategorySample>&, const TrainOptions&);

}  // namespace nextcat

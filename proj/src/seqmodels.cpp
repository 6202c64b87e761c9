#include "nextcat/seqmodels.hpp"

#include <algorithm>
#include <cmath>

namespace nextcat {

using ad::Tensor;

Tensor encode(const std::vector<Category>& window, int l_max) {
  const int len = static_cast<int>(window.size());
  if (len < 1 || len > l_max)
    throw DimensionError("encode: window length " + std::to_string(len) +
                         " outside [1, " + std::to_string(l_max) + "]");
  std::vector<double> data(static_cast<std::size_t>(l_max) * kSeqAlphabet, 0.0);
  const int pad_rows = l_max - len;
  for (int i = 0; i < pad_rows; ++i)
    data[static_cast<std::size_t>(i) * kSeqAlphabet + kPadIndex] = 1.0;
  for (int i = 0; i < len; ++i)
    data[static_cast<std::size_t>(pad_rows + i) * kSeqAlphabet +
         static_cast<int>(window[static_cast<std::size_t>(i)])] = 1.0;
  return Tensor::from({l_max, kSeqAlphabet}, std::move(data));
}

// ---------------------------------------------------------------------------
// LSTM

LstmClassifier::LstmClassifier(int hidden, std::uint64_t seed, int input)
    : input_(input), hidden_(hidden) {
  Rng rng(seed);
  wx_ = ad::xavier_uniform({input, 4 * hidden}, input, hidden, rng);
  wh_ = ad::xavier_uniform({hidden, 4 * hidden}, hidden, hidden, rng);
  b_ = Tensor::zeros({4 * hidden}, true);
  w_out_ = ad::xavier_uniform({hidden, 4}, hidden, 4, rng);
  b_out_ = Tensor::zeros({4}, true);
}

Tensor LstmClassifier::forward(const Tensor& sequence) const {
  if (sequence.shape().size() != 2 || sequence.cols() != input_)
    throw DimensionError("lstm: expected (L," + std::to_string(input_) +
                         ") input");
  const int steps = sequence.rows();
  const int h = hidden_;
  Tensor hidden = Tensor::zeros({1, h});
  Tensor cell = Tensor::zeros({1, h});
  for (int t = 0; t < steps; ++t) {
    Tensor x_t = ad::slice_rows(sequence, t, 1);
    Tensor z = ad::add(ad::add(ad::matmul(x_t, wx_), ad::matmul(hidden, wh_)), b_);
    Tensor gi = ad::sigmoid(ad::slice_cols(z, 0, h));
    Tensor gf = ad::sigmoid(ad::slice_cols(z, h, h));
    Tensor gg = ad::tanh_op(ad::slice_cols(z, 2 * h, h));
    Tensor go = ad::sigmoid(ad::slice_cols(z, 3 * h, h));
    cell = ad::add(ad::mul(gf, cell), ad::mul(gi, gg));
    hidden = ad::mul(go, ad::tanh_op(cell));
  }
  return ad::add(ad::matmul(hidden, w_out_), b_out_);
}

std::vector<Tensor> LstmClassifier::parameters() const {
  return {wx_, wh_, b_, w_out_, b_out_};
}

std::map<std::string, Tensor> LstmClassifier::named_parameters() const {
  return {{"lstm.wx", wx_},
          {"lstm.wh", wh_},
          {"lstm.b", b_},
          {"lstm.w_out", w_out_},
          {"lstm.b_out", b_out_}};
}

void LstmClassifier::load_parameters(const std::map<std::string, Tensor>& named) {
  auto named_self = named_parameters();
  for (auto& [name, t] : named_self) {
    auto it = named.find(name);
    if (it == named.end()) throw ParseError("checkpoint missing tensor " + name);
    if (it->second.shape() != t.shape())
      throw DimensionError("checkpoint tensor " + name + " has wrong shape");
    t.value() = it->second.value();
  }
}

// ---------------------------------------------------------------------------
// CNN

CnnClassifier::CnnClassifier(const Arch& arch, std::uint64_t seed, int l_max)
    : arch_(arch), l_max_(l_max) {
  const int k = arch.kernel;
  Rng rng(seed);
  w1_ = ad::xavier_uniform({arch.filters1, 1, k, k}, k * k,
                           arch.filters1 * k * k, rng);
  b1_ = Tensor::zeros({arch.filters1}, true);
  w2_ = ad::xavier_uniform({arch.filters2, arch.filters1, k, k},
                           arch.filters1 * k * k, arch.filters2 * k * k, rng);
  b2_ = Tensor::zeros({arch.filters2}, true);

  // trace the spatial dims to size the dense layer
  int h = l_max, w = kSeqAlphabet;
  h -= k - 1;
  w -= k - 1;
  if (arch.pool_between) {
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  h -= k - 1;
  w -= k - 1;
  if (h < 1 || w < 1)
    throw ConfigError("cnn: kernel too large for input geometry");
  h = (h + 1) / 2;
  w = (w + 1) / 2;
  flat_ = arch.filters2 * h * w;
  w_out_ = ad::xavier_uniform({flat_, 4}, flat_, 4, rng);
  b_out_ = Tensor::zeros({4}, true);
}

Tensor CnnClassifier::forward(const Tensor& sequence) const {
  if (sequence.shape() != std::vector<int>{l_max_, kSeqAlphabet})
    throw DimensionError("cnn: expected (" + std::to_string(l_max_) + "," +
                         std::to_string(kSeqAlphabet) + ") input");
  Tensor x = ad::reshape(sequence, {1, l_max_, kSeqAlphabet});
  x = ad::relu(ad::conv2d(x, w1_, b1_));
  if (arch_.pool_between) x = ad::max_pool2d(x);
  x = ad::relu(ad::conv2d(x, w2_, b2_));
  x = ad::max_pool2d(x);
  x = ad::reshape(x, {1, flat_});
  return ad::add(ad::matmul(x, w_out_), b_out_);
}

std::vector<Tensor> CnnClassifier::parameters() const {
  return {w1_, b1_, w2_, b2_, w_out_, b_out_};
}

std::map<std::string, Tensor> CnnClassifier::named_parameters() const {
  return {{"cnn.w1", w1_},       {"cnn.b1", b1_},
          {"cnn.w2", w2_},       {"cnn.b2", b2_},
          {"cnn.w_out", w_out_}, {"cnn.b_out", b_out_}};
}

void CnnClassifier::load_parameters(const std::map<std::string, Tensor>& named) {
  for (auto& [name, t] : named_parameters()) {
    auto it = named.find(name);
    if (it == named.end()) throw ParseError("checkpoint missing tensor " + name);
    if (it->second.shape() != t.shape())
      throw DimensionError("checkpoint tensor " + name + " has wrong shape");
    t.value() = it->second.value();
  }
}

// ---------------------------------------------------------------------------

namespace {

template <typename Model>
Prediction predict_impl(const Model& model, const std::vector<Category>& window) {
  Tensor logits = model.forward(encode(window));
  Prediction p;
  double best = -1e308;
  for (int c = 0; c < 4; ++c) {
    p.logits[static_cast<std::size_t>(c)] = logits.value()[static_cast<std::size_t>(c)];
    if (logits.value()[static_cast<std::size_t>(c)] > best) {
      best = logits.value()[static_cast<std::size_t>(c)];
      p.category = static_cast<Category>(c);
    }
  }
  return p;
}

}  // namespace

Prediction LstmClassifier::predict(const std::vector<Category>& window) const {
  return predict_impl(*this, window);
}

Prediction CnnClassifier::predict(const std::vector<Category>& window) const {
  return predict_impl(*this, window);
}

template <typename Model>
std::vector<double> train_classifier(Model& model,
                                     const std::vector<CategorySample>& corpus,
                                     const TrainOptions& options) {
  if (corpus.empty()) throw Error("train: empty corpus");
  ad::Optimizer opt(options.optimizer, options.lr, model.parameters());
  Rng shuffle_rng(options.seed ^ 0x5E71A1ULL);
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> curve;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t idx : order) {
      const auto& sample = corpus[idx];
      Tensor logits = model.forward(encode(sample.window));
      Tensor loss =
          ad::cross_entropy(logits, {static_cast<int>(sample.label)});
      if (std::isnan(loss.scalar()))
        throw Error("train: NaN loss at epoch " + std::to_string(epoch));
      opt.zero_grad();
      ad::backward(loss);
      opt.step();
      total += loss.scalar();
    }
    curve.push_back(total / static_cast<double>(corpus.size()));
  }
  return curve;
}

template std::vector<double> train_classifier<LstmClassifier>(
    LstmClassifier&, const std::vector<CategorySample>&, const TrainOptions&);
template std::vector<double> train_classifier<CnnClassifier>(
    CnnClassifier&, const std::vector<CategorySample>&, const TrainOptions&);

}  // namespace nextcat

#include "nextcat/loralm.hpp"

#include <algorithm>
#include <cmath>

#include "nextcat/checkpoint.hpp"
#include "nextcat/rng.hpp"

namespace nextcat {

using ad::Tensor;

namespace {

Tensor causal_mask(int len) {
  std::vector<double> m(static_cast<std::size_t>(len) * len, 0.0);
  for (int i = 0; i < len; ++i)
    for (int j = i + 1; j < len; ++j)
      m[static_cast<std::size_t>(i) * len + j] = -1e9;
  return Tensor::from({len, len}, std::move(m));
}

}  // namespace

BaseLm::BaseLm(int vocab_size, const LmConfig& config)
    : config_(config), vocab_(vocab_size) {
  if (config.d_model % config.n_heads != 0)
    throw ConfigError("lm: d_model must be divisible by n_heads");
  Rng rng(config.seed);
  const int d = config.d_model;
  token_emb_ = ad::uniform_init({vocab_, d}, -0.05, 0.05, rng);
  pos_emb_ = ad::uniform_init({config.max_seq_len, d}, -0.05, 0.05, rng);
  for (int i = 0; i < config.n_layers; ++i) {
    Block blk;
    std::string prefix = "block" + std::to_string(i) + ".";
    auto ones = [](int n) {
      Tensor t = Tensor::zeros({n}, true);
      for (auto& v : t.value()) v = 1.0;
      return t;
    };
    blk.ln1_g = ones(d);
    blk.ln1_b = Tensor::zeros({d}, true);
    blk.ln2_g = ones(d);
    blk.ln2_b = Tensor::zeros({d}, true);
    auto linear = [&](const std::string& name, int d_in, int d_out) {
      Linear lin;
      lin.name = name;
      lin.w = ad::xavier_uniform({d_in, d_out}, d_in, d_out, rng);
      lin.b = Tensor::zeros({d_out}, true);
      return lin;
    };
    blk.wq = linear(prefix + "attn.wq", d, d);
    blk.wk = linear(prefix + "attn.wk", d, d);
    blk.wv = linear(prefix + "attn.wv", d, d);
    blk.wo = linear(prefix + "attn.wo", d, d);
    blk.mlp1 = linear(prefix + "mlp.w1", d, config.d_ff);
    blk.mlp2 = linear(prefix + "mlp.w2", config.d_ff, d);
    blocks_.push_back(std::move(blk));
  }
  lnf_g_ = Tensor::zeros({d}, true);
  for (auto& v : lnf_g_.value()) v = 1.0;
  lnf_b_ = Tensor::zeros({d}, true);
  out_w_ = ad::xavier_uniform({d, vocab_}, d, vocab_, rng);
  out_b_ = Tensor::zeros({vocab_}, true);
}

Tensor BaseLm::apply_linear(const Linear& lin, const Tensor& x,
                            const LoraSet* lora) const {
  Tensor y = ad::add(ad::matmul(x, lin.w), lin.b);
  if (lora) {
    auto it = lora->find(lin.name);
    if (it != lora->end()) {
      const LoraAdapter& a = it->second;
      Tensor delta = ad::matmul_nt(ad::matmul_nt(x, a.a), a.b);
      y = ad::add(y, ad::scale(delta, a.alpha / a.rank));
    }
  }
  return y;
}

Tensor BaseLm::logits_all(const std::vector<int>& ids, const LoraSet* lora) const {
  const int len = static_cast<int>(ids.size());
  if (len < 1) throw DimensionError("lm: empty input");
  if (len > config_.max_seq_len)
    throw DimensionError("lm: sequence length " + std::to_string(len) +
                         " exceeds max " + std::to_string(config_.max_seq_len));
  const int d = config_.d_model;
  const int heads = config_.n_heads;
  const int dh = d / heads;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Tensor x = ad::add(ad::embedding_lookup(token_emb_, ids),
                     ad::slice_rows(pos_emb_, 0, len));
  Tensor mask = causal_mask(len);
  for (const auto& blk : blocks_) {
    Tensor h = ad::layer_norm(x, blk.ln1_g, blk.ln1_b);
    Tensor q = apply_linear(blk.wq, h, lora);
    Tensor k = apply_linear(blk.wk, h, lora);
    Tensor v = apply_linear(blk.wv, h, lora);
    std::vector<Tensor> head_outs;
    head_outs.reserve(static_cast<std::size_t>(heads));
    for (int i = 0; i < heads; ++i) {
      Tensor qh = ad::slice_cols(q, i * dh, dh);
      Tensor kh = ad::slice_cols(k, i * dh, dh);
      Tensor vh = ad::slice_cols(v, i * dh, dh);
      Tensor scores = ad::add(ad::scale(ad::matmul_nt(qh, kh), att_scale), mask);
      head_outs.push_back(ad::matmul(ad::softmax_rows(scores), vh));
    }
    x = ad::add(x, apply_linear(blk.wo, ad::concat_cols(head_outs), lora));
    Tensor h2 = ad::layer_norm(x, blk.ln2_g, blk.ln2_b);
    Tensor m = apply_linear(blk.mlp2, ad::relu(apply_linear(blk.mlp1, h2, lora)),
                            lora);
    x = ad::add(x, m);
  }
  x = ad::layer_norm(x, lnf_g_, lnf_b_);
  return ad::add(ad::matmul(x, out_w_), out_b_);
}

void BaseLm::collect(std::map<std::string, Tensor>& out) const {
  out["token_emb"] = token_emb_;
  out["pos_emb"] = pos_emb_;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& blk = blocks_[i];
    std::string prefix = "block" + std::to_string(i) + ".";
    out[prefix + "ln1.g"] = blk.ln1_g;
    out[prefix + "ln1.b"] = blk.ln1_b;
    out[prefix + "ln2.g"] = blk.ln2_g;
    out[prefix + "ln2.b"] = blk.ln2_b;
    for (const Linear* lin : {&blk.wq, &blk.wk, &blk.wv, &blk.wo, &blk.mlp1,
                              &blk.mlp2}) {
      out[lin->name + ".w"] = lin->w;
      out[lin->name + ".b"] = lin->b;
    }
  }
  out["lnf.g"] = lnf_g_;
  out["lnf.b"] = lnf_b_;
  out["out.w"] = out_w_;
  out["out.b"] = out_b_;
}

std::map<std::string, Tensor> BaseLm::named_parameters() const {
  std::map<std::string, Tensor> out;
  collect(out);
  return out;
}

std::vector<Tensor> BaseLm::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

void BaseLm::load_parameters(const std::map<std::string, Tensor>& named) {
  for (auto& [name, t] : named_parameters()) {
    auto it = named.find(name);
    if (it == named.end()) throw ParseError("checkpoint missing tensor " + name);
    if (it->second.shape() != t.shape())
      throw DimensionError("checkpoint tensor " + name + " has wrong shape");
    t.value() = it->second.value();
  }
}

std::vector<std::string> BaseLm::adaptable_weight_names() const {
  std::vector<std::string> names;
  for (const auto& blk : blocks_)
    for (const Linear* lin : {&blk.wq, &blk.wk, &blk.wv, &blk.wo, &blk.mlp1,
                              &blk.mlp2})
      names.push_back(lin->name);
  return names;
}

void BaseLm::freeze_all() {
  for (auto& t : parameters()) t.freeze();
}

void BaseLm::unfreeze_all() {
  for (auto& t : parameters()) t.unfreeze();
}

// ---------------------------------------------------------------------------

TrainingPair make_training_pair(const Tokenizer& tok, const std::string& input,
                                const std::string& output) {
  TrainingPair p;
  p.input_ids = tok.encode(input);
  p.output_ids = tok.encode(output);
  p.output_ids.push_back(Tokenizer::kEos);
  return p;
}

namespace {

// BOS + x + y, truncating x from the left so the recent transactions and the
// whole output survive.
std::vector<int> pack_sequence(const TrainingPair& p, int max_len,
                               int* x_len_out) {
  int budget = max_len - 1 - static_cast<int>(p.output_ids.size());
  if (budget < 0) throw Error("lm: output longer than max sequence length");
  int x_len = std::min<int>(budget, static_cast<int>(p.input_ids.size()));
  std::vector<int> ids;
  ids.reserve(static_cast<std::size_t>(1 + x_len) + p.output_ids.size());
  ids.push_back(Tokenizer::kBos);
  ids.insert(ids.end(), p.input_ids.end() - x_len, p.input_ids.end());
  ids.insert(ids.end(), p.output_ids.begin(), p.output_ids.end());
  if (x_len_out) *x_len_out = x_len;
  return ids;
}

struct MaskedBatch {
  std::vector<int> ids;
  std::vector<int> targets;      // per predicting position
  std::vector<double> weights;   // 1.0 where the target is an output token
};

MaskedBatch masked_batch(const TrainingPair& p, int max_len) {
  int x_len = 0;
  MaskedBatch b;
  b.ids = pack_sequence(p, max_len, &x_len);
  const int predict_positions = static_cast<int>(b.ids.size()) - 1;
  b.targets.resize(static_cast<std::size_t>(predict_positions));
  b.weights.assign(static_cast<std::size_t>(predict_positions), 0.0);
  for (int t = 0; t < predict_positions; ++t) {
    b.targets[static_cast<std::size_t>(t)] = b.ids[static_cast<std::size_t>(t) + 1];
    if (t >= x_len) b.weights[static_cast<std::size_t>(t)] = 1.0;
  }
  return b;
}

double pair_loss(const BaseLm& base, const LoraSet* lora, const TrainingPair& p,
                 bool do_backward) {
  MaskedBatch b = masked_batch(p, base.config().max_seq_len);
  bool all_masked = true;
  for (double w : b.weights)
    if (w > 0.0) all_masked = false;
  if (all_masked) throw Error("lm: pair with fully masked loss");
  Tensor logits = base.logits_all(b.ids, lora);
  Tensor predicting = ad::slice_rows(logits, 0, static_cast<int>(b.targets.size()));
  Tensor loss = ad::cross_entropy(predicting, b.targets, b.weights);
  double value = loss.scalar();
  if (std::isnan(value)) throw Error("lm: NaN loss");
  if (do_backward) ad::backward(loss);
  return value;
}

}  // namespace

std::vector<double> pretrain_base(BaseLm& base, const Tokenizer& tok,
                                  const std::vector<std::string>& corpus,
                                  const LmTrainOptions& options) {
  if (corpus.empty()) throw Error("pretrain: empty corpus");
  std::size_t total_tokens = 0;
  std::vector<std::vector<int>> sequences;
  for (const auto& text : corpus) {
    std::vector<int> ids = tok.encode(text);
    if (ids.empty()) continue;
    ids.insert(ids.begin(), Tokenizer::kBos);
    ids.push_back(Tokenizer::kEos);
    if (static_cast<int>(ids.size()) > base.config().max_seq_len)
      ids.resize(static_cast<std::size_t>(base.config().max_seq_len));
    total_tokens += ids.size();
    sequences.push_back(std::move(ids));
  }
  if (total_tokens < 2) throw Error("pretrain: corpus has no tokens");

  ad::Optimizer opt(ad::OptimizerKind::Adam, options.lr, base.parameters());
  Rng rng(options.seed ^ 0x9E7BA5EULL);
  std::vector<std::size_t> order(sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> curve;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t limit = order.size();
    if (options.max_samples > 0)
      limit = std::min<std::size_t>(limit,
                                    static_cast<std::size_t>(options.max_samples));
    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < limit; ++n) {
      const auto& ids = sequences[order[n]];
      if (ids.size() < 2) continue;
      std::vector<int> targets(ids.begin() + 1, ids.end());
      Tensor logits = base.logits_all(ids, nullptr);
      Tensor predicting =
          ad::slice_rows(logits, 0, static_cast<int>(targets.size()));
      Tensor loss = ad::cross_entropy(predicting, targets);
      double value = loss.scalar();
      if (std::isnan(value)) throw Error("pretrain: NaN loss");
      opt.zero_grad();
      ad::backward(loss);
      opt.step();
      total += value;
      ++count;
    }
    curve.push_back(count ? total / static_cast<double>(count) : 0.0);
  }
  return curve;
}

LoraSet attach_lora(BaseLm& base, const std::set<std::string>& targets, int rank,
                    double alpha, std::uint64_t seed) {
  if (rank < 1) throw ConfigError("lora: rank must be >= 1");
  auto known = base.adaptable_weight_names();
  auto named = base.named_parameters();
  Rng rng(seed ^ 0x10A5EEDULL);
  LoraSet out;
  for (const auto& target : targets) {
    if (std::find(known.begin(), known.end(), target) == known.end())
      throw ConfigError("lora: unknown target weight '" + target + "'");
    const Tensor& w = named.at(target + ".w");  // (d_in, d_out)
    const int d_in = w.rows(), d_out = w.cols();
    LoraAdapter a;
    a.rank = rank;
    a.alpha = alpha;
    a.a = ad::uniform_init({rank, d_in}, -0.01, 0.01, rng);
    a.b = Tensor::zeros({d_out, rank}, true);
    out.emplace(target, std::move(a));
  }
  base.freeze_all();
  return out;
}

std::int64_t lora_trainable_count(const LoraSet& lora) {
  std::int64_t n = 0;
  for (const auto& [name, a] : lora)
    n += static_cast<std::int64_t>(a.a.size()) +
         static_cast<std::int64_t>(a.b.size());
  return n;
}

std::vector<double> finetune(BaseLm& base, LoraSet& lora,
                             const std::vector<TrainingPair>& pairs,
                             const LmTrainOptions& options) {
  if (pairs.empty()) throw Error("finetune: no training pairs");
  base.freeze_all();
  std::vector<Tensor> trainable;
  for (auto& [name, a] : lora) {
    trainable.push_back(a.a);
    trainable.push_back(a.b);
  }
  ad::Optimizer opt(ad::OptimizerKind::Adam, options.lr, trainable);
  Rng rng(options.seed ^ 0xF17E701AULL);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> curve;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    std::size_t limit = order.size();
    if (options.max_samples > 0)
      limit = std::min<std::size_t>(limit,
                                    static_cast<std::size_t>(options.max_samples));
    double total = 0.0;
    for (std::size_t n = 0; n < limit; ++n) {
      opt.zero_grad();
      total += pair_loss(base, &lora, pairs[order[n]], true);
      opt.step();
    }
    curve.push_back(total / static_cast<double>(limit));
  }
  return curve;
}

double masked_loss(const BaseLm& base, const LoraSet* lora,
                   const std::vector<TrainingPair>& pairs) {
  if (pairs.empty()) throw Error("masked_loss: no pairs");
  double total = 0.0;
  for (const auto& p : pairs) total += pair_loss(base, lora, p, false);
  return total / static_cast<double>(pairs.size());
}

LabelScores predict_category(const BaseLm& base, const LoraSet* lora,
                             const Tokenizer& tok,
                             const std::string& instruction_input,
                             bool length_normalize) {
  LabelScores out;
  for (int c = 0; c < kNumCategories; ++c) {
    TrainingPair p = make_training_pair(
        tok, instruction_input,
        category_output_sentence(static_cast<Category>(c)));
    MaskedBatch b = masked_batch(p, base.config().max_seq_len);
    Tensor logits = base.logits_all(b.ids, lora);
    double logprob = 0.0;
    int count = 0;
    const int n = base.vocab_size();
    for (std::size_t t = 0; t < b.targets.size(); ++t) {
      if (b.weights[t] == 0.0) continue;
      const double* row = logits.value().data() + t * static_cast<std::size_t>(n);
      double mx = row[0];
      for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
      double lse = 0.0;
      for (int j = 0; j < n; ++j) lse += std::exp(row[j] - mx);
      logprob += row[b.targets[t]] - mx - std::log(lse);
      ++count;
    }
    out.scores[static_cast<std::size_t>(c)] =
        length_normalize ? logprob / count : logprob;
  }
  double best = -1e308;
  for (int c = 0; c < kNumCategories; ++c) {
    if (out.scores[static_cast<std::size_t>(c)] > best) {
      best = out.scores[static_cast<std::size_t>(c)];
      out.category = static_cast<Category>(c);
    }
  }
  return out;
}

void save_adapters(const LoraSet& lora, const std::string& path) {
  std::map<std::string, Tensor> named;
  for (const auto& [target, a] : lora) {
    named[target + "::A"] = a.a;
    named[target + "::B"] = a.b;
    named[target + "::meta"] =
        Tensor::from({2}, {static_cast<double>(a.rank), a.alpha});
  }
  ad::save_checkpoint(named, path);
}

LoraSet load_adapters(const std::string& path) {
  auto named = ad::load_checkpoint(path);
  LoraSet out;
  for (const auto& [name, t] : named) {
    auto pos = name.rfind("::A");
    if (pos == std::string::npos || pos + 3 != name.size()) continue;
    std::string target = name.substr(0, pos);
    LoraAdapter a;
    a.a = t;
    a.a.set_requires_grad(true);
    a.b = named.at(target + "::B");
    a.b.set_requires_grad(true);
    const Tensor& meta = named.at(target + "::meta");
    a.rank = static_cast<int>(meta.value()[0]);
    a.alpha = meta.value()[1];
    out.emplace(std::move(target), std::move(a));
  }
  return out;
}

}  // namespace nextcat

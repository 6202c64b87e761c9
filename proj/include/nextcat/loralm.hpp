#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "nextcat/autodiff.hpp"
#include "nextcat/data.hpp"
#include "nextcat/optim.hpp"
#include "nextcat/tokenizer.hpp"

namespace nextcat {

struct LmConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int d_ff = 256;
  int max_seq_len = 256;
  std::uint64_t seed = 0;
};

// Rank-r update pair attached to one frozen base weight. The effective
// weight is W + (alpha/r) * B * A; B starts at zero so attaching is an
// identity until fine-tuning moves it.
struct LoraAdapter {
  ad::Tensor a;  // (r, d_in), small random
  ad::Tensor b;  // (d_out, r), zeros
  int rank = 0;
  double alpha = 0.0;
};

using LoraSet = std::map<std::string, LoraAdapter>;

// Tiny decoder-only causal LM: token + learned positional embeddings, N
// pre-norm blocks of multi-head self-attention and a 2-layer MLP, final
// layer norm, untied output projection.
class BaseLm {
public:
  BaseLm(int vocab_size, const LmConfig& config);

  // Per-position next-token logits, shape (L, V). `lora` may be null.
  ad::Tensor logits_all(const std::vector<int>& ids, const LoraSet* lora) const;

  std::vector<ad::Tensor> parameters() const;
  std::map<std::string, ad::Tensor> named_parameters() const;
  void load_parameters(const std::map<std::string, ad::Tensor>& named);
  // Names eligible for adaptation (attention and MLP projection matrices).
  std::vector<std::string> adaptable_weight_names() const;

  void freeze_all();
  void unfreeze_all();

  const LmConfig& config() const { return config_; }
  int vocab_size() const { return vocab_; }

private:
  struct Linear {
    std::string name;
    ad::Tensor w;  // (d_in, d_out)
    ad::Tensor b;  // (d_out)
  };
  struct Block {
    ad::Tensor ln1_g, ln1_b, ln2_g, ln2_b;
    Linear wq, wk, wv, wo;
    Linear mlp1, mlp2;
  };

  ad::Tensor apply_linear(const Linear& lin, const ad::Tensor& x,
                          const LoraSet* lora) const;
  void collect(std::map<std::string, ad::Tensor>& out) const;

  LmConfig config_;
  int vocab_;
  ad::Tensor token_emb_;  // (V, d)
  ad::Tensor pos_emb_;    // (max_seq_len, d)
  std::vector<Block> blocks_;
  ad::Tensor lnf_g_, lnf_b_;
  ad::Tensor out_w_;  // (d, V)
  ad::Tensor out_b_;  // (V)
};

struct LmTrainOptions {
  int epochs = 2;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  int max_samples = 0;  // 0 = all
};

struct TrainingPair {
  std::vector<int> input_ids;   // x
  std::vector<int> output_ids;  // y, EOS appended
};

TrainingPair make_training_pair(const Tokenizer& tok, const std::string& input,
                                const std::string& output);

// Next-token LM training over raw text lines. Returns epoch-mean losses.
std::vector<double> pretrain_base(BaseLm& base, const Tokenizer& tok,
                                  const std::vector<std::string>& corpus,
                                  const LmTrainOptions& options);

// Registers zero-initialized adapters for the named weights and freezes the
// base. Throws on unknown names or r < 1.
LoraSet attach_lora(BaseLm& base, const std::set<std::string>& targets, int rank,
                    double alpha, std::uint64_t seed);

std::int64_t lora_trainable_count(const LoraSet& lora);

// Masked instruction tuning: cross-entropy over output-token positions only,
// optimizing A/B while the base stays frozen. Returns epoch-mean losses.
std::vector<double> finetune(BaseLm& base, LoraSet& lora,
                             const std::vector<TrainingPair>& pairs,
                             const LmTrainOptions& options);

// Mean masked loss of the current model over pairs (no updates).
double masked_loss(const BaseLm& base, const LoraSet* lora,
                   const std::vector<TrainingPair>& pairs);

struct LabelScores {
  Category category = Category::Other;
  std::array<double, 4> scores{};  // per-label mean token log-probability
};

// Constrained label scoring: teacher-forced log-probability of each of the
// four candidate output sentences, length-normalized by default.
LabelScores predict_category(const BaseLm& base, const LoraSet* lora,
                             const Tokenizer& tok,
                             const std::string& instruction_input,
                             bool length_normalize = true);

void save_adapters(const LoraSet& lora, const std::string& path);
LoraSet load_adapters(const std::string& path);

}  // namespace nextcat

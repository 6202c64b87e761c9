#pragma once

#include <unordered_map>
#include <vector>

#include "nextcat/autodiff.hpp"
#include "nextcat/rng.hpp"

namespace nextcat::ad {

enum class OptimizerKind { SGD, Adam };

// Updates only tracked, non-frozen parameters; frozen tensors are never
// touched, bit for bit.
class Optimizer {
public:
  Optimizer(OptimizerKind kind, double lr, std::vector<Tensor> params);

  void step();
  void zero_grad();
  double lr() const { return lr_; }
  void set_lr(double lr) { lr_ = lr; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

private:
  OptimizerKind kind_;
  double lr_;
  std::vector<Tensor> params_;
  std::int64_t t_ = 0;
  std::unordered_map<Node*, std::vector<double>> m_, v_;
};

// Xavier-uniform initialization, limit sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng);
Tensor uniform_init(std::vector<int> shape, double lo, double hi, Rng& rng);

}  // namespace nextcat::ad

#include "nextcat/optim.hpp"

#include <cmath>

namespace nextcat::ad {

Optimizer::Optimizer(OptimizerKind kind, double lr, std::vector<Tensor> params)
    : kind_(kind), lr_(lr), params_(std::move(params)) {}

void Optimizer::step() {
  ++t_;
  for (auto& p : params_) {
    if (!p.requires_grad() || p.frozen()) continue;
    auto& value = p.value();
    auto& grad = p.grad();
    if (kind_ == OptimizerKind::SGD) {
      for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr_ * grad[i];
      continue;
    }
    auto& m = m_[p.node().get()];
    auto& v = v_[p.node().get()];
    if (m.size() != value.size()) m.assign(value.size(), 0.0);
    if (v.size() != value.size()) v.assign(value.size(), 0.0);
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grad[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grad[i] * grad[i];
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      value[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
    }
  }
}

void Optimizer::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

Tensor xavier_uniform(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  double limit = std::sqrt(6.0 / (fan_in + fan_out));
  return uniform_init(std::move(shape), -limit, limit, rng);
}

Tensor uniform_init(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor t = Tensor::zeros(std::move(shape), true);
  for (auto& v : t.value()) v = rng.uniform(lo, hi);
  return t;
}

}  // namespace nextcat::ad

#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "nextcat/common.hpp"

namespace nextcat::ad {

// Dense 64-bit tensor with reverse-mode gradients. A Tensor is a cheap
// shared handle onto its node; ops record parents and a backward closure,
// and backward() replays the graph in reverse topological order.
struct Node {
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;  // same length as value when tracked
  bool requires_grad = false;
  bool frozen = false;  // leaf excluded from optimizer updates
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void()> backward_fn;

  std::size_t size() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
public:
  Tensor() = default;
  static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
  static Tensor from(std::vector<int> shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar_value(double v);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& shape() const { return node_->shape; }
  std::size_t size() const { return node_->size(); }
  std::vector<double>& value() { return node_->value; }
  const std::vector<double>& value() const { return node_->value; }
  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  bool frozen() const { return node_->frozen; }
  void freeze() { node_->frozen = true; }
  void unfreeze() { node_->frozen = false; }
  void zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }
  double scalar() const;
  std::shared_ptr<Node> node() const { return node_; }

  int dim(int i) const { return node_->shape[static_cast<std::size_t>(i)]; }
  int rows() const { return node_->shape.at(0); }
  int cols() const { return node_->shape.at(1); }

private:
  explicit Tensor(std::shared_ptr<Node> n) : node_(std::move(n)) {}
  std::shared_ptr<Node> node_;
  friend Tensor make_op(std::vector<int> shape, std::vector<double> value,
                        std::vector<Tensor> parents,
                        std::function<void(Node&)> backward);
};

// Accumulates d(loss)/d(x) into .grad of every tracked ancestor of `loss`.
// Repeated calls without zero_grad accumulate.
void backward(const Tensor& loss);

// --- primitive ops (forward + backward) ---
Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)x(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T, (m,k)x(n,k)
Tensor transpose(const Tensor& a);
// add: same shape, or b is a length-cols row vector broadcast over a's rows
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
// input (C,H,W), weight (O,C,kh,kw), bias (O); stride 1, valid padding
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias);
// 2x2/stride-2 max pooling; short edge windows are clamped (ceil mode)
Tensor max_pool2d(const Tensor& input);
Tensor sigmoid(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
// per-row normalization with learned gain/bias (length cols)
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, int start, int len);
Tensor slice_rows(const Tensor& a, int start, int len);
Tensor reshape(const Tensor& a, std::vector<int> shape);
Tensor sum(const Tensor& a);
// weighted mean of -log softmax(logits)[target] over rows; weights may be
// empty (all ones). Throws when every weight is zero.
Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<double>& weights = {});

// Deterministic row-parallel GEMM helpers shared by ops (also used by
// inference paths that bypass the tape). C += A*B variants.
void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n);
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n);
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n);

// Thread count used for large GEMMs (defaults to hardware concurrency).
void set_num_threads(int n);
int num_threads();

}  // namespace nextcat::ad

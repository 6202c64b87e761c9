#include "nextcat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <thread>
#include <unordered_set>

namespace nextcat::ad {

namespace {

int g_threads = static_cast<int>(std::thread::hardware_concurrency());

std::string shape_str(const std::vector<int>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

[[noreturn]] void dim_error(const char* op, const std::vector<int>& a,
                            const std::vector<int>& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_str(a) + " and " + shape_str(b));
}

std::size_t numel(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw DimensionError("negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

// Split [0, m) into contiguous row blocks, one per worker. Each output row
// is written by exactly one thread, so results are bit-identical to serial.
template <typename Fn>
void parallel_rows(int m, std::size_t flops, Fn&& fn) {
  int nt = g_threads;
  if (nt <= 1 || m < 2 || flops < (1u << 20)) {
    fn(0, m);
    return;
  }
  nt = std::min(nt, m);
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(nt));
  int chunk = (m + nt - 1) / nt;
  for (int t = 0; t < nt; ++t) {
    int lo = t * chunk;
    int hi = std::min(m, lo + chunk);
    if (lo >= hi) break;
    threads.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : threads) th.join();
}

}  // namespace

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads; }

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n) {
  parallel_rows(m, static_cast<std::size_t>(m) * k * n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      double* ci = c + static_cast<std::size_t>(i) * n;
      const double* ai = a + static_cast<std::size_t>(i) * k;
      for (int l = 0; l < k; ++l) {
        double av = ai[l];
        if (av == 0.0) continue;
        const double* bl = b + static_cast<std::size_t>(l) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
      }
    }
  });
}

void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n) {
  parallel_rows(m, static_cast<std::size_t>(m) * k * n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      const double* ai = a + static_cast<std::size_t>(i) * k;
      double* ci = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) {
        const double* bj = b + static_cast<std::size_t>(j) * k;
        double acc = 0.0;
        for (int l = 0; l < k; ++l) acc += ai[l] * bj[l];
        ci[j] += acc;
      }
    }
  });
}

void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n) {
  // a is (k,m) row-major, used as a^T
  parallel_rows(m, static_cast<std::size_t>(m) * k * n, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      double* ci = c + static_cast<std::size_t>(i) * n;
      for (int l = 0; l < k; ++l) {
        double av = a[static_cast<std::size_t>(l) * m + i];
        if (av == 0.0) continue;
        const double* bl = b + static_cast<std::size_t>(l) * n;
        for (int j = 0; j < n; ++j) ci[j] += av * bl[j];
      }
    }
  });
}

Tensor make_op(std::vector<int> shape, std::vector<double> value,
               std::vector<Tensor> parents,
               std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  for (auto& p : parents) {
    node->parents.push_back(p.node());
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad && backward) {
    Node* raw = node.get();
    node->backward_fn = [raw, fn = std::move(backward)]() { fn(*raw); };
  }
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value.assign(numel(shape), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> data,
                    bool requires_grad) {
  if (numel(shape) != data.size())
    throw DimensionError("Tensor::from: data length " +
                         std::to_string(data.size()) + " != product of shape " +
                         shape_str(shape));
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

Tensor Tensor::scalar_value(double v) { return from({1}, {v}); }

double Tensor::scalar() const {
  if (size() != 1) throw DimensionError("scalar() on non-scalar tensor");
  return node_->value[0];
}

void backward(const Tensor& loss) {
  if (loss.size() != 1)
    throw DimensionError("backward: loss must be scalar, got " +
                         shape_str(loss.shape()));
  if (!loss.requires_grad())
    throw Error("backward: loss is not connected to any tracked tensor");

  // iterative post-order topological sort over tracked nodes
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* parent = node->parents[idx++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it)
    if ((*it)->backward_fn) (*it)->backward_fn();
}

// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.rows())
    dim_error("matmul", a.shape(), b.shape());
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  gemm_nn(a.value().data(), b.value().data(), out.data(), m, k, n);
  return make_op({m, n}, std::move(out), {a, b}, [a, b, m, k, n](Node& o) {
    if (a.requires_grad()) {
      a.node()->ensure_grad();
      gemm_nt(o.grad.data(), b.value().data(), a.node()->grad.data(), m, n, k);
    }
    if (b.requires_grad()) {
      b.node()->ensure_grad();
      gemm_tn(a.value().data(), o.grad.data(), b.node()->grad.data(), k, m, n);
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.cols() != b.cols())
    dim_error("matmul_nt", a.shape(), b.shape());
  const int m = a.rows(), k = a.cols(), n = b.rows();
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  gemm_nt(a.value().data(), b.value().data(), out.data(), m, k, n);
  return make_op({m, n}, std::move(out), {a, b}, [a, b, m, k, n](Node& o) {
    if (a.requires_grad()) {
      a.node()->ensure_grad();
      gemm_nn(o.grad.data(), b.value().data(), a.node()->grad.data(), m, n, k);
    }
    if (b.requires_grad()) {
      b.node()->ensure_grad();
      // db = g^T * a: (n,k) from g (m,n) used transposed and a (m,k)
      gemm_tn(o.grad.data(), a.value().data(), b.node()->grad.data(), n, m, k);
    }
  });
}

Tensor transpose(const Tensor& a) {
  if (a.shape().size() != 2) dim_error("transpose", a.shape(), {});
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(a.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(j) * m + i] =
          a.value()[static_cast<std::size_t>(i) * n + j];
  return make_op({n, m}, std::move(out), {a}, [a, m, n](Node& o) {
    if (!a.requires_grad()) return;
    a.node()->ensure_grad();
    auto& ag = a.node()->grad;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        ag[static_cast<std::size_t>(i) * n + j] +=
            o.grad[static_cast<std::size_t>(j) * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  const bool broadcast = a.shape().size() == 2 && b.shape().size() == 1 &&
                         b.dim(0) == a.cols();
  if (!broadcast && a.shape() != b.shape()) dim_error("add", a.shape(), b.shape());
  std::vector<double> out = a.value();
  if (broadcast) {
    const int m = a.rows(), n = a.cols();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        out[static_cast<std::size_t>(i) * n + j] += b.value()[j];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  }
  return make_op(a.shape(), std::move(out), {a, b}, [a, b, broadcast](Node& o) {
    if (a.requires_grad()) {
      a.node()->ensure_grad();
      auto& g = a.node()->grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (b.requires_grad()) {
      b.node()->ensure_grad();
      auto& g = b.node()->grad;
      if (broadcast) {
        const int m = a.rows(), n = a.cols();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            g[j] += o.grad[static_cast<std::size_t>(i) * n + j];
      } else {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, -1.0)); }

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) dim_error("mul", a.shape(), b.shape());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] * b.value()[i];
  return make_op(a.shape(), std::move(out), {a, b}, [a, b](Node& o) {
    if (a.requires_grad()) {
      a.node()->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        a.node()->grad[i] += o.grad[i] * b.value()[i];
    }
    if (b.requires_grad()) {
      b.node()->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i)
        b.node()->grad[i] += o.grad[i] * a.value()[i];
    }
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.value()[i] * s;
  return make_op(a.shape(), std::move(out), {a}, [a, s](Node& o) {
    if (!a.requires_grad()) return;
    a.node()->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a.node()->grad[i] += o.grad[i] * s;
  });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  if (table.shape().size() != 2) dim_error("embedding_lookup", table.shape(), {});
  const int v = table.rows(), d = table.cols();
  std::vector<double> out(ids.size() * static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= v)
      throw DimensionError("embedding_lookup: id " + std::to_string(ids[i]) +
                           " outside vocabulary of " + std::to_string(v));
    std::memcpy(out.data() + i * d,
                table.value().data() + static_cast<std::size_t>(ids[i]) * d,
                sizeof(double) * static_cast<std::size_t>(d));
  }
  return make_op({static_cast<int>(ids.size()), d}, std::move(out), {table},
                 [table, ids, d](Node& o) {
                   if (!table.requires_grad()) return;
                   table.node()->ensure_grad();
                   auto& g = table.node()->grad;
                   for (std::size_t i = 0; i < ids.size(); ++i)
                     for (int j = 0; j < d; ++j)
                       g[static_cast<std::size_t>(ids[i]) * d + j] +=
                           o.grad[i * d + j];
                 });
}

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  if (input.shape().size() != 3 || weight.shape().size() != 4 ||
      weight.dim(1) != input.dim(0))
    dim_error("conv2d", input.shape(), weight.shape());
  const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const int O = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (bias.shape() != std::vector<int>{O})
    dim_error("conv2d bias", bias.shape(), {O});
  const int oh = H - kh + 1, ow = W - kw + 1;
  if (oh < 1 || ow < 1) dim_error("conv2d (kernel larger than input)",
                                  input.shape(), weight.shape());
  // value captures: these helpers outlive this frame inside the backward
  // closure
  auto in_at = [H, W](const std::vector<double>& v, int c, int y, int x) {
    return v[(static_cast<std::size_t>(c) * H + y) * W + x];
  };
  auto w_at = [C, kh, kw](const std::vector<double>& v, int o, int c, int y,
                          int x) {
    return v[((static_cast<std::size_t>(o) * C + c) * kh + y) * kw + x];
  };
  std::vector<double> out(static_cast<std::size_t>(O) * oh * ow);
  for (int o = 0; o < O; ++o)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double acc = bias.value()[o];
        for (int c = 0; c < C; ++c)
          for (int dy = 0; dy < kh; ++dy)
            for (int dx = 0; dx < kw; ++dx)
              acc += in_at(input.value(), c, y + dy, x + dx) *
                     w_at(weight.value(), o, c, dy, dx);
        out[(static_cast<std::size_t>(o) * oh + y) * ow + x] = acc;
      }
  return make_op(
      {O, oh, ow}, std::move(out), {input, weight, bias},
      [input, weight, bias, C, H, W, O, kh, kw, oh, ow, in_at, w_at](Node& n) {
        auto g_at = [&](std::vector<double>& v, int c, int y, int x) -> double& {
          return v[(static_cast<std::size_t>(c) * H + y) * W + x];
        };
        for (int o = 0; o < O; ++o)
          for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x) {
              double go = n.grad[(static_cast<std::size_t>(o) * oh + y) * ow + x];
              if (go == 0.0) continue;
              if (bias.requires_grad()) {
                bias.node()->ensure_grad();
                bias.node()->grad[o] += go;
              }
              for (int c = 0; c < C; ++c)
                for (int dy = 0; dy < kh; ++dy)
                  for (int dx = 0; dx < kw; ++dx) {
                    if (weight.requires_grad()) {
                      weight.node()->ensure_grad();
                      weight.node()->grad[((static_cast<std::size_t>(o) * C + c) *
                                               kh +
                                           dy) *
                                              kw +
                                          dx] +=
                          go * in_at(input.value(), c, y + dy, x + dx);
                    }
                    if (input.requires_grad()) {
                      input.node()->ensure_grad();
                      g_at(input.node()->grad, c, y + dy, x + dx) +=
                          go * w_at(weight.value(), o, c, dy, dx);
                    }
                  }
            }
      });
}

Tensor max_pool2d(const Tensor& input) {
  if (input.shape().size() != 3) dim_error("max_pool2d", input.shape(), {});
  const int C = input.dim(0), H = input.dim(1), W = input.dim(2);
  const int oh = (H + 1) / 2, ow = (W + 1) / 2;
  std::vector<double> out(static_cast<std::size_t>(C) * oh * ow);
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double best = -1e308;
        std::size_t best_idx = 0;
        for (int dy = 2 * y; dy < std::min(2 * y + 2, H); ++dy)
          for (int dx = 2 * x; dx < std::min(2 * x + 2, W); ++dx) {
            std::size_t idx = (static_cast<std::size_t>(c) * H + dy) * W + dx;
            if (input.value()[idx] > best) {
              best = input.value()[idx];
              best_idx = idx;
            }
          }
        std::size_t oidx = (static_cast<std::size_t>(c) * oh + y) * ow + x;
        out[oidx] = best;
        (*argmax)[oidx] = best_idx;
      }
  return make_op({C, oh, ow}, std::move(out), {input}, [input, argmax](Node& o) {
    if (!input.requires_grad()) return;
    input.node()->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      input.node()->grad[(*argmax)[i]] += o.grad[i];
  });
}

namespace {

template <typename Fwd, typename Dfn>
Tensor unary_elementwise(const Tensor& a, Fwd fwd, Dfn dfn) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.value()[i]);
  return make_op(a.shape(), std::move(out), {a}, [a, dfn](Node& o) {
    if (!a.requires_grad()) return;
    a.node()->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a.node()->grad[i] += o.grad[i] * dfn(a.value()[i], o.value[i]);
  });
}

}  // namespace

Tensor sigmoid(const Tensor& a) {
  return unary_elementwise(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(const Tensor& a) {
  return unary_elementwise(a, [](double x) { return std::tanh(x); },
                           [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary_elementwise(a, [](double x) { return x > 0.0 ? x : 0.0; },
                           [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax_rows(const Tensor& a) {
  if (a.shape().size() != 2) dim_error("softmax_rows", a.shape(), {});
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(a.size());
  for (int i = 0; i < m; ++i) {
    const double* row = a.value().data() + static_cast<std::size_t>(i) * n;
    double* orow = out.data() + static_cast<std::size_t>(i) * n;
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    for (int j = 0; j < n; ++j) orow[j] /= sum;
  }
  return make_op(a.shape(), std::move(out), {a}, [a, m, n](Node& o) {
    if (!a.requires_grad()) return;
    a.node()->ensure_grad();
    for (int i = 0; i < m; ++i) {
      const double* y = o.value.data() + static_cast<std::size_t>(i) * n;
      const double* gy = o.grad.data() + static_cast<std::size_t>(i) * n;
      double* gx = a.node()->grad.data() + static_cast<std::size_t>(i) * n;
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += gy[j] * y[j];
      for (int j = 0; j < n; ++j) gx[j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps) {
  if (a.shape().size() != 2) dim_error("layer_norm", a.shape(), {});
  const int m = a.rows(), n = a.cols();
  if (gain.shape() != std::vector<int>{n} || bias.shape() != std::vector<int>{n})
    dim_error("layer_norm gain/bias", gain.shape(), {n});
  std::vector<double> out(a.size());
  auto xhat = std::make_shared<std::vector<double>>(a.size());
  auto inv_sigma = std::make_shared<std::vector<double>>(m);
  for (int i = 0; i < m; ++i) {
    const double* row = a.value().data() + static_cast<std::size_t>(i) * n;
    double mu = 0.0;
    for (int j = 0; j < n; ++j) mu += row[j];
    mu /= n;
    double var = 0.0;
    for (int j = 0; j < n; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= n;
    double inv = 1.0 / std::sqrt(var + eps);
    (*inv_sigma)[i] = inv;
    for (int j = 0; j < n; ++j) {
      double xh = (row[j] - mu) * inv;
      (*xhat)[static_cast<std::size_t>(i) * n + j] = xh;
      out[static_cast<std::size_t>(i) * n + j] = xh * gain.value()[j] + bias.value()[j];
    }
  }
  return make_op(a.shape(), std::move(out), {a, gain, bias},
                 [a, gain, bias, xhat, inv_sigma, m, n](Node& o) {
                   for (int i = 0; i < m; ++i) {
                     const double* gy = o.grad.data() + static_cast<std::size_t>(i) * n;
                     const double* xh = xhat->data() + static_cast<std::size_t>(i) * n;
                     if (gain.requires_grad()) {
                       gain.node()->ensure_grad();
                       for (int j = 0; j < n; ++j)
                         gain.node()->grad[j] += gy[j] * xh[j];
                     }
                     if (bias.requires_grad()) {
                       bias.node()->ensure_grad();
                       for (int j = 0; j < n; ++j) bias.node()->grad[j] += gy[j];
                     }
                     if (a.requires_grad()) {
                       a.node()->ensure_grad();
                       double* gx = a.node()->grad.data() +
                                    static_cast<std::size_t>(i) * n;
                       double mean_g = 0.0, mean_gx = 0.0;
                       for (int j = 0; j < n; ++j) {
                         double gj = gy[j] * gain.value()[j];
                         mean_g += gj;
                         mean_gx += gj * xh[j];
                       }
                       mean_g /= n;
                       mean_gx /= n;
                       for (int j = 0; j < n; ++j) {
                         double gj = gy[j] * gain.value()[j];
                         gx[j] += (gj - mean_g - xh[j] * mean_gx) * (*inv_sigma)[i];
                       }
                     }
                   }
                 });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const int m = parts[0].rows();
  int n = 0;
  for (const auto& p : parts) {
    if (p.shape().size() != 2 || p.rows() != m)
      dim_error("concat_cols", parts[0].shape(), p.shape());
    n += p.cols();
  }
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  int off = 0;
  for (const auto& p : parts) {
    const int pc = p.cols();
    for (int i = 0; i < m; ++i)
      std::memcpy(out.data() + static_cast<std::size_t>(i) * n + off,
                  p.value().data() + static_cast<std::size_t>(i) * pc,
                  sizeof(double) * static_cast<std::size_t>(pc));
    off += pc;
  }
  return make_op({m, n}, std::move(out), parts, [parts, m, n](Node& o) {
    int off2 = 0;
    for (const auto& p : parts) {
      const int pc = p.cols();
      if (p.requires_grad()) {
        p.node()->ensure_grad();
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < pc; ++j)
            p.node()->grad[static_cast<std::size_t>(i) * pc + j] +=
                o.grad[static_cast<std::size_t>(i) * n + off2 + j];
      }
      off2 += pc;
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const int n = parts[0].cols();
  int m = 0;
  for (const auto& p : parts) {
    if (p.shape().size() != 2 || p.cols() != n)
      dim_error("concat_rows", parts[0].shape(), p.shape());
    m += p.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m) * n);
  for (const auto& p : parts)
    out.insert(out.end(), p.value().begin(), p.value().end());
  return make_op({m, n}, std::move(out), parts, [parts](Node& o) {
    std::size_t off = 0;
    for (const auto& p : parts) {
      if (p.requires_grad()) {
        p.node()->ensure_grad();
        for (std::size_t i = 0; i < p.size(); ++i)
          p.node()->grad[i] += o.grad[off + i];
      }
      off += p.size();
    }
  });
}

Tensor slice_cols(const Tensor& a, int start, int len) {
  if (a.shape().size() != 2 || start < 0 || len < 1 || start + len > a.cols())
    dim_error("slice_cols", a.shape(), {start, len});
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(static_cast<std::size_t>(m) * len);
  for (int i = 0; i < m; ++i)
    std::memcpy(out.data() + static_cast<std::size_t>(i) * len,
                a.value().data() + static_cast<std::size_t>(i) * n + start,
                sizeof(double) * static_cast<std::size_t>(len));
  return make_op({m, len}, std::move(out), {a}, [a, start, len, m, n](Node& o) {
    if (!a.requires_grad()) return;
    a.node()->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < len; ++j)
        a.node()->grad[static_cast<std::size_t>(i) * n + start + j] +=
            o.grad[static_cast<std::size_t>(i) * len + j];
  });
}

Tensor slice_rows(const Tensor& a, int start, int len) {
  if (a.shape().size() != 2 || start < 0 || len < 1 || start + len > a.rows())
    dim_error("slice_rows", a.shape(), {start, len});
  const int n = a.cols();
  std::vector<double> out(a.value().begin() + static_cast<std::size_t>(start) * n,
                          a.value().begin() +
                              static_cast<std::size_t>(start + len) * n);
  return make_op({len, n}, std::move(out), {a}, [a, start, n](Node& o) {
    if (!a.requires_grad()) return;
    a.node()->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a.node()->grad[static_cast<std::size_t>(start) * n + i] += o.grad[i];
  });
}

Tensor reshape(const Tensor& a, std::vector<int> shape) {
  if (numel(shape) != a.size())
    throw DimensionError("reshape: " + shape_str(a.shape()) + " to " +
                         shape_str(shape));
  std::vector<double> out = a.value();
  return make_op(std::move(shape), std::move(out), {a}, [a](Node& o) {
    if (!a.requires_grad()) return;
    a.node()->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      a.node()->grad[i] += o.grad[i];
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.value()) s += v;
  return make_op({1}, {s}, {a}, [a](Node& o) {
    if (!a.requires_grad()) return;
    a.node()->ensure_grad();
    for (auto& g : a.node()->grad) g += o.grad[0];
  });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                     const std::vector<double>& weights) {
  if (logits.shape().size() != 2 ||
      logits.rows() != static_cast<int>(targets.size()))
    dim_error("cross_entropy", logits.shape(),
              {static_cast<int>(targets.size())});
  if (!weights.empty() && weights.size() != targets.size())
    throw DimensionError("cross_entropy: weight count != row count");
  const int m = logits.rows(), n = logits.cols();
  double wsum = 0.0;
  for (int i = 0; i < m; ++i)
    wsum += weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
  if (wsum <= 0.0) throw Error("cross_entropy: all rows masked out");

  auto probs = std::make_shared<std::vector<double>>(logits.size());
  double loss = 0.0;
  for (int i = 0; i < m; ++i) {
    if (targets[static_cast<std::size_t>(i)] < 0 ||
        targets[static_cast<std::size_t>(i)] >= n)
      throw DimensionError("cross_entropy: target class out of range");
    const double* row = logits.value().data() + static_cast<std::size_t>(i) * n;
    double* prow = probs->data() + static_cast<std::size_t>(i) * n;
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < n; ++j) {
      prow[j] = std::exp(row[j] - mx);
      sum += prow[j];
    }
    for (int j = 0; j < n; ++j) prow[j] /= sum;
    double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    loss -= w * std::log(std::max(prow[targets[static_cast<std::size_t>(i)]],
                                  1e-300));
  }
  loss /= wsum;
  return make_op({1}, {loss}, {logits},
                 [logits, targets, weights, probs, wsum, m, n](Node& o) {
                   if (!logits.requires_grad()) return;
                   logits.node()->ensure_grad();
                   double g = o.grad[0] / wsum;
                   for (int i = 0; i < m; ++i) {
                     double w = weights.empty()
                                    ? 1.0
                                    : weights[static_cast<std::size_t>(i)];
                     if (w == 0.0) continue;
                     const double* prow =
                         probs->data() + static_cast<std::size_t>(i) * n;
                     double* grow = logits.node()->grad.data() +
                                    static_cast<std::size_t>(i) * n;
                     for (int j = 0; j < n; ++j) {
                       double ind =
                           j == targets[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
                       grow[j] += g * w * (prow[j] - ind);
                     }
                   }
                 });
}

}  // namespace nextcat::ad

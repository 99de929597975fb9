#include "pathcast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "pathcast/common.hpp"

namespace pathcast {

namespace {

thread_local bool g_grad_enabled = true;

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (const auto d : shape) n *= d;
  return n;
}

std::shared_ptr<TensorNode> make_node(std::vector<std::size_t> shape) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value.assign(shape_size(n->shape), 0.0);
  return n;
}

bool any_requires(const std::vector<Tensor>& xs) {
  for (const auto& x : xs)
    if (x.requires_grad()) return true;
  return false;
}

// Registers out as a graph node when recording is active.
void attach(Tensor& out, std::vector<Tensor> parents,
            std::function<void(TensorNode&)> backward_fn) {
  if (!g_grad_enabled) return;
  if (!any_requires(parents)) return;
  auto n = out.node();
  n->requires_grad = true;
  n->parents.reserve(parents.size());
  for (auto& p : parents) n->parents.push_back(p.node());
  n->backward = std::move(backward_fn);
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) throw NumericError(std::string(op) + ": shape mismatch");
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from({v}, {}, requires_grad);
}

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  auto n = make_node(std::move(shape));
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(std::vector<double> data, std::vector<std::size_t> shape,
                    bool requires_grad) {
  if (data.size() != shape_size(shape)) throw NumericError("Tensor::from: size mismatch");
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::vector(std::vector<double> data, bool requires_grad) {
  const std::size_t n = data.size();
  return from(std::move(data), {n}, requires_grad);
}

const std::vector<std::size_t>& Tensor::shape() const { return n_->shape; }
std::size_t Tensor::size() const { return n_->value.size(); }
std::size_t Tensor::rank() const { return n_->shape.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw NumericError("rows: rank-2 tensor required");
  return n_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw NumericError("cols: rank-2 tensor required");
  return n_->shape[1];
}

bool Tensor::requires_grad() const { return n_ && n_->requires_grad; }

const std::vector<double>& Tensor::value() const { return n_->value; }
std::vector<double>& Tensor::raw_value() { return n_->value; }

const std::vector<double>& Tensor::grad() const {
  n_->ensure_grad();
  return n_->grad;
}

double Tensor::item() const {
  if (size() != 1) throw NumericError("item: scalar tensor required");
  return n_->value[0];
}

double Tensor::at(std::size_t i) const { return n_->value.at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
  return n_->value.at(r * cols() + c);
}

bool Tensor::all_finite() const {
  for (const double v : n_->value)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::detached() const {
  auto n = std::make_shared<TensorNode>();
  n->shape = n_->shape;
  n->value = n_->value;
  return Tensor(std::move(n));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() == 2 && b.rank() == 2) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    if (b.rows() != k) throw NumericError("matmul: inner dimensions differ");
    Tensor out = Tensor::zeros({m, n});
    const auto& av = a.value();
    const auto& bv = b.value();
    auto& ov = out.raw_value();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = av[i * k + p];
        if (aip == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += aip * bv[p * n + j];
      }
    }
    attach(out, {a, b}, [m, k, n, pa = a.node().get(), pb = b.node().get()](TensorNode& o) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += o.grad[i * n + j] * pb->value[p * n + j];
            pa->grad[i * k + p] += acc;
          }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += pa->value[i * k + p] * o.grad[i * n + j];
            pb->grad[p * n + j] += acc;
          }
      }
    });
    return out;
  }
  if (a.rank() == 2 && b.rank() == 1) {
    const std::size_t m = a.rows(), k = a.cols();
    if (b.size() != k) throw NumericError("matmul: matrix-vector dimensions differ");
    Tensor out = Tensor::zeros({m});
    const auto& av = a.value();
    const auto& bv = b.value();
    auto& ov = out.raw_value();
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* arow = av.data() + i * k;
      for (std::size_t p = 0; p < k; ++p) acc += arow[p] * bv[p];
      ov[i] = acc;
    }
    attach(out, {a, b}, [m, k, pa = a.node().get(), pb = b.node().get()](TensorNode& o) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          const double g = o.grad[i];
          if (g == 0.0) continue;
          double* grow = pa->grad.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) grow[p] += g * pb->value[p];
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < m; ++i) {
          const double g = o.grad[i];
          if (g == 0.0) continue;
          const double* arow = pa->value.data() + i * k;
          for (std::size_t p = 0; p < k; ++p) pb->grad[p] += g * arow[p];
        }
      }
    });
    return out;
  }
  if (a.rank() == 1 && b.rank() == 2) {
    const std::size_t k = a.size(), n = b.cols();
    if (b.rows() != k) throw NumericError("matmul: vector-matrix dimensions differ");
    Tensor out = Tensor::zeros({n});
    const auto& av = a.value();
    const auto& bv = b.value();
    auto& ov = out.raw_value();
    for (std::size_t p = 0; p < k; ++p) {
      const double ap = av[p];
      if (ap == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) ov[j] += ap * bv[p * n + j];
    }
    attach(out, {a, b}, [k, n, pa = a.node().get(), pb = b.node().get()](TensorNode& o) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += pb->value[p * n + j] * o.grad[j];
          pa->grad[p] += acc;
        }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t p = 0; p < k; ++p) {
          const double ap = pa->value[p];
          if (ap == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) pb->grad[p * n + j] += ap * o.grad[j];
        }
      }
    });
    return out;
  }
  throw NumericError("matmul: unsupported ranks");
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  Tensor out = Tensor::zeros(a.shape());
  auto& ov = out.raw_value();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.value()[i] + b.value()[i];
  attach(out, {a, b}, [pa = a.node().get(), pb = b.node().get()](TensorNode& o) {
    for (TensorNode* p : {pa, pb}) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) p->grad[i] += o.grad[i];
    }
  });
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  Tensor out = Tensor::zeros(a.shape());
  auto& ov = out.raw_value();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.value()[i] - b.value()[i];
  attach(out, {a, b}, [pa = a.node().get(), pb = b.node().get()](TensorNode& o) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) pa->grad[i] += o.grad[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) pb->grad[i] -= o.grad[i];
    }
  });
  return out;
}

Tensor scale(const Tensor& x, double k) {
  Tensor out = Tensor::zeros(x.shape());
  auto& ov = out.raw_value();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = k * x.value()[i];
  attach(out, {x}, [k, px = x.node().get()](TensorNode& o) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i) px->grad[i] += k * o.grad[i];
  });
  return out;
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "elementwise_mul");
  Tensor out = Tensor::zeros(a.shape());
  auto& ov = out.raw_value();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = a.value()[i] * b.value()[i];
  attach(out, {a, b}, [pa = a.node().get(), pb = b.node().get()](TensorNode& o) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) pa->grad[i] += o.grad[i] * pb->value[i];
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) pb->grad[i] += o.grad[i] * pa->value[i];
    }
  });
  return out;
}

Tensor concat(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw NumericError("concat: empty input");
  std::size_t total = 0;
  for (const auto& x : xs) {
    if (x.rank() != 1) throw NumericError("concat: rank-1 tensors required");
    total += x.size();
  }
  Tensor out = Tensor::zeros({total});
  auto& ov = out.raw_value();
  std::size_t off = 0;
  for (const auto& x : xs) {
    std::copy(x.value().begin(), x.value().end(), ov.begin() + static_cast<std::ptrdiff_t>(off));
    off += x.size();
  }
  std::vector<TensorNode*> raw;
  raw.reserve(xs.size());
  for (const auto& x : xs) raw.push_back(x.node().get());
  attach(out, xs, [raw](TensorNode& o) {
    std::size_t off = 0;
    for (TensorNode* p : raw) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (std::size_t i = 0; i < p->value.size(); ++i) p->grad[i] += o.grad[off + i];
      }
      off += p->value.size();
    }
  });
  return out;
}

Tensor stack_rows(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw NumericError("stack_rows: empty input");
  const std::size_t d = xs.front().size();
  for (const auto& x : xs) {
    if (x.rank() != 1 || x.size() != d)
      throw NumericError("stack_rows: equal-length rank-1 tensors required");
  }
  Tensor out = Tensor::zeros({xs.size(), d});
  auto& ov = out.raw_value();
  for (std::size_t r = 0; r < xs.size(); ++r)
    std::copy(xs[r].value().begin(), xs[r].value().end(),
              ov.begin() + static_cast<std::ptrdiff_t>(r * d));
  std::vector<TensorNode*> raw;
  raw.reserve(xs.size());
  for (const auto& x : xs) raw.push_back(x.node().get());
  attach(out, xs, [raw, d](TensorNode& o) {
    for (std::size_t r = 0; r < raw.size(); ++r) {
      TensorNode* p = raw[r];
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (std::size_t i = 0; i < d; ++i) p->grad[i] += o.grad[r * d + i];
    }
  });
  return out;
}

Tensor row(const Tensor& m, std::size_t i) {
  if (m.rank() != 2) throw NumericError("row: rank-2 tensor required");
  if (i >= m.rows()) throw NumericError("row: index out of range");
  const std::size_t d = m.cols();
  Tensor out = Tensor::zeros({d});
  auto& ov = out.raw_value();
  std::copy(m.value().begin() + static_cast<std::ptrdiff_t>(i * d),
            m.value().begin() + static_cast<std::ptrdiff_t>((i + 1) * d), ov.begin());
  attach(out, {m}, [i, d, pm = m.node().get()](TensorNode& o) {
    if (!pm->requires_grad) return;
    pm->ensure_grad();
    for (std::size_t j = 0; j < d; ++j) pm->grad[i * d + j] += o.grad[j];
  });
  return out;
}

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& idx) {
  if (m.rank() != 2) throw NumericError("gather_rows: rank-2 tensor required");
  const std::size_t d = m.cols();
  Tensor out = Tensor::zeros({idx.size(), d});
  auto& ov = out.raw_value();
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= m.rows()) throw NumericError("gather_rows: index out of range");
    std::copy(m.value().begin() + static_cast<std::ptrdiff_t>(idx[r] * d),
              m.value().begin() + static_cast<std::ptrdiff_t>((idx[r] + 1) * d),
              ov.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  attach(out, {m}, [idx, d, pm = m.node().get()](TensorNode& o) {
    if (!pm->requires_grad) return;
    pm->ensure_grad();
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) pm->grad[idx[r] * d + j] += o.grad[r * d + j];
  });
  return out;
}

Tensor pick(const Tensor& v, std::size_t i) {
  if (v.rank() != 1) throw NumericError("pick: rank-1 tensor required");
  if (i >= v.size()) throw NumericError("pick: index out of range");
  Tensor out = Tensor::scalar(v.value()[i]);
  attach(out, {v}, [i, pv = v.node().get()](TensorNode& o) {
    if (!pv->requires_grad) return;
    pv->ensure_grad();
    pv->grad[i] += o.grad[0];
  });
  return out;
}

namespace {

template <typename Fwd, typename Bwd>
Tensor unary_elementwise(const Tensor& x, Fwd fwd, Bwd bwd_from_out_and_in) {
  Tensor out = Tensor::zeros(x.shape());
  auto& ov = out.raw_value();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = fwd(x.value()[i]);
  attach(out, {x}, [bwd_from_out_and_in, px = x.node().get()](TensorNode& o) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      px->grad[i] += o.grad[i] * bwd_from_out_and_in(o.value[i], px->value[i]);
  });
  return out;
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
  return unary_elementwise(
      x,
      [](double v) {
        return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      },
      [](double y, double) { return y * (1.0 - y); });
}

Tensor logsigmoid(const Tensor& x) {
  return unary_elementwise(
      x,
      [](double v) { return v >= 0 ? -std::log1p(std::exp(-v)) : v - std::log1p(std::exp(v)); },
      [](double, double v) {
        // d/dv ln(sigmoid(v)) = sigmoid(-v)
        return v >= 0 ? std::exp(-v) / (1.0 + std::exp(-v)) : 1.0 / (1.0 + std::exp(v));
      });
}

Tensor tanh(const Tensor& x) {
  return unary_elementwise(x, [](double v) { return std::tanh(v); },
                           [](double y, double) { return 1.0 - y * y; });
}

Tensor cos(const Tensor& x) {
  return unary_elementwise(x, [](double v) { return std::cos(v); },
                           [](double, double v) { return -std::sin(v); });
}

Tensor log(const Tensor& x) {
  for (const double v : x.value())
    if (!(v > 0.0)) throw NumericError("log: non-positive input");
  return unary_elementwise(x, [](double v) { return std::log(v); },
                           [](double, double v) { return 1.0 / v; });
}

Tensor relu(const Tensor& x) {
  return unary_elementwise(x, [](double v) { return v > 0 ? v : 0.0; },
                           [](double, double v) { return v > 0 ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1) throw NumericError("softmax: rank-1 tensor required");
  if (x.size() == 0) throw NumericError("softmax: empty input");
  Tensor out = Tensor::zeros(x.shape());
  auto& ov = out.raw_value();
  const double hi = *std::max_element(x.value().begin(), x.value().end());
  double z = 0.0;
  for (std::size_t i = 0; i < ov.size(); ++i) {
    ov[i] = std::exp(x.value()[i] - hi);
    z += ov[i];
  }
  for (auto& v : ov) v /= z;
  attach(out, {x}, [px = x.node().get()](TensorNode& o) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    double dot = 0.0;
    for (std::size_t i = 0; i < o.grad.size(); ++i) dot += o.grad[i] * o.value[i];
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      px->grad[i] += o.value[i] * (o.grad[i] - dot);
  });
  return out;
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (const double v : x.value()) acc += v;
  Tensor out = Tensor::scalar(acc);
  attach(out, {x}, [px = x.node().get()](TensorNode& o) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (auto& g : px->grad) g += o.grad[0];
  });
  return out;
}

Tensor mean(const Tensor& x) {
  if (x.size() == 0) throw NumericError("mean: empty input");
  double acc = 0.0;
  for (const double v : x.value()) acc += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  Tensor out = Tensor::scalar(acc * inv);
  attach(out, {x}, [inv, px = x.node().get()](TensorNode& o) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (auto& g : px->grad) g += o.grad[0] * inv;
  });
  return out;
}

Tensor l2_norm_sq(const Tensor& x) {
  double acc = 0.0;
  for (const double v : x.value()) acc += v * v;
  Tensor out = Tensor::scalar(acc);
  attach(out, {x}, [px = x.node().get()](TensorNode& o) {
    if (!px->requires_grad) return;
    px->ensure_grad();
    for (std::size_t i = 0; i < px->grad.size(); ++i) px->grad[i] += 2.0 * px->value[i] * o.grad[0];
  });
  return out;
}

Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b) {
  if (w.rank() != 2 || x.rank() != 1 || b.rank() != 1)
    throw NumericError("linear: expected [m,k] w, [k] x, [m] b");
  const std::size_t m = w.rows(), k = w.cols();
  if (x.size() != k || b.size() != m) throw NumericError("linear: shape mismatch");
  Tensor out = Tensor::zeros({m});
  auto& ov = out.raw_value();
  const auto& wv = w.value();
  const auto& xv = x.value();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = b.value()[i];
    const double* wrow = wv.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) acc += wrow[p] * xv[p];
    ov[i] = acc;
  }
  attach(out, {w, x, b},
         [m, k, pw = w.node().get(), px = x.node().get(), pb = b.node().get()](TensorNode& o) {
           if (pw->requires_grad) {
             pw->ensure_grad();
             for (std::size_t i = 0; i < m; ++i) {
               const double g = o.grad[i];
               if (g == 0.0) continue;
               double* grow = pw->grad.data() + i * k;
               for (std::size_t p = 0; p < k; ++p) grow[p] += g * px->value[p];
             }
           }
           if (px->requires_grad) {
             px->ensure_grad();
             for (std::size_t i = 0; i < m; ++i) {
               const double g = o.grad[i];
               if (g == 0.0) continue;
               const double* wrow = pw->value.data() + i * k;
               for (std::size_t p = 0; p < k; ++p) px->grad[p] += g * wrow[p];
             }
           }
           if (pb->requires_grad) {
             pb->ensure_grad();
             for (std::size_t i = 0; i < m; ++i) pb->grad[i] += o.grad[i];
           }
         });
  return out;
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) throw NumericError("backward: loss must be scalar");
  // Iterative post-order over the DAG.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* parent = node->parents[next++].get();
      if (seen.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward) {
      n->ensure_grad();
      n->backward(*n);
    }
  }
  // The graph is consumed: drop edges and intermediate gradients so only
  // leaf gradients survive.
  for (TensorNode* n : order) {
    if (!n->backward) continue;
    n->backward = nullptr;
    n->parents.clear();
    n->grad.clear();
    n->grad.shrink_to_fit();
  }
}

}  // namespace pathcast

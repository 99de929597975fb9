#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

namespace pathcast {

// Reverse-mode autodiff over dense row-major 64-bit tensors of rank 0..2.
// Ops record a backward closure into the node graph whenever gradients are
// enabled and any input requires them; backward() consumes the graph.

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

struct TensorNode {
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward;

  std::size_t size() const { return value.size(); }
  bool is_leaf() const { return !backward; }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<double> data, std::vector<std::size_t> shape,
                     bool requires_grad = false);
  static Tensor vector(std::vector<double> data, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(n_); }
  const std::vector<std::size_t>& shape() const;
  std::size_t size() const;
  std::size_t rank() const;
  std::size_t rows() const;
  std::size_t cols() const;
  bool requires_grad() const;

  const std::vector<double>& value() const;
  std::vector<double>& raw_value();  // in-place edits are for leaves only
  const std::vector<double>& grad() const;
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;
  bool all_finite() const;

  // Value copy detached from the graph.
  Tensor detached() const;

  std::shared_ptr<TensorNode> node() const { return n_; }
  static Tensor wrap(std::shared_ptr<TensorNode> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<TensorNode> n) : n_(std::move(n)) {}
  std::shared_ptr<TensorNode> n_;
};

// Shape rules: matmul accepts [m,k]x[k,n], [m,k]x[k] and [k]x[k,n].
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double k);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
Tensor concat(const std::vector<Tensor>& xs);       // rank-1 inputs
Tensor stack_rows(const std::vector<Tensor>& xs);   // rank-1 inputs -> [k,d]
Tensor row(const Tensor& m, std::size_t i);
Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& idx);
Tensor pick(const Tensor& v, std::size_t i);        // vector element -> scalar
Tensor sigmoid(const Tensor& x);
Tensor logsigmoid(const Tensor& x);                 // stable ln(sigmoid(x))
Tensor tanh(const Tensor& x);
Tensor cos(const Tensor& x);
Tensor log(const Tensor& x);                        // rejects non-positive input
Tensor relu(const Tensor& x);
Tensor softmax(const Tensor& x);                    // rank-1, max-subtracted
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor l2_norm_sq(const Tensor& x);

// Fused W x + b for [m,k] W, [k] x, [m] b.
Tensor linear(const Tensor& w, const Tensor& x, const Tensor& b);

// Accumulates d(loss)/d(leaf) into every requires_grad leaf, then frees
// the graph (closures and edges), so a graph can be run backward once.
void backward(const Tensor& loss);

}  // namespace pathcast

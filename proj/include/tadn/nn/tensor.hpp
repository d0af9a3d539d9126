#pragma once

#include "tadn/precision.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Core>

TADN_NAMESPACE_BEGIN
namespace nn {

using Matrix =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

namespace detail {

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(const Matrix& grad_out)> backward;
};

}  // namespace detail

// Handle to a value in a reverse-mode differentiation graph. Copies share
// the same node. Gradients accumulate into leaves across backward() calls
// until zero_grad().
class Tensor {
 public:
  Tensor() = default;

  static Tensor constant(Matrix value);
  static Tensor parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  bool requires_grad() const { return node_->requires_grad; }

  // Zeros of value() shape when nothing has been accumulated.
  Matrix grad() const;
  bool has_grad() const { return node_->grad.size() != 0; }
  void zero_grad() { node_->grad.resize(0, 0); }

  // Seeds d(this)/d(this) = 1; this must be 1x1.
  void backward() const;
  double item() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend Tensor make_result(Matrix value, std::vector<Tensor> inputs,
                            std::function<void(const Matrix&)> backward);
};

// Builds an op node; the graph edge is kept only when grad mode is on and
// some input requires a gradient.
Tensor make_result(Matrix value, std::vector<Tensor> inputs,
                   std::function<void(const Matrix&)> backward);

// Adds `g` into the node's gradient if it tracks one.
void accumulate(detail::Node* node, const Matrix& g);

bool grad_enabled();

// Disables graph construction on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Forward-pass settings. Dropout is only active when training with an rng.
struct Context {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

Tensor matmul(const Tensor& a, const Tensor& b);
// a * b^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
// x * w + bias, bias is 1 x out.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);
Tensor concat_rows(const Tensor& top, const Tensor& bottom);
Tensor concat_cols(const Tensor& left, const Tensor& right);
Tensor softmax_rows(const Tensor& x);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
Tensor dropout(const Tensor& x, double rate, const Context& ctx);

// Multi-head scaled dot-product attention on already projected inputs.
// Head h uses columns [h*dk, (h+1)*dk). No masking.
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 int num_heads);

// -(1/normalizer) * sum_ij labels_ij * log softmax_row(logits)_ij
Tensor softmax_cross_entropy(const Tensor& logits, const Matrix& labels,
                             double normalizer);

// Plain row softmax on values, max-subtracted.
Matrix row_softmax(const Matrix& x);

}  // namespace nn
TADN_NAMESPACE_END

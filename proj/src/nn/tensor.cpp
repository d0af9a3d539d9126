#include "tadn/nn/tensor.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace nn {
namespace {

thread_local bool g_grad_enabled = true;

std::string shape(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "," + std::to_string(m.cols()) + ")";
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  TADN_CHECK(a.rows() == b.rows() && a.cols() == b.cols(),
             std::string(op) + ": shape mismatch " + shape(a.value()) + " vs " +
                 shape(b.value()));
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::constant(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  return Tensor(std::move(node));
}

Tensor Tensor::parameter(Matrix value) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Tensor(std::move(node));
}

Matrix Tensor::grad() const {
  if (node_->grad.size() == 0) return Matrix::Zero(rows(), cols());
  return node_->grad;
}

double Tensor::item() const {
  TADN_CHECK(rows() == 1 && cols() == 1, "item() needs a 1x1 tensor");
  return node_->value(0, 0);
}

void accumulate(detail::Node* node, const Matrix& g) {
  if (!node->requires_grad) return;
  if (node->grad.size() == 0) {
    node->grad = g;
  } else {
    node->grad += g;
  }
}

namespace {

// grad += lhs * rhs without materializing the product.
template <class Lhs, class Rhs>
void accumulate_product(detail::Node* node, const Lhs& lhs, const Rhs& rhs) {
  if (!node->requires_grad) return;
  if (node->grad.size() == 0) {
    node->grad.noalias() = lhs * rhs;
  } else {
    node->grad.noalias() += lhs * rhs;
  }
}

}  // namespace

Tensor make_result(Matrix value, std::vector<Tensor> inputs,
                   std::function<void(const Matrix&)> backward) {
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  if (g_grad_enabled) {
    for (const Tensor& in : inputs) {
      if (in.requires_grad()) {
        node->requires_grad = true;
        break;
      }
    }
  }
  if (node->requires_grad) {
    node->inputs.reserve(inputs.size());
    for (Tensor& in : inputs) node->inputs.push_back(in.shared());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void Tensor::backward() const {
  TADN_CHECK(rows() == 1 && cols() == 1, "backward() needs a scalar output");
  if (!node_->requires_grad) return;

  // Post-order DFS gives a topological order; walk it in reverse.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      detail::Node* child = n->inputs[next++].get();
      if (child->requires_grad && child->backward && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  for (detail::Node* n : order) {
    if (n != node_.get()) n->grad.resize(0, 0);
  }
  node_->grad = Matrix::Ones(1, 1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->grad.size() == 0) continue;
    n->backward(n->grad);
  }
  // Intermediate gradients are not needed after the sweep.
  for (detail::Node* n : order) {
    if (n != node_.get()) n->grad.resize(0, 0);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  TADN_CHECK(a.cols() == b.rows(), "matmul: inner dimension mismatch " +
                                       shape(a.value()) + " x " + shape(b.value()));
  detail::Node* an = a.node();
  detail::Node* bn = b.node();
  return make_result(a.value() * b.value(), {a, b}, [an, bn](const Matrix& g) {
    accumulate_product(an, g, bn->value.transpose());
    accumulate_product(bn, an->value.transpose(), g);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  TADN_CHECK(a.cols() == b.cols(), "matmul_nt: width mismatch " +
                                       shape(a.value()) + " vs " + shape(b.value()));
  detail::Node* an = a.node();
  detail::Node* bn = b.node();
  return make_result(a.value() * b.value().transpose(), {a, b},
                     [an, bn](const Matrix& g) {
                       accumulate_product(an, g, bn->value);
                       accumulate_product(bn, g.transpose(), an->value);
                     });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
  TADN_CHECK(x.cols() == w.rows(), "linear: input width " +
                                       std::to_string(x.cols()) +
                                       " does not match weight " + shape(w.value()));
  TADN_CHECK(bias.rows() == 1 && bias.cols() == w.cols(), "linear: bias shape");
  Matrix out(x.rows(), w.cols());
  out.rowwise() = bias.value().row(0);
  out.noalias() += x.value() * w.value();
  detail::Node* xn = x.node();
  detail::Node* wn = w.node();
  detail::Node* bn = bias.node();
  return make_result(std::move(out), {x, w, bias}, [xn, wn, bn](const Matrix& g) {
    accumulate_product(xn, g, wn->value.transpose());
    accumulate_product(wn, xn->value.transpose(), g);
    if (bn->requires_grad) accumulate(bn, g.colwise().sum());
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  detail::Node* an = a.node();
  detail::Node* bn = b.node();
  return make_result(a.value() + b.value(), {a, b}, [an, bn](const Matrix& g) {
    accumulate(an, g);
    accumulate(bn, g);
  });
}

Tensor scale(const Tensor& a, double s) {
  detail::Node* an = a.node();
  const Real k = static_cast<Real>(s);
  return make_result(a.value() * k, {a},
                     [an, k](const Matrix& g) { accumulate(an, g * k); });
}

Tensor relu(const Tensor& a) {
  detail::Node* an = a.node();
  return make_result(a.value().cwiseMax(Real(0)), {a}, [an](const Matrix& g) {
    accumulate(an, (an->value.array() > Real(0)).select(g, Real(0)));
  });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  detail::Node* an = a.node();
  return make_result(std::move(out), {a}, [an](const Matrix& g) {
    accumulate(an, Matrix::Constant(an->value.rows(), an->value.cols(), g(0, 0)));
  });
}

Tensor concat_rows(const Tensor& top, const Tensor& bottom) {
  TADN_CHECK(top.cols() == bottom.cols(), "concat_rows: width mismatch");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top.value();
  out.bottomRows(bottom.rows()) = bottom.value();
  detail::Node* tn = top.node();
  detail::Node* bn = bottom.node();
  return make_result(std::move(out), {top, bottom}, [tn, bn](const Matrix& g) {
    if (tn->requires_grad) accumulate(tn, g.topRows(tn->value.rows()));
    if (bn->requires_grad) accumulate(bn, g.bottomRows(bn->value.rows()));
  });
}

Tensor concat_cols(const Tensor& left, const Tensor& right) {
  TADN_CHECK(left.rows() == right.rows(), "concat_cols: row count mismatch");
  Matrix out(left.rows(), left.cols() + right.cols());
  out.leftCols(left.cols()) = left.value();
  out.rightCols(right.cols()) = right.value();
  detail::Node* ln = left.node();
  detail::Node* rn = right.node();
  return make_result(std::move(out), {left, right}, [ln, rn](const Matrix& g) {
    if (ln->requires_grad) accumulate(ln, g.leftCols(ln->value.cols()));
    if (rn->requires_grad) accumulate(rn, g.rightCols(rn->value.cols()));
  });
}

Matrix row_softmax(const Matrix& x) {
  TADN_CHECK(x.cols() > 0, "row_softmax: needs at least one column");
  Matrix y = x;
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
  return y;
}

Tensor softmax_rows(const Tensor& x) {
  Matrix y = row_softmax(x.value());
  detail::Node* xn = x.node();
  auto yp = std::make_shared<Matrix>(y);
  return make_result(std::move(y), {x}, [xn, yp](const Matrix& g) {
    const Matrix& s = *yp;
    const Vector dot = (g.array() * s.array()).rowwise().sum();
    Matrix dx = s.array() * (g.colwise() - dot).array();
    accumulate(xn, dx);
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  const Eigen::Index d = x.cols();
  TADN_CHECK(gamma.rows() == 1 && gamma.cols() == d, "layer_norm: gamma shape");
  TADN_CHECK(beta.rows() == 1 && beta.cols() == d, "layer_norm: beta shape");
  auto xhat = std::make_shared<Matrix>(x.rows(), d);
  auto inv_std = std::make_shared<Vector>(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto row = x.value().row(r);
    const Real mean = row.mean();
    const Real var = (row.array() - mean).square().mean();
    const Real is = Real(1) / std::sqrt(var + static_cast<Real>(eps));
    (*inv_std)(r) = is;
    xhat->row(r) = (row.array() - mean) * is;
  }
  Matrix out = xhat->array().rowwise() * gamma.value().row(0).array();
  out.rowwise() += beta.value().row(0);
  detail::Node* xn = x.node();
  detail::Node* gn = gamma.node();
  detail::Node* bn = beta.node();
  return make_result(
      std::move(out), {x, gamma, beta},
      [xn, gn, bn, xhat, inv_std](const Matrix& g) {
        if (gn->requires_grad)
          accumulate(gn, (g.array() * xhat->array()).colwise().sum().matrix());
        if (bn->requires_grad) accumulate(bn, g.colwise().sum());
        if (xn->requires_grad) {
          const Matrix dxhat = g.array().rowwise() * gn->value.row(0).array();
          const Vector mean_d = dxhat.rowwise().mean();
          const Vector mean_dx =
              (dxhat.array() * xhat->array()).rowwise().mean();
          Matrix dx = dxhat;
          dx.colwise() -= mean_d;
          dx -= (xhat->array().colwise() * mean_dx.array()).matrix();
          dx = dx.array().colwise() * inv_std->array();
          accumulate(xn, dx);
        }
      });
}

Tensor dropout(const Tensor& x, double rate, const Context& ctx) {
  TADN_CHECK(rate >= 0.0 && rate < 1.0, "dropout rate must be in [0,1)");
  if (!ctx.training || rate == 0.0 || ctx.rng == nullptr) return x;
  std::bernoulli_distribution keep(1.0 - rate);
  auto mask = std::make_shared<Matrix>(x.rows(), x.cols());
  const Real inv = static_cast<Real>(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < mask->size(); ++i) {
    mask->data()[i] = keep(*ctx.rng) ? inv : Real(0);
  }
  Matrix out = x.value().cwiseProduct(*mask);
  detail::Node* xn = x.node();
  return make_result(std::move(out), {x}, [xn, mask](const Matrix& g) {
    accumulate(xn, g.cwiseProduct(*mask));
  });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                 int num_heads) {
  TADN_CHECK(num_heads > 0, "attention: num_heads must be positive");
  TADN_CHECK(k.rows() > 0, "attention: no key rows");
  TADN_CHECK(k.rows() == v.rows(), "attention: keys and values differ in rows");
  TADN_CHECK(q.cols() == k.cols() && k.cols() == v.cols(),
             "attention: width mismatch");
  TADN_CHECK(q.cols() % num_heads == 0, "attention: width not divisible by heads");
  const Eigen::Index dk = q.cols() / num_heads;
  const Real s = Real(1) / std::sqrt(static_cast<Real>(dk));

  auto probs = std::make_shared<std::vector<Matrix>>(num_heads);
  Matrix out(q.rows(), q.cols());
  for (int h = 0; h < num_heads; ++h) {
    const Eigen::Index c0 = h * dk;
    Matrix scores = (q.value().middleCols(c0, dk) *
                     k.value().middleCols(c0, dk).transpose()) * s;
    (*probs)[h] = row_softmax(scores);
    out.middleCols(c0, dk) = (*probs)[h] * v.value().middleCols(c0, dk);
  }

  detail::Node* qn = q.node();
  detail::Node* kn = k.node();
  detail::Node* vn = v.node();
  return make_result(
      std::move(out), {q, k, v}, [qn, kn, vn, probs, dk, s](const Matrix& g) {
        Matrix dq = Matrix::Zero(qn->value.rows(), qn->value.cols());
        Matrix dkm = Matrix::Zero(kn->value.rows(), kn->value.cols());
        Matrix dv = Matrix::Zero(vn->value.rows(), vn->value.cols());
        for (std::size_t h = 0; h < probs->size(); ++h) {
          const Eigen::Index c0 = static_cast<Eigen::Index>(h) * dk;
          const Matrix& p = (*probs)[h];
          const auto go = g.middleCols(c0, dk);
          dv.middleCols(c0, dk) = p.transpose() * go;
          const Matrix dp = go * vn->value.middleCols(c0, dk).transpose();
          const Vector dot = (dp.array() * p.array()).rowwise().sum();
          Matrix ds = p.array() * (dp.colwise() - dot).array();
          ds *= s;
          dq.middleCols(c0, dk) = ds * kn->value.middleCols(c0, dk);
          dkm.middleCols(c0, dk) = ds.transpose() * qn->value.middleCols(c0, dk);
        }
        accumulate(qn, dq);
        accumulate(kn, dkm);
        accumulate(vn, dv);
      });
}

Tensor softmax_cross_entropy(const Tensor& logits, const Matrix& labels,
                             double normalizer) {
  TADN_CHECK(logits.rows() == labels.rows() && logits.cols() == labels.cols(),
             "softmax_cross_entropy: logits " + shape(logits.value()) +
                 " vs labels " + shape(labels));
  TADN_CHECK(normalizer > 0.0, "softmax_cross_entropy: normalizer must be positive");
  const Matrix& x = logits.value();
  auto probs = std::make_shared<Matrix>(row_softmax(x));
  double total = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    const double lse =
        mx + std::log((x.row(r).template cast<double>().array() - mx).exp().sum());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (labels(r, c) != Real(0)) total -= labels(r, c) * (x(r, c) - lse);
    }
  }
  Matrix out(1, 1);
  out(0, 0) = static_cast<Real>(total / normalizer);
  detail::Node* ln = logits.node();
  auto lab = std::make_shared<Matrix>(labels);
  return make_result(std::move(out), {logits},
                     [ln, probs, lab, normalizer](const Matrix& g) {
                       const Vector mass = lab->rowwise().sum();
                       Matrix d = probs->array().colwise() * mass.array();
                       d -= *lab;
                       accumulate(ln, d * static_cast<Real>(g(0, 0) / normalizer));
                     });
}

}  // namespace nn
TADN_NAMESPACE_END

#include "tadn/nn/layers.hpp"

#include <cmath>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace nn {

Tensor ParameterStore::add(std::string name, Matrix init) {
  TADN_CHECK(!find(name).has_value(), "duplicate parameter name " + name);
  Tensor t = Tensor::parameter(std::move(init));
  entries_.push_back({std::move(name), t});
  return t;
}

std::optional<Tensor> ParameterStore::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor;
  }
  return std::nullopt;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.tensor.value().size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

Matrix xavier_uniform(Eigen::Index fan_in, Eigen::Index fan_out,
                      std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-a, a);
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Linear::Linear(ParameterStore& store, const std::string& prefix, Eigen::Index in,
               Eigen::Index out, std::mt19937_64& rng)
    : weight(store.add(prefix + ".weight", xavier_uniform(in, out, rng))),
      bias(store.add(prefix + ".bias", Matrix::Zero(1, out))) {}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& prefix,
                     Eigen::Index width)
    : gamma(store.add(prefix + ".gamma", Matrix::Ones(1, width))),
      beta(store.add(prefix + ".beta", Matrix::Zero(1, width))) {}

MultiHeadAttention::MultiHeadAttention(ParameterStore& store,
                                       const std::string& prefix,
                                       Eigen::Index d_model, int heads,
                                       std::mt19937_64& rng)
    : num_heads(heads),
      wq(store, prefix + ".wq", d_model, d_model, rng),
      wk(store, prefix + ".wk", d_model, d_model, rng),
      wv(store, prefix + ".wv", d_model, d_model, rng),
      wo(store, prefix + ".wo", d_model, d_model, rng) {}

Tensor MultiHeadAttention::operator()(const Tensor& queries, const Tensor& keys,
                                      const Tensor& values) const {
  TADN_CHECK(keys.rows() > 0, "multi-head attention over zero key rows");
  return wo(attention(wq(queries), wk(keys), wv(values), num_heads));
}

void TransformerConfig::validate() const {
  if (d_model <= 0 || num_heads <= 0 || d_model % num_heads != 0) {
    throw InputError("d_model (" + std::to_string(d_model) +
                     ") must be a positive multiple of num_heads (" +
                     std::to_string(num_heads) + ")");
  }
  if (num_encoder_layers < 0 || num_decoder_layers < 0) {
    throw InputError("layer counts must be non-negative");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw InputError("dropout must be in [0,1)");
}

EncoderLayer::EncoderLayer(ParameterStore& store, const std::string& prefix,
                           const TransformerConfig& cfg, std::mt19937_64& rng)
    : self_attn(store, prefix + ".self_attn", cfg.d_model, cfg.num_heads, rng),
      norm1(store, prefix + ".norm1", cfg.d_model),
      ff1(store, prefix + ".ff1", cfg.d_model, cfg.effective_ff_width(), rng),
      ff2(store, prefix + ".ff2", cfg.effective_ff_width(), cfg.d_model, rng),
      norm2(store, prefix + ".norm2", cfg.d_model) {}

Tensor EncoderLayer::operator()(const Tensor& x, double p,
                                const Context& ctx) const {
  Tensor h = norm1(add(x, dropout(self_attn(x, x, x), p, ctx)));
  return norm2(add(h, dropout(ff2(relu(ff1(h))), p, ctx)));
}

DecoderLayer::DecoderLayer(ParameterStore& store, const std::string& prefix,
                           const TransformerConfig& cfg, std::mt19937_64& rng)
    : self_attn(store, prefix + ".self_attn", cfg.d_model, cfg.num_heads, rng),
      norm1(store, prefix + ".norm1", cfg.d_model),
      cross_attn(store, prefix + ".cross_attn", cfg.d_model, cfg.num_heads, rng),
      norm2(store, prefix + ".norm2", cfg.d_model),
      ff1(store, prefix + ".ff1", cfg.d_model, cfg.effective_ff_width(), rng),
      ff2(store, prefix + ".ff2", cfg.effective_ff_width(), cfg.d_model, rng),
      norm3(store, prefix + ".norm3", cfg.d_model) {}

Tensor DecoderLayer::operator()(const Tensor& x, const Tensor& memory, double p,
                                const Context& ctx) const {
  Tensor h = norm1(add(x, dropout(self_attn(x, x, x), p, ctx)));
  h = norm2(add(h, dropout(cross_attn(h, memory, memory), p, ctx)));
  return norm3(add(h, dropout(ff2(relu(ff1(h))), p, ctx)));
}

Transformer::Transformer(ParameterStore& store, const std::string& prefix,
                         TransformerConfig cfg, std::mt19937_64& rng)
    : cfg_(cfg) {
  cfg_.validate();
  for (int i = 0; i < cfg_.num_encoder_layers; ++i) {
    encoder_.emplace_back(store, prefix + ".encoder." + std::to_string(i), cfg_, rng);
  }
  for (int i = 0; i < cfg_.num_decoder_layers; ++i) {
    decoder_.emplace_back(store, prefix + ".decoder." + std::to_string(i), cfg_, rng);
  }
}

Tensor Transformer::encode(const Tensor& x, const Context& ctx) const {
  TADN_CHECK(x.cols() == cfg_.d_model, "encoder input width must equal d_model");
  if (x.rows() == 0) return x;
  Tensor h = x;
  for (const auto& layer : encoder_) h = layer(h, cfg_.dropout, ctx);
  return h;
}

Tensor Transformer::decode(const Tensor& target, const Tensor& memory,
                           const Context& ctx) const {
  TADN_CHECK(target.cols() == cfg_.d_model && memory.cols() == cfg_.d_model,
             "decoder input widths must equal d_model");
  TADN_CHECK(memory.rows() > 0, "decoder memory is empty");
  if (target.rows() == 0) return target;
  Tensor h = target;
  for (const auto& layer : decoder_) h = layer(h, memory, cfg_.dropout, ctx);
  return h;
}

Tensor Transformer::operator()(const Tensor& source, const Tensor& target,
                               const Context& ctx) const {
  return decode(target, encode(source, ctx), ctx);
}

Adam::Adam(ParameterStore& store, Options opts) : store_(&store), opts_(opts) {
  for (const auto& e : store.entries()) {
    m_.push_back(Matrix::Zero(e.tensor.rows(), e.tensor.cols()));
    v_.push_back(Matrix::Zero(e.tensor.rows(), e.tensor.cols()));
  }
}

void Adam::step(double grad_divisor) {
  TADN_CHECK(grad_divisor > 0.0, "grad divisor must be positive");
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  auto& entries = store_->entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& p = entries[i].tensor;
    if (!p.has_grad()) continue;
    const Matrix g = p.grad() / grad_divisor;
    m_[i] = opts_.beta1 * m_[i] + (1.0 - opts_.beta1) * g;
    v_[i] = opts_.beta2 * v_[i] + (1.0 - opts_.beta2) * g.cwiseProduct(g);
    p.mutable_value().array() -=
        opts_.lr * (m_[i].array() / bc1) /
        ((v_[i].array() / bc2).sqrt() + opts_.eps);
  }
}

}  // namespace nn
TADN_NAMESPACE_END

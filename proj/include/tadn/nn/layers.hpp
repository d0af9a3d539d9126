#pragma once

#include "tadn/precision.hpp"

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tadn/nn/tensor.hpp"

TADN_NAMESPACE_BEGIN
namespace nn {

struct NamedParameter {
  std::string name;
  Tensor tensor;
};

// Owns the learnable leaves of a model, keyed by dot-separated path names,
// in registration order.
class ParameterStore {
 public:
  Tensor add(std::string name, Matrix init);

  const std::vector<NamedParameter>& entries() const { return entries_; }
  std::vector<NamedParameter>& entries() { return entries_; }
  std::optional<Tensor> find(const std::string& name) const;
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<NamedParameter> entries_;
};

// Glorot/Xavier uniform in [-a, a], a = sqrt(6 / (fan_in + fan_out)).
Matrix xavier_uniform(Eigen::Index fan_in, Eigen::Index fan_out,
                      std::mt19937_64& rng);

struct Linear {
  Linear() = default;
  Linear(ParameterStore& store, const std::string& prefix, Eigen::Index in,
         Eigen::Index out, std::mt19937_64& rng);

  Tensor operator()(const Tensor& x) const { return linear(x, weight, bias); }

  Tensor weight;  // in x out
  Tensor bias;    // 1 x out
};

struct LayerNorm {
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& prefix, Eigen::Index width);

  Tensor operator()(const Tensor& x) const { return layer_norm(x, gamma, beta); }

  Tensor gamma;
  Tensor beta;
};

struct MultiHeadAttention {
  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore& store, const std::string& prefix,
                     Eigen::Index d_model, int num_heads, std::mt19937_64& rng);

  Tensor operator()(const Tensor& queries, const Tensor& keys,
                    const Tensor& values) const;

  int num_heads = 1;
  Linear wq, wk, wv, wo;
};

struct TransformerConfig {
  int d_model = 128;
  int num_heads = 2;
  int num_encoder_layers = 2;
  int num_decoder_layers = 2;
  int ff_width = 0;  // 0 selects 4 * d_model
  double dropout = 0.0;

  int effective_ff_width() const { return ff_width > 0 ? ff_width : 4 * d_model; }
  void validate() const;
};

// Post-norm encoder layer: x = LN(x + SA(x)); x = LN(x + FF(x)).
struct EncoderLayer {
  EncoderLayer() = default;
  EncoderLayer(ParameterStore& store, const std::string& prefix,
               const TransformerConfig& cfg, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x, double dropout, const Context& ctx) const;

  MultiHeadAttention self_attn;
  LayerNorm norm1;
  Linear ff1, ff2;
  LayerNorm norm2;
};

// Post-norm decoder layer with unmasked self-attention over the target set
// and cross-attention into the memory set.
struct DecoderLayer {
  DecoderLayer() = default;
  DecoderLayer(ParameterStore& store, const std::string& prefix,
               const TransformerConfig& cfg, std::mt19937_64& rng);
  Tensor operator()(const Tensor& x, const Tensor& memory, double dropout,
                    const Context& ctx) const;

  MultiHeadAttention self_attn;
  LayerNorm norm1;
  MultiHeadAttention cross_attn;
  LayerNorm norm2;
  Linear ff1, ff2;
  LayerNorm norm3;
};

// Encoder/decoder Transformer without positional encodings. Inputs are
// treated as unordered sets.
class Transformer {
 public:
  Transformer() = default;
  Transformer(ParameterStore& store, const std::string& prefix,
              TransformerConfig cfg, std::mt19937_64& rng);

  const TransformerConfig& config() const { return cfg_; }

  // Zero-row input returns a zero-row output of the same width.
  Tensor encode(const Tensor& x, const Context& ctx = {}) const;
  // Empty memory is rejected; zero-row target returns zero rows.
  Tensor decode(const Tensor& target, const Tensor& memory,
                const Context& ctx = {}) const;
  // decode(target, encode(source)).
  Tensor operator()(const Tensor& source, const Tensor& target,
                    const Context& ctx = {}) const;

 private:
  TransformerConfig cfg_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
};

// Adam with bias correction. Gradients are divided by `grad_divisor` before
// the update, which turns accumulated sums into means.
class Adam {
 public:
  struct Options {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  explicit Adam(ParameterStore& store) : Adam(store, Options{}) {}
  Adam(ParameterStore& store, Options opts);

  void step(double grad_divisor = 1.0);
  void set_lr(double lr) { opts_.lr = lr; }
  double lr() const { return opts_.lr; }
  long steps() const { return t_; }

 private:
  ParameterStore* store_;
  Options opts_;
  long t_ = 0;
  std::vector<Matrix> m_, v_;
};

}  // namespace nn
TADN_NAMESPACE_END

#pragma once

#include "tadn/precision.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tadn/nn/layers.hpp"

TADN_NAMESPACE_BEGIN

enum class BranchMode { Single, Dual };
enum class FeatureMode { Positional, Appearance, Both };

std::string to_string(BranchMode m);
std::string to_string(FeatureMode m);
BranchMode parse_branch_mode(std::string_view s);
FeatureMode parse_feature_mode(std::string_view s);

// Positional features are the normalized corner-form box.
inline constexpr int kPositionalFeatures = 4;

struct TadnConfig {
  BranchMode branch_mode = BranchMode::Dual;
  int d_model = 128;
  int num_heads = 2;
  int num_encoder_layers = 2;
  int num_decoder_layers = 2;
  int ff_width = 0;  // 0 selects 4 * d_model
  double dropout = 0.0;
  FeatureMode feature_mode = FeatureMode::Both;
  int positional_width = 64;  // embedding share of d_model in Both mode
  int appearance_width = 64;
  int appearance_features = 24;  // input descriptor width

  void validate() const;
  nn::TransformerConfig transformer() const;
  std::map<std::string, std::string> to_metadata() const;
  static TadnConfig from_metadata(const std::map<std::string, std::string>& meta);
  friend bool operator==(const TadnConfig&, const TadnConfig&) = default;
};

// Per-set inputs: rows are detections or targets.
struct SetFeatures {
  nn::Matrix boxes;       // n x 4, normalized corners
  nn::Matrix appearance;  // n x appearance_features

  Eigen::Index size() const { return boxes.rows(); }
};

struct EmbeddedInputs {
  nn::Tensor detections;  // N x d_model
  nn::Tensor targets;     // (M+1) x d_model, null target last
};

struct TadnOutputs {
  nn::Tensor detections;  // N x d_model
  nn::Tensor targets;     // (M+1) x d_model
};

// Per-detection decision. An empty target means the null column won.
struct Decision {
  std::optional<std::size_t> target;
  double score = 0.0;

  bool is_null() const { return !target.has_value(); }
  friend bool operator==(const Decision&, const Decision&) = default;
};

class TadnModel {
 public:
  TadnModel(TadnConfig cfg, std::uint64_t seed);

  TadnModel(TadnModel&&) = default;
  TadnModel& operator=(TadnModel&&) = default;
  TadnModel(const TadnModel&) = delete;
  TadnModel& operator=(const TadnModel&) = delete;

  const TadnConfig& config() const { return cfg_; }
  nn::ParameterStore& parameters() { return params_; }
  const nn::ParameterStore& parameters() const { return params_; }

  // Projects both streams to d_model and appends the learned null target.
  EmbeddedInputs embed_inputs(const SetFeatures& detections,
                              const SetFeatures& targets) const;

  // Requires at least one detection row; callers skip empty frames.
  TadnOutputs forward(const nn::Tensor& d_in, const nn::Tensor& t_in,
                      const nn::Context& ctx = {}) const;

  // embed -> forward -> ASM, differentiable.
  nn::Tensor assignment_scores(const SetFeatures& detections,
                               const SetFeatures& targets,
                               const nn::Context& ctx = {}) const;

  void save(const std::filesystem::path& path) const;
  static TadnModel load(const std::filesystem::path& path);

 private:
  struct Embedding {
    nn::Linear positional;
    nn::Linear appearance;
  };

  nn::Tensor embed(const Embedding& e, const SetFeatures& f,
                   std::string_view stream) const;

  TadnConfig cfg_;
  nn::ParameterStore params_;
  Embedding embed_detections_;
  Embedding embed_targets_;
  nn::Tensor null_target_;
  nn::Transformer branch_d_;  // the only transformer in single mode
  nn::Transformer branch_t_;
};

// ASM = D_out * T_out^T / sqrt(d_model).
nn::Tensor compute_asm(const nn::Tensor& d_out, const nn::Tensor& t_out,
                       int d_model);

// Row-wise argmax; the last column decodes to null. Ties go to the lowest
// column index.
std::vector<Decision> decide_assignments(const nn::Matrix& asm_scores);

TADN_NAMESPACE_END

#include "tadn/model.hpp"

#include <cmath>
#include <random>
#include <string>

#include "tadn/error.hpp"
#include "tadn/nn/checkpoint.hpp"

TADN_NAMESPACE_BEGIN
namespace {

int parse_int(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw InputError("checkpoint metadata lacks " + key);
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw InputError("checkpoint metadata " + key + " is not an integer");
  }
}

}  // namespace

std::string to_string(BranchMode m) { return m == BranchMode::Single ? "single" : "dual"; }

std::string to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::Positional: return "positional";
    case FeatureMode::Appearance: return "appearance";
    case FeatureMode::Both: return "both";
  }
  return "both";
}

BranchMode parse_branch_mode(std::string_view s) {
  if (s == "single") return BranchMode::Single;
  if (s == "dual") return BranchMode::Dual;
  throw InputError("unknown branch mode '" + std::string(s) + "'");
}

FeatureMode parse_feature_mode(std::string_view s) {
  if (s == "positional") return FeatureMode::Positional;
  if (s == "appearance") return FeatureMode::Appearance;
  if (s == "both") return FeatureMode::Both;
  throw InputError("unknown feature mode '" + std::string(s) + "'");
}

void TadnConfig::validate() const {
  transformer().validate();
  if (feature_mode == FeatureMode::Both &&
      (positional_width <= 0 || appearance_width <= 0 ||
       positional_width + appearance_width != d_model)) {
    throw InputError("positional_width + appearance_width must equal d_model (" +
                     std::to_string(positional_width) + " + " +
                     std::to_string(appearance_width) + " != " +
                     std::to_string(d_model) + ")");
  }
  if (feature_mode != FeatureMode::Positional && appearance_features <= 0) {
    throw InputError("appearance_features must be positive");
  }
}

nn::TransformerConfig TadnConfig::transformer() const {
  return {d_model, num_heads, num_encoder_layers, num_decoder_layers, ff_width,
          dropout};
}

std::map<std::string, std::string> TadnConfig::to_metadata() const {
  return {{"branch_mode", to_string(branch_mode)},
          {"d_model", std::to_string(d_model)},
          {"num_heads", std::to_string(num_heads)},
          {"num_encoder_layers", std::to_string(num_encoder_layers)},
          {"num_decoder_layers", std::to_string(num_decoder_layers)},
          {"ff_width", std::to_string(ff_width)},
          {"feature_mode", to_string(feature_mode)},
          {"positional_width", std::to_string(positional_width)},
          {"appearance_width", std::to_string(appearance_width)},
          {"appearance_features", std::to_string(appearance_features)}};
}

TadnConfig TadnConfig::from_metadata(const std::map<std::string, std::string>& meta) {
  TadnConfig cfg;
  auto get = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw InputError("checkpoint metadata lacks " + key);
    return it->second;
  };
  cfg.branch_mode = parse_branch_mode(get("branch_mode"));
  cfg.feature_mode = parse_feature_mode(get("feature_mode"));
  cfg.d_model = parse_int(meta, "d_model");
  cfg.num_heads = parse_int(meta, "num_heads");
  cfg.num_encoder_layers = parse_int(meta, "num_encoder_layers");
  cfg.num_decoder_layers = parse_int(meta, "num_decoder_layers");
  cfg.ff_width = parse_int(meta, "ff_width");
  cfg.positional_width = parse_int(meta, "positional_width");
  cfg.appearance_width = parse_int(meta, "appearance_width");
  cfg.appearance_features = parse_int(meta, "appearance_features");
  cfg.validate();
  return cfg;
}

TadnModel::TadnModel(TadnConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);

  auto make_embedding = [&](const std::string& prefix) {
    Embedding e;
    switch (cfg_.feature_mode) {
      case FeatureMode::Positional:
        e.positional = nn::Linear(params_, prefix + ".positional",
                                  kPositionalFeatures, cfg_.d_model, rng);
        break;
      case FeatureMode::Appearance:
        e.appearance = nn::Linear(params_, prefix + ".appearance",
                                  cfg_.appearance_features, cfg_.d_model, rng);
        break;
      case FeatureMode::Both:
        e.positional = nn::Linear(params_, prefix + ".positional",
                                  kPositionalFeatures, cfg_.positional_width, rng);
        e.appearance = nn::Linear(params_, prefix + ".appearance",
                                  cfg_.appearance_features, cfg_.appearance_width, rng);
        break;
    }
    return e;
  };
  embed_detections_ = make_embedding("embed_detections");
  embed_targets_ = make_embedding("embed_targets");

  std::normal_distribution<double> small(0.0, 0.02);
  nn::Matrix null_init(1, cfg_.d_model);
  for (Eigen::Index i = 0; i < null_init.size(); ++i) null_init.data()[i] = small(rng);
  null_target_ = params_.add("null_target", std::move(null_init));

  if (cfg_.branch_mode == BranchMode::Single) {
    branch_d_ = nn::Transformer(params_, "transformer", cfg_.transformer(), rng);
  } else {
    branch_d_ = nn::Transformer(params_, "branch_d", cfg_.transformer(), rng);
    branch_t_ = nn::Transformer(params_, "branch_t", cfg_.transformer(), rng);
  }
}

nn::Tensor TadnModel::embed(const Embedding& e, const SetFeatures& f,
                            std::string_view stream) const {
  const std::string name(stream);
  const bool use_pos = cfg_.feature_mode != FeatureMode::Appearance;
  const bool use_app = cfg_.feature_mode != FeatureMode::Positional;
  if (use_pos) {
    TADN_CHECK(f.boxes.cols() == kPositionalFeatures,
               name + " stream: positional width " + std::to_string(f.boxes.cols()) +
                   ", expected 4");
  }
  if (use_app) {
    TADN_CHECK(f.appearance.cols() == cfg_.appearance_features,
               name + " stream: appearance width " +
                   std::to_string(f.appearance.cols()) + ", expected " +
                   std::to_string(cfg_.appearance_features));
    TADN_CHECK(f.appearance.rows() == f.boxes.rows() || !use_pos,
               name + " stream: box and appearance row counts differ");
  }

  if (use_pos && use_app) {
    return nn::concat_cols(e.positional(nn::Tensor::constant(f.boxes)),
                           e.appearance(nn::Tensor::constant(f.appearance)));
  }
  if (use_pos) return e.positional(nn::Tensor::constant(f.boxes));
  return e.appearance(nn::Tensor::constant(f.appearance));
}

EmbeddedInputs TadnModel::embed_inputs(const SetFeatures& detections,
                                       const SetFeatures& targets) const {
  return {embed(embed_detections_, detections, "detections"),
          nn::concat_rows(embed(embed_targets_, targets, "targets"), null_target_)};
}

TadnOutputs TadnModel::forward(const nn::Tensor& d_in, const nn::Tensor& t_in,
                               const nn::Context& ctx) const {
  TADN_CHECK(d_in.rows() > 0, "forward needs at least one detection");
  TADN_CHECK(t_in.rows() > 0, "forward needs the null target row");
  TADN_CHECK(d_in.cols() == cfg_.d_model && t_in.cols() == cfg_.d_model,
             "forward inputs must have width d_model");
  if (cfg_.branch_mode == BranchMode::Single) {
    nn::Tensor d_out = branch_d_.encode(d_in, ctx);
    nn::Tensor t_out = branch_d_.decode(t_in, d_out, ctx);
    return {d_out, t_out};
  }
  // Detection branch: targets feed the encoder, detections the decoder.
  nn::Tensor d_out = branch_d_(t_in, d_in, ctx);
  nn::Tensor t_out = branch_t_(d_in, t_in, ctx);
  return {d_out, t_out};
}

nn::Tensor TadnModel::assignment_scores(const SetFeatures& detections,
                                        const SetFeatures& targets,
                                        const nn::Context& ctx) const {
  const EmbeddedInputs in = embed_inputs(detections, targets);
  const TadnOutputs out = forward(in.detections, in.targets, ctx);
  return compute_asm(out.detections, out.targets, cfg_.d_model);
}

void TadnModel::save(const std::filesystem::path& path) const {
  nn::Checkpoint ckpt = nn::snapshot(params_);
  ckpt.metadata = cfg_.to_metadata();
  ckpt.metadata["format"] = "tadn-model";
  ckpt.metadata["parameter_count"] = std::to_string(params_.scalar_count());
  nn::write_checkpoint(path, ckpt);
}

TadnModel TadnModel::load(const std::filesystem::path& path) {
  const nn::Checkpoint ckpt = nn::read_checkpoint(path);
  TadnModel model(TadnConfig::from_metadata(ckpt.metadata), 0);
  nn::restore(model.params_, ckpt);
  return model;
}

nn::Tensor compute_asm(const nn::Tensor& d_out, const nn::Tensor& t_out,
                       int d_model) {
  TADN_CHECK(d_out.cols() == d_model && t_out.cols() == d_model,
             "ASM inputs must have width d_model");
  return nn::scale(nn::matmul_nt(d_out, t_out),
                   1.0 / std::sqrt(static_cast<double>(d_model)));
}

std::vector<Decision> decide_assignments(const nn::Matrix& asm_scores) {
  TADN_CHECK(asm_scores.cols() >= 1, "ASM needs the null column");
  const Eigen::Index null_col = asm_scores.cols() - 1;
  std::vector<Decision> out;
  out.reserve(static_cast<std::size_t>(asm_scores.rows()));
  for (Eigen::Index r = 0; r < asm_scores.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < asm_scores.cols(); ++c) {
      if (asm_scores(r, c) > asm_scores(r, best)) best = c;
    }
    Decision d;
    d.score = asm_scores(r, best);
    if (best != null_col) d.target = static_cast<std::size_t>(best);
    out.push_back(d);
  }
  return out;
}

TADN_NAMESPACE_END

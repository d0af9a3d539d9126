#pragma once

#include "tadn/precision.hpp"

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tadn/assignment.hpp"
#include "tadn/frame.hpp"
#include "tadn/model.hpp"
#include "tadn/nn/layers.hpp"
#include "tadn/tracker.hpp"

TADN_NAMESPACE_BEGIN

enum class AssignmentMetric { Ulbr1, Iou };
std::string to_string(AssignmentMetric m);
AssignmentMetric parse_metric(std::string_view s);

double similarity(AssignmentMetric metric, const BBox& a, const BBox& b);
SimilarityMatrix pairwise_similarity(AssignmentMetric metric, std::span<const BBox> rows,
                                     std::span<const BBox> cols);

struct TrainingConfig {
  AssignmentMetric metric = AssignmentMetric::Ulbr1;
  // Gates; unset values fall back to the metric default (-0.13 for ulbr1,
  // 0.3 for IoU). t_assign falls back to t_det2gt.
  std::optional<double> t_det2gt;
  std::optional<double> t_assign;
  double e_min = 20.0;
  double e_max = 160.0;
  double c = 12.0;
  double learning_rate = 1e-4;
  double lr_decay = 0.1;
  int lr_decay_epoch = 180;  // step schedule period
  int accumulation = 64;
  int epochs = 300;
  int checkpoint_every = 10;

  double det2gt() const;
  double assign() const;
  double lr_for_epoch(int epoch) const;
  void validate() const;
};

// One-hot-per-row labels of shape N x (M+1); column M is the null target.
class LamMatrix {
 public:
  LamMatrix(std::size_t rows, std::size_t targets);

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return targets_ + 1; }
  std::size_t null_column() const { return targets_; }
  std::size_t label(std::size_t row) const { return labels_[row]; }
  bool is_null(std::size_t row) const { return labels_[row] == targets_; }
  void set(std::size_t row, std::size_t col);
  double at(std::size_t row, std::size_t col) const { return labels_[row] == col ? 1.0 : 0.0; }
  nn::Matrix dense() const;

  friend bool operator==(const LamMatrix&, const LamMatrix&) = default;

 private:
  std::size_t targets_;
  std::vector<std::size_t> labels_;
};

// Label construction: targets are matched to ground truth (gate t_assign);
// matched targets use their ground-truth box, the rest their prediction;
// detections are then matched one-to-one to those boxes (gate t_det2gt).
// Unmatched detections are labeled null.
LamMatrix compute_lam(std::span<const BBox> target_predictions,
                      std::span<const GtObject> ground_truth,
                      std::span<const BBox> detections, const TrainingConfig& cfg);

// Row-softmax cross-entropy against the LAM, divided by N * (M+1).
nn::Tensor assignment_loss(const nn::Tensor& asm_scores, const LamMatrix& lam);

// Probability of stepping the tracker with the model's decision.
double p_choice(double epoch, const TrainingConfig& cfg);

std::vector<Assignment> lam_assignments(const LamMatrix& lam);

// Oracle tracker policy: assignments straight from the LAM.
AssignmentPolicy lam_policy(const TrainingConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double p_choice = 0.0;
  double accuracy = 0.0;  // argmax agreement with the LAM, over detections
  long frames = 0;        // frames that produced a loss
  long optimizer_steps = 0;
  double learning_rate = 0.0;
  std::vector<std::vector<TrackOutput>> tracks;  // per sequence
};

class Trainer {
 public:
  Trainer(TadnModel& model, TrainingConfig cfg, TrackerConfig tracker_cfg);

  // One pass over all sequences. `p_override` replaces the curriculum
  // probability when set.
  EpochStats train_epoch(std::span<const std::vector<FrameInput>> sequences, int epoch,
                         std::mt19937_64& rng,
                         std::optional<double> p_override = std::nullopt);

  const TrainingConfig& config() const { return cfg_; }
  long optimizer_steps() const { return optimizer_.steps(); }

 private:
  void optimizer_step();

  TadnModel* model_;
  TrainingConfig cfg_;
  TrackerConfig tracker_cfg_;
  nn::Adam optimizer_;
  int pending_ = 0;
};

TADN_NAMESPACE_END

#include "tadn/training.hpp"

#include <cmath>
#include <limits>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::string to_string(AssignmentMetric m) {
  return m == AssignmentMetric::Ulbr1 ? "ulbr1" : "iou";
}

AssignmentMetric parse_metric(std::string_view s) {
  if (s == "ulbr1") return AssignmentMetric::Ulbr1;
  if (s == "iou") return AssignmentMetric::Iou;
  throw InputError("unknown assignment metric '" + std::string(s) + "'");
}

double similarity(AssignmentMetric metric, const BBox& a, const BBox& b) {
  return metric == AssignmentMetric::Ulbr1 ? ulbr1(a, b) : iou(a, b);
}

SimilarityMatrix pairwise_similarity(AssignmentMetric metric, std::span<const BBox> rows,
                                     std::span<const BBox> cols) {
  SimilarityMatrix s(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      s(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          similarity(metric, rows[r], cols[c]);
    }
  }
  return s;
}

double TrainingConfig::det2gt() const {
  if (t_det2gt) return *t_det2gt;
  return metric == AssignmentMetric::Ulbr1 ? -0.13 : 0.3;
}

double TrainingConfig::assign() const { return t_assign ? *t_assign : det2gt(); }

double TrainingConfig::lr_for_epoch(int epoch) const {
  if (lr_decay_epoch <= 0) return learning_rate;
  const int drops = std::max(0, (epoch - 1) / lr_decay_epoch);
  return learning_rate * std::pow(lr_decay, drops);
}

void TrainingConfig::validate() const {
  if (!(e_min < e_max)) throw InputError("e_min must be smaller than e_max");
  if (accumulation < 1) throw InputError("accumulation must be at least 1");
  if (!(learning_rate > 0.0)) throw InputError("learning_rate must be positive");
  if (epochs < 0) throw InputError("epochs must be non-negative");
  if (!std::isfinite(det2gt()) || !std::isfinite(assign())) {
    throw InputError("assignment thresholds must be finite");
  }
}

LamMatrix::LamMatrix(std::size_t rows, std::size_t targets)
    : targets_(targets), labels_(rows, targets) {}

void LamMatrix::set(std::size_t row, std::size_t col) {
  TADN_CHECK(row < labels_.size() && col <= targets_, "LAM index out of range");
  labels_[row] = col;
}

nn::Matrix LamMatrix::dense() const {
  nn::Matrix m = nn::Matrix::Zero(static_cast<Eigen::Index>(rows()),
                                  static_cast<Eigen::Index>(cols()));
  for (std::size_t r = 0; r < rows(); ++r) {
    m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(labels_[r])) = 1.0;
  }
  return m;
}

LamMatrix compute_lam(std::span<const BBox> target_predictions,
                      std::span<const GtObject> ground_truth,
                      std::span<const BBox> detections, const TrainingConfig& cfg) {
  const std::size_t m = target_predictions.size();
  LamMatrix lam(detections.size(), m);
  if (m == 0 || detections.empty()) return lam;

  std::vector<BBox> gt_boxes;
  gt_boxes.reserve(ground_truth.size());
  for (const GtObject& g : ground_truth) gt_boxes.push_back(g.box);

  // On-track targets take their ground-truth box, off-track keep the
  // motion prediction.
  std::vector<BBox> reference(target_predictions.begin(), target_predictions.end());
  const SimilarityMatrix target_gt =
      pairwise_similarity(cfg.metric, target_predictions, gt_boxes);
  for (const Match& pair : solve_lap(target_gt, cfg.assign())) {
    reference[pair.row] = gt_boxes[pair.col];
  }

  const SimilarityMatrix det_ref = pairwise_similarity(cfg.metric, detections, reference);
  for (const Match& pair : solve_lap(det_ref, cfg.det2gt())) {
    lam.set(pair.row, pair.col);
  }
  return lam;
}

nn::Tensor assignment_loss(const nn::Tensor& asm_scores, const LamMatrix& lam) {
  if (static_cast<std::size_t>(asm_scores.rows()) != lam.rows() ||
      static_cast<std::size_t>(asm_scores.cols()) != lam.cols()) {
    throw InvariantError("loss: ASM and LAM shapes differ");
  }
  const double normalizer = static_cast<double>(lam.rows() * lam.cols());
  return nn::softmax_cross_entropy(asm_scores, lam.dense(), normalizer);
}

double p_choice(double epoch, const TrainingConfig& cfg) {
  if (epoch > cfg.e_max) return 1.0;
  const double e = std::max(epoch, cfg.e_min);
  return sigmoid(-cfg.c / 2.0 + cfg.c * (e - cfg.e_min) / (cfg.e_max - cfg.e_min));
}

std::vector<Assignment> lam_assignments(const LamMatrix& lam) {
  std::vector<Assignment> out;
  out.reserve(lam.rows());
  for (std::size_t r = 0; r < lam.rows(); ++r) {
    Assignment a{r, std::nullopt, 1.0};
    if (!lam.is_null(r)) a.target = lam.label(r);
    out.push_back(a);
  }
  return out;
}

AssignmentPolicy lam_policy(const TrainingConfig& cfg) {
  return [cfg](const FrameInput& in, const Tracker& tracker) {
    std::vector<BBox> dets;
    dets.reserve(in.detections.size());
    for (const Detection& d : in.detections) dets.push_back(d.box);
    const std::vector<BBox> predictions = tracker.predicted_boxes();
    return lam_assignments(compute_lam(predictions, in.ground_truth, dets, cfg));
  };
}

Trainer::Trainer(TadnModel& model, TrainingConfig cfg, TrackerConfig tracker_cfg)
    : model_(&model),
      cfg_(cfg),
      tracker_cfg_(tracker_cfg),
      optimizer_(model.parameters(), nn::Adam::Options{cfg.learning_rate}) {
  cfg_.validate();
  model.parameters().zero_grad();
}

void Trainer::optimizer_step() {
  if (pending_ == 0) return;
  optimizer_.step(static_cast<double>(pending_));
  model_->parameters().zero_grad();
  pending_ = 0;
}

EpochStats Trainer::train_epoch(std::span<const std::vector<FrameInput>> sequences,
                                int epoch, std::mt19937_64& rng,
                                std::optional<double> p_override) {
  EpochStats stats;
  stats.epoch = epoch;
  stats.p_choice = p_override ? *p_override : p_choice(epoch, cfg_);
  stats.learning_rate = cfg_.lr_for_epoch(epoch);
  optimizer_.set_lr(stats.learning_rate);
  const long steps_before = optimizer_.steps();

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  nn::Context ctx{true, &rng};
  double loss_sum = 0.0;
  long correct = 0;
  long labeled = 0;

  for (const std::vector<FrameInput>& frames : sequences) {
    Tracker tracker(tracker_cfg_);
    std::vector<TrackOutput> rows;
    for (const FrameInput& in : frames) {
      tracker.apply_cmc(in.warp);
      std::vector<TrackOutput> out;
      if (in.detections.empty()) {
        out = tracker.commit(in, {});
      } else {
        std::vector<BBox> dets;
        dets.reserve(in.detections.size());
        for (const Detection& d : in.detections) dets.push_back(d.box);
        const LamMatrix lam =
            compute_lam(tracker.predicted_boxes(), in.ground_truth, dets, cfg_);

        const nn::Tensor scores = model_->assignment_scores(
            detection_features(in), tracker.target_features(in.features.cols()), ctx);
        const nn::Tensor loss = assignment_loss(scores, lam);
        loss.backward();
        loss_sum += loss.item();
        ++stats.frames;
        if (++pending_ == cfg_.accumulation) optimizer_step();

        // Per detection: the model's decision with probability p, else the
        // label. Labels outrank model picks when both claim a target.
        const std::vector<Decision> predicted = decide_assignments(scores.value());
        std::vector<Decision> chosen(predicted.size());
        for (std::size_t i = 0; i < predicted.size(); ++i) {
          const std::optional<std::size_t> label =
              lam.is_null(i) ? std::nullopt : std::optional<std::size_t>(lam.label(i));
          if (predicted[i].target == label) ++correct;
          ++labeled;
          if (unit(rng) < stats.p_choice) {
            chosen[i] = predicted[i];
          } else {
            chosen[i] = {label, std::numeric_limits<double>::infinity()};
          }
        }
        out = tracker.commit(in, filter_duplicates(chosen));
      }
      rows.insert(rows.end(), out.begin(), out.end());
    }
    // No accumulation across sequence boundaries.
    optimizer_step();
    stats.tracks.push_back(std::move(rows));
  }

  stats.mean_loss = stats.frames > 0 ? loss_sum / static_cast<double>(stats.frames) : 0.0;
  stats.accuracy = labeled > 0 ? static_cast<double>(correct) / static_cast<double>(labeled) : 0.0;
  stats.optimizer_steps = optimizer_.steps() - steps_before;
  return stats;
}

TADN_NAMESPACE_END

#include "tadn/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN

void LifecycleConfig::validate() const {
  if (!(th_min <= th_max)) throw InputError("th_min must not exceed th_max");
  if (!(h_max >= 1.0)) throw InputError("h_max must be at least 1");
}

double termination_threshold(double hits, const LifecycleConfig& cfg) {
  const double h = std::clamp(hits, 0.0, cfg.h_max);
  const double t_delta = cfg.th_max - cfg.th_min;
  const double z = 15.0 * (h / cfg.h_max - 0.5);
  return cfg.th_min + t_delta / (1.0 + std::exp(-z));
}

std::vector<Assignment> filter_duplicates(std::span<const Decision> decisions) {
  std::vector<std::optional<std::size_t>> winner_of_target;
  std::vector<char> keep(decisions.size(), 0);
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    const Decision& d = decisions[i];
    if (d.is_null()) {
      keep[i] = 1;
      continue;
    }
    const std::size_t t = *d.target;
    if (winner_of_target.size() <= t) winner_of_target.resize(t + 1);
    auto& slot = winner_of_target[t];
    if (!slot) {
      slot = i;
      keep[i] = 1;
    } else if (d.score > decisions[*slot].score) {
      keep[*slot] = 0;
      slot = i;
      keep[i] = 1;
    }
  }
  std::vector<Assignment> out;
  for (std::size_t i = 0; i < decisions.size(); ++i) {
    if (keep[i]) out.push_back({i, decisions[i].target, decisions[i].score});
  }
  return out;
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(cfg) { cfg_.lifecycle.validate(); }

void Tracker::apply_cmc(const Warp2D& warp) {
  if (!cfg_.use_cmc) return;
  for (Target& t : active_) t.motion.apply_cmc(warp);
}

std::vector<BBox> Tracker::predicted_boxes() const {
  std::vector<BBox> out;
  out.reserve(active_.size());
  for (const Target& t : active_) out.push_back(t.motion.peek());
  return out;
}

SetFeatures Tracker::target_features(Eigen::Index appearance_width) const {
  const auto m = static_cast<Eigen::Index>(active_.size());
  SetFeatures f{nn::Matrix(m, kPositionalFeatures), nn::Matrix(m, appearance_width)};
  for (Eigen::Index j = 0; j < m; ++j) {
    const Target& t = active_[static_cast<std::size_t>(j)];
    const BBox b = t.motion.peek();
    f.boxes.row(j) << static_cast<Real>(b.x_min), static_cast<Real>(b.y_min),
        static_cast<Real>(b.x_max), static_cast<Real>(b.y_max);
    const Eigen::VectorXd& a = t.appearance.step();
    TADN_CHECK(a.size() == appearance_width, "target appearance width changed mid-run");
    f.appearance.row(j) = a.transpose().cast<Real>();
  }
  return f;
}

SetFeatures detection_features(const FrameInput& in) {
  const auto n = static_cast<Eigen::Index>(in.detections.size());
  SetFeatures f{nn::Matrix(n, kPositionalFeatures), in.features.cast<Real>()};
  for (Eigen::Index i = 0; i < n; ++i) {
    const BBox& b = in.detections[static_cast<std::size_t>(i)].box;
    f.boxes.row(i) << static_cast<Real>(b.x_min), static_cast<Real>(b.y_min),
        static_cast<Real>(b.x_max), static_cast<Real>(b.y_max);
  }
  return f;
}

std::vector<TrackOutput> Tracker::commit(const FrameInput& in,
                                         std::span<const Assignment> assignments) {
  if (in.features.rows() != static_cast<Eigen::Index>(in.detections.size())) {
    throw InputError("frame " + std::to_string(in.frame) + ": " +
                     std::to_string(in.features.rows()) + " feature rows for " +
                     std::to_string(in.detections.size()) + " detections");
  }
  std::vector<std::optional<std::size_t>> det_of_target(active_.size());
  std::vector<char> used(in.detections.size(), 0);
  std::vector<std::size_t> spawns;
  for (const Assignment& a : assignments) {
    TADN_CHECK(a.detection < in.detections.size(), "assignment detection out of range");
    TADN_CHECK(!used[a.detection], "detection assigned twice");
    used[a.detection] = 1;
    if (!a.target) {
      spawns.push_back(a.detection);
      continue;
    }
    TADN_CHECK(*a.target < active_.size(), "assignment target out of range");
    TADN_CHECK(!det_of_target[*a.target], "target assigned twice");
    det_of_target[*a.target] = a.detection;
  }

  std::vector<TrackOutput> out;
  std::vector<Target> survivors;
  survivors.reserve(active_.size() + spawns.size());
  for (std::size_t j = 0; j < active_.size(); ++j) {
    Target& t = active_[j];
    TrackOutput row{in.frame, t.id, {}, -1.0, false};
    if (const auto d = det_of_target[j]) {
      const Detection& det = in.detections[*d];
      t.motion.predict();
      t.motion.update(det.box);
      t.appearance.update(in.features.row(static_cast<Eigen::Index>(*d)).transpose());
      ++t.hits;
      t.misses = 0;
      row.box = det.box;
      row.confidence = det.confidence;
      row.observed = true;
    } else {
      t.motion.propagate_unassigned();
      ++t.misses;
      row.box = t.motion.box();
    }
    if (t.misses > termination_threshold(t.hits, cfg_.lifecycle)) continue;
    if (row.observed || cfg_.lifecycle.output_unassigned) out.push_back(row);
    survivors.push_back(std::move(t));
  }

  for (std::size_t d : spawns) {
    const Detection& det = in.detections[d];
    Target t{next_id_++, MotionModel(cfg_.motion, det.box, cfg_.kalman),
             AppearanceState(in.features.row(static_cast<Eigen::Index>(d)).transpose()),
             1, 0};
    out.push_back({in.frame, t.id, det.box, det.confidence, true});
    survivors.push_back(std::move(t));
  }
  active_ = std::move(survivors);
  return out;
}

std::vector<TrackOutput> Tracker::step(const FrameInput& in,
                                       const AssignmentPolicy& policy) {
  apply_cmc(in.warp);
  if (in.detections.empty()) return commit(in, {});
  const std::vector<Assignment> assignments = policy(in, *this);
  return commit(in, assignments);
}

std::vector<TrackOutput> Tracker::step_frame(const TadnModel& model,
                                             const FrameInput& in) {
  return step(in, model_policy(model));
}

AssignmentPolicy model_policy(const TadnModel& model) {
  return [&model](const FrameInput& in, const Tracker& tracker) {
    nn::NoGradGuard no_grad;
    const nn::Tensor scores = model.assignment_scores(
        detection_features(in), tracker.target_features(in.features.cols()));
    const std::vector<Decision> decisions = decide_assignments(scores.value());
    return filter_duplicates(decisions);
  };
}

std::vector<TrackOutput> run_sequence(Tracker& tracker, std::span<const FrameInput> frames,
                                      const AssignmentPolicy& policy) {
  std::vector<TrackOutput> rows;
  int previous = 0;
  for (const FrameInput& f : frames) {
    if (f.frame <= previous) throw InputError("frames must be strictly ascending");
    previous = f.frame;
    std::vector<TrackOutput> out = tracker.step(f, policy);
    rows.insert(rows.end(), out.begin(), out.end());
  }
  return rows;
}

TADN_NAMESPACE_END

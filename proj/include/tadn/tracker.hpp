#pragma once

#include "tadn/precision.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tadn/appearance.hpp"
#include "tadn/frame.hpp"
#include "tadn/model.hpp"
#include "tadn/motion.hpp"

TADN_NAMESPACE_BEGIN

struct LifecycleConfig {
  double th_min = 3.0;
  double th_max = 30.0;
  double h_max = 100.0;
  double confidence_floor = 0.3;
  // Emit predicted boxes for active targets without a detection this frame.
  bool output_unassigned = true;

  void validate() const;
};

// Consecutive-miss budget before termination; rises smoothly from th_min
// to th_max as hits go from 0 to h_max (hits clamped to [0, h_max]).
double termination_threshold(double hits, const LifecycleConfig& cfg);

// A detection's surviving decision. Null targets spawn.
struct Assignment {
  std::size_t detection = 0;
  std::optional<std::size_t> target;
  double score = 0.0;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Keeps, for every non-null target, only the highest scoring detection
// (earliest on ties); losers are dropped entirely. Null decisions all
// survive. Output is ordered by detection index.
std::vector<Assignment> filter_duplicates(std::span<const Decision> decisions);

struct TrackerConfig {
  LifecycleConfig lifecycle;
  MotionKind motion = MotionKind::Kalman;
  KalmanParams kalman;
  bool use_cmc = true;
};

struct TrackOutput {
  int frame = 0;
  int id = 0;
  BBox box;
  double confidence = -1.0;
  bool observed = false;  // box is the assigned detection, not a prediction
};

struct Target {
  int id = 0;
  MotionModel motion;
  AppearanceState appearance;
  int hits = 1;
  int misses = 0;
};

class Tracker;

// Produces this frame's surviving assignments. Called after CMC, only for
// frames with at least one detection.
using AssignmentPolicy =
    std::function<std::vector<Assignment>(const FrameInput&, const Tracker&)>;

class Tracker {
 public:
  explicit Tracker(TrackerConfig cfg);

  const TrackerConfig& config() const { return cfg_; }
  const std::vector<Target>& targets() const { return active_; }
  int spawned() const { return next_id_ - 1; }

  // One full frame: CMC, assignment via `policy` (skipped when there are no
  // detections), update / propagate / terminate / spawn. Returns the boxes
  // of targets active after the frame.
  std::vector<TrackOutput> step(const FrameInput& in, const AssignmentPolicy& policy);
  std::vector<TrackOutput> step_frame(const TadnModel& model, const FrameInput& in);

  // Building blocks of step(), exposed for training.
  void apply_cmc(const Warp2D& warp);
  std::vector<BBox> predicted_boxes() const;
  SetFeatures target_features(Eigen::Index appearance_width) const;
  std::vector<TrackOutput> commit(const FrameInput& in,
                                  std::span<const Assignment> assignments);

 private:
  TrackerConfig cfg_;
  std::vector<Target> active_;
  int next_id_ = 1;
};

SetFeatures detection_features(const FrameInput& in);

// TADN decisions followed by duplicate filtering.
AssignmentPolicy model_policy(const TadnModel& model);

// Runs `policy` over all frames; returns every emitted row.
std::vector<TrackOutput> run_sequence(Tracker& tracker, std::span<const FrameInput> frames,
                                      const AssignmentPolicy& policy);

TADN_NAMESPACE_END

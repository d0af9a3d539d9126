#pragma once

#include "tadn/precision.hpp"

#include <span>
#include <string>
#include <vector>

#include "tadn/mot_row.hpp"

TADN_NAMESPACE_BEGIN

struct ClearReport {
  std::string name;
  long gt_boxes = 0;
  long predictions = 0;
  long matches = 0;
  long fp = 0;
  long fn = 0;
  long idsw = 0;
  long frag = 0;
  long gt_tracks = 0;
  long mostly_tracked = 0;
  long mostly_lost = 0;
  double iou_sum = 0.0;

  double mota() const;
  double motp() const;  // mean IoU of matched pairs; 0 without matches
  double mt_ratio() const;
  double ml_ratio() const;

  friend bool operator==(const ClearReport&, const ClearReport&) = default;
};

ClearReport evaluate(std::span<const MotRow> predictions, std::span<const MotRow> ground_truth,
                     double iou_gate = 0.5);

// Sums counts; the name becomes "OVERALL".
ClearReport aggregate(std::span<const ClearReport> reports);

std::string format_table(std::span<const ClearReport> reports);
// "<name>.<key>=<value>" lines.
std::string format_key_values(std::span<const ClearReport> reports);

TADN_NAMESPACE_END

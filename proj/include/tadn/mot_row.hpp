#pragma once

#include "tadn/precision.hpp"

#include "tadn/geometry.hpp"

TADN_NAMESPACE_BEGIN

// One MOTChallenge row in pixel coordinates. Detections carry id -1; for
// ground truth `confidence` is the consider flag.
struct MotRow {
  int frame = 0;
  int id = -1;
  BBox box;
  double confidence = -1.0;
  int cls = -1;
  double visibility = -1.0;
  int index = 0;  // ordinal among the frame's rows in the source file

  friend bool operator==(const MotRow&, const MotRow&) = default;
};

TADN_NAMESPACE_END

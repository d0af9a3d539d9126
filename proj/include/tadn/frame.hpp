#pragma once

#include "tadn/precision.hpp"

#include <vector>

#include "tadn/appearance.hpp"
#include "tadn/geometry.hpp"

TADN_NAMESPACE_BEGIN

struct Detection {
  BBox box;
  double confidence = 1.0;
  int index = 0;  // ordinal within the frame in the source file
};

struct GtObject {
  int id = 0;
  BBox box;
};

// Everything the tracker consumes for one frame, in normalized coordinates.
struct FrameInput {
  int frame = 0;
  std::vector<Detection> detections;
  FeatureMatrix features;  // one row per detection
  Warp2D warp;
  std::vector<GtObject> ground_truth;  // empty at inference
};

TADN_NAMESPACE_END

#pragma once

#include "tadn/precision.hpp"

#include <array>

TADN_NAMESPACE_BEGIN

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

// Axis-aligned box in corner form. Files use (x, y, w, h); conversion
// happens at the I/O boundary through from_xywh / to_xywh.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  static BBox from_xywh(double x, double y, double w, double h) {
    return {x, y, x + w, y + h};
  }
  static BBox from_center(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
  }

  struct Xywh {
    double x, y, w, h;
  };
  Xywh to_xywh() const { return {x_min, y_min, width(), height()}; }

  Point2 ul() const { return {x_min, y_min}; }
  Point2 br() const { return {x_max, y_max}; }
  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  Point2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

// 2x3 affine transform [a b tx; c d ty] taking frame t-1 coordinates to
// frame t coordinates.
struct Warp2D {
  std::array<double, 6> m{1.0, 0.0, 0.0, 0.0, 1.0, 0.0};

  static Warp2D identity() { return {}; }
  static Warp2D translation(double tx, double ty) {
    return {{1.0, 0.0, tx, 0.0, 1.0, ty}};
  }
  static Warp2D scale(double s) { return {{s, 0.0, 0.0, 0.0, s, 0.0}}; }

  Point2 apply(Point2 p) const {
    return {m[0] * p.x + m[1] * p.y + m[2], m[3] * p.x + m[4] * p.y + m[5]};
  }
  // Linear part only, for velocities.
  Point2 apply_linear(Point2 v) const {
    return {m[0] * v.x + m[1] * v.y, m[3] * v.x + m[4] * v.y};
  }
  bool is_identity() const { return m == identity().m; }

  friend bool operator==(const Warp2D&, const Warp2D&) = default;
};

// Returns the warp equivalent to applying `first` and then `second`.
Warp2D compose(const Warp2D& first, const Warp2D& second);

double iou(const BBox& a, const BBox& b);

// Corner L1 similarity, always <= 0, higher is more similar. Identical boxes
// give 0; a vanishing denominator with a nonzero numerator gives -infinity.
double ulbr1(const BBox& a, const BBox& b);

BBox normalize(const BBox& b, double image_width, double image_height);
BBox denormalize(const BBox& b, double image_width, double image_height);

// Expresses a pixel-space warp in normalized coordinates.
Warp2D normalize_warp(const Warp2D& w, double image_width, double image_height);

// Maps both corners through the warp and re-sorts them into min/max form.
BBox apply_warp(const BBox& b, const Warp2D& w);

TADN_NAMESPACE_END

#include "tadn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace {

double l1(Point2 a, Point2 b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

void check_image_size(double w, double h) {
  if (!(w > 0.0) || !(h > 0.0)) {
    throw InputError("image size must be positive, got " + std::to_string(w) +
                     "x" + std::to_string(h));
  }
}

}  // namespace

Warp2D compose(const Warp2D& first, const Warp2D& second) {
  const auto& f = first.m;
  const auto& s = second.m;
  return {{s[0] * f[0] + s[1] * f[3], s[0] * f[1] + s[1] * f[4],
           s[0] * f[2] + s[1] * f[5] + s[2], s[3] * f[0] + s[4] * f[3],
           s[3] * f[1] + s[4] * f[4], s[3] * f[2] + s[4] * f[5] + s[5]}};
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

double ulbr1(const BBox& a, const BBox& b) {
  const double num = l1(a.ul(), b.ul()) + l1(a.br(), b.br());
  const double den = l1(a.ul(), b.br()) - l1(a.br(), b.ul());
  if (den == 0.0) {
    return num == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return -std::abs(num / den);
}

BBox normalize(const BBox& b, double image_width, double image_height) {
  check_image_size(image_width, image_height);
  return {b.x_min / image_width, b.y_min / image_height, b.x_max / image_width,
          b.y_max / image_height};
}

BBox denormalize(const BBox& b, double image_width, double image_height) {
  check_image_size(image_width, image_height);
  return {b.x_min * image_width, b.y_min * image_height, b.x_max * image_width,
          b.y_max * image_height};
}

Warp2D normalize_warp(const Warp2D& w, double image_width, double image_height) {
  check_image_size(image_width, image_height);
  const double r = image_height / image_width;
  return {{w.m[0], w.m[1] * r, w.m[2] / image_width, w.m[3] / r, w.m[4],
           w.m[5] / image_height}};
}

BBox apply_warp(const BBox& b, const Warp2D& w) {
  const Point2 p = w.apply(b.ul());
  const Point2 q = w.apply(b.br());
  return {std::min(p.x, q.x), std::min(p.y, q.y), std::max(p.x, q.x),
          std::max(p.y, q.y)};
}

TADN_NAMESPACE_END

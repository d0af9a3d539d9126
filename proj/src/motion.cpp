#include "tadn/motion.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace {

constexpr double kMinSize = 1e-6;

using Matrix4 = Eigen::Matrix<double, 4, 4>;
using Matrix48 = Eigen::Matrix<double, 4, 8>;

KalmanMotion::Matrix8 transition() {
  KalmanMotion::Matrix8 f = KalmanMotion::Matrix8::Identity();
  f.topRightCorner<4, 4>() = Matrix4::Identity();
  return f;
}

Matrix48 observation() {
  Matrix48 h = Matrix48::Zero();
  h.leftCols<4>() = Matrix4::Identity();
  return h;
}

void check_measurement(const BBox& b) {
  if (!(b.width() > 0.0) || !(b.height() > 0.0)) {
    throw InputError("motion update with a degenerate box (non-positive size)");
  }
}

BBox box_from_state(const KalmanMotion::Vector8& m) {
  return BBox::from_center(m(0), m(1), std::max(m(2), kMinSize),
                           std::max(m(3), kMinSize));
}

}  // namespace

KalmanMotion::KalmanMotion(const BBox& initial, KalmanParams params)
    : params_(params) {
  check_measurement(initial);
  const Point2 c = initial.center();
  mean_ << c.x, c.y, initial.width(), initial.height(), 0, 0, 0, 0;
  const double h = initial.height();
  Vector8 std;
  std << Eigen::Vector4d::Constant(params_.init_std_position * h),
      Eigen::Vector4d::Constant(params_.init_std_velocity * h);
  cov_ = std.cwiseProduct(std).asDiagonal();
}

KalmanMotion::Matrix8 KalmanMotion::process_noise() const {
  const double h = std::max(mean_(3), kMinSize);
  Vector8 std;
  std << Eigen::Vector4d::Constant(params_.std_position * h),
      Eigen::Vector4d::Constant(params_.std_velocity * h);
  return std.cwiseProduct(std).asDiagonal();
}

BBox KalmanMotion::predict() {
  static const Matrix8 f = transition();
  const Matrix8 q = process_noise();
  mean_ = f * mean_;
  cov_ = f * cov_ * f.transpose() + q;
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  mean_(2) = std::max(mean_(2), kMinSize);
  mean_(3) = std::max(mean_(3), kMinSize);
  return box();
}

BBox KalmanMotion::peek() const {
  static const Matrix8 f = transition();
  return box_from_state(f * mean_);
}

void KalmanMotion::update(const BBox& measurement) {
  check_measurement(measurement);
  static const Matrix48 hm = observation();
  const Point2 c = measurement.center();
  const Eigen::Vector4d z(c.x, c.y, measurement.width(), measurement.height());

  const double r_std = params_.std_measurement * std::max(mean_(3), kMinSize);
  const Matrix4 r = Matrix4::Identity() * (r_std * r_std);
  const Matrix4 s = hm * cov_ * hm.transpose() + r;
  // K = P H^T S^-1; LDLT tolerates a singular S (zero-noise configurations).
  const Eigen::Matrix<double, 8, 4> pht = cov_ * hm.transpose();
  const Eigen::Matrix<double, 8, 4> gain = s.ldlt().solve(pht.transpose()).transpose();

  mean_ += gain * (z - hm * mean_);
  const Matrix8 ikh = Matrix8::Identity() - gain * hm;
  cov_ = ikh * cov_ * ikh.transpose() + gain * r * gain.transpose();
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
  mean_(2) = std::max(mean_(2), kMinSize);
  mean_(3) = std::max(mean_(3), kMinSize);
}

void KalmanMotion::apply_cmc(const Warp2D& warp) {
  if (warp.is_identity()) return;
  const BBox warped = apply_warp(box(), warp);
  const Point2 c = warped.center();
  const auto& a = warp.m;

  // Center components transform with the linear part, sizes with its
  // magnitude (how axis-aligned extents change under the warp).
  Eigen::Matrix2d lin;
  lin << a[0], a[1], a[3], a[4];
  const Eigen::Matrix2d mag = lin.cwiseAbs();
  Matrix8 t = Matrix8::Zero();
  t.block<2, 2>(0, 0) = lin;
  t.block<2, 2>(2, 2) = mag;
  t.block<2, 2>(4, 4) = lin;
  t.block<2, 2>(6, 6) = mag;

  Vector8 next = t * mean_;
  next(0) = c.x;
  next(1) = c.y;
  next(2) = std::max(warped.width(), kMinSize);
  next(3) = std::max(warped.height(), kMinSize);
  mean_ = next;
  cov_ = t * cov_ * t.transpose();
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
}

BBox KalmanMotion::box() const { return box_from_state(mean_); }

void KalmanMotion::set_velocity(double vcx, double vcy, double vw, double vh) {
  mean_.tail<4>() << vcx, vcy, vw, vh;
}

LinearMotion::LinearMotion(const BBox& initial) : previous_(initial), last_(initial) {
  check_measurement(initial);
}

BBox LinearMotion::peek() const {
  return {2.0 * last_.x_min - previous_.x_min, 2.0 * last_.y_min - previous_.y_min,
          2.0 * last_.x_max - previous_.x_max, 2.0 * last_.y_max - previous_.y_max};
}

BBox LinearMotion::predict() {
  const BBox next = peek();
  previous_ = last_;
  last_ = next;
  return last_;
}

void LinearMotion::update(const BBox& measurement) {
  check_measurement(measurement);
  last_ = measurement;
}

void LinearMotion::apply_cmc(const Warp2D& warp) {
  previous_ = apply_warp(previous_, warp);
  last_ = apply_warp(last_, warp);
}

std::string to_string(MotionKind k) { return k == MotionKind::Kalman ? "kalman" : "linear"; }

MotionKind parse_motion_kind(std::string_view s) {
  if (s == "kalman") return MotionKind::Kalman;
  if (s == "linear") return MotionKind::Linear;
  throw InputError("unknown motion model '" + std::string(s) + "'");
}

MotionModel::MotionModel(MotionKind kind, const BBox& initial,
                         const KalmanParams& params)
    : model_(kind == MotionKind::Kalman
                 ? std::variant<KalmanMotion, LinearMotion>(KalmanMotion(initial, params))
                 : std::variant<KalmanMotion, LinearMotion>(LinearMotion(initial))) {}

BBox MotionModel::predict() {
  return std::visit([](auto& m) { return m.predict(); }, model_);
}
BBox MotionModel::peek() const {
  return std::visit([](const auto& m) { return m.peek(); }, model_);
}
void MotionModel::update(const BBox& measurement) {
  std::visit([&](auto& m) { m.update(measurement); }, model_);
}
void MotionModel::propagate_unassigned() {
  std::visit([](auto& m) { m.propagate_unassigned(); }, model_);
}
void MotionModel::apply_cmc(const Warp2D& warp) {
  std::visit([&](auto& m) { m.apply_cmc(warp); }, model_);
}
BBox MotionModel::box() const {
  return std::visit([](const auto& m) { return m.box(); }, model_);
}

TADN_NAMESPACE_END

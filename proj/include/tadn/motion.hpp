#pragma once

#include "tadn/precision.hpp"

#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Core>

#include "tadn/geometry.hpp"

TADN_NAMESPACE_BEGIN

// Noise standard deviations, each a multiple of the current box height.
struct KalmanParams {
  double std_position = 0.05;
  double std_velocity = 0.00625;
  double std_measurement = 0.05;
  // Initial covariance of a freshly spawned track.
  double init_std_position = 0.1;
  double init_std_velocity = 0.0625;
};

// Constant-velocity Kalman filter over (cx, cy, w, h, vcx, vcy, vw, vh).
class KalmanMotion {
 public:
  using Vector8 = Eigen::Matrix<double, 8, 1>;
  using Matrix8 = Eigen::Matrix<double, 8, 8>;

  KalmanMotion(const BBox& initial, KalmanParams params = {});

  // Time update; returns the prior box.
  BBox predict();
  // Prior box of the next predict() without changing the state.
  BBox peek() const;
  // Measurement update. Rejects boxes with non-positive size.
  void update(const BBox& measurement);
  // Time update for a frame without an assigned detection.
  void propagate_unassigned() { predict(); }
  void apply_cmc(const Warp2D& warp);

  BBox box() const;
  const Vector8& mean() const { return mean_; }
  const Matrix8& covariance() const { return cov_; }
  void set_velocity(double vcx, double vcy, double vw = 0.0, double vh = 0.0);

 private:
  Matrix8 process_noise() const;

  KalmanParams params_;
  Vector8 mean_;
  Matrix8 cov_;
};

// Constant-displacement extrapolation from the last two boxes.
class LinearMotion {
 public:
  explicit LinearMotion(const BBox& initial);

  BBox predict();
  BBox peek() const;
  void update(const BBox& measurement);
  void propagate_unassigned() { predict(); }
  void apply_cmc(const Warp2D& warp);

  BBox box() const { return last_; }

 private:
  BBox previous_;
  BBox last_;
};

enum class MotionKind { Kalman, Linear };
std::string to_string(MotionKind k);
MotionKind parse_motion_kind(std::string_view s);

// Either motion model behind one interface.
class MotionModel {
 public:
  MotionModel(MotionKind kind, const BBox& initial, const KalmanParams& params = {});

  BBox predict();
  BBox peek() const;
  void update(const BBox& measurement);
  void propagate_unassigned();
  void apply_cmc(const Warp2D& warp);
  BBox box() const;

  const KalmanMotion* kalman() const { return std::get_if<KalmanMotion>(&model_); }

 private:
  std::variant<KalmanMotion, LinearMotion> model_;
};

TADN_NAMESPACE_END

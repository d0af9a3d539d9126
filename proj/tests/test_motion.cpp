#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "tadn/error.hpp"
#include "tadn/motion.hpp"

using namespace tadn;

namespace {

void expect_box_near(const BBox& a, const BBox& b, double tol) {
  EXPECT_NEAR(a.x_min, b.x_min, tol);
  EXPECT_NEAR(a.y_min, b.y_min, tol);
  EXPECT_NEAR(a.x_max, b.x_max, tol);
  EXPECT_NEAR(a.y_max, b.y_max, tol);
}

void expect_symmetric_psd(const KalmanMotion::Matrix8& p) {
  EXPECT_LE((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-9);
  Eigen::SelfAdjointEigenSolver<KalmanMotion::Matrix8> es(p);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
}

KalmanParams noiseless() {
  KalmanParams p;
  p.std_position = 0.0;
  p.std_velocity = 0.0;
  p.std_measurement = 0.0;
  return p;
}

}  // namespace

TEST(Kalman, StationaryStatePredictsItself) {
  KalmanMotion k({10, 10, 20, 20});
  expect_box_near(k.predict(), {10, 10, 20, 20}, 1e-12);
}

TEST(Kalman, VelocityShiftsCenterPerPredict) {
  KalmanMotion k({10, 10, 20, 20});
  k.set_velocity(1.0, 0.0);
  expect_box_near(k.peek(), {11, 10, 21, 20}, 1e-12);
  expect_box_near(k.predict(), {11, 10, 21, 20}, 1e-12);
  expect_box_near(k.predict(), {12, 10, 22, 20}, 1e-12);
}

TEST(Kalman, FivePropagationsMoveFiveUnits) {
  MotionModel m(MotionKind::Kalman, {0, 0, 4, 8});
  KalmanMotion k({0, 0, 4, 8});
  k.set_velocity(1.0, 0.0);
  double trace = k.covariance().trace();
  for (int i = 0; i < 5; ++i) {
    k.propagate_unassigned();
    EXPECT_GE(k.covariance().trace(), trace);
    trace = k.covariance().trace();
    expect_symmetric_psd(k.covariance());
  }
  EXPECT_NEAR(k.box().center().x, 2.0 + 5.0, 1e-12);
  expect_box_near(m.peek(), m.predict(), 0.0);
}

TEST(Kalman, ExactMeasurementLeavesMeanUnchanged) {
  KalmanMotion k({10, 10, 20, 30});
  k.set_velocity(0.5, -0.25);
  const BBox prior = k.predict();
  const KalmanMotion::Vector8 before = k.mean();
  const double trace = k.covariance().trace();
  k.update(prior);
  EXPECT_LE((k.mean() - before).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(k.covariance().trace(), trace);
  expect_symmetric_psd(k.covariance());
}

TEST(Kalman, ConvergesOnConstantVelocityTrack) {
  KalmanParams p;
  p.std_position = 1e-4;
  p.std_velocity = 1e-4;
  p.std_measurement = 1e-4;
  auto truth = [](int t) { return BBox::from_center(100.0 + 3.0 * t, 50.0 - 1.5 * t, 20, 40); };
  KalmanMotion k(truth(0), p);
  for (int t = 1; t <= 20; ++t) {
    k.predict();
    k.update(truth(t));
    expect_symmetric_psd(k.covariance());
  }
  const BBox next = k.peek();
  EXPECT_LT(std::abs(next.center().x - truth(21).center().x), 1e-3);
  EXPECT_LT(std::abs(next.center().y - truth(21).center().y), 1e-3);
}

TEST(Kalman, NoiselessLinearMotionIsExactFromStepTwo) {
  auto truth = [](int t) { return BBox::from_center(5.0 + 2.0 * t, 7.0 + 1.0 * t, 10, 20); };
  KalmanMotion k(truth(0), noiseless());
  k.predict();
  k.update(truth(1));
  // With zero noise, the initial covariance decides the first gain; the
  // velocity is recovered once a second displacement has been observed.
  k.predict();
  k.update(truth(2));
  for (int t = 3; t < 10; ++t) {
    expect_box_near(k.predict(), truth(t), 1e-9);
    k.update(truth(t));
  }
}

TEST(Kalman, RandomOperationsKeepCovarianceValid) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  std::uniform_int_distribution<int> op(0, 2);
  KalmanMotion k({100, 100, 130, 190});
  for (int i = 0; i < 300; ++i) {
    switch (op(rng)) {
      case 0:
        k.predict();
        break;
      case 1: {
        const BBox b = k.box();
        k.predict();
        k.update({b.x_min + u(rng), b.y_min + u(rng), b.x_max + 10 + u(rng), b.y_max + 10 + u(rng)});
        break;
      }
      default:
        k.apply_cmc({{1.0 + 0.01 * u(rng), 0.01 * u(rng), u(rng), 0.01 * u(rng),
                      1.0 + 0.01 * u(rng), u(rng)}});
    }
    expect_symmetric_psd(k.covariance());
    EXPECT_GT(k.box().width(), 0.0);
    EXPECT_GT(k.box().height(), 0.0);
  }
}

TEST(Kalman, DegenerateMeasurementRejected) {
  KalmanMotion k({0, 0, 1, 1});
  EXPECT_THROW(k.update({0, 0, 0, 1}), InputError);
  EXPECT_THROW(k.update({0, 0, 1, -1}), InputError);
  EXPECT_THROW(KalmanMotion({0, 0, 0, 0}), InputError);
}

TEST(Kalman, TranslationWarpShiftsPrediction) {
  KalmanMotion k({10, 10, 20, 20});
  k.set_velocity(1.0, 0.0);
  const BBox before = k.peek();
  k.apply_cmc(Warp2D::translation(5.0, 0.0));
  expect_box_near(k.peek(), {before.x_min + 5, before.y_min, before.x_max + 5, before.y_max},
                  1e-12);
}

TEST(Kalman, ScaleWarpScalesVelocity) {
  KalmanMotion k({10, 10, 20, 20});
  k.set_velocity(1.0, 2.0);
  k.apply_cmc(Warp2D::scale(2.0));
  EXPECT_NEAR(k.mean()(4), 2.0, 1e-12);
  EXPECT_NEAR(k.mean()(5), 4.0, 1e-12);
  expect_box_near(k.box(), {20, 20, 40, 40}, 1e-12);
}

TEST(Kalman, IdentityWarpLeavesStateUnchanged) {
  KalmanMotion k({10, 10, 20, 20});
  k.set_velocity(1.0, 2.0);
  k.predict();
  const KalmanMotion::Vector8 m = k.mean();
  const KalmanMotion::Matrix8 p = k.covariance();
  k.apply_cmc(Warp2D::identity());
  EXPECT_EQ(k.mean(), m);
  EXPECT_EQ(k.covariance(), p);
}

TEST(Linear, ConstantDisplacement) {
  LinearMotion l({0, 0, 1, 1});
  l.predict();
  l.update({2, 0, 3, 1});
  expect_box_near(l.peek(), {4, 0, 5, 1}, 0.0);
  expect_box_near(l.predict(), {4, 0, 5, 1}, 0.0);
}

TEST(Linear, SingleObservationPredictsItself) {
  LinearMotion l({3, 4, 5, 9});
  expect_box_near(l.predict(), {3, 4, 5, 9}, 0.0);
}

TEST(Linear, WarpMovesHistory) {
  LinearMotion l({0, 0, 1, 1});
  l.predict();
  l.update({2, 0, 3, 1});
  l.apply_cmc(Warp2D::translation(5.0, -1.0));
  expect_box_near(l.peek(), {9, -1, 10, 0}, 1e-12);
}

TEST(MotionModel, DispatchesAndParses) {
  MotionModel k(MotionKind::Kalman, {0, 0, 2, 2});
  MotionModel l(MotionKind::Linear, {0, 0, 2, 2});
  EXPECT_NE(k.kalman(), nullptr);
  EXPECT_EQ(l.kalman(), nullptr);
  EXPECT_EQ(parse_motion_kind("kalman"), MotionKind::Kalman);
  EXPECT_EQ(parse_motion_kind(to_string(MotionKind::Linear)), MotionKind::Linear);
  EXPECT_THROW(parse_motion_kind("sort"), InputError);
}

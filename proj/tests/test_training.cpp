#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tadn/error.hpp"
#include "tadn/pipeline.hpp"
#include "tadn/synth.hpp"
#include "tadn/training.hpp"

using namespace tadn;
using nn::Matrix;

namespace {

TadnConfig small_model() {
  TadnConfig c;
  c.d_model = 16;
  c.num_heads = 2;
  c.num_encoder_layers = 1;
  c.num_decoder_layers = 1;
  c.positional_width = 8;
  c.appearance_width = 8;
  c.appearance_features = 6;
  return c;
}

LoadedSequence small_sequence(std::uint64_t seed, int frames = 40) {
  SynthConfig s;
  s.frames = frames;
  s.initial_targets = 3;
  s.max_targets = 4;
  s.appearance_dim = 6;
  s.seed = seed;
  s.name = "t" + std::to_string(seed);
  return prepare_sequence(generate_synthetic(s), small_model(), true);
}

std::vector<std::size_t> labels_of(const LamMatrix& lam) {
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < lam.rows(); ++r) out.push_back(lam.label(r));
  return out;
}

}  // namespace

TEST(TrainingConfig, DefaultsAndGates) {
  TrainingConfig c;
  EXPECT_EQ(c.metric, AssignmentMetric::Ulbr1);
  EXPECT_DOUBLE_EQ(c.det2gt(), -0.13);
  EXPECT_DOUBLE_EQ(c.assign(), -0.13);
  EXPECT_DOUBLE_EQ(c.c, 12.0);
  EXPECT_DOUBLE_EQ(c.learning_rate, 1e-4);
  EXPECT_EQ(c.accumulation, 64);
  c.metric = AssignmentMetric::Iou;
  EXPECT_DOUBLE_EQ(c.det2gt(), 0.3);
  c.t_assign = 0.5;
  EXPECT_DOUBLE_EQ(c.assign(), 0.5);
  c.e_min = c.e_max;
  EXPECT_THROW(c.validate(), InputError);
  c = TrainingConfig{};
  c.accumulation = 0;
  EXPECT_THROW(c.validate(), InputError);
  EXPECT_THROW(parse_metric("l2"), InputError);
}

TEST(TrainingConfig, StepLearningRate) {
  TrainingConfig c;
  c.learning_rate = 1e-3;
  c.lr_decay = 0.1;
  c.lr_decay_epoch = 10;
  EXPECT_DOUBLE_EQ(c.lr_for_epoch(1), 1e-3);
  EXPECT_DOUBLE_EQ(c.lr_for_epoch(10), 1e-3);
  EXPECT_NEAR(c.lr_for_epoch(11), 1e-4, 1e-18);
  EXPECT_NEAR(c.lr_for_epoch(25), 1e-5, 1e-18);
}

TEST(Lam, NoTargetsAllNull) {
  const std::vector<BBox> dets{{0, 0, 1, 1}, {2, 2, 3, 3}};
  const LamMatrix lam = compute_lam({}, {}, dets, TrainingConfig{});
  EXPECT_EQ(lam.rows(), 2u);
  EXPECT_EQ(lam.cols(), 1u);
  EXPECT_TRUE(lam.is_null(0));
  EXPECT_TRUE(lam.is_null(1));
}

TEST(Lam, OnTrackTargetTakesGroundTruthBox) {
  const BBox gt{0.10, 0.10, 0.20, 0.30};
  const std::vector<BBox> targets{{0.11, 0.10, 0.21, 0.30}};
  const std::vector<GtObject> truth{{1, gt}};
  const std::vector<BBox> dets{gt, {0.8, 0.7, 0.9, 0.9}};
  ASSERT_LT(oracle::ulbr1(dets[1], gt), -0.13);
  ASSERT_LT(oracle::ulbr1(dets[0], targets[0]), -0.13);
  TrainingConfig cfg;
  cfg.t_assign = -2.0;
  ASSERT_GE(oracle::ulbr1(targets[0], gt), cfg.t_assign);
  const LamMatrix lam = compute_lam(targets, truth, dets, cfg);
  EXPECT_EQ(lam.dense(), (Matrix(2, 2) << 1, 0, 0, 1).finished());
}

TEST(Lam, TiedDetectionsYieldOneLabel) {
  const BBox box{0.1, 0.1, 0.2, 0.3};
  const std::vector<BBox> targets{box};
  const std::vector<BBox> dets{box, box};
  const LamMatrix lam = compute_lam(targets, {}, dets, TrainingConfig{});
  EXPECT_EQ(static_cast<int>(lam.is_null(0)) + static_cast<int>(lam.is_null(1)), 1);
}

TEST(Lam, MatchesBruteForceOnRandomFrames) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> count(0, 6);
  std::normal_distribution<double> jitter(0.0, 0.02);
  for (AssignmentMetric metric : {AssignmentMetric::Ulbr1, AssignmentMetric::Iou}) {
    TrainingConfig cfg;
    cfg.metric = metric;
    for (int k = 0; k < 200; ++k) {
      std::vector<GtObject> gt;
      std::vector<BBox> targets, dets;
      const int g = count(rng), m = count(rng), n = count(rng);
      for (int i = 0; i < g; ++i) gt.push_back({i + 1, oracle::random_box(rng)});
      auto near = [&](const BBox& b) {
        const double x0 = b.x_min + jitter(rng), y0 = b.y_min + jitter(rng);
        const double x1 = b.x_max + jitter(rng), y1 = b.y_max + jitter(rng);
        return BBox{std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
      };
      for (int i = 0; i < m; ++i) {
        targets.push_back(g > 0 && i % 2 == 0 ? near(gt[static_cast<std::size_t>(i % g)].box)
                                              : oracle::random_box(rng));
      }
      for (int i = 0; i < n; ++i) {
        dets.push_back(g > 0 && i % 3 != 2 ? near(gt[static_cast<std::size_t>(i % g)].box)
                                           : oracle::random_box(rng));
      }
      const LamMatrix lam = compute_lam(targets, gt, dets, cfg);
      const Matrix dense = lam.dense();
      for (Eigen::Index r = 0; r < dense.rows(); ++r) EXPECT_EQ(dense.row(r).sum(), 1.0);
      EXPECT_EQ(labels_of(lam),
                oracle::brute_force_labels(targets, gt, dets, metric, cfg.assign(), cfg.det2gt()));
    }
  }
}

TEST(Loss, ClosedFormSingleRow) {
  LamMatrix lam(1, 1);
  lam.set(0, 0);
  const nn::Tensor l = assignment_loss(nn::Tensor::constant(Matrix::Zero(1, 2)), lam);
  EXPECT_NEAR(l.item(), 0.5 * std::log(2.0), 1e-12);
}

TEST(Loss, MatchesScalarReference) {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> z(0.0, 3.0);
  std::uniform_int_distribution<int> dim(1, 5);
  for (int k = 0; k < 300; ++k) {
    const int n = dim(rng), m = dim(rng) - 1;
    Matrix asm_scores(n, m + 1);
    for (Eigen::Index i = 0; i < asm_scores.size(); ++i) asm_scores.data()[i] = z(rng);
    LamMatrix lam(static_cast<std::size_t>(n), static_cast<std::size_t>(m));
    for (int r = 0; r < n; ++r) {
      lam.set(static_cast<std::size_t>(r),
              std::uniform_int_distribution<std::size_t>(0, static_cast<std::size_t>(m))(rng));
    }
    const double got = assignment_loss(nn::Tensor::constant(asm_scores), lam).item();
    EXPECT_NEAR(got, oracle::scalar_loss(asm_scores, labels_of(lam)), 1e-9);
    EXPECT_GE(got, 0.0);
  }
}

TEST(Loss, ArgmaxLabelIsMinimalPlacement) {
  Matrix s(1, 3);
  s << 0.3, 2.0, -1.0;
  double best = 1e300;
  std::size_t best_col = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    LamMatrix lam(1, 2);
    lam.set(0, c);
    const double v = assignment_loss(nn::Tensor::constant(s), lam).item();
    if (v < best) {
      best = v;
      best_col = c;
    }
  }
  EXPECT_EQ(best_col, 1u);
}

TEST(Loss, SaturatesTowardZero) {
  LamMatrix lam(1, 1);
  lam.set(0, 0);
  double previous = 1e300;
  for (double margin : {1.0, 5.0, 20.0, 50.0}) {
    const double v =
        assignment_loss(nn::Tensor::constant((Matrix(1, 2) << margin, 0).finished()), lam).item();
    EXPECT_LT(v, previous);
    previous = v;
  }
  EXPECT_LT(previous, 1e-20);
}

TEST(Loss, ShapeMismatchIsHardError) {
  EXPECT_THROW(assignment_loss(nn::Tensor::constant(Matrix::Zero(2, 3)), LamMatrix(2, 1)),
               InvariantError);
}

TEST(PChoice, ClosedFormAndMonotone) {
  TrainingConfig c;
  c.e_min = 20;
  c.e_max = 160;
  EXPECT_NEAR(p_choice(20, c), oracle::sigmoid(-6), 1e-12);
  EXPECT_NEAR(p_choice(20, c), 0.002473, 1e-6);
  EXPECT_NEAR(p_choice(90, c), 0.5, 1e-12);
  EXPECT_NEAR(p_choice(160, c), oracle::sigmoid(6), 1e-12);
  EXPECT_EQ(p_choice(161, c), 1.0);
  EXPECT_EQ(p_choice(0, c), p_choice(20, c));
  double previous = 0.0;
  for (int e = 0; e <= 200; ++e) {
    const double p = p_choice(e, c);
    EXPECT_GE(p, previous);
    EXPECT_LE(p, 1.0);
    previous = p;
  }
}

TEST(Trainer, ZeroChoiceMatchesLabelStepping) {
  const LoadedSequence seq = small_sequence(41);
  TadnModel model(small_model(), 1);
  TrainingConfig cfg;
  TrackerConfig tcfg;
  Trainer trainer(model, cfg, tcfg);
  std::mt19937_64 rng(1);
  const std::vector<std::vector<FrameInput>> data{seq.frames};
  const EpochStats stats = trainer.train_epoch(data, 1, rng, 0.0);
  Tracker tracker(tcfg);
  const auto expected = run_sequence(tracker, seq.frames, lam_policy(cfg));
  ASSERT_EQ(stats.tracks.size(), 1u);
  ASSERT_EQ(stats.tracks[0].size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(stats.tracks[0][i].id, expected[i].id);
    EXPECT_EQ(stats.tracks[0][i].box, expected[i].box);
  }
  EXPECT_FALSE(expected.empty());
}

TEST(Trainer, FullChoiceUsesOnlyModelDecisions) {
  const LoadedSequence seq = small_sequence(42);
  TadnModel model(small_model(), 2);
  TrainingConfig cfg;
  cfg.accumulation = 1 << 30;  // no update before the end of the sequence
  TrackerConfig tcfg;
  Tracker tracker(tcfg);
  const auto expected = run_sequence(tracker, seq.frames, model_policy(model));
  Trainer trainer(model, cfg, tcfg);
  std::mt19937_64 rng(2);
  const std::vector<std::vector<FrameInput>> data{seq.frames};
  const EpochStats stats = trainer.train_epoch(data, static_cast<int>(cfg.e_max) + 1, rng);
  EXPECT_EQ(stats.p_choice, 1.0);
  ASSERT_EQ(stats.tracks[0].size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(stats.tracks[0][i].id, expected[i].id);
    EXPECT_EQ(stats.tracks[0][i].box, expected[i].box);
  }
  EXPECT_EQ(stats.optimizer_steps, 1);
}

TEST(Trainer, AccumulationAndSequenceFlush) {
  const LoadedSequence a = small_sequence(43, 30);
  const LoadedSequence b = small_sequence(44, 25);
  TadnModel model(small_model(), 3);
  TrainingConfig cfg;
  cfg.accumulation = 8;
  Trainer trainer(model, cfg, TrackerConfig{});
  std::mt19937_64 rng(3);
  const std::vector<std::vector<FrameInput>> data{a.frames, b.frames};
  const EpochStats s = trainer.train_epoch(data, 1, rng);
  long frames_a = 0, frames_b = 0;
  for (const auto& f : a.frames) frames_a += f.detections.empty() ? 0 : 1;
  for (const auto& f : b.frames) frames_b += f.detections.empty() ? 0 : 1;
  EXPECT_EQ(s.frames, frames_a + frames_b);
  EXPECT_EQ(s.optimizer_steps, (frames_a + 7) / 8 + (frames_b + 7) / 8);
}

TEST(Trainer, LossDecreasesOnSyntheticData) {
  const std::vector<std::vector<FrameInput>> data{small_sequence(45).frames,
                                                  small_sequence(46).frames};
  TadnModel model(small_model(), 4);
  TrainingConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.accumulation = 8;
  cfg.e_min = 2;
  cfg.e_max = 8;
  Trainer trainer(model, cfg, TrackerConfig{});
  std::mt19937_64 rng(4);
  const EpochStats first = trainer.train_epoch(data, 1, rng);
  EpochStats last;
  for (int e = 2; e <= 10; ++e) last = trainer.train_epoch(data, e, rng);
  EXPECT_LT(last.mean_loss, first.mean_loss);
  EXPECT_GE(last.accuracy, 0.0);
  EXPECT_LE(last.accuracy, 1.0);
}

#include "tadn/pipeline.hpp"

#include <cstdio>
#include <ostream>
#include <random>

#include <json.hpp>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace {

bool needs_appearance(const TadnConfig& model) {
  return model.feature_mode != FeatureMode::Positional;
}

void check_width(const FeatureProvider* provider, const TadnConfig& model,
                 const std::string& where) {
  if (!needs_appearance(model)) return;
  if (provider == nullptr) throw InputError(where + ": no appearance features available");
  if (provider->width() != static_cast<std::size_t>(model.appearance_features)) {
    throw InputError(where + ": appearance features have width " +
                     std::to_string(provider->width()) + " but the model expects " +
                     std::to_string(model.appearance_features));
  }
}

}  // namespace

LoadedSequence prepare_sequence(io::SequenceBundle bundle, const TadnConfig& model,
                                bool with_ground_truth) {
  LoadedSequence seq{std::move(bundle), {}};
  std::unique_ptr<FeatureProvider> provider =
      io::feature_provider(seq.bundle, needs_appearance(model));
  check_width(provider.get(), model, seq.bundle.info.name);
  // Positional-only models ignore descriptors.
  const FeatureProvider* used = needs_appearance(model) ? provider.get() : nullptr;
  seq.frames = io::prepare_frames(seq.bundle, used, with_ground_truth);
  return seq;
}

LoadedSequence load_sequence_for(const std::filesystem::path& dir, const TadnConfig& model,
                                 const TrackerConfig& tracker, const io::LoadOptions& opts,
                                 bool with_ground_truth) {
  io::LoadOptions o = opts;
  o.confidence_floor = tracker.lifecycle.confidence_floor;
  o.require_ground_truth = o.require_ground_truth || with_ground_truth;
  return prepare_sequence(io::load_sequence(dir, o), model, with_ground_truth);
}

LoadedSequence slice_frames(const LoadedSequence& seq, int first, int last) {
  LoadedSequence out;
  out.bundle.info = seq.bundle.info;
  out.bundle.directory = seq.bundle.directory;
  out.bundle.features = seq.bundle.features;
  for (const MotRow& r : seq.bundle.detections) {
    if (r.frame >= first && r.frame <= last) out.bundle.detections.push_back(r);
  }
  for (const MotRow& r : seq.bundle.ground_truth) {
    if (r.frame >= first && r.frame <= last) out.bundle.ground_truth.push_back(r);
  }
  for (const auto& [f, w] : seq.bundle.warps) {
    if (f >= first && f <= last) out.bundle.warps.emplace(f, w);
  }
  for (const FrameInput& in : seq.frames) {
    if (in.frame >= first && in.frame <= last) out.frames.push_back(in);
  }
  return out;
}

std::vector<MotRow> track_with_model(const TadnModel& model, const TrackerConfig& cfg,
                                     const LoadedSequence& seq) {
  Tracker tracker(cfg);
  const std::vector<TrackOutput> out = run_sequence(tracker, seq.frames, model_policy(model));
  return io::to_mot_rows(out, seq.bundle.info);
}

std::vector<MotRow> track_with_labels(const TrainingConfig& training, const TrackerConfig& cfg,
                                      const LoadedSequence& seq) {
  Tracker tracker(cfg);
  const std::vector<TrackOutput> out = run_sequence(tracker, seq.frames, lam_policy(training));
  return io::to_mot_rows(out, seq.bundle.info);
}

ClearReport evaluate_sequence(const LoadedSequence& seq, std::span<const MotRow> results,
                              double iou_gate) {
  std::vector<MotRow> gt;
  for (const MotRow& r : seq.bundle.ground_truth) {
    if (r.confidence != 0.0) gt.push_back(r);
  }
  ClearReport report = evaluate(results, gt, iou_gate);
  report.name = seq.bundle.info.name;
  return report;
}

std::vector<EpochStats> train_model(TadnModel& model, const AppConfig& cfg,
                                    std::span<const LoadedSequence> sequences,
                                    const TrainingOptions& opts) {
  std::vector<std::vector<FrameInput>> frames;
  frames.reserve(sequences.size());
  for (const LoadedSequence& s : sequences) {
    if (s.bundle.ground_truth.empty()) {
      throw InputError(s.bundle.info.name + ": training needs ground truth");
    }
    frames.push_back(s.frames);
  }
  if (opts.checkpoint_dir) std::filesystem::create_directories(*opts.checkpoint_dir);

  Trainer trainer(model, cfg.training, cfg.tracker);
  std::mt19937_64 rng(opts.seed);
  std::vector<EpochStats> history;
  for (int epoch = 1; epoch <= opts.epochs; ++epoch) {
    EpochStats stats = trainer.train_epoch(frames, epoch, rng);
    stats.tracks.clear();
    if (opts.log != nullptr) {
      const nlohmann::json line = {{"epoch", stats.epoch},
                                   {"mean_loss", stats.mean_loss},
                                   {"p_choice", stats.p_choice},
                                   {"accuracy", stats.accuracy},
                                   {"learning_rate", stats.learning_rate},
                                   {"optimizer_steps", stats.optimizer_steps}};
      *opts.log << line.dump() << '\n' << std::flush;
    }
    const int every = cfg.training.checkpoint_every;
    if (opts.checkpoint_dir && every > 0 && epoch % every == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04d.ckpt", epoch);
      model.save(*opts.checkpoint_dir / name);
    }
    history.push_back(std::move(stats));
  }
  if (opts.checkpoint_dir) model.save(*opts.checkpoint_dir / "final.ckpt");
  return history;
}

std::uint64_t sequence_seed(std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

TADN_NAMESPACE_END

#pragma once

#include "tadn/precision.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tadn/config.hpp"
#include "tadn/io.hpp"
#include "tadn/metrics.hpp"
#include "tadn/model.hpp"
#include "tadn/training.hpp"

TADN_NAMESPACE_BEGIN

struct LoadedSequence {
  io::SequenceBundle bundle;
  std::vector<FrameInput> frames;
};

// Loads a sequence directory and builds normalized tracker inputs. Throws
// InputError when the descriptor width disagrees with the model config.
LoadedSequence load_sequence_for(const std::filesystem::path& dir, const TadnConfig& model,
                                 const TrackerConfig& tracker, const io::LoadOptions& opts,
                                 bool with_ground_truth);

// Wraps an in-memory bundle the same way.
LoadedSequence prepare_sequence(io::SequenceBundle bundle, const TadnConfig& model,
                                bool with_ground_truth);

// Restricts a sequence to frames [first, last].
LoadedSequence slice_frames(const LoadedSequence& seq, int first, int last);

std::vector<MotRow> track_with_model(const TadnModel& model, const TrackerConfig& cfg,
                                     const LoadedSequence& seq);
// Same loop with label-derived assignments (needs ground truth).
std::vector<MotRow> track_with_labels(const TrainingConfig& training, const TrackerConfig& cfg,
                                      const LoadedSequence& seq);

ClearReport evaluate_sequence(const LoadedSequence& seq, std::span<const MotRow> results,
                              double iou_gate = 0.5);

struct TrainingOptions {
  int epochs = 0;
  std::uint64_t seed = 1;
  std::optional<std::filesystem::path> checkpoint_dir;
  std::ostream* log = nullptr;  // one JSON object per epoch
};

std::vector<EpochStats> train_model(TadnModel& model, const AppConfig& cfg,
                                    std::span<const LoadedSequence> sequences,
                                    const TrainingOptions& opts);

// Per-sequence seed for generated datasets.
std::uint64_t sequence_seed(std::uint64_t seed, int index);

TADN_NAMESPACE_END

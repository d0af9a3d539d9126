#pragma once

#include "tadn/precision.hpp"

#include <cstdint>
#include <string>

#include "tadn/io.hpp"

TADN_NAMESPACE_BEGIN

struct SynthConfig {
  std::string name = "synth";
  int frames = 200;
  double image_width = 1920.0;
  double image_height = 1080.0;
  int initial_targets = 4;
  int max_targets = 8;
  double spawn_probability = 0.05;  // per frame while below max_targets
  int lifetime_min = 60;            // frames
  int lifetime_max = 200;
  double speed_min = 1.0;  // pixels per frame
  double speed_max = 6.0;
  double width_min = 40.0;
  double width_max = 110.0;
  double aspect_min = 1.8;  // height / width
  double aspect_max = 2.8;
  bool bounce = true;
  double noise_std = 2.0;            // pixels, on x, y, w and h
  double false_positive_rate = 0.2;  // Poisson mean per frame
  double miss_probability = 0.05;
  int appearance_dim = 24;
  double appearance_noise = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
};

// Ground truth, detections and per-detection descriptors for one sequence.
// The same config and seed always produce the same bundle.
io::SequenceBundle generate_synthetic(const SynthConfig& cfg);

TADN_NAMESPACE_END

#pragma once

#include "tadn/precision.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "tadn/model.hpp"
#include "tadn/synth.hpp"
#include "tadn/tracker.hpp"
#include "tadn/training.hpp"

TADN_NAMESPACE_BEGIN

// Everything the command-line tools read from an INI file. Sections:
// [model], [tracker], [kalman], [training], [synth], [run]. Unknown keys are
// rejected so that typos do not silently fall back to defaults.
struct AppConfig {
  TadnConfig model;
  TrackerConfig tracker;
  TrainingConfig training;
  SynthConfig synth;
  std::uint64_t seed = 1;
  int sequences = 10;  // synth: sequences to generate

  void validate() const;
};

// Sets one "<section>.<key>" entry; throws InputError for unknown keys.
void apply_setting(AppConfig& cfg, const std::string& key, const std::string& value);

AppConfig parse_config(std::istream& in, const std::string& source = "<config>");
AppConfig load_config(const std::filesystem::path& path);
std::string format_config(const AppConfig& cfg);

TADN_NAMESPACE_END

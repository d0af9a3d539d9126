#include "tadn/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace {

namespace pt = boost::property_tree;

template <class T>
T convert(const std::string& key, const std::string& text) {
  try {
    return boost::lexical_cast<T>(text);
  } catch (const boost::bad_lexical_cast&) {
    throw InputError("config key '" + key + "': cannot parse '" + text + "'");
  }
}

bool convert_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InputError("config key '" + key + "': expected a boolean, got '" + text + "'");
}

using Setter = std::function<void(AppConfig&, const std::string& key, const std::string&)>;

template <class T, class Field>
Setter number(Field field) {
  return [field](AppConfig& c, const std::string& key, const std::string& v) {
    field(c) = convert<T>(key, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model.branch_mode",
       [](AppConfig& c, const std::string&, const std::string& v) {
         c.model.branch_mode = parse_branch_mode(v);
       }},
      {"model.d_model", number<int>([](AppConfig& c) -> int& { return c.model.d_model; })},
      {"model.num_heads", number<int>([](AppConfig& c) -> int& { return c.model.num_heads; })},
      {"model.encoder_layers",
       number<int>([](AppConfig& c) -> int& { return c.model.num_encoder_layers; })},
      {"model.decoder_layers",
       number<int>([](AppConfig& c) -> int& { return c.model.num_decoder_layers; })},
      {"model.ff_width", number<int>([](AppConfig& c) -> int& { return c.model.ff_width; })},
      {"model.dropout", number<double>([](AppConfig& c) -> double& { return c.model.dropout; })},
      {"model.features",
       [](AppConfig& c, const std::string&, const std::string& v) {
         c.model.feature_mode = parse_feature_mode(v);
       }},
      {"model.positional_width",
       number<int>([](AppConfig& c) -> int& { return c.model.positional_width; })},
      {"model.appearance_width",
       number<int>([](AppConfig& c) -> int& { return c.model.appearance_width; })},
      {"model.appearance_features",
       number<int>([](AppConfig& c) -> int& { return c.model.appearance_features; })},

      {"tracker.th_min",
       number<double>([](AppConfig& c) -> double& { return c.tracker.lifecycle.th_min; })},
      {"tracker.th_max",
       number<double>([](AppConfig& c) -> double& { return c.tracker.lifecycle.th_max; })},
      {"tracker.h_max",
       number<double>([](AppConfig& c) -> double& { return c.tracker.lifecycle.h_max; })},
      {"tracker.confidence_floor",
       number<double>(
           [](AppConfig& c) -> double& { return c.tracker.lifecycle.confidence_floor; })},
      {"tracker.output_unassigned",
       [](AppConfig& c, const std::string& k, const std::string& v) {
         c.tracker.lifecycle.output_unassigned = convert_bool(k, v);
       }},
      {"tracker.motion",
       [](AppConfig& c, const std::string&, const std::string& v) {
         c.tracker.motion = parse_motion_kind(v);
       }},
      {"tracker.use_cmc",
       [](AppConfig& c, const std::string& k, const std::string& v) {
         c.tracker.use_cmc = convert_bool(k, v);
       }},

      {"kalman.std_position",
       number<double>([](AppConfig& c) -> double& { return c.tracker.kalman.std_position; })},
      {"kalman.std_velocity",
       number<double>([](AppConfig& c) -> double& { return c.tracker.kalman.std_velocity; })},
      {"kalman.std_measurement",
       number<double>([](AppConfig& c) -> double& { return c.tracker.kalman.std_measurement; })},
      {"kalman.init_std_position",
       number<double>(
           [](AppConfig& c) -> double& { return c.tracker.kalman.init_std_position; })},
      {"kalman.init_std_velocity",
       number<double>(
           [](AppConfig& c) -> double& { return c.tracker.kalman.init_std_velocity; })},

      {"training.metric",
       [](AppConfig& c, const std::string&, const std::string& v) {
         c.training.metric = parse_metric(v);
       }},
      {"training.t_det2gt",
       [](AppConfig& c, const std::string& k, const std::string& v) {
         c.training.t_det2gt = convert<double>(k, v);
       }},
      {"training.t_assign",
       [](AppConfig& c, const std::string& k, const std::string& v) {
         c.training.t_assign = convert<double>(k, v);
       }},
      {"training.e_min", number<double>([](AppConfig& c) -> double& { return c.training.e_min; })},
      {"training.e_max", number<double>([](AppConfig& c) -> double& { return c.training.e_max; })},
      {"training.c", number<double>([](AppConfig& c) -> double& { return c.training.c; })},
      {"training.learning_rate",
       number<double>([](AppConfig& c) -> double& { return c.training.learning_rate; })},
      {"training.lr_decay",
       number<double>([](AppConfig& c) -> double& { return c.training.lr_decay; })},
      {"training.lr_decay_epoch",
       number<int>([](AppConfig& c) -> int& { return c.training.lr_decay_epoch; })},
      {"training.accumulation",
       number<int>([](AppConfig& c) -> int& { return c.training.accumulation; })},
      {"training.epochs", number<int>([](AppConfig& c) -> int& { return c.training.epochs; })},
      {"training.checkpoint_every",
       number<int>([](AppConfig& c) -> int& { return c.training.checkpoint_every; })},

      {"synth.sequences", number<int>([](AppConfig& c) -> int& { return c.sequences; })},
      {"synth.frames", number<int>([](AppConfig& c) -> int& { return c.synth.frames; })},
      {"synth.image_width",
       number<double>([](AppConfig& c) -> double& { return c.synth.image_width; })},
      {"synth.image_height",
       number<double>([](AppConfig& c) -> double& { return c.synth.image_height; })},
      {"synth.initial_targets",
       number<int>([](AppConfig& c) -> int& { return c.synth.initial_targets; })},
      {"synth.max_targets", number<int>([](AppConfig& c) -> int& { return c.synth.max_targets; })},
      {"synth.spawn_probability",
       number<double>([](AppConfig& c) -> double& { return c.synth.spawn_probability; })},
      {"synth.lifetime_min",
       number<int>([](AppConfig& c) -> int& { return c.synth.lifetime_min; })},
      {"synth.lifetime_max",
       number<int>([](AppConfig& c) -> int& { return c.synth.lifetime_max; })},
      {"synth.speed_min", number<double>([](AppConfig& c) -> double& { return c.synth.speed_min; })},
      {"synth.speed_max", number<double>([](AppConfig& c) -> double& { return c.synth.speed_max; })},
      {"synth.width_min", number<double>([](AppConfig& c) -> double& { return c.synth.width_min; })},
      {"synth.width_max", number<double>([](AppConfig& c) -> double& { return c.synth.width_max; })},
      {"synth.aspect_min",
       number<double>([](AppConfig& c) -> double& { return c.synth.aspect_min; })},
      {"synth.aspect_max",
       number<double>([](AppConfig& c) -> double& { return c.synth.aspect_max; })},
      {"synth.bounce",
       [](AppConfig& c, const std::string& k, const std::string& v) {
         c.synth.bounce = convert_bool(k, v);
       }},
      {"synth.noise_std", number<double>([](AppConfig& c) -> double& { return c.synth.noise_std; })},
      {"synth.false_positive_rate",
       number<double>([](AppConfig& c) -> double& { return c.synth.false_positive_rate; })},
      {"synth.miss_probability",
       number<double>([](AppConfig& c) -> double& { return c.synth.miss_probability; })},
      {"synth.appearance_dim",
       number<int>([](AppConfig& c) -> int& { return c.synth.appearance_dim; })},
      {"synth.appearance_noise",
       number<double>([](AppConfig& c) -> double& { return c.synth.appearance_noise; })},

      {"run.seed", number<std::uint64_t>([](AppConfig& c) -> std::uint64_t& { return c.seed; })},
  };
  return table;
}

}  // namespace

void apply_setting(AppConfig& cfg, const std::string& key, const std::string& value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw InputError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

void AppConfig::validate() const {
  model.validate();
  tracker.lifecycle.validate();
  training.validate();
  synth.validate();
  if (sequences < 1) throw InputError("synth.sequences must be at least 1");
}

AppConfig parse_config(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(source + ": " + e.what());
  }
  AppConfig cfg;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw InputError(source + ": key '" + section + "' outside any section");
    }
    for (const auto& [key, value] : entries) {
      try {
        apply_setting(cfg, section + "." + key, value.data());
      } catch (const InputError& e) {
        throw InputError(source + ": " + e.what());
      }
    }
  }
  cfg.validate();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

std::string format_config(const AppConfig& c) {
  std::ostringstream o;
  o.precision(10);
  const auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[model]\n"
    << "branch_mode=" << to_string(c.model.branch_mode) << '\n'
    << "d_model=" << c.model.d_model << '\n'
    << "num_heads=" << c.model.num_heads << '\n'
    << "encoder_layers=" << c.model.num_encoder_layers << '\n'
    << "decoder_layers=" << c.model.num_decoder_layers << '\n'
    << "ff_width=" << c.model.ff_width << '\n'
    << "dropout=" << c.model.dropout << '\n'
    << "features=" << to_string(c.model.feature_mode) << '\n'
    << "positional_width=" << c.model.positional_width << '\n'
    << "appearance_width=" << c.model.appearance_width << '\n'
    << "appearance_features=" << c.model.appearance_features << "\n\n"
    << "[tracker]\n"
    << "th_min=" << c.tracker.lifecycle.th_min << '\n'
    << "th_max=" << c.tracker.lifecycle.th_max << '\n'
    << "h_max=" << c.tracker.lifecycle.h_max << '\n'
    << "confidence_floor=" << c.tracker.lifecycle.confidence_floor << '\n'
    << "output_unassigned=" << b(c.tracker.lifecycle.output_unassigned) << '\n'
    << "motion=" << to_string(c.tracker.motion) << '\n'
    << "use_cmc=" << b(c.tracker.use_cmc) << "\n\n"
    << "[kalman]\n"
    << "std_position=" << c.tracker.kalman.std_position << '\n'
    << "std_velocity=" << c.tracker.kalman.std_velocity << '\n'
    << "std_measurement=" << c.tracker.kalman.std_measurement << '\n'
    << "init_std_position=" << c.tracker.kalman.init_std_position << '\n'
    << "init_std_velocity=" << c.tracker.kalman.init_std_velocity << "\n\n"
    << "[training]\n"
    << "metric=" << to_string(c.training.metric) << '\n'
    << "t_det2gt=" << c.training.det2gt() << '\n'
    << "t_assign=" << c.training.assign() << '\n'
    << "e_min=" << c.training.e_min << '\n'
    << "e_max=" << c.training.e_max << '\n'
    << "c=" << c.training.c << '\n'
    << "learning_rate=" << c.training.learning_rate << '\n'
    << "lr_decay=" << c.training.lr_decay << '\n'
    << "lr_decay_epoch=" << c.training.lr_decay_epoch << '\n'
    << "accumulation=" << c.training.accumulation << '\n'
    << "epochs=" << c.training.epochs << '\n'
    << "checkpoint_every=" << c.training.checkpoint_every << "\n\n"
    << "[synth]\n"
    << "sequences=" << c.sequences << '\n'
    << "frames=" << c.synth.frames << '\n'
    << "image_width=" << c.synth.image_width << '\n'
    << "image_height=" << c.synth.image_height << '\n'
    << "initial_targets=" << c.synth.initial_targets << '\n'
    << "max_targets=" << c.synth.max_targets << '\n'
    << "spawn_probability=" << c.synth.spawn_probability << '\n'
    << "lifetime_min=" << c.synth.lifetime_min << '\n'
    << "lifetime_max=" << c.synth.lifetime_max << '\n'
    << "speed_min=" << c.synth.speed_min << '\n'
    << "speed_max=" << c.synth.speed_max << '\n'
    << "width_min=" << c.synth.width_min << '\n'
    << "width_max=" << c.synth.width_max << '\n'
    << "aspect_min=" << c.synth.aspect_min << '\n'
    << "aspect_max=" << c.synth.aspect_max << '\n'
    << "bounce=" << b(c.synth.bounce) << '\n'
    << "noise_std=" << c.synth.noise_std << '\n'
    << "false_positive_rate=" << c.synth.false_positive_rate << '\n'
    << "miss_probability=" << c.synth.miss_probability << '\n'
    << "appearance_dim=" << c.synth.appearance_dim << '\n'
    << "appearance_noise=" << c.synth.appearance_noise << "\n\n"
    << "[run]\n"
    << "seed=" << c.seed << '\n';
  return o.str();
}

TADN_NAMESPACE_END

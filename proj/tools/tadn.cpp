#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tadn/config.hpp"
#include "tadn/error.hpp"
#include "tadn/io.hpp"
#include "tadn/metrics.hpp"
#include "tadn/pipeline.hpp"
#include "tadn/synth.hpp"

namespace fs = std::filesystem;
using namespace tadn;

namespace {

AppConfig config_or_default(const std::string& path) {
  return path.empty() ? AppConfig{} : load_config(path);
}

struct TrackArgs {
  std::string config, sequence, out, checkpoint, warps, features;
};

int cmd_track(const TrackArgs& a) {
  const AppConfig cfg = config_or_default(a.config);
  const TadnModel model = TadnModel::load(a.checkpoint);
  io::LoadOptions opts;
  if (!a.warps.empty()) opts.warps = a.warps;
  if (!a.features.empty()) opts.features = a.features;
  const LoadedSequence seq =
      load_sequence_for(a.sequence, model.config(), cfg.tracker, opts, false);
  const std::vector<MotRow> rows = track_with_model(model, cfg.tracker, seq);
  io::write_results(a.out, rows);
  std::cerr << seq.bundle.info.name << ": " << seq.frames.size() << " frames, " << rows.size()
            << " result rows -> " << a.out << '\n';
  return 0;
}

struct TrainArgs {
  std::string config, data, checkpoint_dir;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a) {
  AppConfig cfg = config_or_default(a.config);
  if (a.seed) cfg.seed = *a.seed;
  const int epochs = a.epochs.value_or(cfg.training.epochs);
  if (epochs < 1) throw InputError("--epochs must be at least 1");

  std::vector<LoadedSequence> seqs;
  for (const fs::path& dir : io::list_sequences(a.data)) {
    seqs.push_back(load_sequence_for(dir, cfg.model, cfg.tracker, {}, true));
  }
  TadnModel model(cfg.model, cfg.seed);
  fs::create_directories(a.checkpoint_dir);
  std::ofstream log(fs::path(a.checkpoint_dir) / "train_log.jsonl");
  if (!log) throw InputError("cannot write the training log in " + a.checkpoint_dir);

  TrainingOptions opts{epochs, cfg.seed, fs::path(a.checkpoint_dir), &log};
  std::cerr << "training on " << seqs.size() << " sequences for " << epochs << " epochs, "
            << model.parameters().scalar_count() << " parameters\n";
  const std::vector<EpochStats> history = train_model(model, cfg, seqs, opts);
  for (const EpochStats& s : history) {
    std::printf("epoch %d loss %.6f p_choice %.4f accuracy %.4f\n", s.epoch, s.mean_loss,
                s.p_choice, s.accuracy);
  }
  return 0;
}

struct EvalArgs {
  std::string gt, results, report;
  double iou_gate = 0.5;
};

int cmd_eval(const EvalArgs& a) {
  std::vector<ClearReport> reports;
  for (const fs::path& dir : io::list_sequences(a.gt)) {
    const io::SequenceInfo info = io::read_seqinfo(dir / "seqinfo.ini");
    std::vector<MotRow> gt;
    for (const MotRow& r : io::read_mot_rows(dir / "gt" / "gt.txt", io::RowKind::GroundTruth)) {
      if (r.confidence != 0.0) gt.push_back(r);
    }
    const fs::path res = fs::path(a.results) / (info.name + ".txt");
    if (!fs::exists(res)) throw InputError("missing results file " + res.string());
    const std::vector<MotRow> pred = io::read_mot_rows(res, io::RowKind::Results);
    ClearReport r = evaluate(pred, gt, a.iou_gate);
    r.name = info.name;
    reports.push_back(r);
  }
  reports.push_back(aggregate(reports));
  std::cout << format_table(reports);
  const fs::path report = a.report.empty() ? fs::path(a.results) / "clear_report.txt"
                                           : fs::path(a.report);
  std::ofstream out(report);
  if (!out) throw InputError("cannot write " + report.string());
  out << format_key_values(reports);
  return 0;
}

struct SynthArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a) {
  AppConfig cfg = config_or_default(a.config);
  if (a.seed) cfg.seed = *a.seed;
  for (int k = 0; k < cfg.sequences; ++k) {
    SynthConfig sc = cfg.synth;
    char name[32];
    std::snprintf(name, sizeof name, "synth-%02d", k + 1);
    sc.name = name;
    sc.seed = sequence_seed(cfg.seed, k);
    io::save_sequence(fs::path(a.out) / name, generate_synthetic(sc));
  }
  std::cerr << "wrote " << cfg.sequences << " sequences to " << a.out << '\n';
  return 0;
}

struct AblateArgs {
  std::string config, grid, data, out;
  std::optional<int> epochs;
};

// Cartesian product of "[axes] key = v1, v2, ..." entries.
std::vector<std::vector<std::pair<std::string, std::string>>> read_grid(const std::string& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path, tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(e.what());
  }
  std::vector<std::vector<std::pair<std::string, std::string>>> variants{{}};
  for (const auto& [section, entries] : tree) {
    if (section != "axes") throw InputError(path + ": unknown grid section '" + section + "'");
    for (const auto& [key, value] : entries) {
      std::vector<std::string> values;
      std::stringstream ss(value.data());
      for (std::string v; std::getline(ss, v, ',');) {
        v.erase(0, v.find_first_not_of(" \t"));
        v.erase(v.find_last_not_of(" \t") + 1);
        if (!v.empty()) values.push_back(v);
      }
      if (values.empty()) throw InputError(path + ": axis '" + key + "' has no values");
      std::vector<std::vector<std::pair<std::string, std::string>>> next;
      for (const auto& base : variants) {
        for (const std::string& v : values) {
          auto extended = base;
          extended.emplace_back(key, v);
          next.push_back(std::move(extended));
        }
      }
      variants = std::move(next);
    }
  }
  return variants;
}

int cmd_ablate(const AblateArgs& a) {
  const AppConfig base = config_or_default(a.config);
  const auto variants = read_grid(a.grid);
  std::vector<io::SequenceBundle> bundles;
  for (const fs::path& dir : io::list_sequences(a.data)) {
    io::LoadOptions opts;
    opts.confidence_floor = base.tracker.lifecycle.confidence_floor;
    opts.require_ground_truth = true;
    bundles.push_back(io::load_sequence(dir, opts));
  }

  // Each sequence: first half for training, second half held out.
  auto split = [&](const AppConfig& cfg, std::vector<LoadedSequence>& train,
                   std::vector<LoadedSequence>& test) {
    for (const io::SequenceBundle& b : bundles) {
      const LoadedSequence full = prepare_sequence(b, cfg.model, true);
      const int half = b.frame_count() / 2;
      train.push_back(slice_frames(full, 1, half));
      test.push_back(slice_frames(full, half + 1, b.frame_count()));
    }
  };

  std::vector<ClearReport> rows;
  for (const auto& variant : variants) {
    AppConfig cfg = base;
    std::string label;
    for (const auto& [k, v] : variant) {
      apply_setting(cfg, k, v);
      label += (label.empty() ? "" : " ") + k + "=" + v;
    }
    cfg.validate();
    std::vector<LoadedSequence> train, test;
    split(cfg, train, test);
    TadnModel model(cfg.model, cfg.seed);
    TrainingOptions opts{a.epochs.value_or(cfg.training.epochs), cfg.seed, std::nullopt, nullptr};
    train_model(model, cfg, train, opts);
    std::vector<ClearReport> per_seq;
    for (const LoadedSequence& s : test) {
      per_seq.push_back(evaluate_sequence(s, track_with_model(model, cfg.tracker, s)));
    }
    ClearReport total = aggregate(per_seq);
    total.name = label.empty() ? "base" : label;
    rows.push_back(total);
    std::cerr << "done: " << total.name << '\n';
  }
  {
    std::vector<LoadedSequence> train, test;
    split(base, train, test);
    std::vector<ClearReport> per_seq;
    for (const LoadedSequence& s : test) {
      per_seq.push_back(evaluate_sequence(s, track_with_labels(base.training, base.tracker, s)));
    }
    ClearReport oracle = aggregate(per_seq);
    oracle.name = "label-oracle";
    rows.push_back(oracle);
  }
  const std::string table = format_table(rows);
  std::cout << table;
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw InputError("cannot write " + a.out);
    out << table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transformer-based assignment tracker"};
  app.require_subcommand(1);

  TrackArgs track;
  CLI::App* t = app.add_subcommand("track", "Run the tracker on one sequence");
  t->add_option("--config", track.config, "INI configuration");
  t->add_option("--sequence", track.sequence, "Sequence directory")->required();
  t->add_option("--out", track.out, "Results file")->required();
  t->add_option("--checkpoint", track.checkpoint, "Model checkpoint")->required();
  t->add_option("--warps", track.warps, "Per-frame warp file");
  t->add_option("--features", track.features, "Appearance feature file");

  TrainArgs train;
  CLI::App* tr = app.add_subcommand("train", "Train a model on sequences with ground truth");
  tr->add_option("--config", train.config, "INI configuration");
  tr->add_option("--data", train.data, "Directory of sequences")->required();
  tr->add_option("--epochs", train.epochs, "Number of epochs");
  tr->add_option("--checkpoint-dir", train.checkpoint_dir, "Output directory")->required();
  tr->add_option("--seed", train.seed, "Random seed");

  EvalArgs ev;
  CLI::App* e = app.add_subcommand("eval", "CLEAR MOT evaluation");
  e->add_option("--gt", ev.gt, "Directory of sequences with ground truth")->required();
  e->add_option("--results", ev.results, "Directory of <sequence>.txt results")->required();
  e->add_option("--iou-gate", ev.iou_gate, "Match gate")->check(CLI::Range(0.0, 1.0));
  e->add_option("--report", ev.report, "Key-value report path");

  SynthArgs synth;
  CLI::App* s = app.add_subcommand("synth", "Generate synthetic sequences");
  s->add_option("--config", synth.config, "INI configuration");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--seed", synth.seed, "Random seed");

  AblateArgs ablate;
  CLI::App* ab = app.add_subcommand("ablate", "Train and compare configuration variants");
  ab->add_option("--config", ablate.config, "Base INI configuration");
  ab->add_option("--grid", ablate.grid, "Grid file with an [axes] section")->required();
  ab->add_option("--data", ablate.data, "Directory of sequences with ground truth")->required();
  ab->add_option("--epochs", ablate.epochs, "Epochs per variant");
  ab->add_option("--out", ablate.out, "Also write the table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*t) return cmd_track(track);
    if (*tr) return cmd_train(train);
    if (*e) return cmd_eval(ev);
    if (*s) return cmd_synth(synth);
    if (*ab) return cmd_ablate(ablate);
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const InvariantError& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << '\n';
    return 2;
  }
  return 2;
}

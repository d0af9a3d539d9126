#pragma once

#include "tadn/precision.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tadn/appearance.hpp"
#include "tadn/frame.hpp"
#include "tadn/mot_row.hpp"
#include "tadn/tracker.hpp"

TADN_NAMESPACE_BEGIN
namespace io {

enum class RowKind { Detections, GroundTruth, Results };

// Parses "frame,id,x,y,w,h[,conf[,class[,visibility[,...]]]]" rows. Blank
// lines are skipped. Detections below `confidence_floor` are dropped after
// their per-frame index has been assigned. Rows come back sorted by frame,
// then by index.
std::vector<MotRow> parse_mot_rows(std::istream& in, RowKind kind,
                                   double confidence_floor = 0.0,
                                   const std::string& source = "<stream>");
std::vector<MotRow> read_mot_rows(const std::filesystem::path& path, RowKind kind,
                                  double confidence_floor = 0.0);

// Coordinates with 3 decimals, confidence with 5. Results are sorted by
// (frame, id); detections and ground truth by (frame, index).
void write_mot_rows(const std::filesystem::path& path, std::span<const MotRow> rows,
                    RowKind kind);
void write_results(const std::filesystem::path& path, std::span<const MotRow> rows);

// "frame,a,b,tx,c,d,ty" per line. A missing file yields no entries;
// frames without an entry use the identity.
std::map<int, Warp2D> read_warps(const std::filesystem::path& path);
void write_warps(const std::filesystem::path& path, const std::map<int, Warp2D>& warps);

// Binary little-endian: "TADNFEAT", u32 version, u32 width, u64 count, then
// per record i32 frame, i32 index, width x f32.
FeatureTable read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureTable& table);

struct SequenceInfo {
  std::string name;
  double width = 0.0;
  double height = 0.0;
  int length = 0;
};

// A sequence directory: seqinfo.ini, det/det.txt, optional gt/gt.txt,
// warps.txt, features.bin and img1/.
struct SequenceBundle {
  SequenceInfo info;
  std::vector<MotRow> detections;
  std::vector<MotRow> ground_truth;
  std::map<int, Warp2D> warps;  // pixel coordinates
  std::optional<FeatureTable> features;
  std::filesystem::path directory;

  int frame_count() const;
};

struct LoadOptions {
  double confidence_floor = 0.3;
  std::optional<std::filesystem::path> warps;     // overrides warps.txt
  std::optional<std::filesystem::path> features;  // overrides features.bin
  bool require_ground_truth = false;
};

SequenceInfo read_seqinfo(const std::filesystem::path& path);
SequenceBundle load_sequence(const std::filesystem::path& dir, const LoadOptions& opts = {});
void save_sequence(const std::filesystem::path& dir, const SequenceBundle& bundle);

// Subdirectories holding a seqinfo.ini, sorted by name.
std::vector<std::filesystem::path> list_sequences(const std::filesystem::path& data_dir);

// Loads <img_dir>/NNNNNN.{jpg,png} as RGB.
HistogramFeatures::ImageLoader image_loader(const std::filesystem::path& img_dir);

// Picks the descriptor source for a bundle: the feature table when present,
// else color histograms from img1/. Returns null when `appearance_needed`
// is false and neither exists.
std::unique_ptr<FeatureProvider> feature_provider(const SequenceBundle& bundle,
                                                  bool appearance_needed);

// Normalized per-frame tracker inputs for frames 1..frame_count(). Ground
// truth rows with a zero consider flag are left out.
std::vector<FrameInput> prepare_frames(const SequenceBundle& bundle,
                                       const FeatureProvider* features, bool with_ground_truth);

// Tracker output back in pixel coordinates.
std::vector<MotRow> to_mot_rows(std::span<const TrackOutput> tracks, const SequenceInfo& info);

}  // namespace io
TADN_NAMESPACE_END

#include "tadn/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <opencv2/imgcodecs.hpp>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace io {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

namespace {

constexpr char kFeatureMagic[8] = {'T', 'A', 'D', 'N', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail_at(const std::string& source, long line, const std::string& what) {
  throw InputError(source + ":" + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view field, const std::string& source, long line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v)) {
    fail_at(source, line, "non-numeric field '" + std::string(field) + "'");
  }
  return v;
}

int parse_int(std::string_view field, const std::string& source, long line) {
  const double v = parse_double(field, source, line);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    fail_at(source, line, "expected an integer, got '" + std::string(field) + "'");
  }
  return static_cast<int>(v);
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::istream& in, const fs::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) {
    throw InputError(path.string() + ": truncated feature file");
  }
  return v;
}

}  // namespace

std::vector<MotRow> parse_mot_rows(std::istream& in, RowKind kind, double confidence_floor,
                                   const std::string& source) {
  std::vector<MotRow> rows;
  std::map<int, int> next_index;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const std::vector<std::string_view> f = split_fields(text);
    if (f.size() < 6) fail_at(source, line_no, "expected at least 6 fields");
    MotRow r;
    r.frame = parse_int(f[0], source, line_no);
    r.id = parse_int(f[1], source, line_no);
    const double x = parse_double(f[2], source, line_no);
    const double y = parse_double(f[3], source, line_no);
    const double w = parse_double(f[4], source, line_no);
    const double h = parse_double(f[5], source, line_no);
    if (r.frame < 1) fail_at(source, line_no, "frame index must be at least 1");
    if (!(w > 0.0 && h > 0.0)) fail_at(source, line_no, "box width and height must be positive");
    r.box = BBox::from_xywh(x, y, w, h);
    r.confidence = f.size() > 6 ? parse_double(f[6], source, line_no) : 1.0;
    if (kind == RowKind::GroundTruth) {
      if (f.size() > 7) r.cls = parse_int(f[7], source, line_no);
      if (f.size() > 8) r.visibility = parse_double(f[8], source, line_no);
    }
    r.index = next_index[r.frame]++;
    if (kind == RowKind::Detections && r.confidence < confidence_floor) continue;
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MotRow& a, const MotRow& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.index < b.index;
  });
  return rows;
}

std::vector<MotRow> read_mot_rows(const fs::path& path, RowKind kind, double confidence_floor) {
  std::ifstream in = open_in(path);
  return parse_mot_rows(in, kind, confidence_floor, path.string());
}

void write_mot_rows(const fs::path& path, std::span<const MotRow> rows, RowKind kind) {
  std::vector<MotRow> sorted(rows.begin(), rows.end());
  std::stable_sort(sorted.begin(), sorted.end(), [kind](const MotRow& a, const MotRow& b) {
    if (a.frame != b.frame) return a.frame < b.frame;
    return kind == RowKind::Results ? a.id < b.id : a.index < b.index;
  });
  std::ofstream out = open_out(path);
  char buf[256];
  for (const MotRow& r : sorted) {
    const BBox::Xywh b = r.box.to_xywh();
    if (kind == RowKind::GroundTruth) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.3f,%.3f,%.3f,%.3f,%.5g,%d,%.5f\n", r.frame, r.id,
                    b.x, b.y, b.w, b.h, r.confidence, r.cls, r.visibility);
    } else {
      std::snprintf(buf, sizeof buf, "%d,%d,%.3f,%.3f,%.3f,%.3f,%.5f,-1,-1,-1\n", r.frame,
                    kind == RowKind::Detections ? -1 : r.id, b.x, b.y, b.w, b.h, r.confidence);
    }
    out << buf;
  }
  if (!out) throw InputError("failed writing " + path.string());
}

void write_results(const fs::path& path, std::span<const MotRow> rows) {
  write_mot_rows(path, rows, RowKind::Results);
}

std::map<int, Warp2D> read_warps(const fs::path& path) {
  std::map<int, Warp2D> warps;
  if (!fs::exists(path)) return warps;
  std::ifstream in = open_in(path);
  const std::string source = path.string();
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    const std::vector<std::string_view> f = split_fields(text);
    if (f.size() != 7) fail_at(source, line_no, "expected frame plus 6 coefficients");
    const int frame = parse_int(f[0], source, line_no);
    if (frame < 1) fail_at(source, line_no, "frame index must be at least 1");
    Warp2D w;
    for (int k = 0; k < 6; ++k) w.m[k] = parse_double(f[k + 1], source, line_no);
    if (!warps.emplace(frame, w).second) {
      fail_at(source, line_no, "duplicate frame " + std::to_string(frame));
    }
  }
  return warps;
}

void write_warps(const fs::path& path, const std::map<int, Warp2D>& warps) {
  std::ofstream out = open_out(path);
  out.precision(17);
  for (const auto& [frame, w] : warps) {
    out << frame;
    for (double c : w.m) out << ',' << c;
    out << '\n';
  }
  if (!out) throw InputError("failed writing " + path.string());
}

FeatureTable read_features(const fs::path& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  char magic[8];
  if (!in.read(magic, sizeof magic) || !std::equal(magic, magic + 8, kFeatureMagic)) {
    throw InputError(path.string() + ": not a feature file (bad magic)");
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kFeatureVersion) {
    throw InputError(path.string() + ": unsupported feature file version " +
                     std::to_string(version));
  }
  const auto width = read_pod<std::uint32_t>(in, path);
  const auto count = read_pod<std::uint64_t>(in, path);
  FeatureTable table(width);
  for (std::uint64_t r = 0; r < count; ++r) {
    const auto frame = read_pod<std::int32_t>(in, path);
    const auto index = read_pod<std::int32_t>(in, path);
    std::vector<float> values(width);
    if (width > 0 && !in.read(reinterpret_cast<char*>(values.data()),
                              static_cast<std::streamsize>(width * sizeof(float)))) {
      throw InputError(path.string() + ": truncated feature file");
    }
    table.insert(frame, index, std::move(values));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw InputError(path.string() + ": trailing bytes after the last record");
  }
  return table;
}

void write_features(const fs::path& path, const FeatureTable& table) {
  std::ofstream out = open_out(path, std::ios::binary);
  out.write(kFeatureMagic, sizeof kFeatureMagic);
  write_pod(out, kFeatureVersion);
  write_pod(out, static_cast<std::uint32_t>(table.width()));
  write_pod(out, static_cast<std::uint64_t>(table.size()));
  for (const auto& [key, values] : table.records()) {
    write_pod(out, static_cast<std::int32_t>(key.first));
    write_pod(out, static_cast<std::int32_t>(key.second));
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(float)));
  }
  if (!out) throw InputError("failed writing " + path.string());
}

int SequenceBundle::frame_count() const {
  int n = info.length;
  for (const MotRow& r : detections) n = std::max(n, r.frame);
  for (const MotRow& r : ground_truth) n = std::max(n, r.frame);
  return n;
}

SequenceInfo read_seqinfo(const fs::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw InputError(e.what());
  }
  SequenceInfo info;
  try {
    info.name = tree.get<std::string>("Sequence.name", path.parent_path().filename().string());
    info.width = tree.get<double>("Sequence.imWidth");
    info.height = tree.get<double>("Sequence.imHeight");
    info.length = tree.get<int>("Sequence.seqLength", 0);
  } catch (const pt::ptree_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  if (!(info.width > 0.0 && info.height > 0.0)) {
    throw InputError(path.string() + ": image size must be positive");
  }
  return info;
}

SequenceBundle load_sequence(const fs::path& dir, const LoadOptions& opts) {
  SequenceBundle b;
  b.directory = dir;
  b.info = read_seqinfo(dir / "seqinfo.ini");
  b.detections = read_mot_rows(dir / "det" / "det.txt", RowKind::Detections,
                               opts.confidence_floor);
  const fs::path gt = dir / "gt" / "gt.txt";
  if (fs::exists(gt)) {
    b.ground_truth = read_mot_rows(gt, RowKind::GroundTruth);
  } else if (opts.require_ground_truth) {
    throw InputError(dir.string() + ": ground truth required but gt/gt.txt is missing");
  }
  b.warps = read_warps(opts.warps.value_or(dir / "warps.txt"));
  if (opts.features) {
    b.features = read_features(*opts.features);
  } else if (fs::exists(dir / "features.bin")) {
    b.features = read_features(dir / "features.bin");
  }
  return b;
}

void save_sequence(const fs::path& dir, const SequenceBundle& bundle) {
  fs::create_directories(dir);
  {
    std::ofstream out = open_out(dir / "seqinfo.ini");
    out << "[Sequence]\nname=" << bundle.info.name << "\nimDir=img1\nframeRate=30\nseqLength="
        << bundle.info.length << "\nimWidth=" << bundle.info.width
        << "\nimHeight=" << bundle.info.height << "\nimExt=.jpg\n";
  }
  write_mot_rows(dir / "det" / "det.txt", bundle.detections, RowKind::Detections);
  write_mot_rows(dir / "gt" / "gt.txt", bundle.ground_truth, RowKind::GroundTruth);
  if (!bundle.warps.empty()) write_warps(dir / "warps.txt", bundle.warps);
  if (bundle.features) write_features(dir / "features.bin", *bundle.features);
}

std::vector<fs::path> list_sequences(const fs::path& data_dir) {
  if (fs::exists(data_dir / "seqinfo.ini")) return {data_dir};
  if (!fs::is_directory(data_dir)) throw InputError(data_dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const fs::directory_entry& e : fs::directory_iterator(data_dir)) {
    if (e.is_directory() && fs::exists(e.path() / "seqinfo.ini")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw InputError("no sequences found under " + data_dir.string());
  return out;
}

HistogramFeatures::ImageLoader image_loader(const fs::path& img_dir) {
  return [img_dir](int frame) {
    char name[32];
    std::snprintf(name, sizeof name, "%06d", frame);
    cv::Mat bgr;
    for (const char* ext : {".jpg", ".png"}) {
      const fs::path p = img_dir / (std::string(name) + ext);
      if (fs::exists(p)) {
        bgr = cv::imread(p.string(), cv::IMREAD_COLOR);
        break;
      }
    }
    if (bgr.empty()) {
      throw InputError("no readable image for frame " + std::to_string(frame) + " in " +
                       img_dir.string());
    }
    Image img;
    img.width = bgr.cols;
    img.height = bgr.rows;
    img.rgb.resize(static_cast<std::size_t>(img.width) * img.height * 3);
    for (int y = 0; y < bgr.rows; ++y) {
      const auto* row = bgr.ptr<cv::Vec3b>(y);
      for (int x = 0; x < bgr.cols; ++x) {
        std::uint8_t* px = img.rgb.data() + (static_cast<std::size_t>(y) * img.width + x) * 3;
        px[0] = row[x][2];
        px[1] = row[x][1];
        px[2] = row[x][0];
      }
    }
    return img;
  };
}

std::unique_ptr<FeatureProvider> feature_provider(const SequenceBundle& bundle,
                                                  bool appearance_needed) {
  if (bundle.features) return std::make_unique<PrecomputedFeatures>(*bundle.features);
  const fs::path img_dir = bundle.directory / "img1";
  if (fs::is_directory(img_dir)) {
    return std::make_unique<HistogramFeatures>(image_loader(img_dir));
  }
  if (appearance_needed) {
    throw InputError(bundle.directory.string() +
                     ": appearance features required but neither features.bin nor img1/ exists");
  }
  return nullptr;
}

std::vector<FrameInput> prepare_frames(const SequenceBundle& bundle,
                                       const FeatureProvider* features, bool with_ground_truth) {
  const double w = bundle.info.width;
  const double h = bundle.info.height;
  const int frames = bundle.frame_count();
  std::vector<FrameInput> out(static_cast<std::size_t>(frames));
  for (int f = 1; f <= frames; ++f) out[f - 1].frame = f;

  for (const MotRow& r : bundle.detections) {
    out[r.frame - 1].detections.push_back({normalize(r.box, w, h), r.confidence, r.index});
  }
  if (with_ground_truth) {
    for (const MotRow& r : bundle.ground_truth) {
      if (r.confidence == 0.0) continue;
      out[r.frame - 1].ground_truth.push_back({r.id, normalize(r.box, w, h)});
    }
  }
  for (FrameInput& in : out) {
    const auto it = bundle.warps.find(in.frame);
    if (it != bundle.warps.end()) in.warp = normalize_warp(it->second, w, h);

    if (features == nullptr) {
      in.features = FeatureMatrix(static_cast<Eigen::Index>(in.detections.size()), 0);
      continue;
    }
    std::vector<DetectionRef> refs;
    refs.reserve(in.detections.size());
    for (const Detection& d : in.detections) refs.push_back({denormalize(d.box, w, h), d.index});
    in.features = in.detections.empty()
                      ? FeatureMatrix(0, static_cast<Eigen::Index>(features->width()))
                      : features->features_for_frame(in.frame, refs);
  }
  return out;
}

std::vector<MotRow> to_mot_rows(std::span<const TrackOutput> tracks, const SequenceInfo& info) {
  std::vector<MotRow> rows;
  rows.reserve(tracks.size());
  for (const TrackOutput& t : tracks) {
    MotRow r;
    r.frame = t.frame;
    r.id = t.id;
    r.box = denormalize(t.box, info.width, info.height);
    r.confidence = t.observed ? t.confidence : -1.0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace io
TADN_NAMESPACE_END

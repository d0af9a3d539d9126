#pragma once

#include "tadn/precision.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tadn/geometry.hpp"

TADN_NAMESPACE_BEGIN

using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A detection as seen by appearance providers: its pixel box and its
// ordinal within the frame in the source file (before confidence filtering).
struct DetectionRef {
  BBox box;
  int index = 0;
};

// Appearance descriptors keyed by (frame, detection index).
class FeatureTable {
 public:
  explicit FeatureTable(std::size_t width = 0) : width_(width) {}

  std::size_t width() const { return width_; }
  std::size_t size() const { return records_.size(); }
  void insert(int frame, int index, std::vector<float> values);
  const std::vector<float>* find(int frame, int index) const;
  const std::map<std::pair<int, int>, std::vector<float>>& records() const {
    return records_;
  }

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;

 private:
  std::size_t width_;
  std::map<std::pair<int, int>, std::vector<float>> records_;
};

// 8-bit RGB image, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
};

inline constexpr int kHistogramBins = 8;
inline constexpr int kHistogramWidth = 3 * kHistogramBins;

// Per-channel 8-bin color histogram of the (clipped) box patch; the whole
// 24-vector sums to 1. Empty patches give all zeros.
std::vector<double> color_histogram(const Image& image, const BBox& box);

class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;
  virtual std::size_t width() const = 0;
  // Row i describes detections[i].
  virtual FeatureMatrix features_for_frame(int frame,
                                           std::span<const DetectionRef> detections) const = 0;
};

class PrecomputedFeatures final : public FeatureProvider {
 public:
  explicit PrecomputedFeatures(FeatureTable table) : table_(std::move(table)) {}

  std::size_t width() const override { return table_.width(); }
  FeatureMatrix features_for_frame(int frame,
                                   std::span<const DetectionRef> detections) const override;

 private:
  FeatureTable table_;
};

class HistogramFeatures final : public FeatureProvider {
 public:
  // Returns the frame image or throws when it is unavailable.
  using ImageLoader = std::function<Image(int frame)>;

  explicit HistogramFeatures(ImageLoader loader) : loader_(std::move(loader)) {}

  std::size_t width() const override { return kHistogramWidth; }
  FeatureMatrix features_for_frame(int frame,
                                   std::span<const DetectionRef> detections) const override;

 private:
  ImageLoader loader_;
};

// Appearance memory of a target: the descriptor of its last assignment.
class AppearanceState {
 public:
  explicit AppearanceState(Eigen::VectorXd feature) : feature_(std::move(feature)) {}

  const Eigen::VectorXd& step() const { return feature_; }
  void update(const Eigen::VectorXd& feature);

 private:
  Eigen::VectorXd feature_;
};

TADN_NAMESPACE_END

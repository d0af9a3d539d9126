#include "tadn/appearance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN

void FeatureTable::insert(int frame, int index, std::vector<float> values) {
  if (values.size() != width_) {
    throw InputError("feature record (frame " + std::to_string(frame) + ", index " +
                     std::to_string(index) + ") has width " +
                     std::to_string(values.size()) + ", table width is " +
                     std::to_string(width_));
  }
  if (!records_.emplace(std::make_pair(frame, index), std::move(values)).second) {
    throw InputError("duplicate feature record (frame " + std::to_string(frame) +
                     ", index " + std::to_string(index) + ")");
  }
}

const std::vector<float>* FeatureTable::find(int frame, int index) const {
  auto it = records_.find({frame, index});
  return it == records_.end() ? nullptr : &it->second;
}

std::vector<double> color_histogram(const Image& image, const BBox& box) {
  std::vector<double> hist(kHistogramWidth, 0.0);
  const int x0 = std::clamp(static_cast<int>(std::floor(box.x_min)), 0, image.width);
  const int y0 = std::clamp(static_cast<int>(std::floor(box.y_min)), 0, image.height);
  const int x1 = std::clamp(static_cast<int>(std::ceil(box.x_max)), 0, image.width);
  const int y1 = std::clamp(static_cast<int>(std::ceil(box.y_max)), 0, image.height);
  double total = 0.0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const std::uint8_t* p = image.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        hist[static_cast<std::size_t>(c * kHistogramBins + p[c] / (256 / kHistogramBins))] += 1.0;
      }
      total += 3.0;
    }
  }
  if (total > 0.0) {
    for (double& h : hist) h /= total;
  }
  return hist;
}

FeatureMatrix PrecomputedFeatures::features_for_frame(
    int frame, std::span<const DetectionRef> detections) const {
  FeatureMatrix out(static_cast<Eigen::Index>(detections.size()),
                    static_cast<Eigen::Index>(table_.width()));
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const std::vector<float>* rec = table_.find(frame, detections[i].index);
    if (rec == nullptr) {
      throw InputError("missing feature record for frame " + std::to_string(frame) +
                       ", detection index " + std::to_string(detections[i].index));
    }
    for (std::size_t j = 0; j < rec->size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*rec)[j];
    }
  }
  return out;
}

FeatureMatrix HistogramFeatures::features_for_frame(
    int frame, std::span<const DetectionRef> detections) const {
  FeatureMatrix out(static_cast<Eigen::Index>(detections.size()), kHistogramWidth);
  if (detections.empty()) return out;
  const Image image = loader_(frame);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const std::vector<double> h = color_histogram(image, detections[i].box);
    for (int j = 0; j < kHistogramWidth; ++j) {
      out(static_cast<Eigen::Index>(i), j) = h[static_cast<std::size_t>(j)];
    }
  }
  return out;
}

void AppearanceState::update(const Eigen::VectorXd& feature) {
  if (feature.size() != feature_.size()) {
    throw InputError("appearance update width " + std::to_string(feature.size()) +
                     " does not match stored width " + std::to_string(feature_.size()));
  }
  feature_ = feature;
}

TADN_NAMESPACE_END

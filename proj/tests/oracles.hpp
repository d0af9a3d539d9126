#pragma once

// Slow, obviously-correct reference implementations used to check the
// library. Nothing here calls into the code under test except for data types.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "tadn/assignment.hpp"
#include "tadn/frame.hpp"
#include "tadn/geometry.hpp"
#include "tadn/training.hpp"

// Internal linkage: the acceptance binary links float and double builds.
namespace oracle {
namespace {

using tadn::BBox;

inline double iou(const BBox& a, const BBox& b) {
  const double iw = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double ih = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

inline double ulbr1(const BBox& a, const BBox& b) {
  const double num = std::abs(a.x_min - b.x_min) + std::abs(a.y_min - b.y_min) +
                     std::abs(a.x_max - b.x_max) + std::abs(a.y_max - b.y_max);
  const double den = (std::abs(a.x_min - b.x_max) + std::abs(a.y_min - b.y_max)) -
                     (std::abs(a.x_max - b.x_min) + std::abs(a.y_max - b.y_min));
  if (den == 0.0) return num == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  return -std::abs(num / den);
}

struct BestMatching {
  double total = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

// Enumerates every one-to-one matching of min(rows, cols) pairs and keeps
// the one with the largest total.
inline BestMatching brute_force_matching(const tadn::SimilarityMatrix& s) {
  const auto rows = static_cast<std::size_t>(s.rows());
  const auto cols = static_cast<std::size_t>(s.cols());
  BestMatching best;
  if (rows == 0 || cols == 0) {
    best.total = 0.0;
    return best;
  }
  const bool transpose = rows > cols;
  const std::size_t small = transpose ? cols : rows;
  const std::size_t large = transpose ? rows : cols;
  std::vector<std::size_t> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    double total = 0.0;
    for (std::size_t k = 0; k < small; ++k) {
      total += transpose ? s(static_cast<Eigen::Index>(perm[k]), static_cast<Eigen::Index>(k))
                         : s(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(perm[k]));
    }
    if (total > best.total) {
      best.total = total;
      best.pairs.clear();
      for (std::size_t k = 0; k < small; ++k) {
        best.pairs.emplace_back(transpose ? perm[k] : k, transpose ? k : perm[k]);
      }
      std::sort(best.pairs.begin(), best.pairs.end());
    }
    // Only the first `small` positions matter; skip duplicate tails.
    std::reverse(perm.begin() + static_cast<std::ptrdiff_t>(small), perm.end());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double metric(tadn::AssignmentMetric m, const BBox& a, const BBox& b) {
  return m == tadn::AssignmentMetric::Iou ? oracle::iou(a, b) : oracle::ulbr1(a, b);
}

inline tadn::SimilarityMatrix similarity(tadn::AssignmentMetric m, const std::vector<BBox>& rows,
                                         const std::vector<BBox>& cols) {
  tadn::SimilarityMatrix s(static_cast<Eigen::Index>(rows.size()),
                           static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = metric(m, rows[i], cols[j]);
    }
  }
  return s;
}

// Label per detection: target column, or `targets.size()` for null.
inline std::vector<std::size_t> brute_force_labels(const std::vector<BBox>& targets,
                                                   const std::vector<tadn::GtObject>& gt,
                                                   const std::vector<BBox>& detections,
                                                   tadn::AssignmentMetric m, double t_assign,
                                                   double t_det2gt) {
  std::vector<std::size_t> labels(detections.size(), targets.size());
  if (targets.empty() || detections.empty()) return labels;
  std::vector<BBox> gt_boxes;
  for (const auto& g : gt) gt_boxes.push_back(g.box);
  std::vector<BBox> reference = targets;
  const auto tg = similarity(m, targets, gt_boxes);
  for (const auto& [t, g] : brute_force_matching(tg).pairs) {
    if (tg(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(g)) >= t_assign) {
      reference[t] = gt_boxes[g];
    }
  }
  const auto dr = similarity(m, detections, reference);
  for (const auto& [d, t] : brute_force_matching(dr).pairs) {
    if (dr(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t)) >= t_det2gt) {
      labels[d] = t;
    }
  }
  return labels;
}

// -(1/(N*(M+1))) * sum_i log softmax(row_i)[label_i], in plain loops.
template <class M>
double scalar_loss(const M& logits, const std::vector<std::size_t>& labels) {
  const auto n = static_cast<std::size_t>(logits.rows());
  const auto c = static_cast<std::size_t>(logits.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      mx = std::max(mx, static_cast<double>(logits(static_cast<Eigen::Index>(i),
                                                   static_cast<Eigen::Index>(j))));
    }
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      z += std::exp(static_cast<double>(
                        logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) -
                    mx);
    }
    const double x = static_cast<double>(
        logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i])));
    total -= x - mx - std::log(z);
  }
  return total / static_cast<double>(n * c);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline BBox random_box(std::mt19937_64& rng, double extent = 1.0) {
  std::uniform_real_distribution<double> u(0.0, extent);
  const double x0 = u(rng), x1 = u(rng), y0 = u(rng), y1 = u(rng);
  return {std::min(x0, x1), std::min(y0, y1), std::max(x0, x1), std::max(y0, y1)};
}

}  // namespace
}  // namespace oracle

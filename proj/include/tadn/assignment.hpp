#pragma once

#include "tadn/precision.hpp"

#include <cstddef>
#include <vector>

#include <Eigen/Core>

TADN_NAMESPACE_BEGIN

// Pairwise similarities, higher is better. Entries are finite or -infinity
// (a forbidden pair).
using SimilarityMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Match {
  std::size_t row = 0;
  std::size_t col = 0;
  double similarity = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

// Maximum-total-similarity one-to-one matching of min(rows, cols) pairs.
// Pairs are returned sorted by row. Forbidden pairs are used only when no
// complete matching avoids them.
std::vector<Match> max_similarity_matching(const SimilarityMatrix& sim);

// max_similarity_matching followed by dropping pairs below `threshold`.
std::vector<Match> solve_lap(const SimilarityMatrix& sim, double threshold);

TADN_NAMESPACE_END

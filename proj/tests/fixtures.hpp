#pragma once

// Random model inputs shared by the model tests and the acceptance checks.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "tadn/model.hpp"

// Internal linkage: the acceptance binary links float and double builds.
namespace fixture {
namespace {

inline tadn::SetFeatures random_set(Eigen::Index n, Eigen::Index app, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  tadn::SetFeatures f{tadn::nn::Matrix(n, 4), tadn::nn::Matrix(n, app)};
  for (Eigen::Index i = 0; i < n; ++i) {
    const tadn::BBox b = oracle::random_box(rng);
    f.boxes.row(i) << static_cast<tadn::Real>(b.x_min), static_cast<tadn::Real>(b.y_min),
        static_cast<tadn::Real>(b.x_max), static_cast<tadn::Real>(b.y_max);
    for (Eigen::Index k = 0; k < app; ++k) f.appearance(i, k) = static_cast<tadn::Real>(u(rng));
  }
  return f;
}

// Row i of the result is row p[i] of the input.
inline tadn::SetFeatures permute(const tadn::SetFeatures& f, const std::vector<Eigen::Index>& p) {
  tadn::SetFeatures out{tadn::nn::Matrix(f.boxes.rows(), f.boxes.cols()),
                        tadn::nn::Matrix(f.appearance.rows(), f.appearance.cols())};
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.boxes.row(static_cast<Eigen::Index>(i)) = f.boxes.row(p[i]);
    out.appearance.row(static_cast<Eigen::Index>(i)) = f.appearance.row(p[i]);
  }
  return out;
}

inline std::vector<Eigen::Index> random_perm(Eigen::Index n, std::mt19937_64& rng) {
  std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace
}  // namespace fixture

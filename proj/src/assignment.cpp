#include "tadn/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tadn/error.hpp"

TADN_NAMESPACE_BEGIN
namespace {

using CostMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Shortest augmenting path Hungarian method with row/column potentials,
// rows <= cols. Returns the column assigned to each row.
std::vector<std::size_t> hungarian(const CostMatrix& cost) {
  const std::size_t n = static_cast<std::size_t>(cost.rows());
  const std::size_t m = static_cast<std::size_t>(cost.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based; index 0 is the virtual source column.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) assignment[p[j] - 1] = j - 1;
  }
  return assignment;
}

}  // namespace

std::vector<Match> max_similarity_matching(const SimilarityMatrix& sim) {
  if (sim.rows() == 0 || sim.cols() == 0) return {};

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < sim.rows(); ++r) {
    for (Eigen::Index c = 0; c < sim.cols(); ++c) {
      const double s = sim(r, c);
      TADN_CHECK(!std::isnan(s) && s != std::numeric_limits<double>::infinity(),
                 "similarities must be finite or -inf");
      if (std::isfinite(s)) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 0.0;
  }

  // Forbidden pairs cost more than any matching made of finite pairs.
  const double n = static_cast<double>(std::min(sim.rows(), sim.cols()));
  const double forbidden = -lo + (n + 1.0) * (hi - lo + 1.0);

  const bool transpose = sim.rows() > sim.cols();
  CostMatrix cost = transpose ? CostMatrix(-sim.transpose()) : CostMatrix(-sim);
  for (Eigen::Index r = 0; r < cost.rows(); ++r) {
    for (Eigen::Index c = 0; c < cost.cols(); ++c) {
      if (!std::isfinite(cost(r, c))) cost(r, c) = forbidden;
    }
  }

  const std::vector<std::size_t> cols = hungarian(cost);
  std::vector<Match> out;
  out.reserve(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const std::size_t row = transpose ? cols[i] : i;
    const std::size_t col = transpose ? i : cols[i];
    out.push_back({row, col, sim(static_cast<Eigen::Index>(row),
                                 static_cast<Eigen::Index>(col))});
  }
  std::sort(out.begin(), out.end(),
            [](const Match& a, const Match& b) { return a.row < b.row; });
  return out;
}

std::vector<Match> solve_lap(const SimilarityMatrix& sim, double threshold) {
  TADN_CHECK(std::isfinite(threshold), "threshold must be finite");
  std::vector<Match> matches = max_similarity_matching(sim);
  std::erase_if(matches,
                [threshold](const Match& m) { return m.similarity < threshold; });
  return matches;
}

TADN_NAMESPACE_END

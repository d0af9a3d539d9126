#pragma once

// Central finite differences over every parameter of a store, compared with
// the analytic gradient that backward() accumulates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "tadn/nn/layers.hpp"
#include "tadn/nn/tensor.hpp"

// Internal linkage: the acceptance binary links float and double builds.
namespace gradcheck {
namespace {

struct TensorError {
  std::string name;
  // ||analytic - numeric|| / max(||analytic||, ||numeric||, floor), where the
  // floor is `floor_ratio` times the largest gradient norm in the store. The
  // floor keeps structurally zero gradients (key biases under softmax) from
  // turning rounding noise into a relative error.
  double relative = 0.0;
  double analytic_norm = 0.0;
};

// `loss` must rebuild the graph from the current parameter values each call.
inline std::vector<TensorError> check(tadn::nn::ParameterStore& store,
                                      const std::function<tadn::nn::Tensor()>& loss,
                                      double step = 1e-5, double floor_ratio = 1e-3) {
  using tadn::nn::Matrix;
  store.zero_grad();
  loss().backward();
  double largest = 0.0;
  for (const auto& p : store.entries()) {
    largest = std::max(largest, p.tensor.grad().template cast<double>().norm());
  }
  const double floor = std::max(floor_ratio * largest, 1e-300);
  std::vector<TensorError> out;
  for (auto& p : store.entries()) {
    const Matrix analytic = p.tensor.grad();
    Matrix numeric(analytic.rows(), analytic.cols());
    Matrix& value = p.tensor.mutable_value();
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      const auto saved = value.data()[i];
      double plus = 0.0;
      double minus = 0.0;
      {
        tadn::nn::NoGradGuard guard;
        value.data()[i] = static_cast<tadn::Real>(saved + step);
        plus = loss().item();
        value.data()[i] = static_cast<tadn::Real>(saved - step);
        minus = loss().item();
      }
      value.data()[i] = saved;
      numeric.data()[i] = static_cast<tadn::Real>((plus - minus) / (2.0 * step));
    }
    const double a = analytic.template cast<double>().norm();
    const double n = numeric.template cast<double>().norm();
    const double diff = (analytic - numeric).template cast<double>().norm();
    const double scale = std::max({a, n, floor});
    out.push_back({p.name, diff / scale, a});
  }
  store.zero_grad();
  return out;
}

inline double worst(const std::vector<TensorError>& errs) {
  double w = 0.0;
  for (const auto& e : errs) w = std::max(w, e.relative);
  return w;
}

}  // namespace
}  // namespace gradcheck

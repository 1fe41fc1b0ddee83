#include "rfgap/baseline.hpp"

#include "rfgap/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace rfgap {

DistanceMatrix euclidean_distances(const Dataset& d) {
  return DistanceMatrix{pairwise_euclidean(d.features)};
}

double default_beta(const DistanceMatrix& d) {
  const Index n = d.n();
  if (n < 2) {
    throw std::invalid_argument("default_beta: need at least 2 points");
  }
  double sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      sum += d.values(i, j);
    }
  }
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

DistanceMatrix class_conditional_distance(const DistanceMatrix& d, const std::vector<int>& classes,
                                          double alpha, double beta) {
  const Index n = d.n();
  if (static_cast<Index>(classes.size()) != n) {
    throw std::invalid_argument("class_conditional_distance: label count does not match");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("class_conditional_distance: beta must be positive");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("class_conditional_distance: alpha must be >= 0");
  }
  DistanceMatrix out;
  out.values = Matrix::Zero(n, n);
  bool clamped = false;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double sq = d.values(i, j) * d.values(i, j) / beta;
      double v = 0.0;
      if (classes[static_cast<std::size_t>(i)] == classes[static_cast<std::size_t>(j)]) {
        v = std::sqrt(-std::expm1(-sq));
      } else {
        v = std::exp(0.5 * sq) - alpha;
        if (v < 0.0) {
          v = 0.0;
          clamped = true;
        }
      }
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  if (clamped) {
    warn("class_conditional_distance: negative dissimilarities clamped to 0 (alpha > 1)");
  }
  return out;
}

DistanceMatrix class_conditional_distance(const DistanceMatrix& d, const Dataset& labels,
                                          const ClassConditionalParams& params) {
  if (!labels.is_classification()) {
    throw std::invalid_argument(
        "class_conditional_distance: undefined for continuous labels (classification only)");
  }
  const double beta = params.beta ? *params.beta : default_beta(d);
  return class_conditional_distance(d, labels.classes, params.alpha, beta);
}

}  // namespace rfgap

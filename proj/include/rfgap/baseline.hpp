#pragma once

#include "rfgap/data.hpp"
#include "rfgap/proximity.hpp"

#include <optional>
#include <vector>

namespace rfgap {

DistanceMatrix euclidean_distances(const Dataset& d);

// Class-conditional dissimilarity parameters. alpha reduces the separation of
// nearby points with different labels; beta scales distances.
struct ClassConditionalParams {
  double alpha = 1.0;
  std::optional<double> beta;  // unset: mean pairwise distance
};

// Same label:      sqrt(1 - exp(-D^2 / beta))
// Different label: sqrt(exp(D^2 / beta)) - alpha
// Diagonal forced to 0; negative values (alpha > 1) are clamped to 0 with a
// warning. Throws for regression labels.
DistanceMatrix class_conditional_distance(const DistanceMatrix& d, const Dataset& labels,
                                          const ClassConditionalParams& params);
DistanceMatrix class_conditional_distance(const DistanceMatrix& d, const std::vector<int>& classes,
                                          double alpha, double beta);

// Mean of D(i, j) over i < j.
double default_beta(const DistanceMatrix& d);

}  // namespace rfgap

#pragma once

#include "rfgap/common.hpp"
#include "rfgap/forest.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rfgap {

enum class ProximityKind { original, oob, rfgap };

std::string_view to_string(ProximityKind kind);
ProximityKind parse_proximity_kind(std::string_view text);

// Forest-derived pairwise similarity. original and oob kinds are symmetric
// with unit diagonal. rfgap rows are nonnegative, sum to one over j != i for
// covered observations, have a zero diagonal and need not be symmetric.
struct ProximityMatrix {
  Matrix values;
  ProximityKind kind = ProximityKind::original;
  // oob: pairs that were never out-of-bag together (value 0 by convention).
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> undefined;
  // rfgap: observations that were never out-of-bag (row of zeros).
  std::vector<bool> uncovered;

  Index n() const { return values.rows(); }
};

enum class KernelSource { original, oob, rfgap, gaussian };

std::string_view to_string(KernelSource source);

// Symmetric similarity with unit diagonal and off-diagonal entries in [0, 1].
// Kernels built from forest proximities also have maximum off-diagonal
// exactly 1 whenever any off-diagonal entry is positive.
struct Kernel {
  Matrix values;
  KernelSource source = KernelSource::rfgap;
  std::optional<std::uint64_t> forest_seed;

  Index n() const { return values.rows(); }
};

struct DistanceMatrix {
  Matrix values;

  Index n() const { return values.rows(); }
};

ProximityMatrix proximity_original(const Forest& f);
ProximityMatrix proximity_oob(const Forest& f);
ProximityMatrix proximity_rfgap(const Forest& f);
ProximityMatrix compute_proximity(const Forest& f, ProximityKind kind);

// Max-normalizes the off-diagonal entries, replaces the matrix by the average
// of itself and its transpose, rescales so the largest off-diagonal entry is
// exactly 1 again, then sets the diagonal to 1. An all-zero off-diagonal
// yields the identity (with a warning).
Kernel to_kernel(const ProximityMatrix& p, std::optional<std::uint64_t> forest_seed = std::nullopt);

enum class DistanceTransform { sqrt_one_minus, one_minus };

// d = sqrt(1 - k) by default, or 1 - k.
DistanceMatrix kernel_to_distance(const Kernel& k,
                                  DistanceTransform transform = DistanceTransform::sqrt_one_minus);

// Returns a description of the first violated invariant, or nullopt.
// `require_unit_max` enforces the forest-kernel maximum rule.
std::optional<std::string> check_kernel(const Kernel& k, bool require_unit_max);
std::optional<std::string> check_distance(const DistanceMatrix& d);

struct KernelPrediction {
  Task task = Task::classification;
  Matrix votes;                    // classification: n x C weighted class mass
  std::vector<double> prediction;  // argmax id or weighted sum
  std::vector<bool> covered;
};

// Weighted sum over j != i of p(i, j) * y_j. Only meaningful for rfgap rows,
// whose weighted votes reproduce the forest's OOB predictions.
KernelPrediction kernel_prediction(const ProximityMatrix& p, const std::vector<double>& labels,
                                   Task task, int n_classes);

struct IdentityCheck {
  bool passed = true;
  Index checked = 0;
  Index mismatches = 0;
  double max_error = 0.0;  // vote-fraction or relative regression error
};

// Compares kernel predictions against the forest's OOB report on every
// covered observation: argmax equality (classification) plus vote fractions
// within `tol`, or relative error within `tol` (regression).
IdentityCheck check_oob_identity(const ProximityMatrix& rfgap, const Forest& f,
                                 const OobReport& oob, double tol = 1e-12);

// Dense CSV: n rows of n comma-separated values. Triplet CSV: header
// "row,col,value" followed by one line per nonzero entry, zero-based indices.
enum class MatrixFormat { dense, triplet };
MatrixFormat parse_matrix_format(std::string_view text);
void write_matrix(const Matrix& m, MatrixFormat format, std::ostream& out);

}  // namespace rfgap

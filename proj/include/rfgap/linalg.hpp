#pragma once

#include "rfgap/common.hpp"

namespace rfgap {

// Eigenpairs of a symmetric matrix, sorted by eigenvalue descending.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;  // column i pairs with values(i)
};

// Dense symmetric eigendecomposition (tridiagonalization followed by implicit
// QL iterations, capped at 30 sweeps per eigenvalue). Throws std::runtime_error
// on non-convergence. Only the lower triangle of `a` is read.
SymmetricEigen symmetric_eigen(const Matrix& a);

// Flips each column so that its largest-magnitude entry is positive (first
// such entry on exact ties).
void fix_column_signs(Matrix& vectors);

// Returns indices 0..n-1 stably sorted by descending key.
std::vector<Index> order_descending(const Vector& keys);

// J A J with J = I - 11'/n.
Matrix double_center(const Matrix& a);

// Pairwise Euclidean distances between the rows of `points`.
Matrix pairwise_euclidean(const Matrix& points);

}  // namespace rfgap

#include "rfgap/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rfgap {

SymmetricEigen symmetric_eigen(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("symmetric_eigen: matrix must be square");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric_eigen: eigensolver did not converge");
  }
  const Index n = a.rows();
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  // Eigen returns ascending order.
  for (Index i = 0; i < n; ++i) {
    out.values(i) = solver.eigenvalues()(n - 1 - i);
    out.vectors.col(i) = solver.eigenvectors().col(n - 1 - i);
  }
  return out;
}

void fix_column_signs(Matrix& vectors) {
  for (Index c = 0; c < vectors.cols(); ++c) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index r = 0; r < vectors.rows(); ++r) {
      const double v = std::abs(vectors(r, c));
      if (v > best_abs) {
        best_abs = v;
        best = r;
      }
    }
    if (vectors.rows() > 0 && vectors(best, c) < 0.0) {
      vectors.col(c) *= -1.0;
    }
  }
}

std::vector<Index> order_descending(const Vector& keys) {
  std::vector<Index> order(static_cast<std::size_t>(keys.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return keys(x) > keys(y); });
  return order;
}

Matrix double_center(const Matrix& a) {
  const Vector row_means = a.rowwise().mean();
  const Vector col_means = a.colwise().mean().transpose();
  const double grand = a.mean();
  Matrix out = a;
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      out(i, j) = a(i, j) - row_means(i) - col_means(j) + grand;
    }
  }
  return out;
}

Matrix pairwise_euclidean(const Matrix& points) {
  const Index n = points.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

}  // namespace rfgap

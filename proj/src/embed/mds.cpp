#include "rfgap/embed.hpp"

#include <cmath>
#include <stdexcept>

namespace rfgap {

double raw_stress(const DistanceMatrix& d, const Matrix& coords) {
  const Index n = d.n();
  double stress = 0.0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double r = (coords.row(i) - coords.row(j)).norm() - d.values(i, j);
      stress += r * r;
    }
  }
  return stress;
}

Embedding stress_majorization(const DistanceMatrix& d, int dims, const Embedding& init,
                              const SmacofOptions& options) {
  const Index n = d.n();
  if (init.n() != n || init.d() != dims) {
    throw std::invalid_argument("stress_majorization: initial configuration must be n x dims");
  }
  if (!d.values.allFinite() || !init.coords.allFinite()) {
    throw std::invalid_argument("stress_majorization: non-finite input");
  }
  Matrix x = init.coords;
  Embedding e;
  e.method = "metric_mds";
  e.source = "distance";
  e.config["max_iter"] = std::to_string(options.max_iter);
  e.config["tol"] = std::to_string(options.tol);
  double stress = raw_stress(d, x);
  e.trace.push_back(stress);
  Matrix b(n, n);
  for (int iter = 0; iter < options.max_iter && stress > 0.0; ++iter) {
    // Guttman transform: X <- B(X) X / n.
    b.setZero();
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double dist = (x.row(i) - x.row(j)).norm();
        const double v = dist > 0.0 ? -d.values(i, j) / dist : 0.0;
        b(i, j) = v;
        b(j, i) = v;
      }
    }
    for (Index i = 0; i < n; ++i) {
      b(i, i) = -b.row(i).sum();
    }
    x = (b * x) / static_cast<double>(n);
    const double next = raw_stress(d, x);
    e.trace.push_back(next);
    const double change = (stress - next) / stress;
    stress = next;
    if (change < options.tol) {
      break;
    }
  }
  e.coords = std::move(x);
  return e;
}

}  // namespace rfgap

#include "rfgap/embed.hpp"

#include "rfgap/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfgap {
namespace {

// Symmetric conjugate A = D^{-1/2} K D^{-1/2} of the diffusion operator along
// with sqrt(degree).
struct Conjugate {
  Matrix a;
  Vector sqrt_degree;
};

Conjugate symmetric_conjugate(const Matrix& k) {
  const Index n = k.rows();
  const Vector degree = k.rowwise().sum();
  for (Index i = 0; i < n; ++i) {
    if (!(degree(i) > 0.0)) {
      throw std::invalid_argument("kernel row " + std::to_string(i) +
                                  " has non-positive sum (isolated point)");
    }
  }
  Conjugate c;
  c.sqrt_degree = degree.cwiseSqrt();
  c.a.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      c.a(i, j) = k(i, j) / (c.sqrt_degree(i) * c.sqrt_degree(j));
    }
  }
  return c;
}

// Eigenpairs of A with the stationary direction sqrt(degree) removed.
// Returns the pairs ordered by `key` descending, stationary pair dropped.
struct Deflated {
  Vector values;
  Matrix vectors;
};

template <typename Key>
Deflated deflated_eigenpairs(const Conjugate& c, Key key) {
  const Vector u = c.sqrt_degree / c.sqrt_degree.norm();
  const Matrix deflated = c.a - u * u.transpose();
  const SymmetricEigen eig = symmetric_eigen(deflated);
  Vector keys(eig.values.size());
  for (Index i = 0; i < keys.size(); ++i) {
    keys(i) = key(eig.values(i));
  }
  const auto order = order_descending(keys);
  Deflated out;
  out.values.resize(static_cast<Index>(order.size()) - 1);
  out.vectors.resize(c.a.rows(), static_cast<Index>(order.size()) - 1);
  Index col = 0;
  bool dropped = false;
  for (Index idx : order) {
    if (!dropped && std::abs(eig.vectors.col(idx).dot(u)) > 0.5) {
      dropped = true;
      continue;
    }
    if (col == out.values.size()) {
      break;
    }
    out.values(col) = eig.values(idx);
    out.vectors.col(col) = eig.vectors.col(idx);
    ++col;
  }
  return out;
}

int count_kernel_components(const Matrix& k) {
  const Index n = k.rows();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int components = 0;
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (label[static_cast<std::size_t>(s)] >= 0) continue;
    label[static_cast<std::size_t>(s)] = components;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      for (Index w = 0; w < n; ++w) {
        if (w != v && k(v, w) > 0.0 && label[static_cast<std::size_t>(w)] < 0) {
          label[static_cast<std::size_t>(w)] = components;
          stack.push_back(w);
        }
      }
    }
    ++components;
  }
  return components;
}

void check_dims(Index n, int dims, const char* who) {
  if (dims < 1 || dims >= n) {
    throw std::invalid_argument(std::string(who) + ": target dimension must be in [1, n-1]");
  }
}

// Keeps the leading eigenpairs with positive eigenvalue, coords = v sqrt(l).
Embedding positive_spectrum_embedding(const Matrix& b, int dims, const char* who) {
  SymmetricEigen eig = symmetric_eigen(b);
  const double scale = eig.values.cwiseAbs().maxCoeff();
  const double floor = 1e-10 * std::max(scale, 1e-300);
  int positive = 0;
  while (positive < dims && eig.values(positive) > floor) {
    ++positive;
  }
  double neg = 0.0;
  double total = 0.0;
  for (Index i = 0; i < eig.values.size(); ++i) {
    total += std::abs(eig.values(i));
    if (eig.values(i) < 0.0) {
      neg += -eig.values(i);
    }
  }
  Embedding e;
  e.spectrum = eig.values;
  e.negative_mass = total > 0.0 ? neg / total : 0.0;
  if (positive < dims) {
    std::string note = std::string(who) + ": only " + std::to_string(positive) +
                       " positive eigenvalues; output dimension reduced from " +
                       std::to_string(dims);
    warn(note);
    e.notes.push_back(std::move(note));
  }
  if (positive == 0) {
    throw std::runtime_error(std::string(who) + ": no positive eigenvalues");
  }
  Matrix vectors = eig.vectors.leftCols(positive);
  fix_column_signs(vectors);
  e.coords = vectors * eig.values.head(positive).cwiseSqrt().asDiagonal();
  if (e.negative_mass > 0.0) {
    e.notes.push_back("negative eigenvalue mass fraction " + std::to_string(e.negative_mass));
  }
  return e;
}

}  // namespace

StochasticMatrix diffusion_operator(const Matrix& similarities) {
  const Index n = similarities.rows();
  if (similarities.cols() != n) {
    throw std::invalid_argument("diffusion_operator: matrix must be square");
  }
  StochasticMatrix p;
  p.values.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    const double sum = similarities.row(i).sum();
    if (!(sum > 0.0) || !std::isfinite(sum)) {
      throw std::invalid_argument("diffusion_operator: row " + std::to_string(i) +
                                  " has no positive similarity mass");
    }
    p.values.row(i) = similarities.row(i) / sum;
  }
  return p;
}

StochasticMatrix diffusion_operator(const Kernel& k) { return diffusion_operator(k.values); }

StochasticMatrix power_operator(const StochasticMatrix& p, int t) {
  if (t < 1) {
    throw std::invalid_argument("power_operator: t must be >= 1");
  }
  Matrix result;
  bool have_result = false;
  Matrix base = p.values;
  for (int e = t;;) {
    if (e & 1) {
      result = have_result ? Matrix(result * base) : base;
      have_result = true;
    }
    e >>= 1;
    if (e == 0) {
      break;
    }
    base = base * base;
  }
  return StochasticMatrix{std::move(result), p.steps * t};
}

Embedding diffusion_map(const Kernel& k, int t, int d) {
  const Index n = k.n();
  check_dims(n, d, "diffusion_map");
  if (t < 0) {
    throw std::invalid_argument("diffusion_map: t must be >= 0");
  }
  const Conjugate c = symmetric_conjugate(k.values);
  const Deflated pairs = deflated_eigenpairs(c, [](double v) { return std::abs(v); });
  Matrix psi = pairs.vectors.leftCols(d);
  for (Index col = 0; col < d; ++col) {
    psi.col(col).array() /= c.sqrt_degree.array();
  }
  fix_column_signs(psi);
  Embedding e;
  e.method = "diffusion_map";
  e.source = std::string(to_string(k.source));
  e.config["t"] = std::to_string(t);
  e.spectrum = pairs.values.head(d);
  e.coords.resize(n, d);
  for (Index col = 0; col < d; ++col) {
    e.coords.col(col) = std::pow(pairs.values(col), t) * psi.col(col);
  }
  return e;
}

std::vector<double> von_neumann_entropy(const Vector& eigenvalues, int max_t) {
  std::vector<double> out;
  const Vector magnitude = eigenvalues.cwiseAbs();
  for (int t = 1; t <= max_t; ++t) {
    const Vector powered = magnitude.array().pow(static_cast<double>(t));
    const double total = powered.sum();
    double h = 0.0;
    for (Index i = 0; i < powered.size(); ++i) {
      const double eta = powered(i) / total;
      if (eta > 0.0) {
        h -= eta * std::log(eta);
      }
    }
    out.push_back(h);
  }
  return out;
}

int knee_point(const std::vector<double>& curve) {
  const auto m = curve.size();
  if (m < 3) {
    return 1;
  }
  // Both axes scaled to [0, 1] so the knee does not depend on units.
  const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) {
    return 1;
  }
  auto point = [&](std::size_t i) {
    return std::pair{static_cast<double>(i) / static_cast<double>(m - 1), (curve[i] - *lo) / range};
  };
  const auto [x0, y0] = point(0);
  const auto [x1, y1] = point(m - 1);
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  const double norm = std::hypot(dx, dy);
  std::size_t best = 0;
  double best_dist = -1.0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto [x, y] = point(i);
    const double dist = std::abs(dy * (x - x0) - dx * (y - y0)) / norm;
    if (dist > best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return static_cast<int>(best) + 1;
}

DistanceMatrix potential_distances(const StochasticMatrix& diffused, double epsilon) {
  const Matrix potential = -(diffused.values.array() + epsilon).log().matrix();
  return DistanceMatrix{pairwise_euclidean(potential)};
}

Embedding potential_embedding(const Kernel& k, int d, const PotentialOptions& options) {
  const Index n = k.n();
  check_dims(n, d, "potential_embedding");
  if (!(options.epsilon > 0.0)) {
    throw std::invalid_argument("potential_embedding: epsilon must be positive");
  }
  const StochasticMatrix p = diffusion_operator(k);
  int t = 0;
  std::string t_mode;
  if (options.t) {
    t = *options.t;
    t_mode = "fixed";
  } else {
    const Conjugate c = symmetric_conjugate(k.values);
    const SymmetricEigen eig = symmetric_eigen(c.a);
    t = knee_point(von_neumann_entropy(eig.values, options.max_t));
    t_mode = "auto";
  }
  const StochasticMatrix diffused = power_operator(p, t);
  const DistanceMatrix potential = potential_distances(diffused, options.epsilon);
  const Embedding init = classical_mds(potential, d);
  Embedding e = stress_majorization(potential, static_cast<int>(init.d()), init, options.smacof);
  e.method = "potential";
  e.source = std::string(to_string(k.source));
  e.config["t"] = std::to_string(t);
  e.config["t_mode"] = t_mode;
  e.config["epsilon"] = std::to_string(options.epsilon);
  e.notes.insert(e.notes.begin(), init.notes.begin(), init.notes.end());
  return e;
}

Embedding laplacian_eigenmaps(const Kernel& k, int d) {
  const Index n = k.n();
  check_dims(n, d, "laplacian_eigenmaps");
  const int components = count_kernel_components(k.values);
  const Conjugate c = symmetric_conjugate(k.values);
  // Smallest generalized Laplacian eigenvalues are the largest of A.
  const Deflated pairs = deflated_eigenpairs(c, [](double v) { return v; });
  Matrix v = pairs.vectors.leftCols(d);
  for (Index col = 0; col < d; ++col) {
    v.col(col).array() /= c.sqrt_degree.array();
  }
  fix_column_signs(v);
  Embedding e;
  e.method = "laplacian_eigenmaps";
  e.source = std::string(to_string(k.source));
  e.coords = std::move(v);
  e.spectrum = (1.0 - pairs.values.head(d).array()).matrix();
  if (components > 1) {
    std::string note = "kernel graph has " + std::to_string(components) +
                       " components; leading coordinates index components";
    warn("laplacian_eigenmaps: " + note);
    e.notes.push_back(std::move(note));
  }
  return e;
}

Embedding kernel_pca(const Kernel& k, int dims) {
  check_dims(k.n(), dims, "kernel_pca");
  Embedding e = positive_spectrum_embedding(double_center(k.values), dims, "kernel_pca");
  e.method = "kernel_pca";
  e.source = std::string(to_string(k.source));
  return e;
}

Embedding classical_mds(const DistanceMatrix& d, int dims) {
  check_dims(d.n(), dims, "classical_mds");
  const Matrix squared = d.values.array().square().matrix();
  Embedding e = positive_spectrum_embedding(-0.5 * double_center(squared), dims, "classical_mds");
  e.method = "classical_mds";
  e.source = "distance";
  return e;
}

}  // namespace rfgap

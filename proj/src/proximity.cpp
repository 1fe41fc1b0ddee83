#include "rfgap/proximity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace rfgap {
namespace {

// Observations grouped by terminal node for one tree.
std::vector<std::vector<Index>> members_by_leaf(const Forest& f, int t) {
  std::vector<std::vector<Index>> buckets(static_cast<std::size_t>(f.tree(t).n_leaves()));
  for (Index i = 0; i < f.n_observations(); ++i) {
    buckets[static_cast<std::size_t>(f.leaf_of(t, i))].push_back(i);
  }
  return buckets;
}

}  // namespace

std::string_view to_string(ProximityKind kind) {
  switch (kind) {
    case ProximityKind::original:
      return "original";
    case ProximityKind::oob:
      return "oob";
    case ProximityKind::rfgap:
      return "rfgap";
  }
  return "unknown";
}

ProximityKind parse_proximity_kind(std::string_view text) {
  if (text == "original") return ProximityKind::original;
  if (text == "oob") return ProximityKind::oob;
  if (text == "rfgap") return ProximityKind::rfgap;
  throw std::invalid_argument("unknown proximity kind '" + std::string(text) +
                              "' (expected original, oob or rfgap)");
}

std::string_view to_string(KernelSource source) {
  switch (source) {
    case KernelSource::original:
      return "original";
    case KernelSource::oob:
      return "oob";
    case KernelSource::rfgap:
      return "rfgap";
    case KernelSource::gaussian:
      return "gaussian";
  }
  return "unknown";
}

ProximityMatrix proximity_original(const Forest& f) {
  const Index n = f.n_observations();
  Matrix shared = Matrix::Zero(n, n);
  for (int t = 0; t < f.n_trees(); ++t) {
    for (const auto& leaf : members_by_leaf(f, t)) {
      for (std::size_t a = 0; a < leaf.size(); ++a) {
        for (std::size_t b = a + 1; b < leaf.size(); ++b) {
          shared(leaf[a], leaf[b]) += 1.0;
        }
      }
    }
  }
  ProximityMatrix out;
  out.kind = ProximityKind::original;
  out.values = Matrix::Identity(n, n);
  const auto trees = static_cast<double>(f.n_trees());
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = shared(i, j) / trees;
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

ProximityMatrix proximity_oob(const Forest& f) {
  const Index n = f.n_observations();
  Matrix together = Matrix::Zero(n, n);
  Matrix co_oob = Matrix::Zero(n, n);
  std::vector<Index> oob;
  for (int t = 0; t < f.n_trees(); ++t) {
    oob.clear();
    for (Index i = 0; i < n; ++i) {
      if (f.is_oob(t, i)) {
        oob.push_back(i);
      }
    }
    for (std::size_t a = 0; a < oob.size(); ++a) {
      for (std::size_t b = a + 1; b < oob.size(); ++b) {
        co_oob(oob[a], oob[b]) += 1.0;
        if (f.leaf_of(t, oob[a]) == f.leaf_of(t, oob[b])) {
          together(oob[a], oob[b]) += 1.0;
        }
      }
    }
  }
  ProximityMatrix out;
  out.kind = ProximityKind::oob;
  out.values = Matrix::Identity(n, n);
  out.undefined = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (co_oob(i, j) == 0.0) {
        out.undefined(i, j) = true;
        out.undefined(j, i) = true;
        out.values(i, j) = out.values(j, i) = 0.0;
        continue;
      }
      const double v = together(i, j) / co_oob(i, j);
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

ProximityMatrix proximity_rfgap(const Forest& f) {
  const Index n = f.n_observations();
  ProximityMatrix out;
  out.kind = ProximityKind::rfgap;
  out.values = Matrix::Zero(n, n);
  out.uncovered.assign(static_cast<std::size_t>(n), true);
  std::vector<int> oob_trees(static_cast<std::size_t>(n), 0);

  // Values are accumulated row-major in a transposed buffer so each OOB
  // observation's row is a contiguous column.
  Matrix acc = Matrix::Zero(n, n);
  for (int t = 0; t < f.n_trees(); ++t) {
    const auto buckets = members_by_leaf(f, t);
    std::vector<double> leaf_mass(buckets.size(), 0.0);
    for (std::size_t leaf = 0; leaf < buckets.size(); ++leaf) {
      for (Index j : buckets[leaf]) {
        leaf_mass[leaf] += f.inbag(t, j);
      }
    }
    for (Index i = 0; i < n; ++i) {
      if (!f.is_oob(t, i)) {
        continue;
      }
      const auto leaf = static_cast<std::size_t>(f.leaf_of(t, i));
      const double mass = leaf_mass[leaf];
      if (mass <= 0.0) {
        throw std::invalid_argument("proximity_rfgap: tree " + std::to_string(t) +
                                    " routes an OOB observation to a leaf with no in-bag mass");
      }
      ++oob_trees[static_cast<std::size_t>(i)];
      for (Index j : buckets[leaf]) {
        const std::uint32_t c = f.inbag(t, j);
        if (c > 0) {
          acc(j, i) += static_cast<double>(c) / mass;
        }
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    const int count = oob_trees[static_cast<std::size_t>(i)];
    if (count == 0) {
      continue;
    }
    out.uncovered[static_cast<std::size_t>(i)] = false;
    out.values.row(i) = acc.col(i).transpose() / static_cast<double>(count);
  }
  return out;
}

ProximityMatrix compute_proximity(const Forest& f, ProximityKind kind) {
  switch (kind) {
    case ProximityKind::original:
      return proximity_original(f);
    case ProximityKind::oob:
      return proximity_oob(f);
    case ProximityKind::rfgap:
      return proximity_rfgap(f);
  }
  throw std::invalid_argument("compute_proximity: unknown kind");
}

Kernel to_kernel(const ProximityMatrix& p, std::optional<std::uint64_t> forest_seed) {
  const Index n = p.n();
  if (p.values.cols() != n) {
    throw std::invalid_argument("to_kernel: proximity matrix must be square");
  }
  Kernel k;
  k.forest_seed = forest_seed;
  k.source = p.kind == ProximityKind::original ? KernelSource::original
             : p.kind == ProximityKind::oob    ? KernelSource::oob
                                               : KernelSource::rfgap;
  auto max_off_diagonal = [n](const Matrix& m) {
    double mx = 0.0;
    for (Index j = 0; j < n; ++j) {
      for (Index i = 0; i < n; ++i) {
        if (i != j) {
          mx = std::max(mx, m(i, j));
        }
      }
    }
    return mx;
  };

  const double first_max = max_off_diagonal(p.values);
  if (!(first_max > 0.0)) {
    warn("to_kernel: every off-diagonal proximity is zero; returning the identity kernel");
    k.values = Matrix::Identity(n, n);
    return k;
  }
  Matrix scaled = p.values / first_max;
  k.values = Matrix::Identity(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = 0.5 * (scaled(i, j) + scaled(j, i));
      k.values(i, j) = v;
      k.values(j, i) = v;
    }
  }
  // Averaging lowers the maximum when its transpose partner is smaller.
  const double second_max = max_off_diagonal(k.values);
  if (second_max != 1.0) {
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        const double v = k.values(i, j) / second_max;
        k.values(i, j) = v;
        k.values(j, i) = v;
      }
    }
  }
  k.values.diagonal().setOnes();
  return k;
}

DistanceMatrix kernel_to_distance(const Kernel& k, DistanceTransform transform) {
  const Index n = k.n();
  DistanceMatrix d;
  d.values = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double gap = std::max(0.0, 1.0 - k.values(i, j));
      const double v = transform == DistanceTransform::sqrt_one_minus ? std::sqrt(gap) : gap;
      d.values(i, j) = v;
      d.values(j, i) = v;
    }
  }
  return d;
}

std::optional<std::string> check_kernel(const Kernel& k, bool require_unit_max) {
  const Index n = k.n();
  if (k.values.cols() != n) {
    return "kernel is not square";
  }
  double mx = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (k.values(i, i) != 1.0) {
      return "diagonal entry " + std::to_string(i) + " is not exactly 1";
    }
    for (Index j = 0; j < n; ++j) {
      const double v = k.values(i, j);
      if (v != k.values(j, i)) {
        return "asymmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")";
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        return "entry (" + std::to_string(i) + ", " + std::to_string(j) + ") outside [0, 1]";
      }
      if (i != j) {
        mx = std::max(mx, v);
      }
    }
  }
  if (require_unit_max && mx > 0.0 && mx != 1.0) {
    return "maximum off-diagonal entry is " + format_double(mx) + ", not exactly 1";
  }
  return std::nullopt;
}

std::optional<std::string> check_distance(const DistanceMatrix& d) {
  const Index n = d.n();
  if (d.values.cols() != n) {
    return "distance matrix is not square";
  }
  for (Index i = 0; i < n; ++i) {
    if (d.values(i, i) != 0.0) {
      return "diagonal entry " + std::to_string(i) + " is not 0";
    }
    for (Index j = 0; j < n; ++j) {
      if (d.values(i, j) != d.values(j, i)) {
        return "asymmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")";
      }
      if (!(d.values(i, j) >= 0.0) || !std::isfinite(d.values(i, j))) {
        return "entry (" + std::to_string(i) + ", " + std::to_string(j) +
               ") is negative or non-finite";
      }
    }
  }
  return std::nullopt;
}

KernelPrediction kernel_prediction(const ProximityMatrix& p, const std::vector<double>& labels,
                                   Task task, int n_classes) {
  if (p.kind != ProximityKind::rfgap) {
    throw std::invalid_argument(
        "kernel_prediction: only rfgap proximities reproduce forest predictions (got " +
        std::string(to_string(p.kind)) + ")");
  }
  const Index n = p.n();
  if (static_cast<Index>(labels.size()) != n) {
    throw std::invalid_argument("kernel_prediction: label count does not match the matrix");
  }
  KernelPrediction out;
  out.task = task;
  out.prediction.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  out.covered.assign(static_cast<std::size_t>(n), false);
  if (task == Task::classification) {
    out.votes = Matrix::Zero(n, n_classes);
  }
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!p.uncovered.empty() && p.uncovered[k]) {
      continue;
    }
    out.covered[k] = true;
    if (task == Task::classification) {
      for (Index j = 0; j < n; ++j) {
        if (j != i) {
          out.votes(i, static_cast<Index>(labels[static_cast<std::size_t>(j)])) += p.values(i, j);
        }
      }
      std::vector<double> row(static_cast<std::size_t>(n_classes));
      for (int c = 0; c < n_classes; ++c) {
        row[static_cast<std::size_t>(c)] = out.votes(i, c);
      }
      out.prediction[k] = argmax_lowest(row);
    } else {
      double sum = 0.0;
      for (Index j = 0; j < n; ++j) {
        if (j != i) {
          sum += p.values(i, j) * labels[static_cast<std::size_t>(j)];
        }
      }
      out.prediction[k] = sum;
    }
  }
  return out;
}

IdentityCheck check_oob_identity(const ProximityMatrix& rfgap, const Forest& f,
                                 const OobReport& oob, double tol) {
  const KernelPrediction kp = kernel_prediction(rfgap, f.labels(), f.task(), f.n_classes());
  IdentityCheck check;
  for (Index i = 0; i < f.n_observations(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (!oob.covered[k]) {
      continue;
    }
    ++check.checked;
    if (!kp.covered[k]) {
      ++check.mismatches;
      continue;
    }
    bool ok = true;
    if (f.task() == Task::classification) {
      const double err = (kp.votes.row(i) - oob.votes.row(i)).cwiseAbs().maxCoeff();
      check.max_error = std::max(check.max_error, err);
      ok = kp.prediction[k] == oob.prediction[k] && err <= tol;
    } else {
      const double ref = oob.prediction[k];
      const double diff = std::abs(kp.prediction[k] - ref);
      const double err = ref != 0.0 ? diff / std::abs(ref) : diff;
      check.max_error = std::max(check.max_error, err);
      ok = err <= tol;
    }
    if (!ok) {
      ++check.mismatches;
    }
  }
  check.passed = check.mismatches == 0;
  return check;
}

MatrixFormat parse_matrix_format(std::string_view text) {
  if (text == "dense") return MatrixFormat::dense;
  if (text == "triplet") return MatrixFormat::triplet;
  throw std::invalid_argument("unknown matrix format '" + std::string(text) +
                              "' (expected dense or triplet)");
}

void write_matrix(const Matrix& m, MatrixFormat format, std::ostream& out) {
  if (format == MatrixFormat::dense) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) {
        if (j > 0) out << ',';
        out << format_double(m(i, j));
      }
      out << '\n';
    }
    return;
  }
  out << "row,col,value\n";
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) {
        out << i << ',' << j << ',' << format_double(m(i, j)) << '\n';
      }
    }
  }
}

}  // namespace rfgap

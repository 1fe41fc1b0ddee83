#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

namespace oracle {

EigenPairs jacobi_eigen(const Eigen::MatrixXd& input, double tol, int max_sweeps) {
  const auto n = input.rows();
  Eigen::MatrixXd a = input;
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= tol * std::max(1.0, a.norm())) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  EigenPairs out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    out.values(c) = a(order[static_cast<std::size_t>(c)], order[static_cast<std::size_t>(c)]);
    out.vectors.col(c) = v.col(order[static_cast<std::size_t>(c)]);
  }
  return out;
}

double procrustes_error(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  Eigen::MatrixXd yc = y.rowwise() - y.colwise().mean();
  // Pad to a common width so configurations of different dimension compare.
  const auto w = std::max(xc.cols(), yc.cols());
  xc.conservativeResizeLike(Eigen::MatrixXd::Zero(xc.rows(), w));
  yc.conservativeResizeLike(Eigen::MatrixXd::Zero(yc.rows(), w));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xc.transpose() * yc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd r = svd.matrixU() * svd.matrixV().transpose();
  return (xc * r - yc).norm();
}

Eigen::MatrixXd distances(const Eigen::MatrixXd& points) {
  const auto n = points.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < points.cols(); ++c) {
        const double diff = points(i, c) - points(j, c);
        s += diff * diff;
      }
      d(i, j) = std::sqrt(s);
    }
  }
  return d;
}

double loocv_accuracy(const Eigen::MatrixXd& points, const std::vector<int>& labels, int k) {
  const Eigen::MatrixXd d = distances(points);
  const auto n = points.rows();
  const int classes = *std::max_element(labels.begin(), labels.end()) + 1;
  int correct = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<std::pair<double, Eigen::Index>> others;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) others.emplace_back(d(i, j), j);
    std::sort(others.begin(), others.end());
    std::vector<int> votes(static_cast<std::size_t>(classes), 0);
    std::vector<double> mean(static_cast<std::size_t>(classes), 0.0);
    for (int r = 0; r < k; ++r) {
      const int c = labels[static_cast<std::size_t>(others[static_cast<std::size_t>(r)].second)];
      votes[static_cast<std::size_t>(c)] += 1;
      mean[static_cast<std::size_t>(c)] += others[static_cast<std::size_t>(r)].first;
    }
    int best = -1;
    for (int c = 0; c < classes; ++c) {
      const auto s = static_cast<std::size_t>(c);
      if (votes[s] == 0) continue;
      mean[s] /= votes[s];
      if (best < 0) { best = c; continue; }
      const auto b = static_cast<std::size_t>(best);
      if (votes[s] > votes[b] || (votes[s] == votes[b] && mean[s] < mean[b])) best = c;
    }
    correct += best == labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

Eigen::MatrixXd finite_difference_gradient(const std::function<double(const Eigen::MatrixXd&)>& f,
                                           const Eigen::MatrixXd& x, double h) {
  Eigen::MatrixXd g(x.rows(), x.cols());
  Eigen::MatrixXd probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      probe(i, j) = x(i, j) + h;
      const double up = f(probe);
      probe(i, j) = x(i, j) - h;
      const double down = f(probe);
      probe(i, j) = x(i, j);
      g(i, j) = (up - down) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace oracle

#include "rfgap/embed.hpp"

#include "rfgap/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rfgap {
namespace {

constexpr double kEntropyTol = 1e-10;
constexpr int kBisectionSteps = 200;

// Student-t numerators 1 / (1 + |y_i - y_j|^2), zero diagonal.
Matrix student_numerators(const Matrix& y) {
  const Index n = y.rows();
  Matrix num = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
      num(i, j) = v;
      num(j, i) = v;
    }
  }
  return num;
}

}  // namespace

Matrix tsne_conditional_probabilities(const DistanceMatrix& d, double perplexity) {
  const Index n = d.n();
  if (!(perplexity > 1.0)) {
    throw std::invalid_argument("tsne: perplexity must exceed 1");
  }
  const double target = std::log(perplexity);
  Matrix p = Matrix::Zero(n, n);
  std::vector<double> sq(static_cast<std::size_t>(n));
  std::vector<double> w(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double lo_d = std::numeric_limits<double>::infinity();
    double hi_d = 0.0;
    for (Index j = 0; j < n; ++j) {
      sq[static_cast<std::size_t>(j)] = d.values(i, j) * d.values(i, j);
      if (j != i) {
        lo_d = std::min(lo_d, sq[static_cast<std::size_t>(j)]);
        hi_d = std::max(hi_d, sq[static_cast<std::size_t>(j)]);
      }
    }
    if (!(hi_d - lo_d > 1e-12 * std::max(hi_d, 1e-300))) {
      warn("tsne: row " + std::to_string(i) + " has equal distances; using a uniform row");
      for (Index j = 0; j < n; ++j) {
        p(i, j) = j == i ? 0.0 : 1.0 / static_cast<double>(n - 1);
      }
      continue;
    }
    // Entropy of the row at precision beta; distances shifted by the minimum
    // for stability (the shift cancels in the normalization).
    auto evaluate = [&](double beta) {
      double sum = 0.0;
      double weighted = 0.0;
      for (Index j = 0; j < n; ++j) {
        const auto k = static_cast<std::size_t>(j);
        w[k] = j == i ? 0.0 : std::exp(-beta * (sq[k] - lo_d));
        sum += w[k];
        weighted += w[k] * (sq[k] - lo_d);
      }
      return std::pair{std::log(sum) + beta * weighted / sum, sum};
    };
    double beta = 1.0 / std::max((hi_d - lo_d) / 10.0, 1e-300);
    double beta_lo = 0.0;
    double beta_hi = std::numeric_limits<double>::infinity();
    auto [entropy, sum] = evaluate(beta);
    for (int step = 0; step < kBisectionSteps && std::abs(entropy - target) > kEntropyTol; ++step) {
      if (entropy > target) {
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
      } else {
        beta_hi = beta;
        beta = 0.5 * (beta + beta_lo);
      }
      std::tie(entropy, sum) = evaluate(beta);
    }
    if (std::abs(entropy - target) > 1e-5) {
      warn("tsne: row " + std::to_string(i) + " entropy misses the perplexity target by " +
           std::to_string(std::abs(entropy - target)));
    }
    for (Index j = 0; j < n; ++j) {
      p(i, j) = w[static_cast<std::size_t>(j)] / sum;
    }
  }
  return p;
}

Matrix tsne_joint_probabilities(const DistanceMatrix& d, double perplexity) {
  const Matrix cond = tsne_conditional_probabilities(d, perplexity);
  return (cond + cond.transpose()) / (2.0 * static_cast<double>(d.n()));
}

double tsne_kl_divergence(const Matrix& p, const Matrix& y) {
  const Matrix num = student_numerators(y);
  const double z = num.sum();
  double kl = 0.0;
  for (Index j = 0; j < p.cols(); ++j) {
    for (Index i = 0; i < p.rows(); ++i) {
      if (i != j && p(i, j) > 0.0) {
        kl += p(i, j) * std::log(p(i, j) / (num(i, j) / z));
      }
    }
  }
  return kl;
}

Matrix tsne_gradient(const Matrix& p, const Matrix& y) {
  const Index n = y.rows();
  const Matrix num = student_numerators(y);
  const double z = num.sum();
  Matrix grad = Matrix::Zero(n, y.cols());
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double mult = 4.0 * (p(i, j) - num(i, j) / z) * num(i, j);
      grad.row(i) += mult * (y.row(i) - y.row(j));
    }
  }
  return grad;
}

Embedding tsne(const DistanceMatrix& d, const TsneOptions& options) {
  const Index n = d.n();
  if (n < 4) {
    throw std::invalid_argument("tsne: need at least 4 points");
  }
  if (options.dims < 1) {
    throw std::invalid_argument("tsne: dims must be >= 1");
  }
  double perplexity = options.perplexity;
  const double cap = static_cast<double>(n - 1) / 3.0;
  if (perplexity > cap) {
    warn("tsne: perplexity " + std::to_string(perplexity) + " capped at (n-1)/3 = " +
         std::to_string(cap));
    perplexity = cap;
  }
  const Matrix p = tsne_joint_probabilities(d, perplexity);
  const double lr = options.learning_rate.value_or(static_cast<double>(n) / 12.0);

  Rng rng(derive_seed(options.seed, {0x74736e65ULL}));
  Matrix y(n, options.dims);
  for (Index i = 0; i < n; ++i) {
    for (Index c = 0; c < options.dims; ++c) {
      y(i, c) = 1e-4 * rng.normal();
    }
  }
  Matrix update = Matrix::Zero(n, options.dims);
  Matrix gains = Matrix::Ones(n, options.dims);
  Embedding e;
  e.method = "tsne";
  e.source = "distance";
  e.config["perplexity"] = std::to_string(perplexity);
  e.config["iterations"] = std::to_string(options.iterations);
  e.config["learning_rate"] = std::to_string(lr);
  e.config["seed"] = std::to_string(options.seed);

  for (int iter = 0; iter < options.iterations; ++iter) {
    const bool exaggerating = iter < options.exaggeration_iterations;
    if (iter == options.exaggeration_iterations) {
      e.trace.push_back(tsne_kl_divergence(p, y));
    }
    const Matrix grad = tsne_gradient(exaggerating ? Matrix(p * options.exaggeration) : p, y);
    const double momentum = iter < 250 ? 0.5 : 0.8;
    for (Index i = 0; i < n; ++i) {
      for (Index c = 0; c < options.dims; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (update(i, c) > 0.0);
        gains(i, c) = std::max(same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2, 0.01);
        update(i, c) = momentum * update(i, c) - lr * gains(i, c) * grad(i, c);
      }
    }
    y += update;
    y.rowwise() -= y.colwise().mean();
  }
  e.trace.push_back(tsne_kl_divergence(p, y));
  e.coords = std::move(y);
  return e;
}

}  // namespace rfgap

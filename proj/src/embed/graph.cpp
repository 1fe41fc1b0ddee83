#include "rfgap/embed.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace rfgap {
namespace {

// Indices of the other points ordered by (distance, index).
std::vector<Index> neighbour_order(const Matrix& d, Index i) {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(d.rows() - 1));
  for (Index j = 0; j < d.rows(); ++j) {
    if (j != i) {
      order.push_back(j);
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return d(i, a) < d(i, b); });
  return order;
}

void add_edge(std::vector<std::pair<Index, double>>& list, Index j, double w) {
  const auto it = std::lower_bound(list.begin(), list.end(), j,
                                   [](const auto& e, Index v) { return e.first < v; });
  if (it == list.end() || it->first != j) {
    list.insert(it, {j, w});
  }
}

void label_components(NeighborGraph& g) {
  const Index n = g.n();
  g.component.assign(static_cast<std::size_t>(n), -1);
  g.n_components = 0;
  std::vector<Index> stack;
  for (Index s = 0; s < n; ++s) {
    if (g.component[static_cast<std::size_t>(s)] >= 0) {
      continue;
    }
    const int label = g.n_components++;
    g.component[static_cast<std::size_t>(s)] = label;
    stack.push_back(s);
    while (!stack.empty()) {
      const Index v = stack.back();
      stack.pop_back();
      for (const auto& [w, len] : g.adjacency[static_cast<std::size_t>(v)]) {
        if (g.component[static_cast<std::size_t>(w)] < 0) {
          g.component[static_cast<std::size_t>(w)] = label;
          stack.push_back(w);
        }
      }
    }
  }
}

}  // namespace

NeighborGraph knn_graph(const DistanceMatrix& d, int k) {
  const Index n = d.n();
  if (k < 1 || k >= n) {
    throw std::invalid_argument("knn_graph: k must be in [1, n-1] (k=" + std::to_string(k) +
                                ", n=" + std::to_string(n) + ")");
  }
  NeighborGraph g;
  g.nearest.resize(static_cast<std::size_t>(n));
  g.adjacency.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto order = neighbour_order(d.values, i);
    for (int r = 0; r < k; ++r) {
      const Index j = order[static_cast<std::size_t>(r)];
      g.nearest[static_cast<std::size_t>(i)].emplace_back(j, d.values(i, j));
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (const auto& [j, w] : g.nearest[static_cast<std::size_t>(i)]) {
      add_edge(g.adjacency[static_cast<std::size_t>(i)], j, w);
      add_edge(g.adjacency[static_cast<std::size_t>(j)], i, w);
    }
  }
  label_components(g);
  return g;
}

Kernel gaussian_affinity(const DistanceMatrix& d, const Bandwidth& bandwidth) {
  const Index n = d.n();
  std::vector<double> sigma(static_cast<std::size_t>(n));
  if (bandwidth.sigma) {
    if (!(*bandwidth.sigma > 0.0)) {
      throw std::invalid_argument("gaussian_affinity: bandwidth must be positive");
    }
    std::fill(sigma.begin(), sigma.end(), *bandwidth.sigma);
  } else {
    const int k = bandwidth.adaptive_k;
    if (k < 1 || k >= n) {
      throw std::invalid_argument("gaussian_affinity: adaptive k must be in [1, n-1]");
    }
    for (Index i = 0; i < n; ++i) {
      const auto order = neighbour_order(d.values, i);
      sigma[static_cast<std::size_t>(i)] = d.values(i, order[static_cast<std::size_t>(k - 1)]);
      if (!(sigma[static_cast<std::size_t>(i)] > 0.0)) {
        throw std::invalid_argument("gaussian_affinity: zero bandwidth at row " +
                                    std::to_string(i) + " (duplicate points)");
      }
    }
  }
  Kernel out;
  out.source = KernelSource::gaussian;
  out.values = Matrix::Identity(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = std::exp(-d.values(i, j) * d.values(i, j) /
                                (sigma[static_cast<std::size_t>(i)] * sigma[static_cast<std::size_t>(j)]));
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
  }
  return out;
}

Matrix geodesic_distances(const NeighborGraph& g) {
  const Index n = g.n();
  constexpr double inf = std::numeric_limits<double>::infinity();
  Matrix out = Matrix::Constant(n, n, inf);
  using Entry = std::pair<double, Index>;
  for (Index s = 0; s < n; ++s) {
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    out(s, s) = 0.0;
    queue.emplace(0.0, s);
    while (!queue.empty()) {
      const auto [dist, v] = queue.top();
      queue.pop();
      if (dist > out(s, v)) {
        continue;
      }
      for (const auto& [w, len] : g.adjacency[static_cast<std::size_t>(v)]) {
        const double cand = dist + len;
        if (cand < out(s, w)) {
          out(s, w) = cand;
          queue.emplace(cand, w);
        }
      }
    }
  }
  // Dijkstra from each end can differ in the last bit; keep the matrix exactly
  // symmetric.
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = std::min(out(i, j), out(j, i));
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  return out;
}

std::vector<std::tuple<Index, Index, double>> bridge_components(NeighborGraph& g,
                                                                const DistanceMatrix& d) {
  std::vector<std::tuple<Index, Index, double>> added;
  const Index n = g.n();
  for (int a = 0; a < g.n_components; ++a) {
    for (int b = a + 1; b < g.n_components; ++b) {
      double best = std::numeric_limits<double>::infinity();
      Index bi = -1;
      Index bj = -1;
      for (Index i = 0; i < n; ++i) {
        if (g.component[static_cast<std::size_t>(i)] != a) continue;
        for (Index j = 0; j < n; ++j) {
          if (g.component[static_cast<std::size_t>(j)] != b) continue;
          if (d.values(i, j) < best) {
            best = d.values(i, j);
            bi = i;
            bj = j;
          }
        }
      }
      added.emplace_back(bi, bj, best);
    }
  }
  for (const auto& [i, j, w] : added) {
    add_edge(g.adjacency[static_cast<std::size_t>(i)], j, w);
    add_edge(g.adjacency[static_cast<std::size_t>(j)], i, w);
  }
  label_components(g);
  return added;
}

Embedding isomap(const DistanceMatrix& d, int k, int dims, const IsomapOptions& options) {
  NeighborGraph g = knn_graph(d, k);
  std::vector<std::string> notes;
  if (!g.connected()) {
    if (options.strict) {
      throw std::runtime_error("isomap: k-NN graph has " + std::to_string(g.n_components) +
                               " components (strict mode)");
    }
    const int components = g.n_components;
    const auto bridges = bridge_components(g, d);
    std::string note = "bridged " + std::to_string(components) + " components with " +
                       std::to_string(bridges.size()) + " edges";
    warn("isomap: " + note);
    notes.push_back(std::move(note));
  }
  Embedding e = classical_mds(DistanceMatrix{geodesic_distances(g)}, dims);
  e.method = "isomap";
  e.config["k"] = std::to_string(k);
  e.config["strict"] = options.strict ? "true" : "false";
  e.notes.insert(e.notes.begin(), notes.begin(), notes.end());
  return e;
}

}  // namespace rfgap

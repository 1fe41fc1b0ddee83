#pragma once

#include "rfgap/common.hpp"
#include "rfgap/proximity.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rfgap {

// Row-stochastic matrix: a random-walk transition operator on observations.
struct StochasticMatrix {
  Matrix values;
  int steps = 1;  // power applied so far
};

struct Embedding {
  Matrix coords;  // n x d
  std::string method;
  std::string source;
  std::map<std::string, std::string> config;

  // Diagnostics. `spectrum` holds the eigenvalues behind spectral methods,
  // `negative_mass` the fraction of absolute eigenvalue mass that was
  // negative (MDS, kernel PCA), and `trace` the objective per iteration
  // (stress for SMACOF, KL checkpoints for t-SNE).
  Vector spectrum;
  double negative_mass = 0.0;
  std::vector<double> trace;
  std::vector<std::string> notes;

  Index n() const { return coords.rows(); }
  Index d() const { return coords.cols(); }
};

struct NeighborGraph {
  // k nearest neighbours of each node by distance, ties to the lower index.
  std::vector<std::vector<std::pair<Index, double>>> nearest;
  // Union-symmetrized adjacency, each list sorted by neighbour index.
  std::vector<std::vector<std::pair<Index, double>>> adjacency;
  std::vector<int> component;  // component label per node, numbered by first node
  int n_components = 0;

  Index n() const { return static_cast<Index>(adjacency.size()); }
  bool connected() const { return n_components == 1; }
};

NeighborGraph knn_graph(const DistanceMatrix& d, int k);

// Fixed bandwidth sigma: k(i, j) = exp(-d^2 / sigma^2).
// Adaptive: sigma_i = distance to the k-th nearest neighbour of i and
// k(i, j) = exp(-d^2 / (sigma_i sigma_j)).
struct Bandwidth {
  std::optional<double> sigma;
  int adaptive_k = 10;

  static Bandwidth fixed(double s) { return Bandwidth{s, 0}; }
  static Bandwidth adaptive(int k) { return Bandwidth{std::nullopt, k}; }
};

Kernel gaussian_affinity(const DistanceMatrix& d, const Bandwidth& bandwidth);

// Row-normalized kernel. Throws naming the first row whose sum is not positive.
StochasticMatrix diffusion_operator(const Kernel& k);
StochasticMatrix diffusion_operator(const Matrix& similarities);

// P^t by repeated squaring.
StochasticMatrix power_operator(const StochasticMatrix& p, int t);

// Coordinates lambda_i^t psi_i for the d leading non-trivial eigenpairs of the
// diffusion operator (by |lambda|), computed through the symmetric conjugate
// D^{1/2} P D^{-1/2}. The stationary direction is deflated before
// decomposition so the trivial pair is skipped even when lambda = 1 repeats.
Embedding diffusion_map(const Kernel& k, int t, int d);

// Shannon entropy of the normalized spectrum |lambda|^t of the diffusion
// operator, for t = 1..max_t.
std::vector<double> von_neumann_entropy(const Vector& eigenvalues, int max_t);

// Knee of a curve sampled at t = 1..size: the point farthest from the chord
// between its endpoints. Returns the 1-based t.
int knee_point(const std::vector<double>& curve);

struct SmacofOptions {
  int max_iter = 300;
  double tol = 1e-6;  // stop when (previous - current) / previous < tol
};

struct PotentialOptions {
  std::optional<int> t;  // unset: von Neumann entropy knee over 1..max_t
  int max_t = 64;
  double epsilon = 1e-7;
  SmacofOptions smacof;
};

// Diffusion-potential embedding: diffuse with P^t, take -log(P^t + epsilon)
// row-wise, and embed the Euclidean distances between those potential rows
// with classical MDS followed by stress majorization.
Embedding potential_embedding(const Kernel& k, int d, const PotentialOptions& options = {});

// Potential distance matrix for a given diffusion time (exposed for tests).
DistanceMatrix potential_distances(const StochasticMatrix& diffused, double epsilon);

// Eigenvectors of L v = lambda Deg v with L = Deg - K for the d smallest
// eigenvalues after the constant vector. On a disconnected graph the
// remaining zero-eigenvalue component indicators come first (with a warning).
Embedding laplacian_eigenmaps(const Kernel& k, int d);

struct IsomapOptions {
  bool strict = false;  // fail instead of bridging a disconnected graph
};

// All-pairs shortest-path lengths over the graph (Dijkstra from every source).
Matrix geodesic_distances(const NeighborGraph& g);

// Adds, for every pair of components, the shortest direct edge between them.
// Returns the added (i, j, length) edges.
std::vector<std::tuple<Index, Index, double>> bridge_components(NeighborGraph& g,
                                                                const DistanceMatrix& d);

Embedding isomap(const DistanceMatrix& d, int k, int dims, const IsomapOptions& options = {});

// Double-centres -D*D/2 and keeps the top eigenpairs with positive
// eigenvalue, scaled by sqrt(lambda). Fewer than `dims` positive eigenvalues
// reduce the output dimension with a warning.
Embedding classical_mds(const DistanceMatrix& d, int dims);

// Raw stress sum_{i<j} (||x_i - x_j|| - d_ij)^2.
double raw_stress(const DistanceMatrix& d, const Matrix& coords);

// SMACOF iterations (Guttman transform, unit weights) from `init`.
Embedding stress_majorization(const DistanceMatrix& d, int dims, const Embedding& init,
                              const SmacofOptions& options = {});

// Double-centres K and keeps the top eigenpairs with positive eigenvalue.
Embedding kernel_pca(const Kernel& k, int dims);

struct TsneOptions {
  double perplexity = 30.0;
  int dims = 2;
  std::uint64_t seed = 0;
  int iterations = 1000;
  double exaggeration = 12.0;
  int exaggeration_iterations = 250;
  std::optional<double> learning_rate;  // unset: n / 12
};

// Conditional probabilities p_{j|i} with per-row Gaussian precision found by
// bisection so that each row's entropy equals log(perplexity).
Matrix tsne_conditional_probabilities(const DistanceMatrix& d, double perplexity);
// (P + P') / (2n) from the conditional probabilities.
Matrix tsne_joint_probabilities(const DistanceMatrix& d, double perplexity);
// KL(P || Q) with Student-t Q over the rows of y.
double tsne_kl_divergence(const Matrix& p, const Matrix& y);
// Analytic gradient of tsne_kl_divergence with respect to y.
Matrix tsne_gradient(const Matrix& p, const Matrix& y);

Embedding tsne(const DistanceMatrix& d, const TsneOptions& options);

}  // namespace rfgap

#include "doctest.h"

#include "oracles.hpp"
#include "rfgap/baseline.hpp"
#include "rfgap/embed.hpp"
#include "rfgap/linalg.hpp"
#include "rfgap/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace rfgap;

namespace {

DistanceMatrix dist(const Matrix& points) { return DistanceMatrix{oracle::distances(points)}; }

Kernel kernel_of(Matrix values, KernelSource source = KernelSource::gaussian) {
  return Kernel{std::move(values), source, std::nullopt};
}

Matrix random_points(Index n, Index dims, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, dims);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < dims; ++c) x(i, c) = rng.normal();
  return x;
}

Kernel rfgap_blobs_kernel(int n_per_class, std::uint64_t seed) {
  const Dataset d = synthesize_blobs(n_per_class, 2, 2, 6.0, seed);
  ForestConfig cfg;
  cfg.n_trees = 100;
  cfg.seed = seed;
  return to_kernel(proximity_rfgap(fit_forest(d, cfg)), seed);
}

// Kernel on a path graph 0 - 1 - ... - (n-1) with unit edge weights.
Kernel path_kernel(Index n) {
  Matrix k = Matrix::Identity(n, n);
  for (Index i = 0; i + 1 < n; ++i) k(i, i + 1) = k(i + 1, i) = 1.0;
  return kernel_of(k);
}

std::vector<std::string> captured;
WarningSink capture() {
  captured.clear();
  return [](std::string_view m) { captured.emplace_back(m); };
}

}  // namespace

TEST_CASE("knn_graph on three collinear points") {
  const NeighborGraph g = knn_graph(dist(Matrix{{0.0}, {1.0}, {3.0}}), 1);
  REQUIRE(g.nearest[2].size() == 1);
  CHECK(g.nearest[0][0].first == 1);
  CHECK(g.nearest[2][0].first == 1);
  CHECK(g.adjacency[0].size() == 1);
  CHECK(g.adjacency[1].size() == 2);
  CHECK(g.adjacency[2].size() == 1);
  CHECK(g.connected());
}

TEST_CASE("knn_graph ties go to the lower index and k = n - 1 is complete") {
  const NeighborGraph tie = knn_graph(dist(Matrix{{0.0}, {-1.0}, {1.0}}), 1);
  CHECK(tie.nearest[0][0].first == 1);
  const NeighborGraph full = knn_graph(dist(random_points(6, 2, 1)), 5);
  for (const auto& adj : full.adjacency) CHECK(adj.size() == 5u);
  CHECK(full.connected());
  CHECK_THROWS(knn_graph(dist(random_points(6, 2, 1)), 6));
  CHECK_THROWS(knn_graph(dist(random_points(6, 2, 1)), 0));
}

TEST_CASE("knn_graph labels two far clusters") {
  Matrix x(6, 1);
  x << 0.0, 0.1, 0.2, 100.0, 100.1, 100.2;
  const NeighborGraph g = knn_graph(dist(x), 2);
  CHECK(g.n_components == 2);
  CHECK(g.component == std::vector<int>{0, 0, 0, 1, 1, 1});
  for (std::size_t i = 0; i < g.adjacency.size(); ++i)
    for (const auto& [j, w] : g.adjacency[i]) {
      CHECK(j != static_cast<Index>(i));
      CHECK(w >= 0.0);
    }
}

TEST_CASE("gaussian_affinity") {
  const double sigma = 0.7;
  const Kernel k = gaussian_affinity(dist(Matrix{{0.0}, {0.7}, {1.5}, {3.0}}), Bandwidth::fixed(sigma));
  CHECK(k.values.diagonal() == Vector::Ones(4));
  CHECK(k.values(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(k.values(0, 1) > k.values(0, 2));
  CHECK(k.values(0, 2) > k.values(0, 3));
  CHECK(k.values == k.values.transpose());
  CHECK_THROWS(gaussian_affinity(dist(Matrix{{0.0}, {1.0}}), Bandwidth::fixed(0.0)));
  // Duplicate points make the adaptive bandwidth zero.
  CHECK_THROWS(gaussian_affinity(dist(Matrix{{0.0}, {0.0}, {5.0}}), Bandwidth::adaptive(1)));
  const Kernel a = gaussian_affinity(dist(random_points(20, 2, 3)), Bandwidth::adaptive(5));
  CHECK(a.values == a.values.transpose());
  CHECK_FALSE(check_kernel(a, false).has_value());
}

TEST_CASE("diffusion_operator") {
  const StochasticMatrix half = diffusion_operator(Matrix::Ones(2, 2));
  CHECK(half.values == Matrix::Constant(2, 2, 0.5));
  CHECK(diffusion_operator(Matrix::Identity(3, 3)).values == Matrix::Identity(3, 3));
  const StochasticMatrix p = diffusion_operator(rfgap_blobs_kernel(30, 2));
  CHECK((p.values.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(p.values.minCoeff() >= 0.0);
  Matrix isolated = Matrix::Identity(3, 3);
  isolated(1, 1) = 0.0;
  try {
    diffusion_operator(isolated);
    FAIL("expected an error");
  } catch (const std::exception& ex) {
    CHECK(std::string(ex.what()).find('1') != std::string::npos);
  }
}

TEST_CASE("power_operator") {
  const StochasticMatrix p = diffusion_operator(rfgap_blobs_kernel(20, 4));
  CHECK(power_operator(p, 1).values == p.values);
  CHECK_THROWS(power_operator(p, 0));
  const StochasticMatrix p64 = power_operator(p, 64);
  CHECK(p64.steps == 64);
  CHECK((p64.values.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-10);

  // Doubly stochastic symmetric walk converges to uniform rows.
  Matrix ds(4, 4);
  ds << 0.5, 0.25, 0.0, 0.25,
        0.25, 0.5, 0.25, 0.0,
        0.0, 0.25, 0.5, 0.25,
        0.25, 0.0, 0.25, 0.5;
  const StochasticMatrix w = power_operator(StochasticMatrix{ds, 1}, 64);
  CHECK((w.values.array() - 0.25).abs().maxCoeff() <= 1e-8);

  Matrix m(4, 4);
  m << 0.1, 0.2, 0.3, 0.4,
       0.4, 0.3, 0.2, 0.1,
       0.25, 0.25, 0.25, 0.25,
       0.7, 0.1, 0.1, 0.1;
  const StochasticMatrix base{m, 1};
  Matrix brute = Matrix::Identity(4, 4);
  for (int i = 0; i < 6; ++i) brute = brute * m;
  const StochasticMatrix squared = power_operator(base, 2);
  CHECK((power_operator(squared, 3).values - brute).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((power_operator(base, 6).values - brute).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("diffusion_map spectrum matches a brute-force eigen-oracle") {
  const Kernel k = gaussian_affinity(dist(random_points(12, 2, 8)), Bandwidth::fixed(1.0));
  const Embedding e = diffusion_map(k, 1, 3);
  const Vector deg = k.values.rowwise().sum();
  const Vector s = deg.cwiseSqrt().cwiseInverse();
  const oracle::EigenPairs ref = oracle::jacobi_eigen(s.asDiagonal() * k.values * s.asDiagonal());
  CHECK(std::abs(ref.values(0) - 1.0) <= 1e-12);
  for (int c = 0; c < 3; ++c) {
    CHECK(std::abs(e.spectrum(c) - ref.values(c + 1)) <= 1e-10);
    // psi = v / sqrt(deg); coordinates are lambda * psi up to sign.
    Vector psi = ref.vectors.col(c + 1).cwiseProduct(s) * ref.values(c + 1);
    const double sign = psi.dot(e.coords.col(c)) >= 0 ? 1.0 : -1.0;
    CHECK((sign * psi - e.coords.col(c)).cwiseAbs().maxCoeff() <= 1e-8);
  }
  CHECK(e.coords.allFinite());
}

TEST_CASE("diffusion_map on two disconnected blocks") {
  Matrix k = Matrix::Zero(6, 6);
  k.topLeftCorner(3, 3) = Matrix::Constant(3, 3, 0.8);
  k.bottomRightCorner(3, 3) = Matrix::Constant(3, 3, 0.6);
  k.diagonal().setOnes();
  const Embedding e = diffusion_map(kernel_of(k), 1, 2);
  CHECK(std::abs(e.spectrum(0) - 1.0) <= 1e-10);
  const Vector c0 = e.coords.col(0);
  CHECK(std::abs(c0(0) - c0(1)) <= 1e-10);
  CHECK(std::abs(c0(1) - c0(2)) <= 1e-10);
  CHECK(std::abs(c0(3) - c0(5)) <= 1e-10);
  CHECK(c0(0) * c0(3) < 0.0);
}

TEST_CASE("diffusion_map: doubling t scales coordinates by lambda^t") {
  const Kernel k = rfgap_blobs_kernel(20, 5);
  const Embedding a = diffusion_map(k, 2, 2);
  const Embedding b = diffusion_map(k, 4, 2);
  for (int c = 0; c < 2; ++c) {
    const double lt = std::pow(a.spectrum(c), 2);
    CHECK((b.coords.col(c) - lt * a.coords.col(c)).cwiseAbs().maxCoeff() <=
          1e-10 * std::max(1.0, a.coords.col(c).cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("spectral coordinates are sign-fixed") {
  const Embedding e = diffusion_map(rfgap_blobs_kernel(15, 6), 1, 2);
  for (int c = 0; c < 2; ++c) {
    Index at = 0;
    e.coords.col(c).cwiseAbs().maxCoeff(&at);
    CHECK(e.coords(at, c) > 0.0);
  }
}

TEST_CASE("von Neumann entropy and its knee") {
  const Vector ev = (Vector(4) << 1.0, 0.5, 0.5, 0.1).finished();
  const auto h = von_neumann_entropy(ev, 3);
  REQUIRE(h.size() == 3);
  const double total = 1.0 + 0.5 + 0.5 + 0.1;
  double h1 = 0.0;
  for (double v : {1.0, 0.5, 0.5, 0.1}) h1 -= v / total * std::log(v / total);
  CHECK(h[0] == doctest::Approx(h1).epsilon(1e-14));
  CHECK(h[1] < h[0]);

  std::vector<double> elbow;
  for (int t = 1; t <= 20; ++t) elbow.push_back(t <= 5 ? 10.0 - 2.0 * t : 0.0 - 0.01 * t);
  CHECK(knee_point(elbow) == 5);
  CHECK(knee_point({1.0, 1.0, 1.0}) == 1);
}

TEST_CASE("potential embedding separates two blobs") {
  const Dataset d = synthesize_blobs(25, 2, 2, 6.0, 3);
  ForestConfig cfg;
  cfg.n_trees = 100;
  const Kernel k = to_kernel(proximity_rfgap(fit_forest(d, cfg)));
  const Embedding e = potential_embedding(k, 2);
  CHECK(e.coords.allFinite());
  CHECK(e.config.at("t_mode") == "auto");
  const int t = std::stoi(e.config.at("t"));
  CHECK(t >= 1);
  CHECK(t <= 64);
  const DistanceMatrix u = potential_distances(power_operator(diffusion_operator(k), t), 1e-7);
  std::vector<double> within;
  std::vector<double> between;
  for (Index i = 0; i < d.n(); ++i)
    for (Index j = i + 1; j < d.n(); ++j)
      (d.classes[static_cast<std::size_t>(i)] == d.classes[static_cast<std::size_t>(j)] ? within : between)
          .push_back(u.values(i, j));
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  CHECK(median(between) > 2.0 * median(within));
}

TEST_CASE("potential embedding is insensitive to epsilon when P^t has no tiny entries") {
  const Kernel k = gaussian_affinity(dist(random_points(30, 2, 12)), Bandwidth::fixed(2.0));
  PotentialOptions a;
  a.t = 3;
  PotentialOptions b = a;
  b.epsilon = 1e-9;
  const StochasticMatrix pt = power_operator(diffusion_operator(k), 3);
  REQUIRE(pt.values.minCoeff() >= 0.01 / 30.0);
  const Embedding ea = potential_embedding(k, 2, a);
  const Embedding eb = potential_embedding(k, 2, b);
  CHECK(oracle::procrustes_error(ea.coords, eb.coords) < 1e-3);
}

TEST_CASE("Laplacian eigenmaps on a 4-node path") {
  const Kernel k = path_kernel(4);
  const Embedding e = laplacian_eigenmaps(k, 1);
  const Vector v = e.coords.col(0);
  const bool increasing = v(0) < v(1) && v(1) < v(2) && v(2) < v(3);
  const bool decreasing = v(0) > v(1) && v(1) > v(2) && v(2) > v(3);
  CHECK((increasing || decreasing));

  // Brute-force generalized problem via D^{-1/2} L D^{-1/2}.
  const Vector deg = k.values.rowwise().sum();
  const Matrix lap = Matrix(deg.asDiagonal()) - k.values;
  const Vector s = deg.cwiseSqrt().cwiseInverse();
  const oracle::EigenPairs ref = oracle::jacobi_eigen(s.asDiagonal() * lap * s.asDiagonal());
  // Ascending generalized eigenvalues: 0 is last in the descending oracle.
  CHECK(std::abs(ref.values(3)) <= 1e-12);
  CHECK(std::abs(e.spectrum(0) - ref.values(2)) <= 1e-10);
  const Vector ref_v = ref.vectors.col(2).cwiseProduct(s);
  const double cosine = std::abs(ref_v.dot(v)) / (ref_v.norm() * v.norm());
  CHECK(cosine == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Laplacian eigenmaps: constant vector and Deg-orthogonality") {
  const Kernel k = rfgap_blobs_kernel(20, 9);
  const Vector deg = k.values.rowwise().sum();
  const Matrix lap = Matrix(deg.asDiagonal()) - k.values;
  CHECK((lap * Vector::Ones(k.n())).cwiseAbs().maxCoeff() <= 1e-12);
  const Embedding e = laplacian_eigenmaps(k, 3);
  for (Index a = 0; a < 3; ++a) {
    CHECK(std::abs(e.coords.col(a).dot(deg)) <= 1e-8 * std::sqrt(deg.sum()));
    for (Index b = a + 1; b < 3; ++b) {
      const double ip = (e.coords.col(a).array() * deg.array() * e.coords.col(b).array()).sum();
      const double na = (e.coords.col(a).array().square() * deg.array()).sum();
      const double nb = (e.coords.col(b).array().square() * deg.array()).sum();
      CHECK(std::abs(ip) / std::sqrt(na * nb) <= 1e-8);
    }
  }
}

TEST_CASE("Laplacian eigenmaps on a disconnected kernel warns") {
  Matrix k = Matrix::Identity(6, 6);
  for (Index i : {0, 3}) {
    k(i, i + 1) = k(i + 1, i) = 1.0;
    k(i + 1, i + 2) = k(i + 2, i + 1) = 1.0;
  }
  ScopedWarningSink sink(capture());
  const Embedding e = laplacian_eigenmaps(kernel_of(k), 2);
  CHECK_FALSE(captured.empty());
  CHECK(std::abs(e.spectrum(0)) <= 1e-10);
  CHECK(std::abs(e.coords(0, 0) - e.coords(2, 0)) <= 1e-10);
}

TEST_CASE("Isomap on a line reproduces the line") {
  Matrix x(8, 1);
  x << 0.0, 0.5, 1.25, 2.0, 3.5, 4.0, 6.0, 7.5;
  for (int k : {1, 2, 4}) {
    const Embedding e = isomap(dist(x), k, 1);
    CHECK(oracle::procrustes_error(e.coords, x) <= 1e-8);
  }
}

TEST_CASE("Isomap geodesics follow the path") {
  const Matrix folded{{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}};
  const NeighborGraph g = knn_graph(dist(folded), 1);
  const Matrix geo = geodesic_distances(g);
  CHECK(geo(0, 2) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(geo(0, 2) > std::sqrt(2.0));
  CHECK(geo == geo.transpose());
}

TEST_CASE("Isomap circle antipodes are half the circumference apart") {
  const Index n = 100;
  Rng rng(21);
  Matrix x(n, 2);
  for (Index i = 0; i < n; ++i) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    x(i, 0) = std::cos(a) + 0.01 * rng.normal();
    x(i, 1) = std::sin(a) + 0.01 * rng.normal();
  }
  const Matrix geo = geodesic_distances(knn_graph(dist(x), 4));
  const double ratio = geo(0, n / 2) / (x.row(0) - x.row(n / 2)).norm();
  CHECK(ratio >= std::numbers::pi / 2 * 0.8);
  CHECK(ratio <= std::numbers::pi / 2 * 1.2);
}

TEST_CASE("Isomap bridges disconnected graphs unless strict") {
  Matrix x(6, 1);
  x << 0.0, 0.1, 0.2, 10.0, 10.1, 10.2;
  ScopedWarningSink sink(capture());
  const Embedding e = isomap(dist(x), 1, 1);
  REQUIRE_FALSE(e.notes.empty());
  CHECK(e.notes.front().find("bridged") != std::string::npos);
  CHECK(oracle::procrustes_error(e.coords, x) <= 1e-8);
  CHECK_THROWS(isomap(dist(x), 1, 1, IsomapOptions{true}));

  NeighborGraph g = knn_graph(dist(x), 1);
  const auto added = bridge_components(g, dist(x));
  REQUIRE(added.size() == 1);
  CHECK(std::get<0>(added[0]) == 2);
  CHECK(std::get<1>(added[0]) == 3);
  CHECK(g.connected());
}

TEST_CASE("classical MDS recovers planar configurations") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Matrix x = random_points(15, 2, seed);
    const Embedding e = classical_mds(dist(x), 2);
    CHECK(oracle::procrustes_error(e.coords, x) <= 1e-8);
    for (Index i = 2; i < e.spectrum.size(); ++i) {
      CHECK(std::abs(e.spectrum(i)) <= 1e-10 * e.spectrum(0));
    }
  }
}

TEST_CASE("classical MDS of equal distances is an equilateral triangle") {
  const DistanceMatrix d{Matrix{{0, 1, 1}, {1, 0, 1}, {1, 1, 0}}};
  const Embedding e = classical_mds(d, 2);
  for (Index i = 0; i < 3; ++i)
    for (Index j = i + 1; j < 3; ++j)
      CHECK((e.coords.row(i) - e.coords.row(j)).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("classical MDS reduces the dimension when the spectrum runs out") {
  const Matrix x = random_points(10, 2, 4);
  ScopedWarningSink sink(capture());
  const Embedding e = classical_mds(dist(x), 4);
  CHECK(e.d() == 2);
  CHECK_FALSE(captured.empty());
}

TEST_CASE("classical MDS reports negative eigenvalue mass") {
  // Four points where one pair violates the triangle inequality badly.
  const DistanceMatrix d{Matrix{{0, 1, 1, 5}, {1, 0, 1, 1}, {1, 1, 0, 1}, {5, 1, 1, 0}}};
  const Embedding e = classical_mds(d, 2);
  CHECK(e.negative_mass > 0.0);
  CHECK(e.negative_mass < 1.0);
}

TEST_CASE("stress majorization") {
  SUBCASE("starting at the optimum stops at once") {
    const Matrix x = random_points(10, 2, 5);
    Embedding init;
    init.coords = x;
    const Embedding e = stress_majorization(dist(x), 2, init);
    CHECK(e.trace.front() <= 1e-20);
    CHECK(e.trace.size() <= 2u);
  }
  SUBCASE("square from a random start") {
    const Matrix square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    Embedding init;
    init.coords = random_points(4, 2, 6);
    SmacofOptions opts;
    opts.max_iter = 5000;
    opts.tol = 1e-14;
    const Embedding e = stress_majorization(dist(square), 2, init, opts);
    CHECK(raw_stress(dist(square), e.coords) < 1e-6);
    CHECK(oracle::procrustes_error(e.coords, square) < 1e-3);
  }
  SUBCASE("stress never increases from random starts") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const DistanceMatrix d = dist(random_points(12, 4, 1000 + seed));
      Embedding init;
      init.coords = random_points(12, 2, 2000 + seed);
      SmacofOptions opts;
      opts.tol = 0.0;
      opts.max_iter = 50;
      const Embedding e = stress_majorization(d, 2, init, opts);
      for (std::size_t i = 1; i < e.trace.size(); ++i) {
        CHECK(e.trace[i] <= e.trace[i - 1] * (1.0 + 1e-12));
      }
    }
  }
  SUBCASE("raw stress by hand") {
    const Matrix y{{0, 0}, {3, 4}};
    const DistanceMatrix d{Matrix{{0, 4}, {4, 0}}};
    CHECK(raw_stress(d, y) == 1.0);
  }
}

TEST_CASE("kernel PCA of a linear kernel matches PCA scores") {
  Matrix x = random_points(12, 3, 7);
  x.col(0) *= 3.0;
  x.col(1) *= 2.0;
  x = x.rowwise() - x.colwise().mean();
  const Embedding e = kernel_pca(kernel_of(x * x.transpose()), 2);
  const oracle::EigenPairs cov = oracle::jacobi_eigen(x.transpose() * x);
  for (int c = 0; c < 2; ++c) {
    const Vector scores = x * cov.vectors.col(c);
    const double sign = scores.dot(e.coords.col(c)) >= 0 ? 1.0 : -1.0;
    CHECK((sign * scores - e.coords.col(c)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("kernel PCA: centred rows sum to zero and d = 1 splits two clusters") {
  const Kernel k = rfgap_blobs_kernel(20, 10);
  const Matrix centred = double_center(k.values);
  CHECK(centred.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10);
  const Embedding e = kernel_pca(k, 1);
  const Dataset d = synthesize_blobs(20, 2, 2, 6.0, 10);
  const bool first = e.coords(0, 0) > 0.0;
  for (Index i = 0; i < d.n(); ++i) {
    CHECK((e.coords(i, 0) > 0.0) == (first == (d.classes[static_cast<std::size_t>(i)] ==
                                               d.classes[0])));
  }
}

TEST_CASE("t-SNE input calibration") {
  const DistanceMatrix d = dist(random_points(40, 3, 13));
  const double perplexity = 8.0;
  const Matrix cond = tsne_conditional_probabilities(d, perplexity);
  for (Index i = 0; i < cond.rows(); ++i) {
    CHECK(std::abs(cond.row(i).sum() - 1.0) <= 1e-10);
    CHECK(cond(i, i) == 0.0);
    double h = 0.0;
    for (Index j = 0; j < cond.cols(); ++j)
      if (cond(i, j) > 0.0) h -= cond(i, j) * std::log(cond(i, j));
    CHECK(std::abs(h - std::log(perplexity)) <= 1e-4);
  }
  const Matrix joint = tsne_joint_probabilities(d, perplexity);
  CHECK(joint == joint.transpose());
  CHECK(std::abs(joint.sum() - 1.0) <= 1e-10);
}

TEST_CASE("t-SNE degenerate rows become uniform with a warning") {
  const DistanceMatrix d{Matrix::Constant(5, 5, 1.0) - Matrix::Identity(5, 5)};
  ScopedWarningSink sink(capture());
  const Matrix cond = tsne_conditional_probabilities(d, 2.0);
  CHECK_FALSE(captured.empty());
  CHECK(std::abs(cond(0, 1) - 0.25) <= 1e-12);
}

TEST_CASE("t-SNE gradient matches central differences") {
  const Index n = 6;
  const Matrix p = tsne_joint_probabilities(dist(random_points(n, 3, 14)), 1.5);
  const Matrix y = random_points(n, 2, 15);
  const Matrix analytic = tsne_gradient(p, y);
  const Matrix numeric = oracle::finite_difference_gradient(
      [&](const Matrix& z) { return tsne_kl_divergence(p, z); }, y, 1e-5);
  const double rel = (analytic - numeric).norm() / numeric.norm();
  CHECK(rel <= 1e-5);
}

TEST_CASE("t-SNE optimization lowers KL and is deterministic") {
  const Dataset data = synthesize_blobs(20, 2, 1, 4.0, 16);
  const DistanceMatrix d = euclidean_distances(data);
  TsneOptions opts;
  opts.perplexity = 5.0;
  opts.seed = 3;
  opts.iterations = 400;
  const Embedding a = tsne(d, opts);
  REQUIRE(a.trace.size() == 2u);
  CHECK(a.trace.back() < a.trace.front());
  const Embedding b = tsne(d, opts);
  CHECK(a.coords == b.coords);
  opts.seed = 4;
  CHECK(tsne(d, opts).coords != a.coords);
}

TEST_CASE("t-SNE caps the perplexity") {
  const DistanceMatrix d = dist(random_points(10, 2, 17));
  TsneOptions opts;
  opts.iterations = 10;
  ScopedWarningSink sink(capture());
  const Embedding e = tsne(d, opts);
  CHECK_FALSE(captured.empty());
  CHECK(std::stod(e.config.at("perplexity")) == doctest::Approx(3.0));
}

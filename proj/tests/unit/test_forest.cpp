#include "doctest.h"

#include "rfgap/forest.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>
#include <string>

using namespace rfgap;

namespace {

std::string serialize(const Forest& f) {
  std::ostringstream out;
  save_forest(f, out);
  return out.str();
}

// (feature, split rank) of every internal node in preorder.
std::vector<std::pair<int, int>> split_sequence(const Forest& f) {
  std::vector<std::pair<int, int>> out;
  for (int t = 0; t < f.n_trees(); ++t) {
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const TreeNode& node = f.tree(t).nodes[static_cast<std::size_t>(stack.back())];
      stack.pop_back();
      if (node.is_leaf()) continue;
      out.emplace_back(node.feature, node.split_rank);
      stack.push_back(node.right);
      stack.push_back(node.left);
    }
  }
  return out;
}

Dataset tiny_regression(std::vector<double> x, std::vector<double> y) {
  Dataset d;
  d.label_kind = LabelKind::regression;
  d.features = Matrix(static_cast<Index>(x.size()), 1);
  for (std::size_t i = 0; i < x.size(); ++i) d.features(static_cast<Index>(i), 0) = x[i];
  d.targets = std::move(y);
  d.feature_names = {"x"};
  return d;
}

}  // namespace

TEST_CASE("config defaults and validation") {
  const Dataset c = synthesize_blobs(10, 3, 6, 2.0, 1);  // p = 9
  const ForestConfig rc = ForestConfig{}.resolved(c);
  CHECK(rc.n_trees == 500);
  CHECK(*rc.mtry == 3);
  CHECK(*rc.min_leaf == 1);
  CHECK_FALSE(rc.max_depth.has_value());
  const Dataset r = synthesize_regression_gradient(50, 7, 1);
  const ForestConfig rr = ForestConfig{}.resolved(r);
  CHECK(*rr.mtry == 3);  // ceil(7 / 3)
  CHECK(*rr.min_leaf == 5);

  ForestConfig bad;
  bad.mtry = 10;
  CHECK_THROWS_AS(bad.resolved(c), std::invalid_argument);
  bad = ForestConfig{};
  bad.n_trees = 0;
  CHECK_THROWS_AS(bad.resolved(c), std::invalid_argument);
  bad = ForestConfig{};
  bad.min_leaf = 0;
  CHECK_THROWS_AS(bad.resolved(c), std::invalid_argument);
}

TEST_CASE("bootstrap invariants") {
  const Dataset d = synthesize_blobs(60, 2, 2, 3.0, 4);
  ForestConfig cfg;
  cfg.n_trees = 50;
  cfg.seed = 9;
  const Forest f = fit_forest(d, cfg);
  for (int t = 0; t < f.n_trees(); ++t) {
    const auto counts = f.inbag_counts(t);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0u) == static_cast<unsigned>(d.n()));
    Index oob = 0;
    for (Index i = 0; i < d.n(); ++i) {
      CHECK(f.is_oob(t, i) == (f.inbag(t, i) == 0));
      oob += f.is_oob(t, i) ? 1 : 0;
    }
    const double frac = static_cast<double>(oob) / static_cast<double>(d.n());
    CHECK(frac >= 0.30);
    CHECK(frac <= 0.44);
    for (int leaf = 0; leaf < f.tree(t).n_leaves(); ++leaf) {
      CHECK(f.tree(t).leaf_mass[static_cast<std::size_t>(leaf)] >= 1u);
    }
  }
}

TEST_CASE("terminal nodes respect min_leaf") {
  const Dataset d = synthesize_regression_gradient(120, 4, 2);
  ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.min_leaf = 7;
  const Forest f = fit_forest(d, cfg);
  for (int t = 0; t < f.n_trees(); ++t) {
    for (auto mass : f.tree(t).leaf_mass) CHECK(mass >= 7u);
  }
}

TEST_CASE("two observations, one tree") {
  Dataset d;
  d.features = Matrix{{0.0}, {1.0}};
  d.classes = {0, 1};
  d.class_names = {"a", "b"};
  d.feature_names = {"x"};
  ForestConfig cfg;
  cfg.n_trees = 1;
  const Forest f = fit_forest(d, cfg);
  const auto counts = f.inbag_counts(0);
  CHECK(counts[0] + counts[1] == 2u);
  CHECK(f.tree(0).nodes.size() <= 3u);
}

TEST_CASE("fit errors and the single-class warning") {
  Dataset one;
  one.features = Matrix{{1.0}};
  one.classes = {0};
  one.class_names = {"a"};
  one.feature_names = {"x"};
  CHECK_THROWS(fit_forest(one, ForestConfig{}));

  Dataset single = synthesize_blobs(10, 1, 1, 1.0, 2);
  std::fill(single.classes.begin(), single.classes.end(), 0);
  single.class_names = {"only"};
  std::vector<std::string> warnings;
  ScopedWarningSink sink([&](std::string_view m) { warnings.emplace_back(m); });
  ForestConfig cfg;
  cfg.n_trees = 3;
  const Forest f = fit_forest(single, cfg);
  CHECK_FALSE(warnings.empty());
  for (int t = 0; t < f.n_trees(); ++t) CHECK(f.tree(t).n_leaves() == 1);
}

TEST_CASE("well separated blobs are learned") {
  const Dataset d = synthesize_blobs(50, 2, 2, 10.0, 1);
  ForestConfig cfg;
  cfg.n_trees = 100;
  const Forest f = fit_forest(d, cfg);
  const OobReport r = oob_predict(f, d);
  CHECK(r.oob_score >= 0.95);
}

TEST_CASE("determinism, including across worker counts") {
  const Dataset d = synthesize_blobs(40, 2, 3, 2.0, 5);
  ForestConfig cfg;
  cfg.n_trees = 40;
  cfg.seed = 17;
  const std::string a = serialize(fit_forest(d, cfg, 1));
  CHECK(a == serialize(fit_forest(d, cfg, 1)));
  CHECK(a == serialize(fit_forest(d, cfg, 4)));
  cfg.seed = 18;
  CHECK(a != serialize(fit_forest(d, cfg, 1)));
}

TEST_CASE("oob_predict: uncovered observations and vote fractions") {
  const Dataset d = synthesize_blobs(20, 2, 1, 3.0, 3);
  ForestConfig cfg;
  cfg.n_trees = 1;
  const Forest f = fit_forest(d, cfg);
  const OobReport r = oob_predict(f, d);
  for (Index i = 0; i < d.n(); ++i) {
    CHECK(r.covered[static_cast<std::size_t>(i)] == f.is_oob(0, i));
  }

  cfg.n_trees = 60;
  const Forest g = fit_forest(d, cfg);
  const OobReport rg = oob_predict(g, d);
  for (Index i = 0; i < d.n(); ++i) {
    if (rg.covered[static_cast<std::size_t>(i)]) {
      CHECK(std::abs(rg.votes.row(i).sum() - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("regression leaf value is the multiplicity-weighted mean") {
  const Dataset d = tiny_regression({0.0, 0.0}, {2.0, 4.0});
  const ForestConfig cfg = ForestConfig{}.resolved(d);
  const std::vector<std::uint32_t> inbag{1, 3};
  const Tree t = grow_tree(d, cfg, inbag, 1);
  REQUIRE(t.n_leaves() == 1);
  CHECK(t.leaf_prediction[0] == doctest::Approx(3.5).epsilon(1e-15));
  CHECK(t.leaf_mass[0] == 4u);
}

TEST_CASE("blobs coverage with 500 trees") {
  const Dataset d = synthesize_blobs(50, 2, 2, 3.0, 8);
  const Forest f = fit_forest(d, ForestConfig{});
  CHECK(oob_predict(f, d).coverage >= 0.99);
}

TEST_CASE("leaf_assignments reproduce training leaves") {
  Dataset d = synthesize_blobs(30, 2, 2, 2.0, 6);
  // Duplicate observation 0 as the last row.
  d.features.conservativeResize(d.n() + 1, Eigen::NoChange);
  d.features.row(d.n() - 1) = d.features.row(0);
  d.classes.push_back(d.classes[0]);
  ForestConfig cfg;
  cfg.n_trees = 25;
  const Forest f = fit_forest(d, cfg);
  for (Index i = 0; i < d.n(); ++i) {
    const Vector x = d.features.row(i);
    const auto leaves = leaf_assignments(f, std::span<const double>(x.data(), x.size()));
    for (int t = 0; t < f.n_trees(); ++t) CHECK(leaves[static_cast<std::size_t>(t)] == f.leaf_of(t, i));
  }
  for (int t = 0; t < f.n_trees(); ++t) CHECK(f.leaf_of(t, 0) == f.leaf_of(t, d.n() - 1));
  const Vector wrong = Vector::Zero(3);
  CHECK_THROWS(leaf_assignments(f, std::span<const double>(wrong.data(), wrong.size())));
}

TEST_CASE("perturbing a feature no split uses leaves assignments unchanged") {
  const Dataset d = synthesize_blobs(30, 1, 5, 3.0, 2);
  ForestConfig cfg;
  cfg.n_trees = 2;
  cfg.max_depth = 1;
  const Forest f = fit_forest(d, cfg);
  std::set<int> used;
  for (int t = 0; t < f.n_trees(); ++t)
    for (const auto& node : f.tree(t).nodes)
      if (!node.is_leaf()) used.insert(node.feature);
  int unused = -1;
  for (int c = 0; c < d.p(); ++c)
    if (!used.count(c)) { unused = c; break; }
  REQUIRE(unused >= 0);
  for (Index i = 0; i < d.n(); ++i) {
    Vector x = d.features.row(i);
    const auto before = leaf_assignments(f, std::span<const double>(x.data(), x.size()));
    x(unused) += 1000.0;
    CHECK(leaf_assignments(f, std::span<const double>(x.data(), x.size())) == before);
  }
}

TEST_CASE("strictly increasing feature transforms leave the forest structure unchanged") {
  const Dataset d = synthesize_blobs(40, 2, 2, 2.0, 11);
  Dataset warped = d;
  warped.features.col(0) = d.features.col(0).array().exp();
  warped.features.col(2) = d.features.col(2).array().cube() + 3.0;
  ForestConfig cfg;
  cfg.n_trees = 30;
  cfg.seed = 3;
  const Forest a = fit_forest(d, cfg);
  const Forest b = fit_forest(warped, cfg);
  CHECK(split_sequence(a) == split_sequence(b));
  // In-bag rows follow the same ranks; an out-of-bag value lying between two
  // in-bag values may land on either side of a warped midpoint.
  for (int t = 0; t < a.n_trees(); ++t)
    for (Index i = 0; i < d.n(); ++i)
      if (!a.is_oob(t, i)) CHECK(a.leaf_of(t, i) == b.leaf_of(t, i));
}

TEST_CASE("splits are midpoints and route x <= threshold left") {
  const Dataset d = tiny_regression({1.0, 2.0, 3.0, 10.0, 11.0, 12.0},
                                    {0.0, 0.0, 0.0, 5.0, 5.0, 5.0});
  ForestConfig cfg;
  cfg.min_leaf = 1;
  const ForestConfig r = cfg.resolved(d);
  const std::vector<std::uint32_t> inbag(6, 1);
  const Tree t = grow_tree(d, r, inbag, 0);
  REQUIRE_FALSE(t.nodes[0].is_leaf());
  CHECK(t.nodes[0].threshold == 6.5);
  CHECK(t.nodes[0].split_rank == 2);
  const double at[] = {6.5};
  const double low[] = {1.0};
  const double above[] = {6.5000001};
  const double high[] = {12.0};
  CHECK(t.route(at) == t.route(low));
  CHECK(t.route(above) == t.route(high));
  CHECK(t.route(at) != t.route(above));
}

TEST_CASE("argmax_lowest breaks ties toward the lowest index") {
  const double v[] = {0.2, 0.4, 0.4};
  CHECK(argmax_lowest(v) == 1);
  const double w[] = {0.5, 0.5 + 1e-14, 0.0};
  CHECK(argmax_lowest(w) == 0);
}

TEST_CASE("save and load round trip exactly") {
  const Dataset d = synthesize_regression_gradient(60, 4, 3);
  ForestConfig cfg;
  cfg.n_trees = 15;
  cfg.seed = 12;
  const Forest f = fit_forest(d, cfg);
  const std::string text = serialize(f);
  std::istringstream in(text);
  const Forest g = load_forest(in);
  CHECK(serialize(g) == text);
  const OobReport a = oob_predict(f, d);
  const OobReport b = oob_predict(g, d);
  CHECK(a.prediction == b.prediction);
  std::istringstream garbage("not a forest");
  CHECK_THROWS(load_forest(garbage));
}

#pragma once

#include "rfgap/common.hpp"
#include "rfgap/data.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace rfgap {

enum class Task { classification, regression };

Task task_for(const Dataset& d);

// Unset optionals take the conventional defaults when resolved against a
// dataset: mtry = ceil(sqrt(p)) for classification and ceil(p/3) for
// regression, min_leaf = 1 (classification) or 5 (regression), no depth cap.
struct ForestConfig {
  int n_trees = 500;
  std::optional<int> mtry;
  std::optional<int> min_leaf;
  std::optional<int> max_depth;
  std::uint64_t seed = 0;

  // Fills defaults for `d` and validates; throws std::invalid_argument.
  ForestConfig resolved(const Dataset& d) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a terminal node
  double threshold = 0.0;
  // Position of the split among the node's sorted distinct in-bag values of
  // `feature`: rank r separates the r+1 smallest values from the rest.
  int split_rank = -1;
  int left = -1;
  int right = -1;
  int leaf = -1;  // terminal-node id, contiguous from 0
  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<std::uint32_t> leaf_mass;  // in-bag multiplicity per leaf
  // Classification: n_classes multiplicity-weighted class fractions per leaf.
  // Regression: the multiplicity-weighted in-bag mean, one per leaf.
  std::vector<double> leaf_prediction;

  int n_leaves() const { return static_cast<int>(leaf_mass.size()); }
  // Observations with x[feature] <= threshold go left.
  int route(std::span<const double> x) const;
};

// A trained ensemble together with the bookkeeping the proximity variants
// need: per-tree bootstrap multiplicities and the terminal node of every
// training observation. Immutable once built.
class Forest {
 public:
  Forest(ForestConfig config, Task task, int n_classes, Index n_features,
         std::vector<double> labels, std::vector<Tree> trees,
         std::vector<std::vector<std::uint32_t>> inbag,
         std::vector<std::vector<std::int32_t>> leaf_of);

  const ForestConfig& config() const { return config_; }
  Task task() const { return task_; }
  int n_classes() const { return n_classes_; }
  Index n_observations() const { return static_cast<Index>(labels_.size()); }
  Index n_features() const { return n_features_; }
  int n_trees() const { return static_cast<int>(trees_.size()); }

  const Tree& tree(int t) const { return trees_[static_cast<std::size_t>(t)]; }
  std::uint32_t inbag(int t, Index j) const {
    return inbag_[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
  }
  int leaf_of(int t, Index i) const {
    return leaf_of_[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)];
  }
  bool is_oob(int t, Index i) const { return inbag(t, i) == 0; }
  std::span<const std::uint32_t> inbag_counts(int t) const {
    return inbag_[static_cast<std::size_t>(t)];
  }
  std::span<const std::int32_t> leaves(int t) const {
    return leaf_of_[static_cast<std::size_t>(t)];
  }
  // Trees in which observation i is out-of-bag, ascending.
  std::vector<int> oob_trees(Index i) const;
  // Training labels: class ids or targets.
  const std::vector<double>& labels() const { return labels_; }

 private:
  ForestConfig config_;
  Task task_;
  int n_classes_;
  Index n_features_;
  std::vector<double> labels_;
  std::vector<Tree> trees_;
  std::vector<std::vector<std::uint32_t>> inbag_;
  std::vector<std::vector<std::int32_t>> leaf_of_;
};

// Trains trees independently; tree t draws from a stream keyed by
// (config.seed, t), so the result does not depend on `jobs`.
Forest fit_forest(const Dataset& d, const ForestConfig& config, int jobs = 1);

// Grows one tree on the given bootstrap multiplicities. Exposed for tests.
Tree grow_tree(const Dataset& d, const ForestConfig& resolved, std::span<const std::uint32_t> inbag,
               std::uint64_t tree_seed);

struct OobReport {
  Task task = Task::classification;
  // Classification: n x C averaged leaf class fractions over OOB trees.
  Matrix votes;
  // Argmax class id (classification) or averaged leaf mean (regression).
  std::vector<double> prediction;
  std::vector<bool> covered;
  double oob_score = 0.0;  // accuracy or coefficient of determination
  double coverage = 0.0;
};

OobReport oob_predict(const Forest& f, const Dataset& d);

// Terminal-node id of x in every tree.
std::vector<int> leaf_assignments(const Forest& f, std::span<const double> x);

// Argmax with ties resolved toward the lowest index; entries within `tol` of
// the maximum count as tied.
int argmax_lowest(std::span<const double> values, double tol = 1e-12);

// Versioned text format; doubles are stored as hexadecimal floats so a
// save/load round trip is exact.
void save_forest(const Forest& f, std::ostream& out);
Forest load_forest(std::istream& in);

}  // namespace rfgap

#include "rfgap/forest.hpp"

#include "rfgap/parallel.hpp"
#include "rfgap/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rfgap {
namespace {

struct Sample {
  Index row;
  std::uint32_t weight;
};

struct SplitChoice {
  bool found = false;
  int feature = -1;
  int rank = -1;
  double threshold = 0.0;
  double score = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& d, const ForestConfig& cfg, std::uint64_t seed)
      : d_(d), cfg_(cfg), rng_(seed), n_classes_(d.is_classification() ? d.n_classes() : 0) {}

  Tree build(std::span<const std::uint32_t> inbag) {
    std::vector<Sample> samples;
    for (Index i = 0; i < d_.n(); ++i) {
      const std::uint32_t w = inbag[static_cast<std::size_t>(i)];
      if (w > 0) {
        samples.push_back({i, w});
      }
    }
    tree_.nodes.emplace_back();
    grow(0, std::move(samples), 0);
    return std::move(tree_);
  }

 private:
  double label(Index i) const { return d_.label_value(i); }

  void make_leaf(int node, const std::vector<Sample>& samples) {
    std::uint64_t mass = 0;
    for (const auto& s : samples) {
      mass += s.weight;
    }
    const int id = tree_.n_leaves();
    tree_.nodes[static_cast<std::size_t>(node)].leaf = id;
    tree_.leaf_mass.push_back(static_cast<std::uint32_t>(mass));
    if (n_classes_ > 0) {
      std::vector<double> counts(static_cast<std::size_t>(n_classes_), 0.0);
      for (const auto& s : samples) {
        counts[static_cast<std::size_t>(d_.classes[static_cast<std::size_t>(s.row)])] += s.weight;
      }
      for (double c : counts) {
        tree_.leaf_prediction.push_back(c / static_cast<double>(mass));
      }
    } else {
      double sum = 0.0;
      for (const auto& s : samples) {
        sum += s.weight * label(s.row);
      }
      tree_.leaf_prediction.push_back(sum / static_cast<double>(mass));
    }
  }

  bool is_pure(const std::vector<Sample>& samples) const {
    const double first = label(samples.front().row);
    return std::all_of(samples.begin(), samples.end(),
                       [&](const Sample& s) { return label(s.row) == first; });
  }

  // Parent-node value of the split score, used to scale the tie tolerance.
  double node_score(const std::vector<Sample>& samples) const {
    double w = 0.0;
    if (n_classes_ > 0) {
      std::vector<double> counts(static_cast<std::size_t>(n_classes_), 0.0);
      for (const auto& s : samples) {
        counts[static_cast<std::size_t>(d_.classes[static_cast<std::size_t>(s.row)])] += s.weight;
        w += s.weight;
      }
      double sq = 0.0;
      for (double c : counts) {
        sq += c * c;
      }
      return sq / w;
    }
    double sum = 0.0;
    for (const auto& s : samples) {
      sum += s.weight * label(s.row);
      w += s.weight;
    }
    return sum * sum / w;
  }

  // Best split on one feature. Score is sum_c L_c^2/wL + sum_c R_c^2/wR for
  // Gini and sL^2/wL + sR^2/wR for variance reduction: maximizing either is
  // equivalent to maximizing the impurity decrease.
  SplitChoice best_split_on(int feature, std::vector<Sample>& samples, double tie_tol) const {
    std::stable_sort(samples.begin(), samples.end(), [&](const Sample& a, const Sample& b) {
      return d_.features(a.row, feature) < d_.features(b.row, feature);
    });
    const auto k = static_cast<std::size_t>(std::max(n_classes_, 1));
    std::vector<double> left(k, 0.0);
    std::vector<double> total(k, 0.0);
    double w_total = 0.0;
    for (const auto& s : samples) {
      const std::size_t slot =
          n_classes_ > 0 ? static_cast<std::size_t>(d_.classes[static_cast<std::size_t>(s.row)]) : 0;
      total[slot] += n_classes_ > 0 ? s.weight : s.weight * label(s.row);
      w_total += s.weight;
    }
    const auto min_leaf = static_cast<double>(*cfg_.min_leaf);
    SplitChoice best;
    double w_left = 0.0;
    int rank = -1;
    for (std::size_t pos = 0; pos + 1 < samples.size(); ++pos) {
      const auto& s = samples[pos];
      const std::size_t slot =
          n_classes_ > 0 ? static_cast<std::size_t>(d_.classes[static_cast<std::size_t>(s.row)]) : 0;
      left[slot] += n_classes_ > 0 ? s.weight : s.weight * label(s.row);
      w_left += s.weight;
      const double v = d_.features(s.row, feature);
      const double next = d_.features(samples[pos + 1].row, feature);
      if (!(v < next)) {
        continue;
      }
      ++rank;
      const double w_right = w_total - w_left;
      if (w_left < min_leaf || w_right < min_leaf) {
        continue;
      }
      double score = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double r = total[c] - left[c];
        score += left[c] * left[c] / w_left + r * r / w_right;
      }
      if (!best.found || score > best.score + tie_tol) {
        double threshold = v + 0.5 * (next - v);
        if (!(threshold < next)) {
          threshold = v;
        }
        best = {true, feature, rank, threshold, score};
      }
    }
    return best;
  }

  void grow(int node, std::vector<Sample> samples, int depth) {
    std::uint64_t mass = 0;
    for (const auto& s : samples) {
      mass += s.weight;
    }
    const bool depth_capped = cfg_.max_depth && depth >= *cfg_.max_depth;
    if (depth_capped || mass < 2 * static_cast<std::uint64_t>(*cfg_.min_leaf) || is_pure(samples)) {
      make_leaf(node, samples);
      return;
    }

    const double tie_tol = 1e-12 * std::abs(node_score(samples));
    const int p = static_cast<int>(d_.p());
    std::vector<int> pool(static_cast<std::size_t>(p));
    std::iota(pool.begin(), pool.end(), 0);
    SplitChoice best;
    int evaluated = 0;
    // Draw features in random order, skipping ones that are constant within
    // the node, until mtry usable features have been tried.
    for (int drawn = 0; drawn < p && evaluated < *cfg_.mtry; ++drawn) {
      const auto j = drawn + static_cast<int>(rng_.uniform_index(static_cast<std::uint64_t>(p - drawn)));
      std::swap(pool[static_cast<std::size_t>(drawn)], pool[static_cast<std::size_t>(j)]);
      const int feature = pool[static_cast<std::size_t>(drawn)];
      const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                                [&](const Sample& a, const Sample& b) {
                                                  return d_.features(a.row, feature) <
                                                         d_.features(b.row, feature);
                                                });
      if (!(d_.features(lo->row, feature) < d_.features(hi->row, feature))) {
        continue;
      }
      ++evaluated;
      const SplitChoice candidate = best_split_on(feature, samples, tie_tol);
      if (!candidate.found) {
        continue;
      }
      const bool better = !best.found || candidate.score > best.score + tie_tol ||
                          (std::abs(candidate.score - best.score) <= tie_tol &&
                           (candidate.feature < best.feature ||
                            (candidate.feature == best.feature &&
                             candidate.threshold < best.threshold)));
      if (better) {
        best = candidate;
      }
    }
    if (!best.found) {
      make_leaf(node, samples);
      return;
    }

    std::vector<Sample> left_samples;
    std::vector<Sample> right_samples;
    for (const auto& s : samples) {
      (d_.features(s.row, best.feature) <= best.threshold ? left_samples : right_samples).push_back(s);
    }
    std::sort(left_samples.begin(), left_samples.end(),
              [](const Sample& a, const Sample& b) { return a.row < b.row; });
    std::sort(right_samples.begin(), right_samples.end(),
              [](const Sample& a, const Sample& b) { return a.row < b.row; });
    const int left = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    const int right = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    auto& n = tree_.nodes[static_cast<std::size_t>(node)];
    n.feature = best.feature;
    n.threshold = best.threshold;
    n.split_rank = best.rank;
    n.left = left;
    n.right = right;
    samples.clear();
    samples.shrink_to_fit();
    grow(left, std::move(left_samples), depth + 1);
    grow(right, std::move(right_samples), depth + 1);
  }

  const Dataset& d_;
  const ForestConfig& cfg_;
  Rng rng_;
  int n_classes_;
  Tree tree_;
};

constexpr std::uint64_t kBootstrapStream = 0;
constexpr std::uint64_t kSplitStream = 1;

}  // namespace

Task task_for(const Dataset& d) {
  return d.is_classification() ? Task::classification : Task::regression;
}

ForestConfig ForestConfig::resolved(const Dataset& d) const {
  ForestConfig out = *this;
  const auto p = static_cast<int>(d.p());
  const bool classification = d.is_classification();
  if (!out.mtry) {
    out.mtry = classification ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))))
                              : static_cast<int>(std::ceil(p / 3.0));
    out.mtry = std::clamp(*out.mtry, 1, p);
  }
  if (!out.min_leaf) {
    out.min_leaf = classification ? 1 : 5;
  }
  if (out.n_trees < 1) {
    throw std::invalid_argument("forest: n_trees must be >= 1");
  }
  if (*out.mtry < 1 || *out.mtry > p) {
    throw std::invalid_argument("forest: mtry must be in [1, " + std::to_string(p) + "]");
  }
  if (*out.min_leaf < 1) {
    throw std::invalid_argument("forest: min_leaf must be >= 1");
  }
  if (out.max_depth && *out.max_depth < 0) {
    throw std::invalid_argument("forest: max_depth must be >= 0");
  }
  return out;
}

int Tree::route(std::span<const double> x) const {
  int node = 0;
  while (!nodes[static_cast<std::size_t>(node)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(node)];
    node = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(node)].leaf;
}

Forest::Forest(ForestConfig config, Task task, int n_classes, Index n_features,
               std::vector<double> labels, std::vector<Tree> trees,
               std::vector<std::vector<std::uint32_t>> inbag,
               std::vector<std::vector<std::int32_t>> leaf_of)
    : config_(config),
      task_(task),
      n_classes_(n_classes),
      n_features_(n_features),
      labels_(std::move(labels)),
      trees_(std::move(trees)),
      inbag_(std::move(inbag)),
      leaf_of_(std::move(leaf_of)) {
  const auto n = labels_.size();
  if (n < 2) {
    throw std::invalid_argument("forest: need at least 2 observations");
  }
  if (trees_.empty() || inbag_.size() != trees_.size() || leaf_of_.size() != trees_.size()) {
    throw std::invalid_argument("forest: tree, in-bag and leaf tables must have equal length >= 1");
  }
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    if (inbag_[t].size() != n || leaf_of_[t].size() != n) {
      throw std::invalid_argument("forest: per-tree tables must cover every observation");
    }
    const std::uint64_t total = std::accumulate(inbag_[t].begin(), inbag_[t].end(), std::uint64_t{0});
    if (total != n) {
      throw std::invalid_argument("forest: bootstrap multiplicities of tree " + std::to_string(t) +
                                  " sum to " + std::to_string(total) + ", expected " +
                                  std::to_string(n));
    }
    const int leaves = trees_[t].n_leaves();
    for (auto leaf : leaf_of_[t]) {
      if (leaf < 0 || leaf >= leaves) {
        throw std::invalid_argument("forest: leaf id out of range in tree " + std::to_string(t));
      }
    }
    const std::size_t width = task_ == Task::classification ? static_cast<std::size_t>(n_classes_) : 1;
    if (trees_[t].leaf_prediction.size() != width * static_cast<std::size_t>(leaves)) {
      throw std::invalid_argument("forest: leaf prediction table has wrong size in tree " +
                                  std::to_string(t));
    }
  }
}

std::vector<int> Forest::oob_trees(Index i) const {
  std::vector<int> out;
  for (int t = 0; t < n_trees(); ++t) {
    if (is_oob(t, i)) {
      out.push_back(t);
    }
  }
  return out;
}

Tree grow_tree(const Dataset& d, const ForestConfig& resolved, std::span<const std::uint32_t> inbag,
               std::uint64_t tree_seed) {
  TreeBuilder builder(d, resolved, tree_seed);
  return builder.build(inbag);
}

Forest fit_forest(const Dataset& d, const ForestConfig& config, int jobs) {
  d.validate();
  const ForestConfig cfg = config.resolved(d);
  if (d.is_classification() && d.n_classes() < 2) {
    warn("fit_forest: single-class dataset; every tree is a single leaf");
  }
  const auto n = static_cast<std::size_t>(d.n());
  const auto n_trees = static_cast<std::size_t>(cfg.n_trees);
  std::vector<Tree> trees(n_trees);
  std::vector<std::vector<std::uint32_t>> inbag(n_trees);
  std::vector<std::vector<std::int32_t>> leaf_of(n_trees);

  parallel_for(n_trees, jobs, [&](std::size_t t) {
    Rng boot(derive_seed(cfg.seed, {t, kBootstrapStream}));
    std::vector<std::uint32_t> counts(n, 0);
    for (std::size_t draw = 0; draw < n; ++draw) {
      ++counts[boot.uniform_index(n)];
    }
    Tree tree = grow_tree(d, cfg, counts, derive_seed(cfg.seed, {t, kSplitStream}));
    std::vector<std::int32_t> leaves(n);
    std::vector<double> row(static_cast<std::size_t>(d.p()));
    for (std::size_t i = 0; i < n; ++i) {
      for (Index f = 0; f < d.p(); ++f) {
        row[static_cast<std::size_t>(f)] = d.features(static_cast<Index>(i), f);
      }
      leaves[i] = tree.route(row);
    }
    trees[t] = std::move(tree);
    inbag[t] = std::move(counts);
    leaf_of[t] = std::move(leaves);
  });

  return Forest(cfg, task_for(d), d.is_classification() ? d.n_classes() : 0, d.p(), d.label_values(),
                std::move(trees), std::move(inbag), std::move(leaf_of));
}

int argmax_lowest(std::span<const double> values, double tol) {
  if (values.empty()) {
    return -1;
  }
  const double max = *std::max_element(values.begin(), values.end());
  for (std::size_t c = 0; c < values.size(); ++c) {
    if (values[c] >= max - tol) {
      return static_cast<int>(c);
    }
  }
  return 0;
}

OobReport oob_predict(const Forest& f, const Dataset& d) {
  const Index n = f.n_observations();
  if (d.n() != n || d.p() != f.n_features()) {
    throw std::invalid_argument("oob_predict: dataset shape does not match the forest");
  }
  for (Index i = 0; i < n; ++i) {
    if (d.label_value(i) != f.labels()[static_cast<std::size_t>(i)]) {
      throw std::invalid_argument("oob_predict: dataset labels differ from the training labels");
    }
  }
  OobReport report;
  report.task = f.task();
  report.prediction.assign(static_cast<std::size_t>(n), 0.0);
  report.covered.assign(static_cast<std::size_t>(n), false);
  const int n_classes = f.n_classes();
  std::vector<int> oob_count(static_cast<std::size_t>(n), 0);
  if (f.task() == Task::classification) {
    report.votes = Matrix::Zero(n, n_classes);
  }
  Vector sums = Vector::Zero(n);
  // Fixed tree-major accumulation order keeps results reproducible.
  for (int t = 0; t < f.n_trees(); ++t) {
    const Tree& tree = f.tree(t);
    for (Index i = 0; i < n; ++i) {
      if (!f.is_oob(t, i)) {
        continue;
      }
      ++oob_count[static_cast<std::size_t>(i)];
      const auto leaf = static_cast<std::size_t>(f.leaf_of(t, i));
      if (f.task() == Task::classification) {
        for (int c = 0; c < n_classes; ++c) {
          report.votes(i, c) += tree.leaf_prediction[leaf * static_cast<std::size_t>(n_classes) +
                                                     static_cast<std::size_t>(c)];
        }
      } else {
        sums(i) += tree.leaf_prediction[leaf];
      }
    }
  }

  Index covered = 0;
  double hits = 0.0;
  double sse = 0.0;
  double y_sum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (oob_count[k] == 0) {
      continue;
    }
    report.covered[k] = true;
    ++covered;
    const double y = f.labels()[k];
    if (f.task() == Task::classification) {
      report.votes.row(i) /= static_cast<double>(oob_count[k]);
      std::vector<double> row(static_cast<std::size_t>(n_classes));
      for (int c = 0; c < n_classes; ++c) {
        row[static_cast<std::size_t>(c)] = report.votes(i, c);
      }
      report.prediction[k] = argmax_lowest(row);
      hits += report.prediction[k] == y ? 1.0 : 0.0;
    } else {
      report.prediction[k] = sums(i) / static_cast<double>(oob_count[k]);
      sse += (y - report.prediction[k]) * (y - report.prediction[k]);
      y_sum += y;
    }
  }
  report.coverage = static_cast<double>(covered) / static_cast<double>(n);
  if (covered == 0) {
    warn("oob_predict: no observation is out-of-bag in any tree; OOB score undefined");
    report.oob_score = std::numeric_limits<double>::quiet_NaN();
    return report;
  }
  if (f.task() == Task::classification) {
    report.oob_score = hits / static_cast<double>(covered);
  } else {
    const double mean = y_sum / static_cast<double>(covered);
    double sst = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (report.covered[static_cast<std::size_t>(i)]) {
        const double y = f.labels()[static_cast<std::size_t>(i)];
        sst += (y - mean) * (y - mean);
      }
    }
    report.oob_score = sst > 0.0 ? 1.0 - sse / sst : (sse == 0.0 ? 1.0 : 0.0);
  }
  return report;
}

std::vector<int> leaf_assignments(const Forest& f, std::span<const double> x) {
  if (static_cast<Index>(x.size()) != f.n_features()) {
    throw std::invalid_argument("leaf_assignments: expected " + std::to_string(f.n_features()) +
                                " features, got " + std::to_string(x.size()));
  }
  std::vector<int> out(static_cast<std::size_t>(f.n_trees()));
  for (int t = 0; t < f.n_trees(); ++t) {
    out[static_cast<std::size_t>(t)] = f.tree(t).route(x);
  }
  return out;
}

namespace {

constexpr std::string_view kForestMagic = "rfgap-forest";
constexpr int kForestFormatVersion = 1;

std::string hex(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, r.ptr);
}

double parse_hex(const std::string& token) {
  double v = 0.0;
  const auto r = std::from_chars(token.data(), token.data() + token.size(), v, std::chars_format::hex);
  if (r.ec != std::errc() || r.ptr != token.data() + token.size()) {
    throw std::runtime_error("forest file: bad number '" + token + "'");
  }
  return v;
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string word() {
    std::string w;
    if (!(in_ >> w)) {
      throw std::runtime_error("forest file: unexpected end of input");
    }
    return w;
  }
  void expect(std::string_view keyword) {
    const std::string w = word();
    if (w != keyword) {
      throw std::runtime_error("forest file: expected '" + std::string(keyword) + "', found '" + w + "'");
    }
  }
  long long integer() {
    const std::string w = word();
    long long v = 0;
    const auto r = std::from_chars(w.data(), w.data() + w.size(), v);
    if (r.ec != std::errc() || r.ptr != w.data() + w.size()) {
      throw std::runtime_error("forest file: expected integer, found '" + w + "'");
    }
    return v;
  }
  double real() { return parse_hex(word()); }

 private:
  std::istream& in_;
};

}  // namespace

void save_forest(const Forest& f, std::ostream& out) {
  const ForestConfig& c = f.config();
  out << kForestMagic << ' ' << kForestFormatVersion << '\n';
  out << "task " << (f.task() == Task::classification ? "classification" : "regression") << '\n';
  out << "observations " << f.n_observations() << '\n';
  out << "features " << f.n_features() << '\n';
  out << "classes " << f.n_classes() << '\n';
  out << "config " << c.n_trees << ' ' << c.mtry.value_or(-1) << ' ' << c.min_leaf.value_or(-1)
      << ' ' << c.max_depth.value_or(-1) << ' ' << c.seed << '\n';
  out << "labels";
  for (double y : f.labels()) {
    out << ' ' << hex(y);
  }
  out << '\n';
  for (int t = 0; t < f.n_trees(); ++t) {
    const Tree& tree = f.tree(t);
    out << "tree " << t << ' ' << tree.nodes.size() << ' ' << tree.n_leaves() << '\n';
    for (const auto& n : tree.nodes) {
      out << n.feature << ' ' << hex(n.threshold) << ' ' << n.split_rank << ' ' << n.left << ' '
          << n.right << ' ' << n.leaf << '\n';
    }
    out << "mass";
    for (auto m : tree.leaf_mass) {
      out << ' ' << m;
    }
    out << "\nprediction";
    for (double v : tree.leaf_prediction) {
      out << ' ' << hex(v);
    }
    out << "\ninbag";
    for (auto v : f.inbag_counts(t)) {
      out << ' ' << v;
    }
    out << "\nleaf_of";
    for (auto v : f.leaves(t)) {
      out << ' ' << v;
    }
    out << '\n';
  }
  out << "end\n";
}

Forest load_forest(std::istream& in) {
  TokenReader r(in);
  r.expect(kForestMagic);
  const long long version = r.integer();
  if (version != kForestFormatVersion) {
    throw std::runtime_error("forest file: unsupported format version " + std::to_string(version));
  }
  r.expect("task");
  const std::string task_name = r.word();
  if (task_name != "classification" && task_name != "regression") {
    throw std::runtime_error("forest file: unknown task '" + task_name + "'");
  }
  const Task task = task_name == "classification" ? Task::classification : Task::regression;
  r.expect("observations");
  const auto n = static_cast<std::size_t>(r.integer());
  r.expect("features");
  const auto p = static_cast<Index>(r.integer());
  r.expect("classes");
  const auto n_classes = static_cast<int>(r.integer());
  r.expect("config");
  ForestConfig cfg;
  cfg.n_trees = static_cast<int>(r.integer());
  const auto mtry = r.integer();
  const auto min_leaf = r.integer();
  const auto max_depth = r.integer();
  if (mtry >= 0) cfg.mtry = static_cast<int>(mtry);
  if (min_leaf >= 0) cfg.min_leaf = static_cast<int>(min_leaf);
  if (max_depth >= 0) cfg.max_depth = static_cast<int>(max_depth);
  cfg.seed = std::stoull(r.word());
  r.expect("labels");
  std::vector<double> labels(n);
  for (auto& y : labels) {
    y = r.real();
  }
  const auto n_trees = static_cast<std::size_t>(cfg.n_trees);
  std::vector<Tree> trees(n_trees);
  std::vector<std::vector<std::uint32_t>> inbag(n_trees, std::vector<std::uint32_t>(n));
  std::vector<std::vector<std::int32_t>> leaf_of(n_trees, std::vector<std::int32_t>(n));
  const std::size_t width = task == Task::classification ? static_cast<std::size_t>(n_classes) : 1;
  for (std::size_t t = 0; t < n_trees; ++t) {
    r.expect("tree");
    if (r.integer() != static_cast<long long>(t)) {
      throw std::runtime_error("forest file: trees out of order");
    }
    const auto n_nodes = static_cast<std::size_t>(r.integer());
    const auto n_leaves = static_cast<std::size_t>(r.integer());
    Tree& tree = trees[t];
    tree.nodes.resize(n_nodes);
    for (auto& node : tree.nodes) {
      node.feature = static_cast<int>(r.integer());
      node.threshold = r.real();
      node.split_rank = static_cast<int>(r.integer());
      node.left = static_cast<int>(r.integer());
      node.right = static_cast<int>(r.integer());
      node.leaf = static_cast<int>(r.integer());
    }
    r.expect("mass");
    tree.leaf_mass.resize(n_leaves);
    for (auto& m : tree.leaf_mass) {
      m = static_cast<std::uint32_t>(r.integer());
    }
    r.expect("prediction");
    tree.leaf_prediction.resize(n_leaves * width);
    for (auto& v : tree.leaf_prediction) {
      v = r.real();
    }
    r.expect("inbag");
    for (auto& v : inbag[t]) {
      v = static_cast<std::uint32_t>(r.integer());
    }
    r.expect("leaf_of");
    for (auto& v : leaf_of[t]) {
      v = static_cast<std::int32_t>(r.integer());
    }
  }
  r.expect("end");
  return Forest(cfg, task, n_classes, p, std::move(labels), std::move(trees), std::move(inbag),
                std::move(leaf_of));
}

}  // namespace rfgap

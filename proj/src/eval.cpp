#include "rfgap/eval.hpp"

#include "rfgap/linalg.hpp"
#include "rfgap/parallel.hpp"
#include "rfgap/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace rfgap {
namespace {

void check_k(int k, Index n) {
  if (k < 1 || k >= n) {
    throw std::invalid_argument("k-NN: k must be in [1, n-1] (k=" + std::to_string(k) +
                                ", n=" + std::to_string(n) + ")");
  }
}

// The k nearest other points of i, ordered by (distance, index).
std::vector<Index> nearest_others(const Matrix& distances, Index i, int k) {
  std::vector<Index> order;
  order.reserve(static_cast<std::size_t>(distances.rows() - 1));
  for (Index j = 0; j < distances.rows(); ++j) {
    if (j != i) {
      order.push_back(j);
    }
  }
  auto closer = [&](Index a, Index b) {
    return distances(i, a) < distances(i, b) || (distances(i, a) == distances(i, b) && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + k, order.end(), closer);
  order.resize(static_cast<std::size_t>(k));
  return order;
}

double mean_squared_regression_error(const Matrix& distances, const Matrix& targets, int k) {
  const Index n = targets.rows();
  double total = 0.0;
  for (Index i = 0; i < n; ++i) {
    Vector prediction = Vector::Zero(targets.cols());
    for (Index j : nearest_others(distances, i, k)) {
      prediction += targets.row(j).transpose();
    }
    prediction /= static_cast<double>(k);
    total += (prediction - targets.row(i).transpose()).squaredNorm();
  }
  return total / static_cast<double>(n);
}

Matrix with_permuted_column(const Matrix& features, Index column,
                            const std::vector<std::size_t>& perm) {
  Matrix out = features;
  for (Index i = 0; i < features.rows(); ++i) {
    out(i, column) = features(static_cast<Index>(perm[static_cast<std::size_t>(i)]), column);
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end + 1 < order.size() && v[order[end + 1]] == v[order[start]]) {
      ++end;
    }
    const double rank = 0.5 * static_cast<double>(start + end) + 1.0;
    for (std::size_t r = start; r <= end; ++r) {
      ranks[order[r]] = rank;
    }
    start = end + 1;
  }
  return ranks;
}

}  // namespace

std::vector<int> knn_loocv_predictions(const Matrix& distances, const std::vector<int>& labels,
                                       int k) {
  const Index n = distances.rows();
  check_k(k, n);
  if (static_cast<Index>(labels.size()) != n) {
    throw std::invalid_argument("k-NN: label count does not match");
  }
  const int n_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> predictions(static_cast<std::size_t>(n));
  std::vector<int> votes(static_cast<std::size_t>(n_classes));
  std::vector<double> dist_sum(static_cast<std::size_t>(n_classes));
  for (Index i = 0; i < n; ++i) {
    std::fill(votes.begin(), votes.end(), 0);
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (Index j : nearest_others(distances, i, k)) {
      const auto c = static_cast<std::size_t>(labels[static_cast<std::size_t>(j)]);
      ++votes[c];
      dist_sum[c] += distances(i, j);
    }
    int best = -1;
    for (int c = 0; c < n_classes; ++c) {
      const auto s = static_cast<std::size_t>(c);
      if (votes[s] == 0) continue;
      if (best < 0) {
        best = c;
        continue;
      }
      const auto b = static_cast<std::size_t>(best);
      // With equal vote counts the distance sums order the same way as the means.
      if (votes[s] > votes[b] || (votes[s] == votes[b] && dist_sum[s] < dist_sum[b])) {
        best = c;
      }
    }
    predictions[static_cast<std::size_t>(i)] = best;
  }
  return predictions;
}

double knn_loocv_accuracy(const Matrix& features, const std::vector<int>& labels, int k) {
  const auto predictions = knn_loocv_predictions(pairwise_euclidean(features), labels, k);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += predictions[i] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double accuracy_delta(const Embedding& e, const Dataset& d, int k) {
  if (!d.is_classification()) {
    throw std::invalid_argument("accuracy_delta: classification labels required");
  }
  if (e.n() != d.n()) {
    throw std::invalid_argument("accuracy_delta: embedding and dataset sizes differ");
  }
  return knn_loocv_accuracy(e.coords, d.classes, k) - knn_loocv_accuracy(d.features, d.classes, k);
}

double oob_delta(const Embedding& e, const OobReport& report, const Dataset& d, int k) {
  if (!d.is_classification() || report.task != Task::classification) {
    throw std::invalid_argument("oob_delta: classification labels required");
  }
  if (e.n() != d.n()) {
    throw std::invalid_argument("oob_delta: embedding and dataset sizes differ");
  }
  return knn_loocv_accuracy(e.coords, d.classes, k) - report.oob_score;
}

RowPermuter seeded_permuter(std::uint64_t seed) {
  return [seed](std::size_t n, int repeat) {
    Rng rng(derive_seed(seed, {0x7065726dULL, static_cast<std::uint64_t>(repeat)}));
    return rng.permutation(n);
  };
}

ImportanceScores knn_permutation_importance(const Dataset& d, int k, int repeats,
                                            const RowPermuter& permuter) {
  if (!d.is_classification()) {
    throw std::invalid_argument("knn_permutation_importance: classification labels required");
  }
  if (repeats < 1) {
    throw std::invalid_argument("knn_permutation_importance: repeats must be >= 1");
  }
  const double baseline = knn_loocv_accuracy(d.features, d.classes, k);
  ImportanceScores out;
  out.target = ImportanceTarget::original_task;
  out.repeats = repeats;
  out.scores.assign(static_cast<std::size_t>(d.p()), 0.0);
  for (int r = 0; r < repeats; ++r) {
    const auto perm = permuter(static_cast<std::size_t>(d.n()), r);
    for (Index f = 0; f < d.p(); ++f) {
      const double acc = knn_loocv_accuracy(with_permuted_column(d.features, f, perm), d.classes, k);
      out.scores[static_cast<std::size_t>(f)] += baseline - acc;
    }
  }
  for (auto& s : out.scores) {
    s /= repeats;
  }
  return out;
}

ImportanceScores knn_permutation_importance(const Dataset& d, int k, int repeats,
                                            std::uint64_t seed) {
  ImportanceScores out = knn_permutation_importance(d, k, repeats, seeded_permuter(seed));
  out.seed = seed;
  return out;
}

ImportanceScores embedding_permutation_importance(const Dataset& d, const Embedding& e, int k,
                                                  int repeats, const RowPermuter& permuter) {
  if (e.n() != d.n()) {
    throw std::invalid_argument("embedding_permutation_importance: sizes differ");
  }
  if (repeats < 1) {
    throw std::invalid_argument("embedding_permutation_importance: repeats must be >= 1");
  }
  check_k(k, d.n());
  Matrix targets = e.coords;
  for (Index c = 0; c < targets.cols(); ++c) {
    const double mean = targets.col(c).mean();
    const double sd = std::sqrt((targets.col(c).array() - mean).square().mean());
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      throw std::invalid_argument("embedding_permutation_importance: embedding coordinate " +
                                  std::to_string(c) + " has zero variance");
    }
    targets.col(c) = (targets.col(c).array() - mean) / sd;
  }
  const double baseline = mean_squared_regression_error(pairwise_euclidean(d.features), targets, k);
  const double scale = std::max(baseline, 1e-12);
  ImportanceScores out;
  out.target = ImportanceTarget::embedding_regression;
  out.repeats = repeats;
  out.scores.assign(static_cast<std::size_t>(d.p()), 0.0);
  for (int r = 0; r < repeats; ++r) {
    const auto perm = permuter(static_cast<std::size_t>(d.n()), r);
    for (Index f = 0; f < d.p(); ++f) {
      const double err = mean_squared_regression_error(
          pairwise_euclidean(with_permuted_column(d.features, f, perm)), targets, k);
      out.scores[static_cast<std::size_t>(f)] += (err - baseline) / scale;
    }
  }
  for (auto& s : out.scores) {
    s /= repeats;
  }
  return out;
}

ImportanceScores embedding_permutation_importance(const Dataset& d, const Embedding& e, int k,
                                                  int repeats, std::uint64_t seed) {
  ImportanceScores out = embedding_permutation_importance(d, e, k, repeats, seeded_permuter(seed));
  out.seed = seed;
  return out;
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("pearson: vectors must have equal length >= 2");
  }
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) {
    return std::nullopt;
  }
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  return pearson(ra, rb);
}

Correlation importance_correlation(const ImportanceScores& a, const ImportanceScores& b) {
  if (a.scores.size() != b.scores.size()) {
    throw std::invalid_argument("importance_correlation: score vectors differ in length");
  }
  return Correlation{pearson(a.scores, b.scores), spearman(a.scores, b.scores)};
}

namespace {

// Everything a cell needs from its (dataset, seed) pair.
struct PairContext {
  const Dataset* data = nullptr;
  std::uint64_t seed = 0;
  std::optional<Forest> forest;
  std::optional<OobReport> oob;
  PreparedInputs inputs;
  std::optional<double> full_accuracy;
  std::optional<ImportanceScores> reference_importance;
  std::string error;
};

std::uint64_t importance_seed(std::uint64_t seed) { return derive_seed(seed, {3}); }

void prepare_pair(PairContext& ctx, const std::vector<MethodSpec>& methods,
                  const ComparisonConfig& config) {
  const Dataset& d = *ctx.data;
  ForestConfig fc = config.forest;
  fc.seed = ctx.seed;
  ctx.forest.emplace(config.forest_provider ? config.forest_provider(d, fc) : fit_forest(d, fc, 1));
  ctx.oob.emplace(oob_predict(*ctx.forest, d));
  ctx.inputs = prepare_inputs(d, &*ctx.forest, config.proximity, config.class_conditional, methods);
  if (d.is_classification()) {
    ctx.full_accuracy = knn_loocv_accuracy(d.features, d.classes, config.k);
    if (config.importance) {
      ctx.reference_importance =
          knn_permutation_importance(d, config.k, config.importance_repeats, importance_seed(ctx.seed));
    }
  }
}

void run_cell(EvalRow& row, const PairContext& ctx, const MethodSpec& method,
              const ComparisonConfig& config) {
  const Dataset& d = *ctx.data;
  row.oob_score = ctx.oob->oob_score;
  MethodRunOptions options;
  options.dims = config.dims;
  options.seed = embedding_seed(ctx.seed);
  options.strict = config.strict;
  options.check = config.check;
  MethodResult result = run_method(method, ctx.inputs, options);
  row.check_failures = std::move(result.check_failures);
  row.checks_run = result.checks_run;
  for (const auto& [key, value] : result.embedding.config) {
    row.config.insert_or_assign(key, value);
  }
  row.config["embedding_dims"] = std::to_string(result.embedding.d());
  if (!d.is_classification()) {
    return;
  }
  const Embedding& e = result.embedding;
  row.full_accuracy = ctx.full_accuracy;
  row.embedding_accuracy = knn_loocv_accuracy(e.coords, d.classes, config.k);
  row.accuracy_delta = *row.embedding_accuracy - *row.full_accuracy;
  row.oob_delta = *row.embedding_accuracy - ctx.oob->oob_score;
  if (ctx.reference_importance) {
    const auto scores = embedding_permutation_importance(d, e, config.k, config.importance_repeats,
                                                         importance_seed(ctx.seed));
    const auto r = importance_correlation(*ctx.reference_importance, scores);
    row.importance_pearson = r.pearson;
    row.importance_spearman = r.spearman;
  }
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    out += c == '"' ? std::string("\"\"") : std::string(1, c);
  }
  return out + "\"";
}

}  // namespace

std::vector<std::string> metric_names() {
  return {"full_accuracy", "embedding_accuracy", "accuracy_delta", "oob_score",
          "oob_delta",     "importance_pearson", "importance_spearman"};
}

std::optional<double> metric_value(const EvalRow& row, std::string_view metric) {
  if (metric == "full_accuracy") return row.full_accuracy;
  if (metric == "embedding_accuracy") return row.embedding_accuracy;
  if (metric == "accuracy_delta") return row.accuracy_delta;
  if (metric == "oob_score") return row.oob_score;
  if (metric == "oob_delta") return row.oob_delta;
  if (metric == "importance_pearson") return row.importance_pearson;
  if (metric == "importance_spearman") return row.importance_spearman;
  throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
}

const EvalAggregate* EvalReport::find(std::string_view dataset, std::string_view method) const {
  for (const auto& a : aggregates) {
    if (a.dataset == dataset && a.method == method) {
      return &a;
    }
  }
  return nullptr;
}

int EvalReport::check_failures() const {
  int total = 0;
  for (const auto& row : rows) {
    total += static_cast<int>(row.check_failures.size());
  }
  return total;
}

EvalAggregate aggregate_rows(const std::vector<const EvalRow*>& rows) {
  EvalAggregate out;
  if (rows.empty()) {
    return out;
  }
  out.dataset = rows.front()->dataset;
  out.method = rows.front()->method;
  out.family = rows.front()->family;
  out.cells = static_cast<int>(rows.size());
  for (const EvalRow* row : rows) {
    out.failed += row->ok() ? 0 : 1;
  }
  for (const auto& name : metric_names()) {
    std::vector<double> values;
    for (const EvalRow* row : rows) {
      if (auto v = metric_value(*row, name)) {
        values.push_back(*v);
      }
    }
    if (values.empty()) {
      continue;
    }
    MetricSummary m;
    m.count = static_cast<int>(values.size());
    m.mean = std::accumulate(values.begin(), values.end(), 0.0) / m.count;
    if (m.count > 1) {
      double ss = 0.0;
      for (double v : values) {
        ss += (v - m.mean) * (v - m.mean);
      }
      m.sd = std::sqrt(ss / (m.count - 1));
    }
    out.metrics.emplace(name, m);
  }
  return out;
}

EvalReport run_comparison(const std::vector<Dataset>& datasets,
                          const std::vector<MethodSpec>& methods,
                          const std::vector<std::uint64_t>& seeds, const ComparisonConfig& config) {
  if (datasets.empty()) {
    throw std::invalid_argument("run_comparison: no datasets");
  }
  if (methods.empty()) {
    throw std::invalid_argument("run_comparison: no methods");
  }
  if (seeds.empty()) {
    throw std::invalid_argument("run_comparison: seed list is empty");
  }
  for (const auto& m : methods) {
    validate_method(m);
  }

  const std::size_t n_seeds = seeds.size();
  std::vector<PairContext> pairs(datasets.size() * n_seeds);
  for (std::size_t di = 0; di < datasets.size(); ++di) {
    for (std::size_t si = 0; si < n_seeds; ++si) {
      auto& ctx = pairs[di * n_seeds + si];
      ctx.data = &datasets[di];
      ctx.seed = seeds[si];
    }
  }
  parallel_for(pairs.size(), config.jobs, [&](std::size_t i) {
    try {
      prepare_pair(pairs[i], methods, config);
    } catch (const std::exception& ex) {
      pairs[i].error = ex.what();
    }
  });

  // Rows ordered by dataset, then method, then seed.
  EvalReport report;
  report.rows.resize(datasets.size() * methods.size() * n_seeds);
  parallel_for(report.rows.size(), config.jobs, [&](std::size_t i) {
    const std::size_t si = i % n_seeds;
    const std::size_t mi = (i / n_seeds) % methods.size();
    const std::size_t di = i / (n_seeds * methods.size());
    const PairContext& ctx = pairs[di * n_seeds + si];
    EvalRow& row = report.rows[i];
    row.dataset = datasets[di].name;
    row.method = methods[mi].name();
    row.family = family_of(methods[mi].input);
    row.seed = seeds[si];
    row.config = {{"k", std::to_string(config.k)},
                  {"dims", std::to_string(config.dims)},
                  {"trees", std::to_string(config.forest.n_trees)},
                  {"proximity", std::string(to_string(config.proximity))}};
    if (methods[mi].input == InputSource::class_conditional) {
      row.config["alpha"] = format_double(config.class_conditional.alpha);
      row.config["beta"] = config.class_conditional.beta
                               ? format_double(*config.class_conditional.beta)
                               : std::string("mean_distance");
    }
    if (!ctx.error.empty()) {
      row.error = ctx.error;
      return;
    }
    try {
      run_cell(row, ctx, methods[mi], config);
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
  });

  for (std::size_t di = 0; di < datasets.size(); ++di) {
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
      std::vector<const EvalRow*> cell_rows;
      for (std::size_t si = 0; si < n_seeds; ++si) {
        cell_rows.push_back(&report.rows[(di * methods.size() + mi) * n_seeds + si]);
      }
      report.aggregates.push_back(aggregate_rows(cell_rows));
    }
  }
  report.notes.push_back(
      "embedding importance: k-NN regression onto standardized coordinates, LOOCV error = "
      "summed per-coordinate MSE, score = relative error increase");
  return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "kind,dataset,method,family,seed,statistic";
  for (const auto& m : metric_names()) {
    out << ',' << m;
  }
  out << ",checks_run,check_failures,error,config\n";
  for (const auto& row : report.rows) {
    out << "cell," << csv_field(row.dataset) << ',' << csv_field(row.method) << ','
        << to_string(row.family) << ',' << row.seed << ",value";
    for (const auto& m : metric_names()) {
      out << ',' << format_optional(metric_value(row, m));
    }
    std::string failures;
    for (const auto& f : row.check_failures) {
      failures += (failures.empty() ? "" : "; ") + f;
    }
    std::string config;
    for (const auto& [key, value] : row.config) {
      config += (config.empty() ? "" : ";") + key + "=" + value;
    }
    out << ',' << row.checks_run << ',' << csv_field(failures) << ',' << csv_field(row.error)
        << ',' << csv_field(config) << '\n';
  }
  for (const auto& a : report.aggregates) {
    for (const char* stat : {"mean", "sd", "count"}) {
      out << "aggregate," << csv_field(a.dataset) << ',' << csv_field(a.method) << ','
          << to_string(a.family) << ",," << stat;
      for (const auto& m : metric_names()) {
        out << ',';
        auto it = a.metrics.find(m);
        if (it == a.metrics.end()) continue;
        const std::string_view s = stat;
        out << (s == "mean"  ? format_double(it->second.mean)
                : s == "sd" ? format_double(it->second.sd)
                            : std::to_string(it->second.count));
      }
      out << ",,," << (a.failed > 0 ? std::to_string(a.failed) + " of " +
                                           std::to_string(a.cells) + " cells failed"
                                     : std::string())
          << ",\n";
    }
  }
}

void write_report_summary(const EvalReport& report, std::ostream& out) {
  auto cell = [](const EvalAggregate& a, const std::string& metric) {
    auto it = a.metrics.find(metric);
    if (it == a.metrics.end()) {
      return std::string("-");
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f +/- %.4f", it->second.mean, it->second.sd);
    return std::string(buf);
  };
  const std::vector<std::string> shown = {"embedding_accuracy", "accuracy_delta", "oob_delta",
                                          "importance_pearson"};
  for (const auto& a : report.aggregates) {
    out << a.dataset << "  " << a.method << "  [" << to_string(a.family) << "]  cells=" << a.cells;
    if (a.failed > 0) {
      out << " failed=" << a.failed;
    }
    out << '\n';
    for (const auto& m : shown) {
      out << "    " << m << ": " << cell(a, m) << '\n';
    }
  }
  for (const auto& row : report.rows) {
    if (!row.ok()) {
      out << "error: " << row.dataset << ' ' << row.method << " seed " << row.seed << ": "
          << row.error << '\n';
    }
    for (const auto& f : row.check_failures) {
      out << "check failed: " << row.dataset << ' ' << row.method << " seed " << row.seed << ": "
          << f << '\n';
    }
  }
  for (const auto& note : report.notes) {
    out << "note: " << note << '\n';
  }
}

}  // namespace rfgap

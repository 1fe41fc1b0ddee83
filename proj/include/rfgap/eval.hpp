#pragma once

#include "rfgap/data.hpp"
#include "rfgap/embed.hpp"
#include "rfgap/forest.hpp"
#include "rfgap/methods.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rfgap {

// Leave-one-out k-NN predictions from a distance matrix. Each point is
// predicted from the k nearest other points (distance ties to the lower
// index) by majority vote; vote ties go to the class with the smallest mean
// neighbour distance, then to the lowest class id.
std::vector<int> knn_loocv_predictions(const Matrix& distances, const std::vector<int>& labels,
                                       int k);

// Fraction of points whose LOOCV k-NN prediction (Euclidean distance on the
// rows of `features`) equals their label.
double knn_loocv_accuracy(const Matrix& features, const std::vector<int>& labels, int k);

// LOOCV accuracy on the embedding minus LOOCV accuracy on the full features.
double accuracy_delta(const Embedding& e, const Dataset& d, int k);

// LOOCV accuracy on the embedding minus the forest's OOB score.
double oob_delta(const Embedding& e, const OobReport& report, const Dataset& d, int k);

enum class ImportanceTarget { original_task, embedding_regression };

struct ImportanceScores {
  std::vector<double> scores;  // one per feature
  ImportanceTarget target = ImportanceTarget::original_task;
  int repeats = 0;
  std::uint64_t seed = 0;
};

// Row permutation used for repeat r. The same permutation is applied to
// whichever column is being scored, so scores do not depend on column order.
using RowPermuter = std::function<std::vector<std::size_t>(std::size_t n, int repeat)>;

RowPermuter seeded_permuter(std::uint64_t seed);

// Mean drop in LOOCV k-NN accuracy when one feature column is shuffled.
ImportanceScores knn_permutation_importance(const Dataset& d, int k, int repeats,
                                            std::uint64_t seed);
ImportanceScores knn_permutation_importance(const Dataset& d, int k, int repeats,
                                            const RowPermuter& permuter);

// k-NN regression from the original features onto the standardized
// embedding coordinates, scored by LOOCV mean squared error summed over
// coordinates. A feature's score is the mean relative error increase when
// it is shuffled. Throws if an embedding coordinate has zero variance.
ImportanceScores embedding_permutation_importance(const Dataset& d, const Embedding& e, int k,
                                                  int repeats, std::uint64_t seed);
ImportanceScores embedding_permutation_importance(const Dataset& d, const Embedding& e, int k,
                                                  int repeats, const RowPermuter& permuter);

// Pearson (headline) and Spearman correlation between two score vectors.
// Either value is nullopt when a vector has zero variance.
struct Correlation {
  std::optional<double> pearson;
  std::optional<double> spearman;
  bool defined() const { return pearson.has_value(); }
};

Correlation importance_correlation(const ImportanceScores& a, const ImportanceScores& b);
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

struct ComparisonConfig {
  int k = 5;
  int dims = 2;
  ForestConfig forest;  // seed is replaced by each run seed
  ProximityKind proximity = ProximityKind::rfgap;
  ClassConditionalParams class_conditional;
  int importance_repeats = 10;
  bool importance = true;
  bool strict = false;
  bool check = false;  // run kernel/diffusion contract checks on every cell
  int jobs = 1;
  // Supplies the forest for a dataset and a seeded config; unset fits one.
  std::function<Forest(const Dataset&, const ForestConfig&)> forest_provider;
};

// One (dataset, method, seed) cell. Metric fields are unset when the cell
// failed or the metric does not apply.
struct EvalRow {
  std::string dataset;
  std::string method;
  Family family = Family::forest;
  std::uint64_t seed = 0;
  std::optional<double> full_accuracy;
  std::optional<double> embedding_accuracy;
  std::optional<double> accuracy_delta;
  std::optional<double> oob_score;
  std::optional<double> oob_delta;
  std::optional<double> importance_pearson;
  std::optional<double> importance_spearman;
  std::map<std::string, std::string> config;
  std::vector<std::string> check_failures;
  int checks_run = 0;
  std::string error;

  bool ok() const { return error.empty(); }
};

struct MetricSummary {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
  int count = 0;
};

// Mean and sd over seeds of every metric for one (dataset, method).
struct EvalAggregate {
  std::string dataset;
  std::string method;
  Family family = Family::forest;
  int cells = 0;
  int failed = 0;
  std::map<std::string, MetricSummary> metrics;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // ordered by dataset, method, seed as given
  std::vector<EvalAggregate> aggregates;
  std::vector<std::string> notes;

  const EvalAggregate* find(std::string_view dataset, std::string_view method) const;
  int check_failures() const;
};

// Metric names used in aggregates and report columns.
std::vector<std::string> metric_names();
std::optional<double> metric_value(const EvalRow& row, std::string_view metric);

// Runs every method on every dataset for every seed. Each (dataset, seed)
// gets its own forest with that seed. A failing cell records its error and
// the run continues. Datasets are used as given (normalize beforehand).
EvalReport run_comparison(const std::vector<Dataset>& datasets,
                          const std::vector<MethodSpec>& methods,
                          const std::vector<std::uint64_t>& seeds, const ComparisonConfig& config);

EvalAggregate aggregate_rows(const std::vector<const EvalRow*>& rows);

void write_report_csv(const EvalReport& report, std::ostream& out);
void write_report_summary(const EvalReport& report, std::ostream& out);

}  // namespace rfgap

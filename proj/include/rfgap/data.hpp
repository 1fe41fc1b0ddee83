#pragma once

#include "rfgap/common.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace rfgap {

enum class LabelKind { classification, regression };

std::string_view to_string(LabelKind kind);
LabelKind parse_label_kind(std::string_view text);

// Labeled tabular data. Rows are observations. For classification the labels
// live in `classes` as contiguous ids 0..C-1 and `class_names` maps each id
// back to its original string; for regression they live in `targets`.
struct Dataset {
  std::string name;
  Matrix features;
  LabelKind label_kind = LabelKind::classification;
  std::vector<int> classes;
  std::vector<double> targets;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  std::string label_name = "label";

  // Populated by the synthetic generators only.
  std::vector<bool> noise_features;
  std::vector<double> latent;

  Index n() const { return features.rows(); }
  Index p() const { return features.cols(); }
  int n_classes() const { return static_cast<int>(class_names.size()); }
  bool is_classification() const { return label_kind == LabelKind::classification; }

  // Label of observation i as a real number (class id or target).
  double label_value(Index i) const;
  std::vector<double> label_values() const;

  // Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

// Column selector: header name or zero-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

struct CsvOptions {
  std::vector<std::string> drop_columns;
};

// Tokens treated as missing cells.
bool is_missing_marker(std::string_view cell);

// Reads a comma-delimited file whose first row is a header. Rows with any
// missing cell are dropped. Categorical labels are numbered in order of first
// appearance among the kept rows.
Dataset load_csv(const std::filesystem::path& path, const ColumnRef& label_column,
                 LabelKind label_kind, const CsvOptions& options = {});
Dataset parse_csv(std::istream& in, const ColumnRef& label_column, LabelKind label_kind,
                  const CsvOptions& options = {});

// Writes features followed by the label column, in the format load_csv reads.
void write_csv(const Dataset& d, std::ostream& out);
void write_csv(const Dataset& d, const std::filesystem::path& path);

enum class StdConvention { population, sample };

struct NormalizationRecord {
  StdConvention convention = StdConvention::population;
  std::vector<Index> kept_columns;  // source column of each output column
  std::vector<double> mean;
  std::vector<double> stddev;  // all > 0
  std::vector<std::string> dropped_columns;
};

// Z-scores every column; zero-variance columns are dropped and listed in the
// record. Throws if every column is constant.
std::pair<Dataset, NormalizationRecord> zscore_normalize(
    const Dataset& d, StdConvention convention = StdConvention::population);

// Gaussian blobs with `n_informative` class-dependent features followed by
// `n_noise` label-independent N(0,1) features. Class means lie on a line; the
// offset between consecutive class means has length `separation` and weights
// informative feature f in proportion to (n_informative - f), so features
// carry a strict importance ordering.
Dataset synthesize_blobs(int n_per_class, int n_informative, int n_noise, double separation,
                         std::uint64_t seed, int n_classes = 2);

// Continuous-label fixture. A latent coordinate u ~ U(-2, 2) drives
//   x0 = u + N(0, 0.15^2)                 (graded signal)
//   x1 = 1[u + N(0, 0.3^2) > 0]           (binary group indicator)
//   x2.. = N(0, 1)                        (noise)
// and the label y = exp(u / 2) + N(0, 0.05^2). Requires n >= 10.
Dataset synthesize_regression_gradient(int n, int p, std::uint64_t seed);

}  // namespace rfgap

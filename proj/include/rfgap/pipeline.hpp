#pragma once

#include "rfgap/baseline.hpp"
#include "rfgap/data.hpp"
#include "rfgap/eval.hpp"
#include "rfgap/forest.hpp"
#include "rfgap/methods.hpp"
#include "rfgap/proximity.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rfgap {

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kConfigSchemaVersion = 1;

// Raised for malformed configuration; the message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DatasetSpec {
  std::string name;
  // CSV source. `csv` is the path as written in the config, `resolved_csv`
  // the path relative to the config file.
  std::optional<std::string> csv;
  std::filesystem::path resolved_csv;
  ColumnRef label_column = std::string("label");
  LabelKind label_kind = LabelKind::classification;
  std::vector<std::string> drop_columns;
  // Synthetic source: a registered recipe and its parameters.
  std::optional<std::string> synthetic;
  std::map<std::string, double> params;
};

struct PipelineConfig {
  std::vector<DatasetSpec> datasets;
  bool normalize = true;
  ForestConfig forest;  // seed comes from `seeds`
  ProximityKind proximity = ProximityKind::rfgap;
  std::vector<MethodSpec> methods;
  std::vector<std::uint64_t> seeds;
  int k = 5;
  int dims = 2;
  ClassConditionalParams class_conditional;
  bool importance = true;
  int importance_repeats = 10;
  MatrixFormat matrix_format = MatrixFormat::dense;
  bool strict = false;
  std::filesystem::path output_dir = "rfgap_out";
  int jobs = 1;
};

// Parses the JSON config text. Relative paths resolve against `base_dir`.
// Unknown keys, wrong types and out-of-range values throw ConfigError.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

// Checks cross-field invariants (non-empty seeds, known methods, ...).
void validate_config(const PipelineConfig& config, bool require_methods);

// Canonical single-line JSON of everything that affects results. Worker
// count and output location are left out so reruns compare equal.
std::string config_echo(const PipelineConfig& config);

struct RecipeInfo {
  std::string name;
  std::string description;
  std::map<std::string, double> defaults;
};
std::vector<RecipeInfo> registered_recipes();

struct LoadedDataset {
  Dataset data;
  NormalizationRecord normalization;
  bool normalized = false;
};

LoadedDataset load_dataset(const DatasetSpec& spec, bool normalize);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

// On-disk forest store keyed by a hash of the dataset bytes and the forest
// configuration.
class ForestCache {
 public:
  explicit ForestCache(std::filesystem::path dir);

  struct Entry {
    Forest forest;
    bool hit;
    std::string key;
  };

  Entry get_or_fit(const Dataset& d, const ForestConfig& config, int jobs) const;
  static std::string key(const Dataset& d, const ForestConfig& config);

 private:
  std::filesystem::path dir_;
};

struct CommandOptions {
  bool check = false;
};

// Each command writes its files under config.output_dir, returns the process
// exit status and prints a short summary to `out`.
int cmd_embed(const PipelineConfig& config, std::ostream& out);
int cmd_evaluate(const PipelineConfig& config, const CommandOptions& options, std::ostream& out);
int cmd_proximity(const PipelineConfig& config, const CommandOptions& options, std::ostream& out);
void cmd_datasets(std::ostream& out);

// Human-readable description of the matrix file formats.
std::string_view matrix_format_help();

}  // namespace rfgap

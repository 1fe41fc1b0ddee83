#include "rfgap/data.hpp"

#include "rfgap/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace rfgap {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Double quotes delimit fields that may contain commas;
// a doubled quote inside them is a literal quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      cells.push_back(was_quoted ? cell : trim(cell));
      cell.clear();
      was_quoted = false;
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) {
    throw std::invalid_argument("unterminated quoted field: " + line);
  }
  cells.push_back(was_quoted ? cell : trim(cell));
  return cells;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) {
    return false;
  }
  if (text.front() == '+') {
    text.remove_prefix(1);
  }
  const auto result = std::from_chars(text.data(), text.data() + text.size(), out);
  return result.ec == std::errc() && result.ptr == text.data() + text.size() &&
         std::isfinite(out);
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') {
      out += "\"\"";
    } else {
      out.push_back(c);
    }
  }
  return out + "\"";
}

}  // namespace

std::string_view to_string(LabelKind kind) {
  return kind == LabelKind::classification ? "classification" : "regression";
}

LabelKind parse_label_kind(std::string_view text) {
  if (text == "classification") {
    return LabelKind::classification;
  }
  if (text == "regression") {
    return LabelKind::regression;
  }
  throw std::invalid_argument("unknown label kind '" + std::string(text) +
                              "' (expected classification or regression)");
}

double Dataset::label_value(Index i) const {
  const auto k = static_cast<std::size_t>(i);
  return is_classification() ? static_cast<double>(classes[k]) : targets[k];
}

std::vector<double> Dataset::label_values() const {
  std::vector<double> out(static_cast<std::size_t>(n()));
  for (Index i = 0; i < n(); ++i) {
    out[static_cast<std::size_t>(i)] = label_value(i);
  }
  return out;
}

void Dataset::validate() const {
  if (n() < 2) {
    throw std::invalid_argument("dataset needs at least 2 observations");
  }
  if (p() < 1) {
    throw std::invalid_argument("dataset needs at least 1 feature");
  }
  if (static_cast<Index>(feature_names.size()) != p()) {
    throw std::invalid_argument("feature_names length does not match feature count");
  }
  if (!features.allFinite()) {
    throw std::invalid_argument("features contain non-finite values");
  }
  if (!noise_features.empty() && static_cast<Index>(noise_features.size()) != p()) {
    throw std::invalid_argument("noise_features length does not match feature count");
  }
  if (is_classification()) {
    if (static_cast<Index>(classes.size()) != n()) {
      throw std::invalid_argument("class label count does not match observation count");
    }
    std::vector<int> seen(class_names.size(), 0);
    for (int c : classes) {
      if (c < 0 || c >= n_classes()) {
        throw std::invalid_argument("class id out of range");
      }
      ++seen[static_cast<std::size_t>(c)];
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
      throw std::invalid_argument("every class needs at least one observation");
    }
  } else {
    if (static_cast<Index>(targets.size()) != n()) {
      throw std::invalid_argument("target count does not match observation count");
    }
    for (double y : targets) {
      if (!std::isfinite(y)) {
        throw std::invalid_argument("targets contain non-finite values");
      }
    }
  }
}

bool is_missing_marker(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "?";
}

Dataset parse_csv(std::istream& in, const ColumnRef& label_column, LabelKind label_kind,
                  const CsvOptions& options) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("CSV input is empty (header row required)");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const std::vector<std::string> header = split_record(line);

  std::size_t label_index = 0;
  if (const auto* name = std::get_if<std::string>(&label_column)) {
    const auto it = std::find(header.begin(), header.end(), *name);
    if (it == header.end()) {
      throw std::invalid_argument("label column '" + *name + "' not found in header");
    }
    label_index = static_cast<std::size_t>(it - header.begin());
  } else {
    label_index = std::get<std::size_t>(label_column);
    if (label_index >= header.size()) {
      throw std::invalid_argument("label column index " + std::to_string(label_index) +
                                  " out of range (" + std::to_string(header.size()) +
                                  " columns)");
    }
  }

  std::vector<bool> dropped(header.size(), false);
  for (const auto& name : options.drop_columns) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw std::invalid_argument("drop column '" + name + "' not found in header");
    }
    dropped[static_cast<std::size_t>(it - header.begin())] = true;
  }
  if (dropped[label_index]) {
    throw std::invalid_argument("the label column cannot also be dropped");
  }

  std::vector<std::size_t> feature_cols;
  Dataset d;
  d.label_kind = label_kind;
  d.label_name = header[label_index];
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != label_index && !dropped[c]) {
      feature_cols.push_back(c);
      d.feature_names.push_back(header[c]);
    }
  }
  if (feature_cols.empty()) {
    throw std::invalid_argument("CSV has no feature columns");
  }

  std::vector<std::vector<double>> rows;
  std::map<std::string, int> class_ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const std::vector<std::string> cells = split_record(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " cells, found " +
                                  std::to_string(cells.size()));
    }
    bool missing = is_missing_marker(cells[label_index]);
    for (std::size_t c : feature_cols) {
      missing = missing || is_missing_marker(cells[c]);
    }
    if (missing) {
      continue;
    }
    std::vector<double> row(feature_cols.size());
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const std::string& cell = cells[feature_cols[f]];
      if (!parse_double(cell, row[f])) {
        throw std::invalid_argument("line " + std::to_string(line_no) + ", column '" +
                                    header[feature_cols[f]] + "': non-numeric value '" +
                                    cell + "'");
      }
    }
    const std::string& label = cells[label_index];
    if (label_kind == LabelKind::classification) {
      auto [it, inserted] = class_ids.try_emplace(label, static_cast<int>(d.class_names.size()));
      if (inserted) {
        d.class_names.push_back(label);
      }
      d.classes.push_back(it->second);
    } else {
      double y = 0.0;
      if (!parse_double(label, y)) {
        throw std::invalid_argument("line " + std::to_string(line_no) +
                                    ": non-numeric regression label '" + label + "'");
      }
      d.targets.push_back(y);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw std::invalid_argument("CSV has no usable rows after dropping missing values");
  }
  d.features.resize(static_cast<Index>(rows.size()), static_cast<Index>(feature_cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      d.features(static_cast<Index>(i), static_cast<Index>(f)) = rows[i][f];
    }
  }
  d.validate();
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const ColumnRef& label_column,
                 LabelKind label_kind, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open CSV file '" + path.string() + "'");
  }
  Dataset d = parse_csv(in, label_column, label_kind, options);
  d.name = path.stem().string();
  return d;
}

void write_csv(const Dataset& d, std::ostream& out) {
  for (const auto& name : d.feature_names) {
    out << quote_if_needed(name) << ',';
  }
  out << quote_if_needed(d.label_name) << '\n';
  for (Index i = 0; i < d.n(); ++i) {
    for (Index f = 0; f < d.p(); ++f) {
      out << format_double(d.features(i, f)) << ',';
    }
    if (d.is_classification()) {
      out << quote_if_needed(d.class_names[static_cast<std::size_t>(d.classes[static_cast<std::size_t>(i)])]);
    } else {
      out << format_double(d.targets[static_cast<std::size_t>(i)]);
    }
    out << '\n';
  }
}

void write_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  write_csv(d, out);
}

std::pair<Dataset, NormalizationRecord> zscore_normalize(const Dataset& d,
                                                         StdConvention convention) {
  if (d.n() < 2) {
    throw std::invalid_argument("zscore_normalize: need at least 2 observations");
  }
  if (convention == StdConvention::sample && d.n() < 2) {
    throw std::invalid_argument("zscore_normalize: sample std needs n >= 2");
  }
  NormalizationRecord record;
  record.convention = convention;
  const auto n = static_cast<double>(d.n());
  const double denom = convention == StdConvention::population ? n : n - 1.0;
  for (Index f = 0; f < d.p(); ++f) {
    const double mean = d.features.col(f).mean();
    const double ss = (d.features.col(f).array() - mean).square().sum();
    const double sd = std::sqrt(ss / denom);
    // Treat spread below rounding noise of the column's magnitude as constant.
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean)))) {
      record.dropped_columns.push_back(d.feature_names[static_cast<std::size_t>(f)]);
      continue;
    }
    record.kept_columns.push_back(f);
    record.mean.push_back(mean);
    record.stddev.push_back(sd);
  }
  if (record.kept_columns.empty()) {
    throw std::invalid_argument("zscore_normalize: every feature column is constant");
  }
  Dataset out = d;
  const auto kept = static_cast<Index>(record.kept_columns.size());
  out.features.resize(d.n(), kept);
  out.feature_names.clear();
  std::vector<bool> noise;
  for (Index k = 0; k < kept; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    const Index src = record.kept_columns[idx];
    out.features.col(k) =
        (d.features.col(src).array() - record.mean[idx]) / record.stddev[idx];
    out.feature_names.push_back(d.feature_names[static_cast<std::size_t>(src)]);
    if (!d.noise_features.empty()) {
      noise.push_back(d.noise_features[static_cast<std::size_t>(src)]);
    }
  }
  out.noise_features = std::move(noise);
  return {std::move(out), std::move(record)};
}

Dataset synthesize_blobs(int n_per_class, int n_informative, int n_noise, double separation,
                         std::uint64_t seed, int n_classes) {
  if (n_per_class < 1 || n_informative < 1 || n_noise < 0 || n_classes < 2) {
    throw std::invalid_argument(
        "synthesize_blobs: need n_per_class >= 1, n_informative >= 1, n_noise >= 0, "
        "n_classes >= 2");
  }
  if (!(separation >= 0.0) || !std::isfinite(separation)) {
    throw std::invalid_argument("synthesize_blobs: separation must be finite and >= 0");
  }
  const int p = n_informative + n_noise;
  const int n = n_per_class * n_classes;

  Vector direction(n_informative);
  for (int f = 0; f < n_informative; ++f) {
    direction(f) = static_cast<double>(n_informative - f);
  }
  direction /= direction.norm();

  Dataset d;
  d.name = "blobs";
  d.label_kind = LabelKind::classification;
  d.label_name = "class";
  d.features.resize(n, p);
  d.classes.resize(static_cast<std::size_t>(n));
  for (int c = 0; c < n_classes; ++c) {
    d.class_names.push_back("class_" + std::to_string(c));
  }
  for (int f = 0; f < p; ++f) {
    d.feature_names.push_back(f < n_informative ? "informative_" + std::to_string(f)
                                                : "noise_" + std::to_string(f - n_informative));
    d.noise_features.push_back(f >= n_informative);
  }

  Rng rng(derive_seed(seed, {0x626c6f6273ULL}));
  for (int i = 0; i < n; ++i) {
    const int c = i / n_per_class;
    d.classes[static_cast<std::size_t>(i)] = c;
    for (int f = 0; f < p; ++f) {
      const double centre = f < n_informative ? c * separation * direction(f) : 0.0;
      d.features(i, f) = centre + rng.normal();
    }
  }
  return d;
}

Dataset synthesize_regression_gradient(int n, int p, std::uint64_t seed) {
  if (n < 10) {
    throw std::invalid_argument("synthesize_regression_gradient: need n >= 10");
  }
  if (p < 1) {
    throw std::invalid_argument("synthesize_regression_gradient: need p >= 1");
  }
  Dataset d;
  d.name = "gradient";
  d.label_kind = LabelKind::regression;
  d.label_name = "response";
  d.features.resize(n, p);
  d.targets.resize(static_cast<std::size_t>(n));
  d.latent.resize(static_cast<std::size_t>(n));
  for (int f = 0; f < p; ++f) {
    if (f == 0) {
      d.feature_names.emplace_back("signal");
    } else if (f == 1) {
      d.feature_names.emplace_back("group");
    } else {
      d.feature_names.push_back("noise_" + std::to_string(f - 2));
    }
    d.noise_features.push_back(f >= 2);
  }

  Rng rng(derive_seed(seed, {0x6772616469656e74ULL}));
  for (int i = 0; i < n; ++i) {
    const double u = -2.0 + 4.0 * rng.uniform();
    const auto k = static_cast<std::size_t>(i);
    d.latent[k] = u;
    d.features(i, 0) = u + 0.15 * rng.normal();
    if (p > 1) {
      d.features(i, 1) = (u + 0.3 * rng.normal()) > 0.0 ? 1.0 : 0.0;
    }
    for (int f = 2; f < p; ++f) {
      d.features(i, f) = rng.normal();
    }
    d.targets[k] = std::exp(u / 2.0) + 0.05 * rng.normal();
  }
  return d;
}

}  // namespace rfgap

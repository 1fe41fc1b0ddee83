#include "rfgap/pipeline.hpp"

#include "rfgap/parallel.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

namespace rfgap {
namespace fs = std::filesystem;
namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  return out;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory '" + dir.string() +
                             "': " + (ec ? ec.message() : std::string("not a directory")));
  }
}

// Collects warnings for run.log while a command runs.
class WarningLog {
 public:
  WarningLog()
      : sink_([this](std::string_view message) {
          std::lock_guard lock(mutex_);
          lines_.emplace_back(message);
        }) {}

  std::vector<std::string> lines() const {
    std::lock_guard lock(mutex_);
    return lines_;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> lines_;
  ScopedWarningSink sink_;
};

// Lines for run.log. Unlike the manifest this file may differ between runs.
class RunLog {
 public:
  void add(std::string line) {
    std::lock_guard lock(mutex_);
    lines_.push_back(std::move(line));
  }

  void write(const fs::path& path, const WarningLog& warnings) const {
    auto out = open_output(path);
    for (const auto& l : lines_) out << l << '\n';
    for (const auto& w : warnings.lines()) out << "warning: " << w << '\n';
  }

 private:
  std::mutex mutex_;
  std::vector<std::string> lines_;
};

struct DatasetSlot {
  const DatasetSpec* spec = nullptr;
  std::optional<LoadedDataset> loaded;
  std::string error;
};

std::vector<DatasetSlot> load_all(const PipelineConfig& c) {
  std::vector<DatasetSlot> slots(c.datasets.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    slots[i].spec = &c.datasets[i];
    try {
      slots[i].loaded.emplace(load_dataset(c.datasets[i], c.normalize));
    } catch (const std::exception& ex) {
      slots[i].error = ex.what();
    }
  }
  return slots;
}

std::string dataset_line(const DatasetSlot& s) {
  std::ostringstream out;
  out << "dataset " << s.spec->name;
  if (!s.loaded) {
    out << " failed: " << s.error;
    return out.str();
  }
  const Dataset& d = s.loaded->data;
  out << " n=" << d.n() << " p=" << d.p() << " label=" << to_string(d.label_kind);
  if (d.is_classification()) {
    out << " classes=" << d.n_classes();
  }
  if (s.loaded->normalized) {
    out << " normalized=zscore";
    if (!s.loaded->normalization.dropped_columns.empty()) {
      out << " dropped_constant=";
      for (std::size_t i = 0; i < s.loaded->normalization.dropped_columns.size(); ++i) {
        out << (i ? ";" : "") << s.loaded->normalization.dropped_columns[i];
      }
    }
  }
  return out.str();
}

void write_manifest_header(std::ostream& out, std::string_view command, const PipelineConfig& c,
                           const std::vector<DatasetSlot>& slots) {
  out << "rfgap " << command << " manifest\n";
  out << "tool_version " << kToolVersion << '\n';
  out << "config " << config_echo(c) << '\n';
  for (const auto& s : slots) {
    out << dataset_line(s) << '\n';
  }
}

ForestConfig seeded(const ForestConfig& base, std::uint64_t seed) {
  ForestConfig fc = base;
  fc.seed = seed;
  return fc;
}

std::string file_stem(const std::string& dataset, const MethodSpec& m, std::uint64_t seed) {
  return dataset + "__" + std::string(to_string(m.input)) + "_" + m.algorithm + "__seed" +
         std::to_string(seed);
}

void write_embedding_csv(const Embedding& e, const Dataset& d, std::ostream& out) {
  out << "id";
  for (Index c = 0; c < e.d(); ++c) {
    out << ",coord_" << c + 1;
  }
  out << ",label\n";
  for (Index i = 0; i < e.n(); ++i) {
    out << i;
    for (Index c = 0; c < e.d(); ++c) {
      out << ',' << format_double(e.coords(i, c));
    }
    out << ',';
    if (d.is_classification()) {
      out << d.class_names[static_cast<std::size_t>(d.classes[static_cast<std::size_t>(i)])];
    } else {
      out << format_double(d.targets[static_cast<std::size_t>(i)]);
    }
    out << '\n';
  }
}

std::string plot_descriptor(const Embedding& e, const Dataset& d, const std::string& csv_name,
                            std::uint64_t seed) {
  nlohmann::json j;
  j["data"] = csv_name;
  j["title"] = d.name + " / " + e.method + " / seed " + std::to_string(seed);
  j["x"] = "coord_1";
  j["y"] = e.d() > 1 ? nlohmann::json("coord_2") : nlohmann::json(nullptr);
  j["color"] = "label";
  j["color_scale"] = d.is_classification() ? "categorical" : "continuous";
  j["legend_title"] = d.label_name;
  j["method"] = e.method;
  j["config"] = e.config;
  return j.dump(2) + "\n";
}

ForestCache make_cache(const PipelineConfig& c) { return ForestCache(c.output_dir / "cache"); }

}  // namespace

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

ForestCache::ForestCache(fs::path dir) : dir_(std::move(dir)) {}

std::string ForestCache::key(const Dataset& d, const ForestConfig& config) {
  std::ostringstream bytes;
  write_csv(d, bytes);
  const ForestConfig r = config.resolved(d);
  std::ostringstream cfg;
  cfg << "rfgap-forest-key 1 trees=" << r.n_trees << " mtry=" << *r.mtry
      << " min_leaf=" << *r.min_leaf << " max_depth=" << (r.max_depth ? *r.max_depth : -1)
      << " seed=" << r.seed << " label=" << to_string(d.label_kind);
  return hex64(fnv1a(cfg.str(), fnv1a(bytes.str())));
}

ForestCache::Entry ForestCache::get_or_fit(const Dataset& d, const ForestConfig& config,
                                           int jobs) const {
  const std::string k = key(d, config);
  const fs::path path = dir_ / ("forest-" + k + ".txt");
  if (fs::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    try {
      Forest f = load_forest(in);
      if (f.n_observations() == d.n() && f.n_features() == d.p()) {
        return Entry{std::move(f), true, k};
      }
    } catch (const std::exception& ex) {
      warn("ignoring unreadable cached forest '" + path.string() + "': " + ex.what());
    }
  }
  Forest f = fit_forest(d, config, jobs);
  make_dir(dir_);
  // Write then rename so a concurrent reader never sees a partial file.
  const fs::path tmp = dir_ / ("forest-" + k + ".tmp" + std::to_string(config.seed));
  {
    auto out = open_output(tmp);
    save_forest(f, out);
  }
  fs::rename(tmp, path);
  return Entry{std::move(f), false, k};
}

std::string_view matrix_format_help() {
  return "Matrix files are comma-separated text with doubles in shortest round-trip form.\n"
         "  dense:   n lines of n values; line i holds row i.\n"
         "  triplet: header 'row,col,value', then one line per nonzero entry with\n"
         "           zero-based row and column indices, in row-major order.\n";
}

int cmd_embed(const PipelineConfig& c, std::ostream& out) {
  validate_config(c, true);
  make_dir(c.output_dir);
  make_dir(c.output_dir / "embeddings");
  WarningLog warnings;
  RunLog log;
  const ForestCache cache = make_cache(c);
  auto slots = load_all(c);

  const bool need_forest = std::any_of(c.methods.begin(), c.methods.end(),
                                       [](const MethodSpec& m) { return m.input == InputSource::rf; });
  const std::size_t n_seeds = c.seeds.size();
  struct Pair {
    std::optional<Forest> forest;
    PreparedInputs inputs;
    std::string key;
    std::string error;
  };
  std::vector<Pair> pairs(slots.size() * n_seeds);
  parallel_for(pairs.size(), c.jobs, [&](std::size_t i) {
    const auto& slot = slots[i / n_seeds];
    const std::uint64_t seed = c.seeds[i % n_seeds];
    Pair& p = pairs[i];
    if (!slot.loaded) {
      p.error = "dataset failed to load: " + slot.error;
      return;
    }
    try {
      const Dataset& d = slot.loaded->data;
      if (need_forest) {
        auto entry = cache.get_or_fit(d, seeded(c.forest, seed), 1);
        log.add("forest " + d.name + " seed " + std::to_string(seed) + " key " + entry.key +
                (entry.hit ? " cache hit" : " cache miss"));
        p.key = entry.key;
        p.forest.emplace(std::move(entry.forest));
      }
      p.inputs = prepare_inputs(d, p.forest ? &*p.forest : nullptr, c.proximity,
                                c.class_conditional, c.methods);
    } catch (const std::exception& ex) {
      p.error = ex.what();
    }
  });

  struct Cell {
    std::vector<std::string> files;
    std::string error;
  };
  const std::size_t n_methods = c.methods.size();
  std::vector<Cell> cells(pairs.size() * n_methods);
  parallel_for(cells.size(), c.jobs, [&](std::size_t i) {
    const std::size_t si = i % n_seeds;
    const std::size_t mi = (i / n_seeds) % n_methods;
    const std::size_t di = i / (n_seeds * n_methods);
    const Pair& p = pairs[di * n_seeds + si];
    Cell& cell = cells[i];
    if (!p.error.empty()) {
      cell.error = p.error;
      return;
    }
    try {
      const Dataset& d = slots[di].loaded->data;
      MethodRunOptions options;
      options.dims = c.dims;
      options.seed = embedding_seed(c.seeds[si]);
      options.strict = c.strict;
      const MethodResult r = run_method(c.methods[mi], p.inputs, options);
      const std::string stem = file_stem(d.name, c.methods[mi], c.seeds[si]);
      {
        auto f = open_output(c.output_dir / "embeddings" / (stem + ".csv"));
        write_embedding_csv(r.embedding, d, f);
      }
      {
        auto f = open_output(c.output_dir / "embeddings" / (stem + ".plot.json"));
        f << plot_descriptor(r.embedding, d, stem + ".csv", c.seeds[si]);
      }
      cell.files = {"embeddings/" + stem + ".csv", "embeddings/" + stem + ".plot.json"};
    } catch (const std::exception& ex) {
      cell.error = ex.what();
    }
  });

  int failures = 0;
  {
    auto m = open_output(c.output_dir / "manifest.txt");
    write_manifest_header(m, "embed", c, slots);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!pairs[i].key.empty()) {
        m << "forest " << slots[i / n_seeds].spec->name << " seed " << c.seeds[i % n_seeds]
          << " key " << pairs[i].key << '\n';
      }
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t si = i % n_seeds;
      const std::size_t mi = (i / n_seeds) % n_methods;
      const std::size_t di = i / (n_seeds * n_methods);
      for (const auto& f : cells[i].files) {
        m << "output " << f << '\n';
      }
      if (!cells[i].error.empty()) {
        ++failures;
        m << "failed " << slots[di].spec->name << ' ' << c.methods[mi].name() << " seed "
          << c.seeds[si] << ": " << cells[i].error << '\n';
      }
    }
  }
  log.write(c.output_dir / "run.log", warnings);
  out << "embed: " << cells.size() - static_cast<std::size_t>(failures) << " of " << cells.size()
      << " embeddings written to " << c.output_dir.string() << '\n';
  if (failures > 0) {
    out << "embed: " << failures << " failed; see manifest.txt\n";
  }
  return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const PipelineConfig& c, const CommandOptions& options, std::ostream& out) {
  validate_config(c, true);
  make_dir(c.output_dir);
  WarningLog warnings;
  RunLog log;
  const ForestCache cache = make_cache(c);
  auto slots = load_all(c);

  std::vector<Dataset> datasets;
  for (const auto& s : slots) {
    if (s.loaded) {
      datasets.push_back(s.loaded->data);
    }
  }
  ComparisonConfig cc;
  cc.k = c.k;
  cc.dims = c.dims;
  cc.forest = c.forest;
  cc.proximity = c.proximity;
  cc.class_conditional = c.class_conditional;
  cc.importance = c.importance;
  cc.importance_repeats = c.importance_repeats;
  cc.strict = c.strict;
  cc.check = options.check;
  cc.jobs = c.jobs;
  cc.forest_provider = [&](const Dataset& d, const ForestConfig& fc) {
    auto entry = cache.get_or_fit(d, fc, 1);
    log.add("forest " + d.name + " seed " + std::to_string(fc.seed) + " key " + entry.key +
            (entry.hit ? " cache hit" : " cache miss"));
    return std::move(entry.forest);
  };

  EvalReport report;
  if (!datasets.empty()) {
    report = run_comparison(datasets, c.methods, c.seeds, cc);
  }

  // Acceptance-style checks, evaluated only under --check.
  std::vector<std::string> check_lines;
  bool all_passed = true;
  auto check = [&](bool passed, const std::string& what) {
    all_passed = all_passed && passed;
    check_lines.push_back(std::string(passed ? "PASS " : "FAIL ") + what);
  };
  if (options.check) {
    for (const auto& s : slots) {
      check(s.loaded.has_value(), "dataset " + s.spec->name + " loads");
    }
    for (const auto& row : report.rows) {
      const std::string id = row.dataset + " " + row.method + " seed " + std::to_string(row.seed);
      check(row.ok(), "cell " + id + " runs" + (row.ok() ? "" : ": " + row.error));
      if (row.ok()) {
        check(row.check_failures.empty(),
              "contracts " + id + " (" + std::to_string(row.checks_run) + " checks)" +
                  (row.check_failures.empty() ? "" : ": " + row.check_failures.front()));
      }
    }
    for (const auto& a : report.aggregates) {
      if (a.family != Family::forest || a.method.find(":diffusion_map") == std::string::npos) {
        continue;
      }
      auto it = a.metrics.find("oob_delta");
      if (it == a.metrics.end()) {
        continue;
      }
      check(std::abs(it->second.mean) <= 0.05,
            "oob delta " + a.dataset + " " + a.method + " |" + format_double(it->second.mean) +
                "| <= 0.05");
    }
  }

  {
    auto f = open_output(c.output_dir / "report.csv");
    write_report_csv(report, f);
  }
  {
    auto f = open_output(c.output_dir / "summary.txt");
    write_report_summary(report, f);
    for (const auto& s : slots) {
      if (!s.loaded) {
        f << "error: dataset " << s.spec->name << ": " << s.error << '\n';
      }
    }
    for (const auto& l : check_lines) {
      f << l << '\n';
    }
  }
  {
    auto m = open_output(c.output_dir / "manifest.txt");
    write_manifest_header(m, "evaluate", c, slots);
    m << "output report.csv\n";
    m << "output summary.txt\n";
    int failed = 0;
    for (const auto& row : report.rows) {
      failed += row.ok() ? 0 : 1;
    }
    m << "cells " << report.rows.size() << " failed " << failed << '\n';
    if (options.check) {
      m << "check " << (all_passed ? "PASS" : "FAIL") << '\n';
    }
  }
  log.write(c.output_dir / "run.log", warnings);

  std::ostringstream summary;
  write_report_summary(report, summary);
  out << summary.str();
  for (const auto& l : check_lines) {
    if (l.rfind("FAIL", 0) == 0) {
      out << l << '\n';
    }
  }
  if (options.check) {
    out << "check: " << (all_passed ? "PASS" : "FAIL") << '\n';
    return all_passed ? 0 : 1;
  }
  const bool any_failed = std::any_of(report.rows.begin(), report.rows.end(),
                                      [](const EvalRow& r) { return !r.ok(); }) ||
                          datasets.size() != slots.size();
  return any_failed ? 1 : 0;
}

int cmd_proximity(const PipelineConfig& c, const CommandOptions& options, std::ostream& out) {
  validate_config(c, false);
  make_dir(c.output_dir);
  make_dir(c.output_dir / "matrices");
  WarningLog warnings;
  RunLog log;
  const ForestCache cache = make_cache(c);
  auto slots = load_all(c);
  const std::size_t n_seeds = c.seeds.size();
  const std::string kind(to_string(c.proximity));

  struct Cell {
    std::vector<std::string> lines;
    bool failed = false;
    bool check_failed = false;
  };
  std::vector<Cell> cells(slots.size() * n_seeds);
  parallel_for(cells.size(), c.jobs, [&](std::size_t i) {
    const auto& slot = slots[i / n_seeds];
    const std::uint64_t seed = c.seeds[i % n_seeds];
    Cell& cell = cells[i];
    const std::string id = slot.spec->name + " seed " + std::to_string(seed);
    if (!slot.loaded) {
      cell.failed = true;
      cell.lines.push_back("failed " + id + ": dataset failed to load: " + slot.error);
      return;
    }
    try {
      const Dataset& d = slot.loaded->data;
      auto entry = cache.get_or_fit(d, seeded(c.forest, seed), 1);
      log.add("forest " + id + " key " + entry.key + (entry.hit ? " cache hit" : " cache miss"));
      const Forest& f = entry.forest;
      cell.lines.push_back("forest " + id + " key " + entry.key);
      const ProximityMatrix p = compute_proximity(f, c.proximity);
      if (c.proximity != ProximityKind::rfgap) {
        const Index n = p.n();
        for (Index a = 0; a < n; ++a) {
          if (p.values(a, a) != 1.0) {
            throw std::logic_error(kind + " proximity diagonal is not 1 at row " + std::to_string(a));
          }
          for (Index b = a + 1; b < n; ++b) {
            if (p.values(a, b) != p.values(b, a)) {
              throw std::logic_error(kind + " proximity is not symmetric at (" + std::to_string(a) +
                                     ", " + std::to_string(b) + ")");
            }
          }
        }
      }
      const Kernel k = to_kernel(p, seed);
      if (auto problem = check_kernel(k, true)) {
        throw std::logic_error("kernel check failed: " + *problem);
      }
      const std::string stem = d.name + "__seed" + std::to_string(seed);
      {
        auto o = open_output(c.output_dir / "matrices" / ("proximity_" + kind + "__" + stem + ".csv"));
        write_matrix(p.values, c.matrix_format, o);
      }
      {
        auto o = open_output(c.output_dir / "matrices" / ("kernel_" + kind + "__" + stem + ".csv"));
        write_matrix(k.values, c.matrix_format, o);
      }
      cell.lines.push_back("output matrices/proximity_" + kind + "__" + stem + ".csv");
      cell.lines.push_back("output matrices/kernel_" + kind + "__" + stem + ".csv");
      if (c.proximity == ProximityKind::rfgap) {
        const OobReport oob = oob_predict(f, d);
        const IdentityCheck idc = check_oob_identity(p, f, oob);
        cell.lines.push_back("oob identity " + id + ": " + (idc.passed ? "PASS" : "FAIL") +
                             " (checked " + std::to_string(idc.checked) + ", mismatches " +
                             std::to_string(idc.mismatches) + ", max error " +
                             format_double(idc.max_error) + ")");
        cell.check_failed = !idc.passed;
        std::size_t uncovered = 0;
        for (bool u : p.uncovered) {
          uncovered += u ? 1 : 0;
        }
        if (uncovered > 0) {
          cell.lines.push_back("uncovered " + id + ": " + std::to_string(uncovered) +
                               " observations never out-of-bag");
        }
      } else if (c.proximity == ProximityKind::oob) {
        const auto undefined = p.undefined.count();
        if (undefined > 0) {
          cell.lines.push_back("undefined pairs " + id + ": " + std::to_string(undefined));
        }
      }
    } catch (const std::exception& ex) {
      cell.failed = true;
      cell.lines.push_back("failed " + id + ": " + ex.what());
    }
  });

  int failures = 0;
  int check_failures = 0;
  {
    auto m = open_output(c.output_dir / "manifest.txt");
    write_manifest_header(m, "proximity", c, slots);
    m << "matrix_format " << (c.matrix_format == MatrixFormat::dense ? "dense" : "triplet") << '\n';
    for (const auto& cell : cells) {
      for (const auto& l : cell.lines) {
        m << l << '\n';
      }
      failures += cell.failed ? 1 : 0;
      check_failures += cell.check_failed ? 1 : 0;
    }
  }
  log.write(c.output_dir / "run.log", warnings);
  for (const auto& cell : cells) {
    for (const auto& l : cell.lines) {
      if (l.rfind("oob identity", 0) == 0 || l.rfind("failed", 0) == 0) {
        out << l << '\n';
      }
    }
  }
  out << "proximity: wrote " << kind << " matrices for " << cells.size() - failures << " of "
      << cells.size() << " runs to " << c.output_dir.string() << '\n';
  if (failures > 0) {
    return 1;
  }
  return options.check && check_failures > 0 ? 1 : 0;
}

void cmd_datasets(std::ostream& out) {
  out << "synthetic recipes:\n";
  for (const auto& r : registered_recipes()) {
    out << "  " << r.name << ": " << r.description << '\n';
    out << "    params:";
    for (const auto& [key, value] : r.defaults) {
      out << ' ' << key << '=' << format_double(value);
    }
    out << '\n';
  }
  out << "embedding methods (<input>:<algorithm>, input one of rf, euclidean, class_conditional):\n";
  for (const auto& a : registered_algorithms()) {
    out << "  " << a;
    const auto params = algorithm_parameters(a);
    if (!params.empty()) {
      out << "  params:";
      for (const auto& p : params) {
        out << ' ' << p;
      }
    }
    out << '\n';
  }
}

}  // namespace rfgap

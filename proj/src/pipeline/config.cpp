#include "rfgap/pipeline.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rfgap {
namespace {

using nlohmann::json;

std::string type_name(const json& j) { return j.type_name(); }

// Reads fields from one JSON object and rejects keys nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError("config field '" + display() + "': expected an object, got " +
                        type_name(j_));
    }
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& require(const std::string& key) {
    const json* v = get(key);
    if (v == nullptr) {
      throw ConfigError("config field '" + field(key) + "' is required");
    }
    return *v;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        throw ConfigError("config field '" + field(key) + "' is not recognized");
      }
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

[[noreturn]] void bad(const std::string& field, const std::string& expected, const json& v) {
  throw ConfigError("config field '" + field + "': expected " + expected + ", got " + v.dump());
}

long long as_integer(const json& v, const std::string& field) {
  if (!v.is_number_integer()) {
    bad(field, "an integer", v);
  }
  return v.get<long long>();
}

int as_positive_int(const json& v, const std::string& field) {
  const long long x = as_integer(v, field);
  if (x < 1 || x > 1'000'000'000) {
    bad(field, "a positive integer", v);
  }
  return static_cast<int>(x);
}

double as_number(const json& v, const std::string& field) {
  if (!v.is_number()) {
    bad(field, "a number", v);
  }
  const double x = v.get<double>();
  if (!std::isfinite(x)) {
    bad(field, "a finite number", v);
  }
  return x;
}

bool as_bool(const json& v, const std::string& field) {
  if (!v.is_boolean()) {
    bad(field, "true or false", v);
  }
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) {
    bad(field, "a string", v);
  }
  return v.get<std::string>();
}

template <class Parse>
auto as_enum(const json& v, const std::string& field, Parse parse) {
  const std::string text = as_string(v, field);
  try {
    return parse(text);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("config field '" + field + "': " + ex.what());
  }
}

std::map<std::string, double> as_number_map(const json& v, const std::string& field) {
  if (!v.is_object()) {
    bad(field, "an object of numbers", v);
  }
  std::map<std::string, double> out;
  for (const auto& [key, value] : v.items()) {
    out[key] = as_number(value, field + "." + key);
  }
  return out;
}

DatasetSpec parse_dataset(const json& j, const std::string& field,
                          const std::filesystem::path& base_dir) {
  ObjectReader r(j, field);
  DatasetSpec spec;
  if (const json* v = r.get("csv")) {
    spec.csv = as_string(*v, r.field("csv"));
    const std::filesystem::path p(*spec.csv);
    spec.resolved_csv = p.is_absolute() ? p : base_dir / p;
  }
  if (const json* v = r.get("synthetic")) {
    spec.synthetic = as_string(*v, r.field("synthetic"));
  }
  if (spec.csv.has_value() == spec.synthetic.has_value()) {
    throw ConfigError("config field '" + field + "': exactly one of 'csv' or 'synthetic' is required");
  }
  if (const json* v = r.get("name")) {
    spec.name = as_string(*v, r.field("name"));
  } else {
    spec.name = spec.csv ? std::filesystem::path(*spec.csv).stem().string() : *spec.synthetic;
  }
  if (spec.name.empty() || spec.name.find_first_of("/\\ ,") != std::string::npos) {
    throw ConfigError("config field '" + r.field("name") +
                      "': must be non-empty without spaces, commas or slashes");
  }
  if (spec.csv) {
    const json& label = r.require("label_column");
    if (label.is_string()) {
      spec.label_column = label.get<std::string>();
    } else if (label.is_number_integer() && label.get<long long>() >= 0) {
      spec.label_column = static_cast<std::size_t>(label.get<long long>());
    } else {
      bad(r.field("label_column"), "a column name or non-negative index", label);
    }
    if (const json* v = r.get("label_kind")) {
      spec.label_kind = as_enum(*v, r.field("label_kind"), parse_label_kind);
    }
    if (const json* v = r.get("drop_columns")) {
      if (!v->is_array()) {
        bad(r.field("drop_columns"), "an array of column names", *v);
      }
      for (std::size_t i = 0; i < v->size(); ++i) {
        spec.drop_columns.push_back(
            as_string((*v)[i], r.field("drop_columns") + "[" + std::to_string(i) + "]"));
      }
    }
  } else {
    const auto recipes = registered_recipes();
    auto it = std::find_if(recipes.begin(), recipes.end(),
                           [&](const RecipeInfo& info) { return info.name == *spec.synthetic; });
    if (it == recipes.end()) {
      std::string names;
      for (const auto& info : recipes) {
        names += " " + info.name;
      }
      throw ConfigError("config field '" + r.field("synthetic") + "': unknown recipe '" +
                        *spec.synthetic + "'; registered:" + names);
    }
    spec.label_kind = it->name == "regression_gradient" ? LabelKind::regression
                                                        : LabelKind::classification;
    spec.params = it->defaults;
    if (const json* v = r.get("params")) {
      for (const auto& [key, value] : as_number_map(*v, r.field("params"))) {
        if (!it->defaults.count(key)) {
          throw ConfigError("config field '" + r.field("params") + "." + key +
                            "' is not a parameter of recipe '" + it->name + "'");
        }
        if (value != std::floor(value)) {
          if (key != "separation") {
            throw ConfigError("config field '" + r.field("params") + "." + key +
                              "': expected an integer");
          }
        }
        spec.params[key] = value;
      }
    }
  }
  r.finish();
  return spec;
}

MethodSpec parse_method_entry(const json& j, const std::string& field) {
  MethodSpec spec;
  try {
    if (j.is_string()) {
      spec = parse_method(j.get<std::string>());
    } else {
      ObjectReader r(j, field);
      spec.algorithm = as_string(r.require("algorithm"), r.field("algorithm"));
      if (const json* v = r.get("input")) {
        spec.input = as_enum(*v, r.field("input"), parse_input_source);
      }
      if (const json* v = r.get("params")) {
        spec.params = as_number_map(*v, r.field("params"));
      }
      r.finish();
    }
    validate_method(spec);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("config field '" + field + "': " + ex.what());
  }
  return spec;
}

json forest_json(const ForestConfig& f) {
  json j;
  j["n_trees"] = f.n_trees;
  j["mtry"] = f.mtry ? json(*f.mtry) : json(nullptr);
  j["min_leaf"] = f.min_leaf ? json(*f.min_leaf) : json(nullptr);
  j["max_depth"] = f.max_depth ? json(*f.max_depth) : json(nullptr);
  return j;
}

}  // namespace

PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  ObjectReader r(root, "");
  PipelineConfig c;

  const long long version = as_integer(r.require("schema_version"), "schema_version");
  if (version != kConfigSchemaVersion) {
    throw ConfigError("config field 'schema_version': unsupported version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }

  const json& datasets = r.require("datasets");
  if (!datasets.is_array() || datasets.empty()) {
    bad("datasets", "a non-empty array", datasets);
  }
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    c.datasets.push_back(parse_dataset(datasets[i], "datasets[" + std::to_string(i) + "]", base_dir));
  }

  const json& seeds = r.require("seeds");
  if (!seeds.is_array()) {
    bad("seeds", "an array of non-negative integers", seeds);
  }
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const std::string f = "seeds[" + std::to_string(i) + "]";
    if (!seeds[i].is_number_unsigned()) {
      bad(f, "a non-negative integer", seeds[i]);
    }
    c.seeds.push_back(seeds[i].get<std::uint64_t>());
  }

  if (const json* v = r.get("normalize")) c.normalize = as_bool(*v, "normalize");
  if (const json* v = r.get("forest")) {
    ObjectReader f(*v, "forest");
    if (const json* x = f.get("n_trees")) c.forest.n_trees = as_positive_int(*x, "forest.n_trees");
    for (const char* key : {"mtry", "min_leaf", "max_depth"}) {
      const json* x = f.get(key);
      if (x == nullptr || x->is_null()) continue;
      const int value = as_positive_int(*x, f.field(key));
      if (std::string_view(key) == "mtry") c.forest.mtry = value;
      if (std::string_view(key) == "min_leaf") c.forest.min_leaf = value;
      if (std::string_view(key) == "max_depth") c.forest.max_depth = value;
    }
    f.finish();
  }
  if (const json* v = r.get("proximity")) {
    c.proximity = as_enum(*v, "proximity", parse_proximity_kind);
  }
  if (const json* v = r.get("methods")) {
    if (!v->is_array()) {
      bad("methods", "an array", *v);
    }
    for (std::size_t i = 0; i < v->size(); ++i) {
      c.methods.push_back(parse_method_entry((*v)[i], "methods[" + std::to_string(i) + "]"));
    }
  }
  if (const json* v = r.get("k")) c.k = as_positive_int(*v, "k");
  if (const json* v = r.get("dims")) c.dims = as_positive_int(*v, "dims");
  if (const json* v = r.get("class_conditional")) {
    ObjectReader cc(*v, "class_conditional");
    if (const json* x = cc.get("alpha")) {
      c.class_conditional.alpha = as_number(*x, "class_conditional.alpha");
      if (c.class_conditional.alpha < 0.0) bad("class_conditional.alpha", "alpha >= 0", *x);
    }
    if (const json* x = cc.get("beta"); x != nullptr && !x->is_null() && *x != "auto") {
      c.class_conditional.beta = as_number(*x, "class_conditional.beta");
      if (!(*c.class_conditional.beta > 0.0)) bad("class_conditional.beta", "beta > 0", *x);
    }
    cc.finish();
  }
  if (const json* v = r.get("importance")) {
    ObjectReader imp(*v, "importance");
    if (const json* x = imp.get("enabled")) c.importance = as_bool(*x, "importance.enabled");
    if (const json* x = imp.get("repeats")) {
      c.importance_repeats = as_positive_int(*x, "importance.repeats");
    }
    imp.finish();
  }
  if (const json* v = r.get("matrix_format")) {
    c.matrix_format = as_enum(*v, "matrix_format", parse_matrix_format);
  }
  if (const json* v = r.get("strict")) c.strict = as_bool(*v, "strict");
  if (const json* v = r.get("output_dir")) {
    const std::filesystem::path p(as_string(*v, "output_dir"));
    c.output_dir = p.is_absolute() ? p : base_dir / p;
  } else {
    c.output_dir = base_dir / c.output_dir;
  }
  if (const json* v = r.get("jobs")) c.jobs = as_positive_int(*v, "jobs");
  r.finish();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config file '" + path.string() + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

void validate_config(const PipelineConfig& c, bool require_methods) {
  if (c.datasets.empty()) {
    throw ConfigError("config field 'datasets': at least one dataset is required");
  }
  if (c.seeds.empty()) {
    throw ConfigError("config field 'seeds': at least one seed is required");
  }
  if (require_methods && c.methods.empty()) {
    throw ConfigError("config field 'methods': at least one method is required");
  }
  std::set<std::string> names;
  for (const auto& d : c.datasets) {
    if (!names.insert(d.name).second) {
      throw ConfigError("config field 'datasets': duplicate dataset name '" + d.name + "'");
    }
  }
  std::set<std::string> methods;
  for (const auto& m : c.methods) {
    if (!methods.insert(m.name()).second) {
      throw ConfigError("config field 'methods': duplicate method '" + m.name() +
                        "' (give each method a distinct algorithm and input)");
    }
    try {
      validate_method(m);
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(std::string("config field 'methods': ") + ex.what());
    }
  }
  if (c.k < 1) throw ConfigError("config field 'k': must be positive");
  if (c.dims < 1) throw ConfigError("config field 'dims': must be positive");
  if (c.jobs < 1) throw ConfigError("config field 'jobs': must be positive");
  if (c.forest.n_trees < 1) throw ConfigError("config field 'forest.n_trees': must be positive");
  if (c.class_conditional.alpha < 0.0) {
    throw ConfigError("config field 'class_conditional.alpha': must be >= 0");
  }
  if (c.class_conditional.beta && !(*c.class_conditional.beta > 0.0)) {
    throw ConfigError("config field 'class_conditional.beta': must be > 0");
  }
}

std::string config_echo(const PipelineConfig& c) {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["datasets"] = json::array();
  for (const auto& d : c.datasets) {
    json dj;
    dj["name"] = d.name;
    if (d.csv) {
      dj["csv"] = *d.csv;
      if (const auto* s = std::get_if<std::string>(&d.label_column)) {
        dj["label_column"] = *s;
      } else {
        dj["label_column"] = std::get<std::size_t>(d.label_column);
      }
      dj["label_kind"] = std::string(to_string(d.label_kind));
      dj["drop_columns"] = d.drop_columns;
    } else {
      dj["synthetic"] = *d.synthetic;
      dj["params"] = d.params;
    }
    j["datasets"].push_back(dj);
  }
  j["normalize"] = c.normalize;
  j["forest"] = forest_json(c.forest);
  j["proximity"] = std::string(to_string(c.proximity));
  j["methods"] = json::array();
  for (const auto& m : c.methods) {
    j["methods"].push_back({{"algorithm", m.algorithm},
                            {"input", std::string(to_string(m.input))},
                            {"params", m.params}});
  }
  j["seeds"] = c.seeds;
  j["k"] = c.k;
  j["dims"] = c.dims;
  j["class_conditional"] = {{"alpha", c.class_conditional.alpha},
                            {"beta", c.class_conditional.beta ? json(*c.class_conditional.beta)
                                                              : json("auto")}};
  j["importance"] = {{"enabled", c.importance}, {"repeats", c.importance_repeats}};
  j["matrix_format"] = c.matrix_format == MatrixFormat::dense ? "dense" : "triplet";
  j["strict"] = c.strict;
  return j.dump();
}

std::vector<RecipeInfo> registered_recipes() {
  return {
      {"blobs",
       "Gaussian classes separated along informative features, plus N(0,1) noise features",
       {{"n_per_class", 150}, {"n_informative", 2}, {"n_noise", 4}, {"separation", 3.0},
        {"n_classes", 2}, {"seed", 0}}},
      {"regression_gradient",
       "continuous label driven by a latent coordinate; graded, binary and noise features",
       {{"n", 300}, {"p", 5}, {"seed", 0}}},
  };
}

LoadedDataset load_dataset(const DatasetSpec& spec, bool normalize) {
  Dataset raw;
  if (spec.csv) {
    CsvOptions options;
    options.drop_columns = spec.drop_columns;
    raw = load_csv(spec.resolved_csv, spec.label_column, spec.label_kind, options);
  } else {
    auto p = [&](const char* key) { return spec.params.at(key); };
    auto ip = [&](const char* key) { return static_cast<int>(p(key)); };
    if (*spec.synthetic == "blobs") {
      raw = synthesize_blobs(ip("n_per_class"), ip("n_informative"), ip("n_noise"), p("separation"),
                             static_cast<std::uint64_t>(p("seed")), ip("n_classes"));
    } else if (*spec.synthetic == "regression_gradient") {
      raw = synthesize_regression_gradient(ip("n"), ip("p"), static_cast<std::uint64_t>(p("seed")));
    } else {
      throw ConfigError("unknown synthetic recipe '" + *spec.synthetic + "'");
    }
  }
  raw.name = spec.name;
  LoadedDataset out;
  if (normalize) {
    auto [data, record] = zscore_normalize(raw);
    out.data = std::move(data);
    out.normalization = std::move(record);
    out.normalized = true;
  } else {
    out.data = std::move(raw);
  }
  return out;
}

}  // namespace rfgap

#include "rfgap/methods.hpp"

#include "rfgap/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rfgap {
namespace {

struct AlgorithmInfo {
  std::string_view name;
  bool uses_kernel;  // otherwise consumes a distance matrix
  std::vector<std::string> params;
};

const std::vector<AlgorithmInfo>& registry() {
  static const std::vector<AlgorithmInfo> algorithms = {
      {"diffusion_map", true, {"t", "affinity_k"}},
      {"potential", true, {"t", "max_t", "epsilon", "affinity_k"}},
      {"laplacian_eigenmaps", true, {"affinity_k"}},
      {"kernel_pca", true, {"affinity_k"}},
      {"isomap", false, {"k"}},
      {"classical_mds", false, {}},
      {"metric_mds", false, {"max_iter", "tol"}},
      {"tsne", false, {"perplexity", "iterations"}},
  };
  return algorithms;
}

const AlgorithmInfo& lookup(std::string_view algorithm) {
  for (const auto& info : registry()) {
    if (info.name == algorithm) {
      return info;
    }
  }
  std::string message = "unknown method '" + std::string(algorithm) + "'; registered methods:";
  for (const auto& info : registry()) {
    message += " " + std::string(info.name);
  }
  throw std::invalid_argument(message);
}

double param_or(const MethodSpec& spec, const std::string& key, double fallback) {
  auto it = spec.params.find(key);
  return it == spec.params.end() ? fallback : it->second;
}

int int_param(const MethodSpec& spec, const std::string& key, int fallback) {
  const double v = param_or(spec, key, fallback);
  if (v != std::floor(v)) {
    throw std::invalid_argument(spec.name() + ": parameter '" + key + "' must be an integer");
  }
  return static_cast<int>(v);
}

int affinity_k(const MethodSpec& spec, Index n) {
  const int fallback = static_cast<int>(std::min<Index>(10, n - 1));
  return int_param(spec, "affinity_k", fallback);
}

const DistanceMatrix& distance_input(const MethodSpec& spec, const PreparedInputs& in) {
  const auto& source =
      spec.input == InputSource::euclidean ? in.euclidean : in.class_conditional;
  if (!source) {
    if (spec.input == InputSource::class_conditional && in.data != nullptr &&
        !in.data->is_classification()) {
      throw std::invalid_argument(spec.name() + ": class-conditional input needs class labels");
    }
    throw std::logic_error(spec.name() + ": distance input was not prepared");
  }
  return *source;
}

void record(MethodResult& r, const std::string& what, const std::optional<std::string>& failure) {
  ++r.checks_run;
  if (failure) {
    r.check_failures.push_back(what + ": " + *failure);
  }
}

double max_row_sum_error(const Matrix& p) {
  return (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

void check_diffusion(MethodResult& r, const Kernel& k, int t) {
  const StochasticMatrix p = diffusion_operator(k);
  const double e1 = max_row_sum_error(p.values);
  record(r, "diffusion operator rows",
         e1 <= 1e-12 ? std::nullopt
                     : std::optional<std::string>("row sum error " + std::to_string(e1)));
  const StochasticMatrix pt = power_operator(p, t);
  const double et = max_row_sum_error(pt.values);
  record(r, "diffusion operator rows after t=" + std::to_string(t),
         et <= 1e-10 ? std::nullopt
                     : std::optional<std::string>("row sum error " + std::to_string(et)));
}

}  // namespace

std::string_view to_string(InputSource input) {
  switch (input) {
    case InputSource::rf: return "rf";
    case InputSource::euclidean: return "euclidean";
    case InputSource::class_conditional: return "class_conditional";
  }
  return "rf";
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::forest: return "forest";
    case Family::unsupervised: return "unsupervised";
    case Family::class_conditional: return "class_conditional";
  }
  return "forest";
}

InputSource parse_input_source(std::string_view text) {
  if (text == "rf") return InputSource::rf;
  if (text == "euclidean") return InputSource::euclidean;
  if (text == "class_conditional") return InputSource::class_conditional;
  throw std::invalid_argument("unknown method input '" + std::string(text) +
                              "' (expected rf, euclidean or class_conditional)");
}

Family family_of(InputSource input) {
  switch (input) {
    case InputSource::rf: return Family::forest;
    case InputSource::euclidean: return Family::unsupervised;
    case InputSource::class_conditional: return Family::class_conditional;
  }
  return Family::forest;
}

std::uint64_t embedding_seed(std::uint64_t run_seed) { return derive_seed(run_seed, {2}); }

std::string MethodSpec::name() const {
  return std::string(to_string(input)) + ":" + algorithm;
}

std::vector<std::string> registered_algorithms() {
  std::vector<std::string> out;
  for (const auto& info : registry()) {
    out.emplace_back(info.name);
  }
  return out;
}

std::vector<std::string> algorithm_parameters(std::string_view algorithm) {
  return lookup(algorithm).params;
}

MethodSpec parse_method(std::string_view text) {
  MethodSpec spec;
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    spec.algorithm = std::string(text);
  } else {
    spec.input = parse_input_source(text.substr(0, colon));
    spec.algorithm = std::string(text.substr(colon + 1));
  }
  lookup(spec.algorithm);
  return spec;
}

void validate_method(const MethodSpec& spec) {
  const auto& info = lookup(spec.algorithm);
  for (const auto& [key, value] : spec.params) {
    if (std::find(info.params.begin(), info.params.end(), key) == info.params.end()) {
      std::string message = spec.name() + ": unknown parameter '" + key + "'; accepted:";
      for (const auto& p : info.params) {
        message += " " + p;
      }
      throw std::invalid_argument(message);
    }
    if (!std::isfinite(value)) {
      throw std::invalid_argument(spec.name() + ": parameter '" + key + "' is not finite");
    }
  }
  const auto positive = [&](const std::string& key) {
    auto it = spec.params.find(key);
    if (it != spec.params.end() && !(it->second > 0.0)) {
      throw std::invalid_argument(spec.name() + ": parameter '" + key + "' must be positive");
    }
  };
  for (const auto& key : {"t", "max_t", "epsilon", "affinity_k", "k", "max_iter", "tol",
                          "perplexity", "iterations"}) {
    positive(key);
  }
  if (spec.params.count("affinity_k") && spec.input == InputSource::rf) {
    throw std::invalid_argument(spec.name() +
                                ": 'affinity_k' applies only to euclidean or class_conditional input");
  }
}

PreparedInputs prepare_inputs(const Dataset& d, const Forest* forest, ProximityKind kind,
                              const ClassConditionalParams& params,
                              const std::vector<MethodSpec>& methods) {
  PreparedInputs out;
  out.data = &d;
  bool need_rf = false;
  bool need_euclidean = false;
  bool need_cc = false;
  for (const auto& m : methods) {
    need_rf |= m.input == InputSource::rf;
    need_euclidean |= m.input != InputSource::rf;
    need_cc |= m.input == InputSource::class_conditional;
  }
  if (need_rf) {
    if (forest == nullptr) {
      throw std::invalid_argument("rf input requested without a forest");
    }
    out.forest_kernel = to_kernel(compute_proximity(*forest, kind), forest->config().seed);
  }
  if (need_euclidean) {
    out.euclidean = euclidean_distances(d);
  }
  // Regression labels leave the input unset; those cells fail on their own.
  if (need_cc && d.is_classification()) {
    out.class_conditional = class_conditional_distance(*out.euclidean, d, params);
  }
  return out;
}

MethodResult run_method(const MethodSpec& spec, const PreparedInputs& in,
                        const MethodRunOptions& options) {
  validate_method(spec);
  if (in.data == nullptr) {
    throw std::invalid_argument("run_method: no dataset");
  }
  const auto& info = lookup(spec.algorithm);
  const Index n = in.data->n();
  MethodResult r;

  if (info.uses_kernel) {
    Kernel kernel;
    if (spec.input == InputSource::rf) {
      if (!in.forest_kernel) {
        throw std::logic_error(spec.name() + ": forest kernel was not prepared");
      }
      kernel = *in.forest_kernel;
    } else {
      const DistanceMatrix& dist = distance_input(spec, in);
      if (options.check) {
        record(r, "distance input", check_distance(dist));
      }
      kernel = gaussian_affinity(dist, Bandwidth::adaptive(affinity_k(spec, n)));
    }
    if (options.check) {
      record(r, "kernel", check_kernel(kernel, spec.input == InputSource::rf));
    }
    if (spec.algorithm == "diffusion_map") {
      const int t = int_param(spec, "t", 1);
      r.embedding = diffusion_map(kernel, t, options.dims);
      if (options.check) {
        check_diffusion(r, kernel, t);
      }
    } else if (spec.algorithm == "potential") {
      PotentialOptions po;
      if (spec.params.count("t")) {
        po.t = int_param(spec, "t", 1);
      }
      po.max_t = int_param(spec, "max_t", po.max_t);
      po.epsilon = param_or(spec, "epsilon", po.epsilon);
      r.embedding = potential_embedding(kernel, options.dims, po);
      if (options.check) {
        check_diffusion(r, kernel, std::stoi(r.embedding.config.at("t")));
      }
    } else if (spec.algorithm == "laplacian_eigenmaps") {
      r.embedding = laplacian_eigenmaps(kernel, options.dims);
    } else {
      r.embedding = kernel_pca(kernel, options.dims);
    }
  } else {
    DistanceMatrix dist;
    if (spec.input == InputSource::rf) {
      if (!in.forest_kernel) {
        throw std::logic_error(spec.name() + ": forest kernel was not prepared");
      }
      if (options.check) {
        record(r, "kernel", check_kernel(*in.forest_kernel, true));
      }
      dist = kernel_to_distance(*in.forest_kernel);
    } else {
      dist = distance_input(spec, in);
    }
    if (options.check) {
      record(r, "distance input", check_distance(dist));
    }
    if (spec.algorithm == "isomap") {
      const int k = int_param(spec, "k", static_cast<int>(std::min<Index>(10, n - 1)));
      r.embedding = isomap(dist, k, options.dims, IsomapOptions{options.strict});
    } else if (spec.algorithm == "classical_mds") {
      r.embedding = classical_mds(dist, options.dims);
    } else if (spec.algorithm == "metric_mds") {
      SmacofOptions so;
      so.max_iter = int_param(spec, "max_iter", so.max_iter);
      so.tol = param_or(spec, "tol", so.tol);
      r.embedding = stress_majorization(dist, options.dims, classical_mds(dist, options.dims), so);
    } else {
      TsneOptions to;
      to.dims = options.dims;
      to.seed = options.seed;
      to.perplexity = param_or(spec, "perplexity", to.perplexity);
      to.iterations = int_param(spec, "iterations", to.iterations);
      r.embedding = tsne(dist, to);
    }
  }
  r.embedding.method = spec.name();
  r.embedding.source = std::string(to_string(spec.input));
  for (const auto& [key, value] : spec.params) {
    r.embedding.config.emplace(key, std::to_string(value));
  }
  return r;
}

}  // namespace rfgap

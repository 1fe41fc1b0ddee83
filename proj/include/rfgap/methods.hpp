#pragma once

#include "rfgap/baseline.hpp"
#include "rfgap/data.hpp"
#include "rfgap/embed.hpp"
#include "rfgap/forest.hpp"
#include "rfgap/proximity.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rfgap {

// What an embedding algorithm is fed.
//   rf:                the forest kernel (or sqrt(1 - kernel) for distance methods)
//   euclidean:         Euclidean distances (or their adaptive Gaussian affinity)
//   class_conditional: class-conditional dissimilarity (or its Gaussian affinity)
enum class InputSource { rf, euclidean, class_conditional };
enum class Family { forest, unsupervised, class_conditional };

std::string_view to_string(InputSource input);
std::string_view to_string(Family family);
InputSource parse_input_source(std::string_view text);
Family family_of(InputSource input);

struct MethodSpec {
  std::string algorithm;
  InputSource input = InputSource::rf;
  std::map<std::string, double> params;

  // "<input>:<algorithm>", e.g. "rf:diffusion_map".
  std::string name() const;
};

std::vector<std::string> registered_algorithms();
// Parameter names accepted by an algorithm.
std::vector<std::string> algorithm_parameters(std::string_view algorithm);

// Parses "<input>:<algorithm>" or a bare algorithm name (input rf). Throws
// std::invalid_argument listing the registered algorithms for an unknown name.
MethodSpec parse_method(std::string_view text);
// Throws for an unknown algorithm or parameter, or a parameter out of range.
void validate_method(const MethodSpec& spec);

// Inputs shared by every method run on one (dataset, forest) pair.
struct PreparedInputs {
  const Dataset* data = nullptr;
  std::optional<Kernel> forest_kernel;
  std::optional<DistanceMatrix> euclidean;
  std::optional<DistanceMatrix> class_conditional;
};

// Computes only the inputs that `methods` need. `forest` may be null when no
// method uses the rf input.
PreparedInputs prepare_inputs(const Dataset& d, const Forest* forest, ProximityKind kind,
                              const ClassConditionalParams& params,
                              const std::vector<MethodSpec>& methods);

// Seed handed to stochastic embedding algorithms for a given run seed.
std::uint64_t embedding_seed(std::uint64_t run_seed);

struct MethodRunOptions {
  int dims = 2;
  std::uint64_t seed = 0;
  bool strict = false;
  // Verify the kernel and diffusion-operator contracts on the way.
  bool check = false;
};

struct MethodResult {
  Embedding embedding;
  std::vector<std::string> check_failures;
  int checks_run = 0;
};

MethodResult run_method(const MethodSpec& spec, const PreparedInputs& inputs,
                        const MethodRunOptions& options);

}  // namespace rfgap

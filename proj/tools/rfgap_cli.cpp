#include "rfgap/pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::uint64_t> seeds;
  std::optional<int> k;
  std::optional<double> alpha;
  std::optional<std::string> beta;
  std::optional<int> trees;
  std::optional<std::string> out;
  std::optional<int> jobs;
  std::optional<std::string> format;
  bool strict = false;
  bool check = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON pipeline config")->required()->check(CLI::ExistingFile);
  auto* seed = cmd->add_option("--seed", o.seed, "run with this single seed");
  cmd->add_option("--seeds", o.seeds, "comma-separated seed list")->delimiter(',')->excludes(seed);
  cmd->add_option("--k", o.k, "neighbours for k-NN evaluation")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", o.alpha, "class-conditional alpha")->check(CLI::NonNegativeNumber);
  cmd->add_option("--beta", o.beta, "class-conditional beta: 'auto' (mean distance) or a number")
      ->check(CLI::IsMember({"auto"}) | CLI::PositiveNumber);
  cmd->add_option("--trees", o.trees, "trees per forest")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--strict", o.strict, "fail instead of bridging disconnected Isomap graphs");
}

rfgap::PipelineConfig resolve(const Overrides& o) {
  rfgap::PipelineConfig c = rfgap::load_config(o.config);
  if (o.seed) c.seeds = {*o.seed};
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.k) c.k = *o.k;
  if (o.alpha) c.class_conditional.alpha = *o.alpha;
  if (o.beta) {
    c.class_conditional.beta =
        *o.beta == "auto" ? std::nullopt : std::optional<double>(std::stod(*o.beta));
  }
  if (o.trees) c.forest.n_trees = *o.trees;
  if (o.out) c.output_dir = *o.out;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.format) c.matrix_format = rfgap::parse_matrix_format(*o.format);
  if (o.strict) c.strict = true;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-forest proximity embeddings and their evaluation"};
  app.set_version_flag("--version", std::string(rfgap::kToolVersion));
  app.require_subcommand(1);

  Overrides embed_opts;
  Overrides eval_opts;
  Overrides prox_opts;

  auto* embed = app.add_subcommand("embed", "write one embedding CSV per (dataset, method, seed)");
  add_common(embed, embed_opts);

  auto* evaluate = app.add_subcommand("evaluate", "k-NN accuracy, OOB and importance comparison");
  add_common(evaluate, eval_opts);
  evaluate->add_flag("--check", eval_opts.check,
                     "verify kernel and diffusion contracts and the OOB delta tolerance; "
                     "exit 1 on any failure");

  auto* proximity = app.add_subcommand("proximity", "write proximity and kernel matrices");
  add_common(proximity, prox_opts);
  proximity->add_flag("--check", prox_opts.check, "exit 1 if the OOB identity check fails");
  proximity->add_option("--format", prox_opts.format, "matrix file format")
      ->check(CLI::IsMember({"dense", "triplet"}));
  proximity->footer(std::string(rfgap::matrix_format_help()));

  auto* datasets = app.add_subcommand("datasets", "list synthetic recipes and embedding methods");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*datasets) {
      rfgap::cmd_datasets(std::cout);
      return 0;
    }
    if (*embed) {
      return rfgap::cmd_embed(resolve(embed_opts), std::cout);
    }
    if (*evaluate) {
      return rfgap::cmd_evaluate(resolve(eval_opts), {eval_opts.check}, std::cout);
    }
    if (*proximity) {
      return rfgap::cmd_proximity(resolve(prox_opts), {prox_opts.check}, std::cout);
    }
  } catch (const rfgap::ConfigError& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  }
  return 0;
}

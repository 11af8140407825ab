#include "commands.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>

using namespace concmtf::cli;

int main(int argc, char** argv) {
  CLI::App app{"Constrained coupled matrix-tensor factorization for time-evolving topics"};
  app.require_subcommand(1);

  std::string input, output, tensor_path, matrix_path, model_dir, vocab_path;
  std::optional<std::string> config_path, instance_dir;
  std::optional<double> density_tol;
  std::vector<std::string> model_dirs;
  CommonOverrides over;

  auto add_overrides = [&over](CLI::App* cmd) {
    cmd->add_option("--seed", over.seed, "Random seed override");
    cmd->add_option("--rank", over.rank, "Rank override (applies to all modes)");
    cmd->add_option("--max-iters", over.max_iters, "Iteration cap override");
    cmd->add_option("--eps-a", over.eps_a, "A-block bound: non-negativity plus L1/orthogonality at eps");
    cmd->add_option("--eps-b", over.eps_b, "B-block bound");
    cmd->add_option("--eps-c", over.eps_c, "C-block bound");
    cmd->add_option("--eps-d", over.eps_d, "D-block bound");
    cmd->add_option("--eps-core", over.eps_core, "Core bound: non-negativity plus L1 at eps");
    cmd->add_option("--lambda", over.lambda, "Coupling weight override");
    cmd->add_option("--kind", over.kind, "cp or tucker")->check(CLI::IsMember({"cp", "tucker", "tucker3"}));
  };

  auto* build = app.add_subcommand("build", "Build tensor and tag matrix from a post log");
  build->add_option("--input", input, "JSON-lines post log")->required();
  build->add_option("--output", output, "Output directory")->required();
  build->add_option("--config", config_path, "JSON config");

  auto* decompose = app.add_subcommand("decompose", "Fit a constrained coupled factorization");
  decompose->add_option("--tensor", tensor_path, "Tensor TSV")->required();
  decompose->add_option("--matrix", matrix_path, "Coupled matrix TSV (optional)");
  decompose->add_option("--output", output, "Output directory")->required();
  decompose->add_option("--config", config_path, "JSON config");
  add_overrides(decompose);

  auto* topics = app.add_subcommand("topics", "Extract thresholded topics from a fitted model");
  topics->add_option("--model", model_dir, "Model directory")->required();
  topics->add_option("--vocab", vocab_path, "vocab.tsv")->required();
  topics->add_option("--output", output, "Output directory")->required();
  topics->add_option("--density-tol", density_tol, "Core density tolerance");

  auto* synth = app.add_subcommand("synth", "Generate a planted instance");
  synth->add_option("--output", output, "Output directory")->required();
  synth->add_option("--config", config_path, "JSON config");
  add_overrides(synth);

  auto* eval = app.add_subcommand("eval", "Evaluate fitted models or drive seeded comparisons");
  eval->add_option("--output", output, "Output directory")->required();
  eval->add_option("--config", config_path, "JSON config");
  eval->add_option("--instance", instance_dir, "Instance directory (model-dir mode)");
  eval->add_option("models", model_dirs, "Fitted model directories");

  CLI11_PARSE(app, argc, argv);

  try {
    if (build->parsed()) return cmd_build(input, output, config_path);
    if (decompose->parsed())
      return cmd_decompose(tensor_path, matrix_path, output, config_path, over);
    if (topics->parsed()) return cmd_topics(model_dir, vocab_path, output, density_tol);
    if (synth->parsed()) return cmd_synth(output, config_path, over);
    if (eval->parsed()) return cmd_eval(output, config_path, model_dirs, instance_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

//------------------------------------------------------------------------------
//
//   Copyright 2026 The svdtrain Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "svdtrain/cli.hpp"

#include "svdtrain/checkpoint.hpp"
#include "svdtrain/config.hpp"
#include "svdtrain/error.hpp"
#include "svdtrain/metrics.hpp"
#include "svdtrain/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <string>
#include <vector>

namespace svdtrain {

namespace {

struct Flags
{
  std::string         config;
  std::uint64_t       seed = 0;
  std::string         out;
  std::string         scheme;
  std::string         reg;
  double              lambda_s = 0.0;
  double              lambda_o = 0.0;
  double              energy   = 0.0;
  std::size_t         epochs   = 0;
  std::size_t         finetune_epochs = 0;
  std::string         checkpoint;
  std::vector<double> lambdas{0.0, 0.01};
  std::vector<double> energies{1e-3, 1e-2};

  CLI::Option *seed_opt = nullptr, *out_opt = nullptr, *scheme_opt = nullptr, *reg_opt = nullptr,
              *lambda_s_opt = nullptr, *lambda_o_opt = nullptr, *energy_opt = nullptr,
              *epochs_opt = nullptr, *finetune_epochs_opt = nullptr;
};

/// Config file (if any), then flag overrides.
ExperimentConfig resolve_config(const Flags &f, const std::string &command)
{
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (f.seed_opt->count() > 0)
  {
    cfg.seed = f.seed;
  }
  if (f.out_opt->count() > 0)
  {
    cfg.output_dir = f.out;
  }
  if (f.scheme_opt->count() > 0)
  {
    cfg.scheme = parse_scheme(f.scheme);
  }
  if (f.reg_opt->count() > 0)
  {
    cfg.regularizer.kind = parse_sparsity(f.reg);
  }
  if (f.lambda_o_opt->count() > 0)
  {
    cfg.regularizer.lambda_o = f.lambda_o;
  }
  if (f.lambda_s_opt->count() > 0)
  {
    cfg.regularizer.lambda_s = f.lambda_s;
  }
  if (cfg.regularizer.kind == SparsityKind::None)
  {
    cfg.regularizer.lambda_s = 0.0;
  }
  if (f.energy_opt->count() > 0)
  {
    cfg.energy_threshold = f.energy;
  }
  if (f.epochs_opt->count() > 0)
  {
    (command == "finetune" ? cfg.finetune.epochs : cfg.train.epochs) = f.epochs;
  }
  if (f.finetune_epochs_opt->count() > 0)
  {
    cfg.finetune.epochs = f.finetune_epochs;
  }
  if (!f.checkpoint.empty() && command == "train")
  {
    cfg.model = f.checkpoint;
  }
  return cfg;
}

Model require_checkpoint(const Flags &f, const ExperimentConfig &cfg, const std::string &command)
{
  if (!f.checkpoint.empty())
  {
    return load_checkpoint(f.checkpoint);
  }
  if (cfg.model != "mlp-s" && cfg.model != "cnn-s")
  {
    return load_checkpoint(cfg.model);
  }
  throw ParameterError(command + " needs --checkpoint <manifest>");
}

void print_stage_metrics(std::ostream &out, const std::vector<EpochMetrics> &metrics)
{
  for (auto const &m : metrics)
  {
    out << format_metrics_line(m) << '\n';
  }
}

int run_command(const std::string &command, const Flags &f, std::ostream &out)
{
  ExperimentConfig cfg = resolve_config(f, command);
  cfg.validate();
  auto const dir = cfg.output_dir;

  if (command == "flops")
  {
    Model const model = require_checkpoint(f, cfg, command);
    out << flops_report(model).to_text();
    return kExitOk;
  }

  if (command == "pipeline")
  {
    PipelineResult const result = run_pipeline(cfg);
    write_pipeline_outputs(result, dir);
    out << result.report.to_text();
    out << "trained_accuracy=" << result.trained_accuracy
        << " pruned_accuracy=" << result.pruned_accuracy
        << " final_accuracy=" << result.final_accuracy << '\n';
    out << "wrote " << dir.string() << '\n';
    return kExitOk;
  }

  Datasets const data = load_datasets(cfg.dataset);

  if (command == "train")
  {
    Model model = initial_model(cfg, data.train.sample_shape(), data.train.class_count);
    auto const metrics = run_training_stage(model, cfg, data);
    save_checkpoint(model, dir / "model.ckpt.json");
    log_metrics(dir / "metrics.log", metrics);
    print_stage_metrics(out, metrics);
    out << "wrote " << (dir / "model.ckpt.json").string() << '\n';
    return kExitOk;
  }
  if (command == "prune")
  {
    Model const model     = require_checkpoint(f, cfg, command);
    auto [pruned, report] = prune_model(model, cfg.energy_threshold);
    save_checkpoint(pruned, dir / "model.ckpt.json");
    write_text_file(dir / "prune_report.txt", report.to_text());
    out << report.to_text();
    out << "val_acc=" << evaluate_accuracy(pruned, data.validation) << '\n';
    return kExitOk;
  }
  if (command == "finetune")
  {
    Model model        = require_checkpoint(f, cfg, command);
    auto const metrics = run_finetune_stage(model, cfg, data);
    save_checkpoint(model, dir / "model.ckpt.json");
    log_metrics(dir / "metrics.log", metrics);
    print_stage_metrics(out, metrics);
    out << "wrote " << (dir / "model.ckpt.json").string() << '\n';
    return kExitOk;
  }
  if (command == "eval")
  {
    Model const model = require_checkpoint(f, cfg, command);
    out << "val_acc=" << evaluate_accuracy(model, data.validation)
        << " train_acc=" << evaluate_accuracy(model, data.train) << '\n';
    return kExitOk;
  }
  if (command == "sweep")
  {
    SweepResult const result = run_sweep(cfg, data, f.lambdas, f.energies);
    emit_tradeoff(dir / "tradeoff.tsv", result.rows);
    out << "baseline_accuracy=" << result.baseline_accuracy << '\n';
    out << format_tradeoff(result.rows);
    return kExitOk;
  }
  throw ParameterError("unknown command " + command);
}

void describe_error(std::ostream &err, const std::exception &e)
{
  err << "error: " << e.what() << '\n';
  try
  {
    std::rethrow_if_nested(e);
  }
  catch (const std::exception &inner)
  {
    describe_error(err, inner);
  }
}

}  // namespace

int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Train, prune and finetune low-rank (SVD) networks", "svdtrain"};
  app.fallthrough();
  app.require_subcommand(1, 1);

  Flags f;
  app.add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  f.seed_opt   = app.add_option("--seed", f.seed, "Seed for initialization and shuffling");
  f.out_opt    = app.add_option("--out", f.out, "Output directory");
  f.scheme_opt = app.add_option("--scheme", f.scheme, "Convolution decomposition")
                     ->check(CLI::IsMember({"channel", "spatial"}));
  f.reg_opt = app.add_option("--reg", f.reg, "Sparsity regularizer on singular values")
                  ->check(CLI::IsMember({"none", "l1", "hoyer"}));
  f.lambda_s_opt = app.add_option("--lambda-s", f.lambda_s, "Sparsity strength")
                       ->check(CLI::NonNegativeNumber);
  f.lambda_o_opt = app.add_option("--lambda-o", f.lambda_o, "Orthogonality strength")
                       ->check(CLI::NonNegativeNumber);
  f.energy_opt = app.add_option("--energy", f.energy, "Energy threshold e for pruning")
                     ->check(CLI::Range(0.0, 1.0));
  f.epochs_opt = app.add_option("--epochs", f.epochs,
                                "Epochs of the stage being run (stage 1 for pipeline/sweep)");
  f.finetune_epochs_opt =
      app.add_option("--finetune-epochs", f.finetune_epochs, "Finetuning epochs");
  app.add_option("--checkpoint", f.checkpoint, "Checkpoint manifest to start from");

  std::string command;
  auto add = [&](const char *name, const char *help) {
    return app.add_subcommand(name, help)->callback([&command, name] { command = name; });
  };
  add("train", "Stage 1: SVD training with regularizers");
  add("prune", "Stage 2: energy-threshold pruning of a checkpoint");
  add("finetune", "Stage 3: finetune a checkpoint with lambda_s = 0");
  add("pipeline", "All three stages");
  add("eval", "Validation accuracy of a checkpoint");
  add("flops", "Per-layer and total FLOPs of a checkpoint");
  auto *sweep = add("sweep", "Grid over lambda_s and e; writes tradeoff.tsv");
  sweep->add_option("--lambdas", f.lambdas, "lambda_s grid")->delimiter(',');
  sweep->add_option("--energies", f.energies, "Energy threshold grid")->delimiter(',');

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    int const code = app.exit(e, out, err);
    if (code == 0)
    {
      return kExitOk;
    }
    err << app.help();
    return kExitUsage;
  }

  try
  {
    return run_command(command, f, out);
  }
  catch (const std::exception &e)
  {
    describe_error(err, e);
    return kExitFailure;
  }
}

}  // namespace svdtrain

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

#include "svdtrain/pipeline.hpp"

#include "svdtrain/checkpoint.hpp"
#include "svdtrain/error.hpp"
#include "svdtrain/random.hpp"

#include <cstdio>
#include <exception>
#include <sstream>

namespace svdtrain {

namespace {

template <typename Fn>
auto tagged(const char *stage, Fn &&fn) -> decltype(fn())
{
  try
  {
    return fn();
  }
  catch (const StageError &)
  {
    throw;
  }
  catch (const Error &e)
  {
    std::throw_with_nested(StageError(stage, e.what()));
  }
}

Dataset limited(const Dataset &ds, std::size_t limit)
{
  if (limit == 0 || limit >= ds.size())
  {
    return ds;
  }
  std::vector<std::size_t> ids(limit);
  for (std::size_t i = 0; i < limit; ++i)
  {
    ids[i] = i;
  }
  return ds.subset(ids);
}

}  // namespace

Datasets load_datasets(const DatasetSpec &spec)
{
  Datasets out;
  if (spec.kind == "blobs")
  {
    Dataset const all = synthetic_blobs(spec.classes, spec.per_class, spec.shape, spec.seed,
                                        spec.center_scale);
    auto [train, val] = split(all, spec.validation_fraction, Rng::mix(spec.seed, 0x5B17));
    out.train         = std::move(train);
    out.validation    = std::move(val);
  }
  else if (spec.kind == "idx")
  {
    out.train      = load_idx(spec.train_images, spec.train_labels, spec.class_count);
    out.validation = load_idx(spec.val_images, spec.val_labels, spec.class_count);
  }
  else if (spec.kind == "csv")
  {
    out.train      = load_csv(spec.train_csv, spec.class_count);
    out.validation = load_csv(spec.val_csv, out.train.class_count);
  }
  else
  {
    throw ParameterError("unknown dataset kind '" + spec.kind + "'");
  }
  out.train = limited(out.train, spec.limit);

  if (spec.normalize)
  {
    auto const [mean, stddev] = channel_statistics(out.train);
    std::vector<double> safe  = stddev;
    for (double &s : safe)
    {
      if (!(s > 0.0))
      {
        s = 1.0;
      }
    }
    out.train      = normalize(out.train, mean, safe);
    out.validation = normalize(out.validation, mean, safe);
  }
  return out;
}

Model initial_model(const ExperimentConfig &config, const Shape &sample_shape,
                    std::size_t class_count)
{
  if (config.model == "mlp-s" || config.model == "cnn-s")
  {
    Model const dense = build_reference_model(config.model, sample_shape, class_count, config.seed);
    return decompose_model(dense, config.scheme);
  }
  Model loaded = load_checkpoint(config.model);
  if (loaded.input_shape != sample_shape || loaded.class_count != class_count)
  {
    throw DimensionError("checkpoint expects input " + shape_to_string(loaded.input_shape) +
                         " with " + std::to_string(loaded.class_count) + " classes, data has " +
                         shape_to_string(sample_shape) + " with " + std::to_string(class_count));
  }
  return decompose_model(loaded, config.scheme);
}

std::vector<EpochMetrics> run_training_stage(Model &model, const ExperimentConfig &config,
                                             const Datasets &data, const EpochHook &hook)
{
  return tagged("train", [&] {
    return train_stage(model, data.train, data.validation, config.training_stage(), hook);
  });
}

std::vector<EpochMetrics> run_finetune_stage(Model &model, const ExperimentConfig &config,
                                             const Datasets &data, const EpochHook &hook)
{
  return tagged("finetune", [&] {
    return train_stage(model, data.train, data.validation, config.finetune_stage(), hook);
  });
}

PipelineResult run_pipeline(const ExperimentConfig &config, const Datasets &data,
                            const EpochHook &hook)
{
  tagged("setup", [&] {
    config.validate();
    data.train.validate();
    data.validation.validate();
  });

  PipelineResult result;
  result.trained = tagged("setup", [&] {
    return initial_model(config, data.train.sample_shape(), data.train.class_count);
  });
  result.metrics          = run_training_stage(result.trained, config, data, hook);
  result.trained_accuracy = evaluate_accuracy(result.trained, data.validation);

  tagged("prune", [&] {
    auto [pruned, report] = prune_model(result.trained, config.energy_threshold);
    result.pruned         = std::move(pruned);
    result.report         = std::move(report);
  });
  result.pruned_accuracy = evaluate_accuracy(result.pruned, data.validation);

  result.final_model = result.pruned;
  auto finetune      = run_finetune_stage(result.final_model, config, data, hook);
  result.metrics.insert(result.metrics.end(), finetune.begin(), finetune.end());
  result.final_accuracy = evaluate_accuracy(result.final_model, data.validation);
  return result;
}

PipelineResult run_pipeline(const ExperimentConfig &config, const EpochHook &hook)
{
  Datasets const data = tagged("setup", [&] {
    config.validate();
    return load_datasets(config.dataset);
  });
  return run_pipeline(config, data, hook);
}

void write_pipeline_outputs(const PipelineResult &result, const std::filesystem::path &out_dir)
{
  std::filesystem::create_directories(out_dir);
  save_checkpoint(result.final_model, out_dir / "model.ckpt.json");
  log_metrics(out_dir / "metrics.log", result.metrics);
  write_text_file(out_dir / "prune_report.txt", result.report.to_text());

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "trained_accuracy=%.17g pruned_accuracy=%.17g final_accuracy=%.17g "
                "speedup=%.17g speedup_vs_dense=%.17g\n",
                result.trained_accuracy, result.pruned_accuracy, result.final_accuracy,
                result.report.speedup, result.report.speedup_vs_dense);
  write_text_file(out_dir / "summary.txt", buf);
}

Model random_low_rank_like(const Model &architecture, std::uint64_t seed)
{
  Model const dense =
      build_reference_model(architecture.name, architecture.input_shape, architecture.class_count,
                            seed);
  if (dense.nodes.size() != architecture.nodes.size())
  {
    throw InvariantError("architecture does not match reference model " + architecture.name);
  }
  Model out = architecture;
  for (std::size_t i = 0; i < out.nodes.size(); ++i)
  {
    auto *target = std::get_if<SvdLayer>(&out.nodes[i]);
    if (target == nullptr)
    {
      if (auto const *d = std::get_if<DenseLayer>(&dense.nodes[i]);
          d != nullptr && std::holds_alternative<DenseLayer>(out.nodes[i]))
      {
        out.nodes[i] = *d;
      }
      continue;
    }
    auto const &fresh = std::get<DenseLayer>(dense.nodes[i]);
    SvdLayer    full  = init_from_dense(fresh.weight, target->scheme, fresh.geometry, fresh.bias);
    PruneDecision keep;
    for (std::size_t k = 0; k < target->rank(); ++k)
    {
      keep.keep_indices.push_back(k);
    }
    keep.rank_after = target->rank();
    *target         = prune_layer(full, keep);
  }
  return out;
}

double from_scratch_accuracy(const Model &architecture, const ExperimentConfig &config,
                             const Datasets &data)
{
  Model model = random_low_rank_like(architecture, Rng::mix(config.seed, 0x5C8A7C));
  run_finetune_stage(model, config, data);
  return evaluate_accuracy(model, data.validation);
}

SweepResult run_sweep(const ExperimentConfig &config, const Datasets &data,
                      std::span<const double> lambdas, std::span<const double> energies)
{
  SweepResult result;

  ExperimentConfig base       = config;
  base.regularizer.lambda_s   = 0.0;
  base.regularizer.kind       = SparsityKind::None;
  base.energy_threshold       = 0.0;
  result.baseline_accuracy    = run_pipeline(base, data).final_accuracy;

  for (double lambda : lambdas)
  {
    ExperimentConfig point     = config;
    point.regularizer.lambda_s = lambda;
    if (lambda == 0.0)
    {
      point.regularizer.kind = SparsityKind::None;
    }
    else if (point.regularizer.kind == SparsityKind::None)
    {
      point.regularizer.kind = SparsityKind::Hoyer;
    }
    point.validate();

    // Stage 1 depends only on lambda; prune and finetune per threshold.
    Model trained = tagged("setup", [&] {
      return initial_model(point, data.train.sample_shape(), data.train.class_count);
    });
    run_training_stage(trained, point, data);

    for (double energy : energies)
    {
      auto [pruned, report] =
          tagged("prune", [&] { return prune_model(trained, energy); });
      run_finetune_stage(pruned, point, data);
      double const accuracy = evaluate_accuracy(pruned, data.validation);
      result.rows.push_back(TradeoffRow{lambda, energy, accuracy,
                                        accuracy - result.baseline_accuracy, report.speedup,
                                        report.speedup_vs_dense});
      result.reports.push_back(std::move(report));
    }
  }
  return result;
}

}  // namespace svdtrain

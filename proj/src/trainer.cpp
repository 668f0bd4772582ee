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

#include "svdtrain/trainer.hpp"

#include "svdtrain/error.hpp"
#include "svdtrain/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace svdtrain {

std::string_view to_string(StageKind kind)
{
  switch (kind)
  {
  case StageKind::FullRankSvdTraining:
    return "train";
  case StageKind::Prune:
    return "prune";
  case StageKind::Finetune:
    return "finetune";
  }
  return "unknown";
}

void StageConfig::validate() const
{
  regularizer.validate();
  schedule.validate();
  if (stage == StageKind::Finetune && regularizer.lambda_s != 0.0)
  {
    throw ParameterError("finetuning runs with lambda_s = 0");
  }
  if (stage == StageKind::Prune && epochs != 0)
  {
    throw ParameterError("the prune stage has no optimizer epochs");
  }
  if (!(energy_threshold >= 0.0 && energy_threshold <= 1.0))
  {
    throw ParameterError("energy threshold must lie in [0, 1]");
  }
  if (batch_size == 0)
  {
    throw ParameterError("batch size must be at least 1");
  }
  OptimizerState{schedule.initial_lr, momentum, weight_decay, decay_singular_values, {}}.validate();
}

double mean_orthogonality_residual(const Model &model)
{
  auto const idx = model.svd_layer_indices();
  if (idx.empty())
  {
    return 0.0;
  }
  double total = 0.0;
  for (std::size_t i : idx)
  {
    auto const &layer = std::get<SvdLayer>(model.nodes[i]);
    total += orthogonality_loss(layer.u, layer.v);
  }
  return total / static_cast<double>(idx.size());
}

std::vector<double> layer_hoyer_values(const Model &model)
{
  std::vector<double> out;
  for (std::size_t i : model.svd_layer_indices())
  {
    out.push_back(hoyer_loss(std::get<SvdLayer>(model.nodes[i]).s));
  }
  return out;
}

double evaluate_accuracy(const Model &model, const Dataset &dataset, std::size_t batch_size)
{
  if (dataset.size() == 0)
  {
    throw LengthError("cannot evaluate on an empty dataset");
  }
  std::size_t correct = 0;
  std::vector<std::size_t> ids(dataset.size());
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  for (std::size_t start = 0; start < ids.size(); start += batch_size)
  {
    std::size_t const end = std::min(ids.size(), start + batch_size);
    Dataset const part = dataset.subset(std::span<const std::size_t>(ids).subspan(start, end - start));
    Tensor const logits  = predict_logits(model, part.inputs);
    std::size_t const k  = logits.dim(1);
    for (std::size_t i = 0; i < part.size(); ++i)
    {
      std::size_t best = 0;
      for (std::size_t j = 1; j < k; ++j)
      {
        if (logits.at(i, j) > logits.at(i, best))
        {
          best = j;
        }
      }
      if (static_cast<int>(best) == part.labels[i])
      {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

namespace {

std::string locate_non_finite(const Model &model, const std::vector<Var> &trace)
{
  for (std::size_t i = 0; i < trace.size(); ++i)
  {
    if (!trace[i].value().all_finite())
    {
      return node_prefix(i) + " output";
    }
  }
  for (auto const &[name, tensor] : parameter_refs(model))
  {
    if (!tensor->all_finite())
    {
      return "parameter " + name;
    }
  }
  return "regularizer terms";
}

std::vector<FactorVars> factor_vars(const ModelVars &vars)
{
  std::vector<FactorVars> out;
  for (auto const &node : vars)
  {
    if (auto const *svd = std::get_if<SvdLayerVars>(&node))
    {
      out.push_back(FactorVars{svd->u, svd->s, svd->v});
    }
  }
  return out;
}

}  // namespace

std::vector<EpochMetrics> train_stage(Model &model, const Dataset &train, const Dataset &validation,
                                      const StageConfig &stage, const EpochHook &hook)
{
  stage.validate();
  model.validate();
  if (stage.stage == StageKind::Prune)
  {
    throw ParameterError("train_stage cannot run the prune stage");
  }
  if (train.size() == 0)
  {
    throw LengthError("training set is empty");
  }

  OptimizerState opt{stage.schedule.initial_lr, stage.momentum, stage.weight_decay,
                     stage.decay_singular_values, {}};
  std::vector<EpochMetrics> metrics;
  std::string const         stage_name(to_string(stage.stage));
  bool const                image_data = train.inputs.rank() == 4;

  for (std::size_t epoch = 0; epoch < stage.epochs; ++epoch)
  {
    opt.lr              = lr_at_epoch(stage.schedule, epoch);
    double      loss_sum = 0.0;
    std::size_t steps    = 0;
    for (auto &batch : batches(train, stage.batch_size, stage.seed, epoch))
    {
      if (stage.augment && image_data)
      {
        batch.inputs = augment(batch.inputs, batch.indices, stage.augment_pad, stage.seed, epoch);
      }
      Tape             tape;
      ModelVars const  vars = bind_parameters(tape, model);
      std::vector<Var> trace;
      Var const logits = model_forward(model, vars, tape.constant(std::move(batch.inputs)), &trace);
      Var const task   = ad::softmax_cross_entropy(logits, batch.labels);
      auto const factors = factor_vars(vars);
      Var const total  = total_objective(task, factors, stage.regularizer);

      if (!std::isfinite(total.value().item()))
      {
        std::ostringstream msg;
        msg << "non-finite objective in stage " << stage_name << " at epoch " << epoch
            << ": first non-finite value in " << locate_non_finite(model, trace);
        throw NumericError(msg.str());
      }
      loss_sum += task.value().item();
      ++steps;

      GradientMap const grads = tape.backward(total);
      sgd_step(parameter_refs(model), grads, opt);
    }

    EpochMetrics rec;
    rec.epoch              = epoch;
    rec.stage              = stage_name;
    rec.lr                 = opt.lr;
    rec.train_loss         = loss_sum / static_cast<double>(steps);
    rec.val_acc            = validation.size() > 0 ? evaluate_accuracy(model, validation) : 0.0;
    rec.mean_orth_residual = mean_orthogonality_residual(model);
    rec.layer_hoyer        = layer_hoyer_values(model);
    rec.mean_hoyer =
        rec.layer_hoyer.empty()
            ? 0.0
            : std::accumulate(rec.layer_hoyer.begin(), rec.layer_hoyer.end(), 0.0) /
                  static_cast<double>(rec.layer_hoyer.size());
    if (hook)
    {
      hook(rec);
    }
    metrics.push_back(std::move(rec));
  }
  return metrics;
}

}  // namespace svdtrain

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

#pragma once

#include "svdtrain/dataset.hpp"
#include "svdtrain/model.hpp"
#include "svdtrain/optimizer.hpp"
#include "svdtrain/regularizers.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace svdtrain {

enum class StageKind
{
  FullRankSvdTraining,
  Prune,
  Finetune,
};

std::string_view to_string(StageKind kind);

struct StageConfig
{
  StageKind         stage  = StageKind::FullRankSvdTraining;
  std::size_t       epochs = 0;
  Schedule          schedule;
  RegularizerConfig regularizer;
  double            energy_threshold = 0.0;  // Prune only
  std::uint64_t     seed             = 0;
  std::size_t       batch_size       = 100;
  double            momentum         = 0.9;
  double            weight_decay     = 5e-4;
  bool              decay_singular_values = true;
  bool              augment               = false;
  std::size_t       augment_pad           = 2;

  void validate() const;
};

/// One record per epoch.
struct EpochMetrics
{
  std::size_t         epoch = 0;  // 0-based within the stage
  std::string         stage;
  double              lr                 = 0.0;
  double              train_loss         = 0.0;  // mean task loss over the epoch's batches
  double              val_acc            = 0.0;
  double              mean_orth_residual = 0.0;
  double              mean_hoyer         = 0.0;
  std::vector<double> layer_hoyer;
};

using EpochHook = std::function<void(const EpochMetrics &)>;

/**
 * Trains `model` in place: per epoch a seeded shuffle, mini-batch forward,
 * softmax cross-entropy, the regularized objective, backward and one SGD
 * step per batch. Deterministic for a given config.
 *
 * Throws NumericError naming the epoch and first offending layer if the
 * objective becomes non-finite.
 */
std::vector<EpochMetrics> train_stage(Model &model, const Dataset &train, const Dataset &validation,
                                      const StageConfig &stage, const EpochHook &hook = {});

double evaluate_accuracy(const Model &model, const Dataset &dataset, std::size_t batch_size = 500);

/// Mean orthogonality loss over the decomposed layers (0 if there are none).
double              mean_orthogonality_residual(const Model &model);
std::vector<double> layer_hoyer_values(const Model &model);

}  // namespace svdtrain

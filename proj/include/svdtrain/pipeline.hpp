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

#include "svdtrain/compression.hpp"
#include "svdtrain/config.hpp"
#include "svdtrain/dataset.hpp"
#include "svdtrain/metrics.hpp"
#include "svdtrain/model.hpp"
#include "svdtrain/trainer.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace svdtrain {

struct Datasets
{
  Dataset train;
  Dataset validation;
};

/// Loads or synthesizes the data, normalized with training-set statistics
/// when `spec.normalize` is set.
Datasets load_datasets(const DatasetSpec &spec);

/// Stage-1 starting point: the reference dense model (seeded) factorized at
/// full rank, or a checkpoint (dense layers in it are factorized).
Model initial_model(const ExperimentConfig &config, const Shape &sample_shape,
                    std::size_t class_count);

struct PipelineResult
{
  Model                     trained;  // after stage 1
  Model                     pruned;   // after stage 2
  Model                     final_model;
  PruneReport               report;
  std::vector<EpochMetrics> metrics;  // stage 1 records, then finetune records
  double                    trained_accuracy = 0.0;
  double                    pruned_accuracy  = 0.0;
  double                    final_accuracy   = 0.0;
};

/// Stage 1 (regularized SVD training), stage 2 (energy pruning), stage 3
/// (finetuning with lambda_s = 0). Failures surface as StageError with the
/// original error nested.
PipelineResult run_pipeline(const ExperimentConfig &config, const Datasets &data,
                            const EpochHook &hook = {});
PipelineResult run_pipeline(const ExperimentConfig &config, const EpochHook &hook = {});

/// Individual stages, used by the CLI subcommands.
std::vector<EpochMetrics> run_training_stage(Model &model, const ExperimentConfig &config,
                                             const Datasets &data, const EpochHook &hook = {});
std::vector<EpochMetrics> run_finetune_stage(Model &model, const ExperimentConfig &config,
                                             const Datasets &data, const EpochHook &hook = {});

/// Writes model.ckpt.json (+ .bin), metrics.log, prune_report.txt and
/// summary.txt under `out_dir`.
void write_pipeline_outputs(const PipelineResult &result, const std::filesystem::path &out_dir);

/// Same ranks as `architecture`, fresh seeded factors (top singular triplets
/// of a newly initialized dense model).
Model random_low_rank_like(const Model &architecture, std::uint64_t seed);

/// Trains `random_low_rank_like(architecture)` under the finetune recipe and
/// returns its validation accuracy.
double from_scratch_accuracy(const Model &architecture, const ExperimentConfig &config,
                             const Datasets &data);

struct SweepResult
{
  double                   baseline_accuracy = 0.0;  // lambda_s = 0, e = 0
  std::vector<TradeoffRow> rows;                     // lambda-major order
  std::vector<PruneReport> reports;                  // parallel to rows
};

/// Grid over lambda_s x energy; each point runs the full pipeline. Points run
/// sequentially in this process.
SweepResult run_sweep(const ExperimentConfig &config, const Datasets &data,
                      std::span<const double> lambdas, std::span<const double> energies);

}  // namespace svdtrain

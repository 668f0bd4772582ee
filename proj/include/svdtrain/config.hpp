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

#include "svdtrain/optimizer.hpp"
#include "svdtrain/regularizers.hpp"
#include "svdtrain/svd_layer.hpp"
#include "svdtrain/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace svdtrain {

/// Where training and validation data come from.
struct DatasetSpec
{
  std::string kind = "blobs";  // blobs | idx | csv

  // blobs: split into train / validation by `validation_fraction`
  std::size_t   classes             = 10;
  std::size_t   per_class           = 200;
  Shape         shape               = {1, 12, 12};
  double        center_scale        = 0.6;
  std::uint64_t seed                = 7;
  double        validation_fraction = 0.2;

  // idx / csv
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path val_images;
  std::filesystem::path val_labels;
  std::filesystem::path train_csv;
  std::filesystem::path val_csv;
  std::size_t           class_count = 10;
  std::size_t           limit       = 0;  // keep at most this many training samples (0: all)

  bool normalize = true;
};

/// One optimizer stage's recipe.
struct StageRecipe
{
  std::size_t epochs = 20;
  Schedule    schedule{0.01, {{15, 0.1}}};
};

/// Complete description of a pipeline run.
struct ExperimentConfig
{
  std::string         model = "cnn-s";  // "mlp-s", "cnn-s" or a checkpoint path
  DatasetSpec         dataset;
  DecompositionScheme scheme = DecompositionScheme::ChannelWise;
  RegularizerConfig   regularizer{1.0, 0.0, SparsityKind::None};
  double              energy_threshold = 0.0;
  StageRecipe         train;
  StageRecipe         finetune{5, Schedule{0.001, {}}};
  std::size_t         batch_size            = 20;
  double              momentum              = 0.9;
  double              weight_decay          = 5e-4;
  bool                decay_singular_values = true;
  bool                augment               = false;
  std::uint64_t       seed                  = 1;
  std::filesystem::path output_dir          = "runs/default";

  /// Throws ParameterError / IoError on an invalid or unresolvable config.
  void validate() const;

  StageConfig training_stage() const;
  StageConfig finetune_stage() const;
};

/// Parses the JSON config format (see configs/ for examples). Relative paths
/// inside the file resolve against the file's directory.
ExperimentConfig load_config(const std::filesystem::path &path);
ExperimentConfig parse_config(const std::string &json_text,
                              const std::filesystem::path &base_dir = {});
std::string      dump_config(const ExperimentConfig &config);

}  // namespace svdtrain

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

#include "svdtrain/trainer.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace svdtrain {

/**
 * One record per line, space separated key=value pairs in a fixed order:
 *   epoch=<int> stage=<train|finetune> lr=<g> train_loss=<g> val_acc=<g>
 *   mean_orth_residual=<g> mean_hoyer=<g>
 * Reals use 17 significant digits so files are bit-faithful.
 */
std::string               format_metrics_line(const EpochMetrics &record);
EpochMetrics              parse_metrics_line(const std::string &line);
void                      log_metrics(const std::filesystem::path &path,
                                      std::span<const EpochMetrics> records);
std::vector<EpochMetrics> read_metrics(const std::filesystem::path &path);

/// One row of the accuracy / FLOPs tradeoff table.
struct TradeoffRow
{
  double lambda_s         = 0.0;
  double energy           = 0.0;
  double accuracy         = 0.0;
  double accuracy_gain    = 0.0;  // accuracy - baseline accuracy
  double speedup          = 1.0;  // PruneReport::speedup
  double speedup_vs_dense = 1.0;  // PruneReport::speedup_vs_dense
};

/// Tab separated, header line
///   lambda_s energy accuracy accuracy_gain speedup speedup_vs_dense
std::string format_tradeoff(std::span<const TradeoffRow> rows);
void        emit_tradeoff(const std::filesystem::path &path, std::span<const TradeoffRow> rows);

/// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path &path, const std::string &text);

}  // namespace svdtrain

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

#include "svdtrain/model.hpp"
#include "svdtrain/svd_layer.hpp"
#include "svdtrain/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace svdtrain {

struct PruneDecision
{
  std::vector<std::size_t> keep_indices;  // ordered by descending |s|
  double                   pruned_energy_fraction = 0.0;
  std::size_t              rank_after             = 0;
};

/**
 * Energy-threshold prune set: the largest set K with
 *   sum_{j in K} s_j^2 <= e * sum_i s_i^2,
 * built by taking the smallest s_i^2 first (ties: lower index first). At least
 * one value (the largest |s|) is always kept.
 */
PruneDecision select_prune_set(const Tensor &s, double energy_threshold);

/// New layer keeping the u/v columns and s entries listed in the decision.
SvdLayer prune_layer(const SvdLayer &layer, const PruneDecision &decision);

struct SpatialSize
{
  std::size_t height = 1;
  std::size_t width  = 1;
};

// Multiply-accumulate counts (1 MAC = 1 FLOP unit). FC layers ignore `input`.
std::uint64_t flops_count(const SvdLayer &layer, SpatialSize input);
std::uint64_t flops_count(const DenseLayer &layer, SpatialSize input);
/// FLOPs of the undecomposed layer the factors represent.
std::uint64_t dense_flops_count(const LayerGeometry &geometry, SpatialSize input);

std::uint64_t params_count(const SvdLayer &layer);
std::uint64_t params_count(const DenseLayer &layer);

struct LayerPruneRecord
{
  std::size_t         node_index = 0;
  DecompositionScheme scheme     = DecompositionScheme::FullyConnected;
  std::size_t         rank_before = 0;
  std::size_t         rank_after  = 0;
  double              pruned_energy_fraction = 0.0;
  std::uint64_t       flops_dense   = 0;  // original undecomposed layer
  std::uint64_t       flops_before  = 0;  // decomposed, before pruning
  std::uint64_t       flops_after   = 0;
  std::uint64_t       params_before = 0;
  std::uint64_t       params_after  = 0;
};

struct PruneReport
{
  double                        energy_threshold = 0.0;
  std::vector<LayerPruneRecord> layers;
  std::uint64_t                 total_flops_dense   = 0;
  std::uint64_t                 total_flops_before  = 0;
  std::uint64_t                 total_flops_after   = 0;
  std::uint64_t                 total_params_before = 0;
  std::uint64_t                 total_params_after  = 0;
  double                        speedup          = 1.0;  // flops_before / flops_after
  double                        speedup_vs_dense = 1.0;  // flops_dense / flops_after

  /// Line-oriented key=value block (one line per layer, then a totals line).
  std::string to_text() const;
};

/// Accounting for a model without pruning it (rank_before == rank_after).
PruneReport flops_report(const Model &model);

/// Applies one global threshold to every decomposed layer.
std::pair<Model, PruneReport> prune_model(const Model &model, double energy_threshold);

}  // namespace svdtrain

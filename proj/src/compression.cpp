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

#include "svdtrain/compression.hpp"

#include "svdtrain/error.hpp"
#include "svdtrain/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace svdtrain {

PruneDecision select_prune_set(const Tensor &s, double energy_threshold)
{
  if (s.rank() != 1 || s.size() == 0)
  {
    throw DimensionError("select_prune_set needs a non-empty vector, got " +
                         shape_to_string(s.shape()));
  }
  if (!(energy_threshold >= 0.0 && energy_threshold <= 1.0))
  {
    throw ParameterError("energy threshold must lie in [0, 1]");
  }
  std::size_t const        r = s.size();
  std::vector<long double> energy(r);
  long double              total = 0.0L;
  for (std::size_t i = 0; i < r; ++i)
  {
    double const sq = s[i] * s[i];
    energy[i]       = sq;
    total += sq;
  }

  std::vector<std::size_t> order(r);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return energy[a] < energy[b]; });

  long double const budget = static_cast<long double>(energy_threshold) * total;
  long double       pruned = 0.0L;
  std::size_t       cut    = 0;
  while (cut < r && pruned + energy[order[cut]] <= budget)
  {
    pruned += energy[order[cut]];
    ++cut;
  }
  if (cut == r)
  {
    // Rank floor: keep the largest entry.
    --cut;
    pruned -= energy[order[cut]];
  }

  PruneDecision decision;
  decision.keep_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
  std::stable_sort(decision.keep_indices.begin(), decision.keep_indices.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(s[a]) > std::abs(s[b]); });
  decision.rank_after = decision.keep_indices.size();
  decision.pruned_energy_fraction =
      total > 0.0L ? static_cast<double>(pruned / total) : 0.0;
  return decision;
}

SvdLayer prune_layer(const SvdLayer &layer, const PruneDecision &decision)
{
  if (decision.keep_indices.empty())
  {
    throw InvariantError("prune decision keeps no singular values");
  }
  std::vector<bool> seen(layer.rank(), false);
  for (std::size_t idx : decision.keep_indices)
  {
    if (idx >= layer.rank() || seen[idx])
    {
      throw InvariantError("prune decision index " + std::to_string(idx) +
                           " invalid for rank " + std::to_string(layer.rank()));
    }
    seen[idx] = true;
  }

  SvdLayer out = layer;
  out.u        = select_columns(layer.u, decision.keep_indices);
  out.v        = select_columns(layer.v, decision.keep_indices);
  out.s        = Tensor({decision.keep_indices.size()});
  for (std::size_t k = 0; k < decision.keep_indices.size(); ++k)
  {
    out.s[k] = layer.s[decision.keep_indices[k]];
  }
  out.validate();
  return out;
}

namespace {

struct ConvExtents
{
  std::uint64_t out_h;
  std::uint64_t out_w;
};

ConvExtents dense_extents(const ConvGeometry &g, SpatialSize in)
{
  return {conv_output_extent(in.height, g.w, g.stride, g.padding),
          conv_output_extent(in.width, g.h, g.stride, g.padding)};
}

}  // namespace

std::uint64_t dense_flops_count(const LayerGeometry &geometry, SpatialSize input)
{
  if (auto const *fc = std::get_if<FcGeometry>(&geometry))
  {
    return static_cast<std::uint64_t>(fc->m) * fc->n;
  }
  auto const &g   = std::get<ConvGeometry>(geometry);
  auto const  ext = dense_extents(g, input);
  return static_cast<std::uint64_t>(g.n) * g.c * g.w * g.h * ext.out_h * ext.out_w;
}

std::uint64_t flops_count(const DenseLayer &layer, SpatialSize input)
{
  return dense_flops_count(layer.geometry, input);
}

std::uint64_t flops_count(const SvdLayer &layer, SpatialSize input)
{
  std::uint64_t const r = layer.rank();
  switch (layer.scheme)
  {
  case DecompositionScheme::FullyConnected: {
    auto const &fc = std::get<FcGeometry>(layer.geometry);
    return (static_cast<std::uint64_t>(fc.m) + fc.n) * r;
  }
  case DecompositionScheme::ChannelWise: {
    auto const &g     = std::get<ConvGeometry>(layer.geometry);
    auto const  ext   = dense_extents(g, input);
    std::uint64_t const plane = ext.out_h * ext.out_w;
    return r * g.c * g.w * g.h * plane + static_cast<std::uint64_t>(g.n) * r * plane;
  }
  case DecompositionScheme::SpatialWise: {
    auto const &g = std::get<ConvGeometry>(layer.geometry);
    // First sub-layer: 1 x h window, horizontal stride/padding only.
    std::uint64_t const mid_h = input.height;
    std::uint64_t const mid_w = conv_output_extent(input.width, g.h, g.stride, g.padding);
    // Second sub-layer: w x 1 window, vertical stride/padding only.
    std::uint64_t const out_h = conv_output_extent(input.height, g.w, g.stride, g.padding);
    return r * g.c * g.h * mid_h * mid_w + static_cast<std::uint64_t>(g.n) * r * g.w * out_h * mid_w;
  }
  }
  throw InvariantError("unhandled decomposition scheme");
}

std::uint64_t params_count(const SvdLayer &layer)
{
  MatrixShape const ms   = layer.matrix_shape();
  std::uint64_t     bias = layer.bias ? layer.bias->size() : 0;
  return (static_cast<std::uint64_t>(ms.rows) + ms.cols + 1) * layer.rank() + bias;
}

std::uint64_t params_count(const DenseLayer &layer)
{
  return layer.weight.size() + (layer.bias ? layer.bias->size() : 0);
}

namespace {

SpatialSize spatial_of(const Shape &per_sample)
{
  if (per_sample.size() == 3)
  {
    return {per_sample[1], per_sample[2]};
  }
  return {1, 1};
}

std::string format_double(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", x);
  return buf;
}

void finish_totals(PruneReport &report)
{
  report.speedup = report.total_flops_after == 0
                       ? 1.0
                       : static_cast<double>(report.total_flops_before) /
                             static_cast<double>(report.total_flops_after);
  report.speedup_vs_dense = report.total_flops_after == 0
                                ? 1.0
                                : static_cast<double>(report.total_flops_dense) /
                                      static_cast<double>(report.total_flops_after);
}

PruneReport account(const Model &before, const Model &after, double threshold,
                    const std::vector<double> &energy_fractions)
{
  PruneReport report;
  report.energy_threshold = threshold;
  auto const  shapes      = before.node_input_shapes();
  std::size_t svd_seen    = 0;
  for (std::size_t i = 0; i < before.nodes.size(); ++i)
  {
    SpatialSize const in = spatial_of(shapes[i]);
    if (auto const *svd = std::get_if<SvdLayer>(&before.nodes[i]))
    {
      auto const      &pruned = std::get<SvdLayer>(after.nodes[i]);
      LayerPruneRecord rec;
      rec.node_index             = i;
      rec.scheme                 = svd->scheme;
      rec.rank_before            = svd->rank();
      rec.rank_after             = pruned.rank();
      rec.pruned_energy_fraction = energy_fractions.at(svd_seen++);
      rec.flops_dense            = dense_flops_count(svd->geometry, in);
      rec.flops_before           = flops_count(*svd, in);
      rec.flops_after            = flops_count(pruned, in);
      rec.params_before          = params_count(*svd);
      rec.params_after           = params_count(pruned);
      report.layers.push_back(rec);
      report.total_flops_dense += rec.flops_dense;
      report.total_flops_before += rec.flops_before;
      report.total_flops_after += rec.flops_after;
      report.total_params_before += rec.params_before;
      report.total_params_after += rec.params_after;
    }
    else if (auto const *dense = std::get_if<DenseLayer>(&before.nodes[i]))
    {
      std::uint64_t const f = flops_count(*dense, in);
      std::uint64_t const p = params_count(*dense);
      report.total_flops_dense += f;
      report.total_flops_before += f;
      report.total_flops_after += f;
      report.total_params_before += p;
      report.total_params_after += p;
    }
  }
  finish_totals(report);
  return report;
}

}  // namespace

std::string PruneReport::to_text() const
{
  std::ostringstream out;
  for (auto const &rec : layers)
  {
    out << "layer=" << rec.node_index << " scheme=" << to_string(rec.scheme)
        << " rank_before=" << rec.rank_before << " rank_after=" << rec.rank_after
        << " pruned_energy_fraction=" << format_double(rec.pruned_energy_fraction)
        << " flops_dense=" << rec.flops_dense << " flops_before=" << rec.flops_before
        << " flops_after=" << rec.flops_after << " params_before=" << rec.params_before
        << " params_after=" << rec.params_after << '\n';
  }
  out << "total energy_threshold=" << format_double(energy_threshold)
      << " flops_dense=" << total_flops_dense << " flops_before=" << total_flops_before
      << " flops_after=" << total_flops_after << " params_before=" << total_params_before
      << " params_after=" << total_params_after << " speedup=" << format_double(speedup)
      << " speedup_vs_dense=" << format_double(speedup_vs_dense) << '\n';
  return out.str();
}

PruneReport flops_report(const Model &model)
{
  model.validate();
  return account(model, model, 0.0, std::vector<double>(model.svd_layer_count(), 0.0));
}

std::pair<Model, PruneReport> prune_model(const Model &model, double energy_threshold)
{
  model.validate();
  Model               pruned = model;
  std::vector<double> fractions;
  for (auto &node : pruned.nodes)
  {
    if (auto *svd = std::get_if<SvdLayer>(&node))
    {
      PruneDecision const decision = select_prune_set(svd->s, energy_threshold);
      fractions.push_back(decision.pruned_energy_fraction);
      node = prune_layer(*svd, decision);
    }
  }
  PruneReport report = account(model, pruned, energy_threshold, fractions);
  return {std::move(pruned), std::move(report)};
}

}  // namespace svdtrain

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

#include "svdtrain/svd_layer.hpp"

#include "svdtrain/error.hpp"
#include "svdtrain/linalg.hpp"
#include "svdtrain/ops.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace svdtrain {

std::string_view to_string(DecompositionScheme scheme)
{
  switch (scheme)
  {
  case DecompositionScheme::FullyConnected:
    return "fc";
  case DecompositionScheme::ChannelWise:
    return "channel";
  case DecompositionScheme::SpatialWise:
    return "spatial";
  }
  return "unknown";
}

DecompositionScheme parse_scheme(std::string_view text)
{
  if (text == "fc")
  {
    return DecompositionScheme::FullyConnected;
  }
  if (text == "channel")
  {
    return DecompositionScheme::ChannelWise;
  }
  if (text == "spatial")
  {
    return DecompositionScheme::SpatialWise;
  }
  throw ParameterError("unknown decomposition scheme '" + std::string(text) + "'");
}

void ConvGeometry::validate() const
{
  if (n == 0 || c == 0 || w == 0 || h == 0)
  {
    throw GeometryError("convolution extents must be positive");
  }
  if (stride == 0)
  {
    throw GeometryError("convolution stride must be positive");
  }
}

MatrixShape reshaped_shape(DecompositionScheme scheme, const LayerGeometry &geometry)
{
  if (auto const *fc = std::get_if<FcGeometry>(&geometry))
  {
    if (scheme != DecompositionScheme::FullyConnected)
    {
      throw GeometryError("scheme '" + std::string(to_string(scheme)) +
                          "' needs convolution geometry");
    }
    return {fc->m, fc->n};
  }
  auto const &conv = std::get<ConvGeometry>(geometry);
  switch (scheme)
  {
  case DecompositionScheme::ChannelWise:
    return {conv.n, conv.c * conv.w * conv.h};
  case DecompositionScheme::SpatialWise:
    return {conv.n * conv.w, conv.c * conv.h};
  case DecompositionScheme::FullyConnected:
    break;
  }
  throw GeometryError("fully connected scheme cannot decompose a convolution");
}

Shape weight_shape(const LayerGeometry &geometry)
{
  if (auto const *fc = std::get_if<FcGeometry>(&geometry))
  {
    return {fc->m, fc->n};
  }
  return std::get<ConvGeometry>(geometry).kernel_shape();
}

std::size_t output_channels(const LayerGeometry &geometry)
{
  if (auto const *fc = std::get_if<FcGeometry>(&geometry))
  {
    return fc->m;
  }
  return std::get<ConvGeometry>(geometry).n;
}

namespace {

void require_kernel(const Tensor &kernel)
{
  if (kernel.rank() != 4)
  {
    throw RankError("expected a 4-D kernel, got " + shape_to_string(kernel.shape()));
  }
}

constexpr std::array<std::size_t, 4> kSwapMiddle{0, 2, 1, 3};

}  // namespace

Tensor reshape_channelwise(const Tensor &kernel)
{
  require_kernel(kernel);
  auto const &s = kernel.shape();
  return kernel.reshaped({s[0], s[1] * s[2] * s[3]});
}

Tensor unreshape_channelwise(const Tensor &matrix, const ConvGeometry &geometry)
{
  if (matrix.rank() != 2 || matrix.dim(0) != geometry.n ||
      matrix.dim(1) != geometry.c * geometry.w * geometry.h)
  {
    throw DimensionError("matrix " + shape_to_string(matrix.shape()) +
                         " does not match channel-wise geometry");
  }
  return matrix.reshaped(geometry.kernel_shape());
}

Tensor reshape_spatialwise(const Tensor &kernel)
{
  require_kernel(kernel);
  auto const &s = kernel.shape();
  // n x c x w x h -> n x w x c x h -> (n*w) x (c*h)
  return permute(kernel, kSwapMiddle).reshaped({s[0] * s[2], s[1] * s[3]});
}

Tensor unreshape_spatialwise(const Tensor &matrix, const ConvGeometry &geometry)
{
  if (matrix.rank() != 2 || matrix.dim(0) != geometry.n * geometry.w ||
      matrix.dim(1) != geometry.c * geometry.h)
  {
    throw DimensionError("matrix " + shape_to_string(matrix.shape()) +
                         " does not match spatial-wise geometry");
  }
  Tensor split = matrix.reshaped({geometry.n, geometry.w, geometry.c, geometry.h});
  return permute(split, kSwapMiddle);
}

namespace {

Tensor to_matrix(const Tensor &weight, DecompositionScheme scheme)
{
  switch (scheme)
  {
  case DecompositionScheme::FullyConnected:
    return weight;
  case DecompositionScheme::ChannelWise:
    return reshape_channelwise(weight);
  case DecompositionScheme::SpatialWise:
    return reshape_spatialwise(weight);
  }
  return weight;
}

Tensor from_matrix(const Tensor &matrix, DecompositionScheme scheme, const LayerGeometry &geometry)
{
  switch (scheme)
  {
  case DecompositionScheme::FullyConnected:
    return matrix;
  case DecompositionScheme::ChannelWise:
    return unreshape_channelwise(matrix, std::get<ConvGeometry>(geometry));
  case DecompositionScheme::SpatialWise:
    return unreshape_spatialwise(matrix, std::get<ConvGeometry>(geometry));
  }
  return matrix;
}

void validate_bias(const std::optional<Tensor> &bias, const LayerGeometry &geometry)
{
  if (bias && (bias->rank() != 1 || bias->dim(0) != output_channels(geometry)))
  {
    throw DimensionError("bias shape " + shape_to_string(bias->shape()) +
                         " does not match output channels " +
                         std::to_string(output_channels(geometry)));
  }
}

}  // namespace

void SvdLayer::validate() const
{
  if (auto const *conv = std::get_if<ConvGeometry>(&geometry))
  {
    conv->validate();
  }
  MatrixShape const ms = matrix_shape();
  std::size_t const r  = s.size();
  if (s.rank() != 1 || r == 0 || r > std::min(ms.rows, ms.cols))
  {
    throw DimensionError("rank " + std::to_string(r) + " invalid for reshaped matrix " +
                         std::to_string(ms.rows) + "x" + std::to_string(ms.cols));
  }
  if (u.shape() != Shape{ms.rows, r} || v.shape() != Shape{ms.cols, r})
  {
    throw DimensionError("factor shapes u " + shape_to_string(u.shape()) + ", v " +
                         shape_to_string(v.shape()) + " inconsistent with rank " +
                         std::to_string(r));
  }
  validate_bias(bias, geometry);
}

void DenseLayer::validate() const
{
  if (auto const *conv = std::get_if<ConvGeometry>(&geometry))
  {
    conv->validate();
  }
  if (weight.shape() != weight_shape(geometry))
  {
    throw DimensionError("dense weight " + shape_to_string(weight.shape()) +
                         " does not match geometry " + shape_to_string(weight_shape(geometry)));
  }
  validate_bias(bias, geometry);
}

SvdLayer init_from_dense(const Tensor &weight, DecompositionScheme scheme,
                         const LayerGeometry &geometry, std::optional<Tensor> bias)
{
  DenseLayer dense{geometry, weight, bias};
  dense.validate();
  reshaped_shape(scheme, geometry);  // rejects scheme/geometry mismatch

  SvdFactors factors = svd(to_matrix(weight, scheme));
  SvdLayer   layer{scheme, geometry, std::move(factors.u), std::move(factors.s),
                 std::move(factors.v), std::move(bias)};
  layer.validate();
  return layer;
}

Tensor compose_effective_weight(const SvdLayer &layer)
{
  layer.validate();
  Tensor scaled = layer.u;
  for (std::size_t i = 0; i < scaled.dim(0); ++i)
  {
    for (std::size_t k = 0; k < scaled.dim(1); ++k)
    {
      scaled.at(i, k) *= std::abs(layer.s[k]);
    }
  }
  return from_matrix(matmul(scaled, transpose(layer.v)), layer.scheme, layer.geometry);
}

SvdLayerVars bind_parameters(Tape &tape, const SvdLayer &layer, const std::string &prefix)
{
  SvdLayerVars vars{tape.parameter(prefix + ".u", layer.u), tape.parameter(prefix + ".s", layer.s),
                    tape.parameter(prefix + ".v", layer.v), std::nullopt};
  if (layer.bias)
  {
    vars.bias = tape.parameter(prefix + ".bias", *layer.bias);
  }
  return vars;
}

SvdLayerVars bind_constants(Tape &tape, const SvdLayer &layer)
{
  SvdLayerVars vars{tape.constant(layer.u), tape.constant(layer.s), tape.constant(layer.v),
                    std::nullopt};
  if (layer.bias)
  {
    vars.bias = tape.constant(*layer.bias);
  }
  return vars;
}

DenseLayerVars bind_parameters(Tape &tape, const DenseLayer &layer, const std::string &prefix)
{
  DenseLayerVars vars{tape.parameter(prefix + ".weight", layer.weight), std::nullopt};
  if (layer.bias)
  {
    vars.bias = tape.parameter(prefix + ".bias", *layer.bias);
  }
  return vars;
}

DenseLayerVars bind_constants(Tape &tape, const DenseLayer &layer)
{
  DenseLayerVars vars{tape.constant(layer.weight), std::nullopt};
  if (layer.bias)
  {
    vars.bias = tape.constant(*layer.bias);
  }
  return vars;
}

namespace {

void require_input_rank(const Var &input, std::size_t rank, const char *what)
{
  if (input.value().rank() != rank)
  {
    throw DimensionError(std::string(what) + " layer expects a rank-" + std::to_string(rank) +
                         " input, got " + shape_to_string(input.shape()));
  }
}

Var add_bias(Var out, const std::optional<Var> &bias, bool conv)
{
  if (!bias)
  {
    return out;
  }
  return conv ? ad::add_channel_bias(out, *bias) : ad::add_row_bias(out, *bias);
}

}  // namespace

Var forward(const SvdLayer &layer, const SvdLayerVars &vars, Var input)
{
  std::size_t const r    = layer.rank();
  Var const         root = ad::sqrt(ad::abs(vars.s));
  Var const         left = ad::scale_columns(vars.u, root);   // U diag(sqrt|s|)
  Var const         right = ad::scale_columns(vars.v, root);  // V diag(sqrt|s|)

  switch (layer.scheme)
  {
  case DecompositionScheme::FullyConnected: {
    require_input_rank(input, 2, "fully connected");
    auto const &fc = std::get<FcGeometry>(layer.geometry);
    if (input.shape()[1] != fc.n)
    {
      throw DimensionError("input " + shape_to_string(input.shape()) + " does not feed " +
                           std::to_string(fc.n) + " features");
    }
    Var hidden = ad::matmul(input, right);               // N x r
    Var out    = ad::matmul(hidden, ad::transpose(left));  // N x m
    return add_bias(out, vars.bias, false);
  }
  case DecompositionScheme::ChannelWise: {
    require_input_rank(input, 4, "convolution");
    auto const &g     = std::get<ConvGeometry>(layer.geometry);
    Var         first = ad::reshape(ad::transpose(right), {r, g.c, g.w, g.h});
    Var         mid   = ad::conv2d(input, first, Conv2dParams::uniform(g.stride, g.padding));
    Var         second = ad::reshape(left, {g.n, r, 1, 1});
    Var         out    = ad::conv2d(mid, second, Conv2dParams::uniform(1, 0));
    return add_bias(out, vars.bias, true);
  }
  case DecompositionScheme::SpatialWise: {
    require_input_rank(input, 4, "convolution");
    auto const &g     = std::get<ConvGeometry>(layer.geometry);
    Var         first = ad::reshape(ad::transpose(right), {r, g.c, 1, g.h});
    Var         mid   = ad::conv2d(input, first, Conv2dParams{1, g.stride, 0, g.padding});
    static constexpr std::array<std::size_t, 3> kFilterRankSwap{0, 2, 1};
    Var second = ad::permute(ad::reshape(left, {g.n, g.w, r}), kFilterRankSwap);
    second     = ad::reshape(second, {g.n, r, g.w, 1});
    Var out    = ad::conv2d(mid, second, Conv2dParams{g.stride, 1, g.padding, 0});
    return add_bias(out, vars.bias, true);
  }
  }
  throw InvariantError("unhandled decomposition scheme");
}

Tensor forward(const SvdLayer &layer, const Tensor &input)
{
  layer.validate();
  Tape tape;
  return forward(layer, bind_constants(tape, layer), tape.constant(input)).value();
}

Var dense_forward(const DenseLayer &layer, const DenseLayerVars &vars, Var input)
{
  if (auto const *fc = std::get_if<FcGeometry>(&layer.geometry))
  {
    require_input_rank(input, 2, "fully connected");
    if (input.shape()[1] != fc->n)
    {
      throw DimensionError("input " + shape_to_string(input.shape()) + " does not feed " +
                           std::to_string(fc->n) + " features");
    }
    return add_bias(ad::matmul(input, ad::transpose(vars.weight)), vars.bias, false);
  }
  require_input_rank(input, 4, "convolution");
  auto const &g = std::get<ConvGeometry>(layer.geometry);
  return add_bias(ad::conv2d(input, vars.weight, Conv2dParams::uniform(g.stride, g.padding)),
                  vars.bias, true);
}

Tensor dense_forward(const DenseLayer &layer, const Tensor &input)
{
  layer.validate();
  Tape tape;
  return dense_forward(layer, bind_constants(tape, layer), tape.constant(input)).value();
}

}  // namespace svdtrain

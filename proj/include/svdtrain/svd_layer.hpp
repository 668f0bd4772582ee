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

#include "svdtrain/tape.hpp"
#include "svdtrain/tensor.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace svdtrain {

enum class DecompositionScheme
{
  FullyConnected,
  ChannelWise,
  SpatialWise,
};

std::string_view    to_string(DecompositionScheme scheme);
/// Accepts "fc", "channel", "spatial".
DecompositionScheme parse_scheme(std::string_view text);

/// Fully connected weight m x n (out-features x in-features).
struct FcGeometry
{
  std::size_t m = 1;
  std::size_t n = 1;

  bool operator==(const FcGeometry &) const = default;
};

/**
 * Convolution kernel n x c x w x h: n filters over c input channels. The
 * `w` axis slides along input rows and the `h` axis along input columns,
 * matching a conv2d kernel laid out F x C x kh x kw.
 */
struct ConvGeometry
{
  std::size_t n       = 1;
  std::size_t c       = 1;
  std::size_t w       = 1;
  std::size_t h       = 1;
  std::size_t stride  = 1;
  std::size_t padding = 0;

  Shape kernel_shape() const
  {
    return {n, c, w, h};
  }
  void validate() const;

  bool operator==(const ConvGeometry &) const = default;
};

using LayerGeometry = std::variant<FcGeometry, ConvGeometry>;

struct MatrixShape
{
  std::size_t rows = 0;
  std::size_t cols = 0;
};

/// (rows, cols) of the matrix a weight is reshaped to under `scheme`.
MatrixShape reshaped_shape(DecompositionScheme scheme, const LayerGeometry &geometry);
/// Shape of the dense weight / kernel described by `geometry`.
Shape       weight_shape(const LayerGeometry &geometry);
/// Length of the bias vector (out-features or filter count).
std::size_t output_channels(const LayerGeometry &geometry);

// Kernel <-> matrix index maps.
//   channel-wise: row = n_i,         col = c_i*(w*h) + w_i*h + h_i
//   spatial-wise: row = n_i*w + w_i, col = c_i*h + h_i
Tensor reshape_channelwise(const Tensor &kernel);
Tensor unreshape_channelwise(const Tensor &matrix, const ConvGeometry &geometry);
Tensor reshape_spatialwise(const Tensor &kernel);
Tensor unreshape_spatialwise(const Tensor &matrix, const ConvGeometry &geometry);

/// A layer whose trainable variables are the factors u, s, v of its weight.
struct SvdLayer
{
  DecompositionScheme   scheme = DecompositionScheme::FullyConnected;
  LayerGeometry         geometry;
  Tensor                u;  // rows x r
  Tensor                s;  // r; sign unconstrained, |s| is the effective singular value
  Tensor                v;  // cols x r
  std::optional<Tensor> bias;

  std::size_t rank() const
  {
    return s.size();
  }
  MatrixShape matrix_shape() const
  {
    return reshaped_shape(scheme, geometry);
  }
  /// Throws DimensionError / GeometryError on any broken invariant.
  void validate() const;
};

/// Plain (undecomposed) layer, used for baselines and checkpoint import.
struct DenseLayer
{
  LayerGeometry         geometry;
  Tensor                weight;
  std::optional<Tensor> bias;

  void validate() const;
};

/// Full-rank factorization of a dense weight.
SvdLayer init_from_dense(const Tensor &weight, DecompositionScheme scheme,
                         const LayerGeometry &geometry, std::optional<Tensor> bias = std::nullopt);

/// U diag(|s|) V^T folded back to the dense weight layout.
Tensor compose_effective_weight(const SvdLayer &layer);

/// Tape handles for one layer's trainable tensors.
struct SvdLayerVars
{
  Var                u;
  Var                s;
  Var                v;
  std::optional<Var> bias;
};

struct DenseLayerVars
{
  Var                weight;
  std::optional<Var> bias;
};

/// Registers the layer tensors as tape parameters named `<prefix>.u` etc.
SvdLayerVars   bind_parameters(Tape &tape, const SvdLayer &layer, const std::string &prefix);
/// Same tensors as non-trainable constants.
SvdLayerVars   bind_constants(Tape &tape, const SvdLayer &layer);
DenseLayerVars bind_parameters(Tape &tape, const DenseLayer &layer, const std::string &prefix);
DenseLayerVars bind_constants(Tape &tape, const DenseLayer &layer);

/**
 * Two consecutive sub-layers built from the factors, with sqrt(|s|) split
 * between them:
 *   FC:       x -> (U diag(sqrt|s|)) (diag(sqrt|s|) V^T x)
 *   channel:  w x h conv (original stride/padding), then 1 x 1 conv
 *   spatial:  1 x h conv (horizontal stride/padding), then w x 1 conv
 *             (vertical stride/padding)
 * Bias is added after the second sub-layer.
 */
Var    forward(const SvdLayer &layer, const SvdLayerVars &vars, Var input);
Tensor forward(const SvdLayer &layer, const Tensor &input);

Var    dense_forward(const DenseLayer &layer, const DenseLayerVars &vars, Var input);
Tensor dense_forward(const DenseLayer &layer, const Tensor &input);

}  // namespace svdtrain

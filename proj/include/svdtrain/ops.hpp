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
#include <span>

namespace svdtrain {

/// Per-axis stride and zero padding of a 2-D cross-correlation.
struct Conv2dParams
{
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h    = 0;
  std::size_t pad_w    = 0;

  static Conv2dParams uniform(std::size_t stride, std::size_t padding)
  {
    return {stride, stride, padding, padding};
  }
};

/// Output extent of a strided, padded window sweep. Throws GeometryError
/// when the extent is not a positive integer.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding);

namespace ad {

// Every op records on the tape of its inputs; gradients of all of them are
// checked against central differences in the test suite.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double factor);
Var square(Var a);
/// Subgradient 0 at 0.
Var abs(Var a);
/// Gradient taken as 0 where the output is exactly 0.
Var sqrt(Var a);
Var relu(Var a);
/// Sum of all entries as a 0-d tensor.
Var sum(Var a);
Var reshape(Var a, Shape shape);
Var permute(Var a, std::span<const std::size_t> axes);

/// m x r matrix times diag(v), v of length r.
Var scale_columns(Var matrix, Var v);
/// N x m plus a length-m row vector.
Var add_row_bias(Var x, Var bias);
/// N x F x H x W plus a per-channel length-F vector.
Var add_channel_bias(Var x, Var bias);

/// Unfolds N x C x H x W patches into a (C*kh*kw) x (N*H'*W') matrix.
Var im2col(Var input, std::size_t kh, std::size_t kw, const Conv2dParams &params);
/// Cross-correlation of N x C x H x W input with F x C x kh x kw kernel.
Var conv2d(Var input, Var kernel, const Conv2dParams &params);
/// Non-overlapping max pooling with a square window.
Var max_pool2d(Var input, std::size_t window);
/// N x ... to N x D.
Var flatten(Var input);

/// Mean softmax cross-entropy of N x K logits against integer labels.
Var softmax_cross_entropy(Var logits, std::span<const int> labels);

}  // namespace ad

/// Non-recording convolution (evaluated on a scratch tape).
Tensor conv2d(const Tensor &input, const Tensor &kernel, const Conv2dParams &params);
Tensor conv2d(const Tensor &input, const Tensor &kernel, std::size_t stride, std::size_t padding);

}  // namespace svdtrain

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

#include "svdtrain/random.hpp"
#include "svdtrain/svd_layer.hpp"
#include "svdtrain/tape.hpp"
#include "svdtrain/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace svdtrain {

struct ReluOp
{
  bool operator==(const ReluOp &) const = default;
};

/// Non-overlapping max pooling.
struct MaxPoolOp
{
  std::size_t window = 2;

  bool operator==(const MaxPoolOp &) const = default;
};

struct FlattenOp
{
  bool operator==(const FlattenOp &) const = default;
};

using ModelNode = std::variant<SvdLayer, DenseLayer, ReluOp, MaxPoolOp, FlattenOp>;

/**
 * A plain feed-forward stack. `input_shape` is the per-sample shape
 * (C x H x W for image models, D for vector models).
 */
struct Model
{
  std::string            name;
  Shape                  input_shape;
  std::size_t            class_count = 0;
  std::vector<ModelNode> nodes;

  std::vector<std::size_t> svd_layer_indices() const;
  std::size_t              svd_layer_count() const
  {
    return svd_layer_indices().size();
  }
  /// Per-sample activation shape entering each node.
  std::vector<Shape> node_input_shapes() const;
  void               validate() const;
};

/// Reference dense models. `mlp-s`: D-256-64-K fully connected.
/// `cnn-s`: conv 8@3x3 -> conv 16@3x3 -> 2x2 max pool -> FC, "same" padding.
Model build_reference_model(const std::string &name, const Shape &input_shape,
                            std::size_t class_count, std::uint64_t seed);

/// Factorizes every dense layer at full rank: FC layers with the FC scheme,
/// convolutions with `conv_scheme`.
Model decompose_model(const Model &dense, DecompositionScheme conv_scheme);

/// Dense equivalent of a model (effective weights composed back).
Model compose_model(const Model &model);

// Per-node tape bindings (monostate for parameter-free nodes).
using NodeVars  = std::variant<std::monostate, SvdLayerVars, DenseLayerVars>;
using ModelVars = std::vector<NodeVars>;

ModelVars bind_parameters(Tape &tape, const Model &model);
ModelVars bind_constants(Tape &tape, const Model &model);

/// Parameter name prefix of node `index` ("layer<index>").
std::string node_prefix(std::size_t index);

/// Batched forward (input N x input_shape). When `trace` is given it receives
/// the output of every node.
Var    model_forward(const Model &model, const ModelVars &vars, Var input,
                     std::vector<Var> *trace = nullptr);
Tensor predict_logits(const Model &model, const Tensor &inputs);

/// Named views of every trainable tensor, in node order. Names match the
/// tape parameter names used by bind_parameters.
std::vector<std::pair<std::string, Tensor *>>       parameter_refs(Model &model);
std::vector<std::pair<std::string, const Tensor *>> parameter_refs(const Model &model);

}  // namespace svdtrain

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

#include "svdtrain/model.hpp"

#include "svdtrain/error.hpp"
#include "svdtrain/ops.hpp"

#include <cmath>

namespace svdtrain {

std::vector<std::size_t> Model::svd_layer_indices() const
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
  {
    if (std::holds_alternative<SvdLayer>(nodes[i]))
    {
      out.push_back(i);
    }
  }
  return out;
}

namespace {

Shape conv_output_shape(const Shape &in, const ConvGeometry &g)
{
  if (in.size() != 3 || in[0] != g.c)
  {
    throw DimensionError("convolution over " + std::to_string(g.c) +
                         " channels cannot take input " + shape_to_string(in));
  }
  return {g.n, conv_output_extent(in[1], g.w, g.stride, g.padding),
          conv_output_extent(in[2], g.h, g.stride, g.padding)};
}

Shape layer_output_shape(const Shape &in, const LayerGeometry &geometry)
{
  if (auto const *fc = std::get_if<FcGeometry>(&geometry))
  {
    if (in.size() != 1 || in[0] != fc->n)
    {
      throw DimensionError("fully connected layer over " + std::to_string(fc->n) +
                           " features cannot take input " + shape_to_string(in));
    }
    return {fc->m};
  }
  return conv_output_shape(in, std::get<ConvGeometry>(geometry));
}

}  // namespace

std::vector<Shape> Model::node_input_shapes() const
{
  std::vector<Shape> shapes;
  shapes.reserve(nodes.size() + 1);
  Shape current = input_shape;
  for (auto const &node : nodes)
  {
    shapes.push_back(current);
    if (auto const *svd = std::get_if<SvdLayer>(&node))
    {
      current = layer_output_shape(current, svd->geometry);
    }
    else if (auto const *dense = std::get_if<DenseLayer>(&node))
    {
      current = layer_output_shape(current, dense->geometry);
    }
    else if (auto const *pool = std::get_if<MaxPoolOp>(&node))
    {
      if (current.size() != 3 || current[1] < pool->window || current[2] < pool->window)
      {
        throw GeometryError("pooling window does not fit " + shape_to_string(current));
      }
      current = {current[0], current[1] / pool->window, current[2] / pool->window};
    }
    else if (std::holds_alternative<FlattenOp>(node))
    {
      current = {shape_numel(current)};
    }
  }
  shapes.push_back(current);
  return shapes;
}

void Model::validate() const
{
  for (auto const &node : nodes)
  {
    if (auto const *svd = std::get_if<SvdLayer>(&node))
    {
      svd->validate();
    }
    else if (auto const *dense = std::get_if<DenseLayer>(&node))
    {
      dense->validate();
    }
  }
  auto const  shapes = node_input_shapes();
  Shape const &out   = shapes.back();
  if (out.size() != 1 || out[0] != class_count)
  {
    throw DimensionError("model output " + shape_to_string(out) + " does not match " +
                         std::to_string(class_count) + " classes");
  }
}

namespace {

DenseLayer he_dense(const LayerGeometry &geometry, Rng &rng)
{
  Shape const       shape  = weight_shape(geometry);
  std::size_t const fan_in = shape_numel(shape) / shape[0];
  DenseLayer        layer{geometry,
                   rng.normal_tensor(shape, std::sqrt(2.0 / static_cast<double>(fan_in))),
                   Tensor::zeros({shape[0]})};
  return layer;
}

}  // namespace

Model build_reference_model(const std::string &name, const Shape &input_shape,
                            std::size_t class_count, std::uint64_t seed)
{
  if (class_count < 1)
  {
    throw ParameterError("class_count must be at least 1");
  }
  Rng   rng(Rng::mix(seed, 0x5EED));
  Model model{name, input_shape, class_count, {}};

  if (name == "mlp-s")
  {
    std::size_t const features = shape_numel(input_shape);
    if (input_shape.size() != 1)
    {
      model.nodes.emplace_back(FlattenOp{});
    }
    model.nodes.emplace_back(he_dense(FcGeometry{256, features}, rng));
    model.nodes.emplace_back(ReluOp{});
    model.nodes.emplace_back(he_dense(FcGeometry{64, 256}, rng));
    model.nodes.emplace_back(ReluOp{});
    model.nodes.emplace_back(he_dense(FcGeometry{class_count, 64}, rng));
  }
  else if (name == "cnn-s")
  {
    if (input_shape.size() != 3)
    {
      throw DimensionError("cnn-s needs C x H x W input, got " + shape_to_string(input_shape));
    }
    std::size_t const channels = input_shape[0];
    model.nodes.emplace_back(he_dense(ConvGeometry{8, channels, 3, 3, 1, 1}, rng));
    model.nodes.emplace_back(ReluOp{});
    model.nodes.emplace_back(he_dense(ConvGeometry{16, 8, 3, 3, 1, 1}, rng));
    model.nodes.emplace_back(ReluOp{});
    model.nodes.emplace_back(MaxPoolOp{2});
    model.nodes.emplace_back(FlattenOp{});
    std::size_t const pooled = 16 * (input_shape[1] / 2) * (input_shape[2] / 2);
    model.nodes.emplace_back(he_dense(FcGeometry{class_count, pooled}, rng));
  }
  else
  {
    throw ParameterError("unknown reference model '" + name + "'");
  }
  model.validate();
  return model;
}

Model decompose_model(const Model &dense, DecompositionScheme conv_scheme)
{
  if (conv_scheme == DecompositionScheme::FullyConnected)
  {
    throw ParameterError("convolutions need the channel or spatial scheme");
  }
  Model out = dense;
  for (auto &node : out.nodes)
  {
    if (auto *layer = std::get_if<DenseLayer>(&node))
    {
      DecompositionScheme const scheme = std::holds_alternative<FcGeometry>(layer->geometry)
                                             ? DecompositionScheme::FullyConnected
                                             : conv_scheme;
      node = init_from_dense(layer->weight, scheme, layer->geometry, layer->bias);
    }
  }
  return out;
}

Model compose_model(const Model &model)
{
  Model out = model;
  for (auto &node : out.nodes)
  {
    if (auto *layer = std::get_if<SvdLayer>(&node))
    {
      node = DenseLayer{layer->geometry, compose_effective_weight(*layer), layer->bias};
    }
  }
  return out;
}

std::string node_prefix(std::size_t index)
{
  return "layer" + std::to_string(index);
}

namespace {

template <bool Trainable>
ModelVars bind(Tape &tape, const Model &model)
{
  ModelVars vars;
  vars.reserve(model.nodes.size());
  for (std::size_t i = 0; i < model.nodes.size(); ++i)
  {
    auto const &node = model.nodes[i];
    if (auto const *svd = std::get_if<SvdLayer>(&node))
    {
      if constexpr (Trainable)
      {
        vars.emplace_back(bind_parameters(tape, *svd, node_prefix(i)));
      }
      else
      {
        vars.emplace_back(bind_constants(tape, *svd));
      }
    }
    else if (auto const *dense = std::get_if<DenseLayer>(&node))
    {
      if constexpr (Trainable)
      {
        vars.emplace_back(bind_parameters(tape, *dense, node_prefix(i)));
      }
      else
      {
        vars.emplace_back(bind_constants(tape, *dense));
      }
    }
    else
    {
      vars.emplace_back(std::monostate{});
    }
  }
  return vars;
}

}  // namespace

ModelVars bind_parameters(Tape &tape, const Model &model)
{
  return bind<true>(tape, model);
}

ModelVars bind_constants(Tape &tape, const Model &model)
{
  return bind<false>(tape, model);
}

Var model_forward(const Model &model, const ModelVars &vars, Var input, std::vector<Var> *trace)
{
  if (vars.size() != model.nodes.size())
  {
    throw InvariantError("model bindings do not match the model");
  }
  Shape expected = input.shape();
  if (expected.empty() || Shape(expected.begin() + 1, expected.end()) != model.input_shape)
  {
    throw DimensionError("model expects N x " + shape_to_string(model.input_shape) +
                         " input, got " + shape_to_string(input.shape()));
  }

  Var x = input;
  for (std::size_t i = 0; i < model.nodes.size(); ++i)
  {
    auto const &node = model.nodes[i];
    if (auto const *svd = std::get_if<SvdLayer>(&node))
    {
      x = forward(*svd, std::get<SvdLayerVars>(vars[i]), x);
    }
    else if (auto const *dense = std::get_if<DenseLayer>(&node))
    {
      x = dense_forward(*dense, std::get<DenseLayerVars>(vars[i]), x);
    }
    else if (std::holds_alternative<ReluOp>(node))
    {
      x = ad::relu(x);
    }
    else if (auto const *pool = std::get_if<MaxPoolOp>(&node))
    {
      x = ad::max_pool2d(x, pool->window);
    }
    else
    {
      x = ad::flatten(x);
    }
    if (trace != nullptr)
    {
      trace->push_back(x);
    }
  }
  return x;
}

Tensor predict_logits(const Model &model, const Tensor &inputs)
{
  Tape tape;
  return model_forward(model, bind_constants(tape, model), tape.constant(inputs)).value();
}

namespace {

template <typename ModelRef, typename Ptr>
std::vector<std::pair<std::string, Ptr>> collect_refs(ModelRef &model)
{
  std::vector<std::pair<std::string, Ptr>> refs;
  for (std::size_t i = 0; i < model.nodes.size(); ++i)
  {
    auto       &node   = model.nodes[i];
    auto const  prefix = node_prefix(i);
    if (auto *svd = std::get_if<SvdLayer>(&node))
    {
      refs.emplace_back(prefix + ".u", &svd->u);
      refs.emplace_back(prefix + ".s", &svd->s);
      refs.emplace_back(prefix + ".v", &svd->v);
      if (svd->bias)
      {
        refs.emplace_back(prefix + ".bias", &*svd->bias);
      }
    }
    else if (auto *dense = std::get_if<DenseLayer>(&node))
    {
      refs.emplace_back(prefix + ".weight", &dense->weight);
      if (dense->bias)
      {
        refs.emplace_back(prefix + ".bias", &*dense->bias);
      }
    }
  }
  return refs;
}

}  // namespace

std::vector<std::pair<std::string, Tensor *>> parameter_refs(Model &model)
{
  return collect_refs<Model, Tensor *>(model);
}

std::vector<std::pair<std::string, const Tensor *>> parameter_refs(const Model &model)
{
  return collect_refs<const Model, const Tensor *>(model);
}

}  // namespace svdtrain

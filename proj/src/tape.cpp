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

#include "svdtrain/tape.hpp"

#include "svdtrain/error.hpp"

namespace svdtrain {

const Tensor &Var::value() const
{
  return tape_->value(id_);
}

bool Var::requires_grad() const
{
  return tape_->requires_grad(id_);
}

bool GradSink::wants(std::size_t input) const
{
  return tape_.nodes_[inputs_[input]].requires_grad;
}

void GradSink::add(std::size_t input, Tensor grad)
{
  NodeId const target = inputs_[input];
  if (!tape_.nodes_[target].requires_grad)
  {
    return;
  }
  auto &slot = tape_.grads_[target];
  if (grad.shape() != tape_.nodes_[target].value.shape())
  {
    throw DimensionError("gradient shape " + shape_to_string(grad.shape()) +
                         " does not match value shape " +
                         shape_to_string(tape_.nodes_[target].value.shape()));
  }
  if (!slot)
  {
    slot = std::move(grad);
    return;
  }
  auto dst = slot->data();
  auto src = grad.data();
  for (std::size_t i = 0; i < dst.size(); ++i)
  {
    dst[i] += src[i];
  }
}

Var Tape::constant(Tensor value)
{
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const std::string &name, Tensor value)
{
  if (parameters_.count(name) != 0)
  {
    throw InvariantError("parameter '" + name + "' registered twice on one tape");
  }
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  parameters_[name] = nodes_.size() - 1;
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, const std::vector<Var> &inputs, BackwardFn backward)
{
  Node node;
  node.value = std::move(value);
  node.inputs.reserve(inputs.size());
  for (auto const &in : inputs)
  {
    if (in.tape_ != this)
    {
      throw InvariantError("op input belongs to a different tape");
    }
    node.inputs.push_back(in.id_);
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad)
  {
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

GradientMap Tape::backward(Var loss)
{
  if (loss.tape_ != this)
  {
    throw InvariantError("loss belongs to a different tape");
  }
  if (loss.value().rank() != 0)
  {
    throw RankError("backward needs a 0-d loss, got shape " + shape_to_string(loss.shape()));
  }

  grads_.assign(nodes_.size(), std::nullopt);
  grads_[loss.id_] = Tensor::scalar(1.0);

  for (NodeId id = loss.id_ + 1; id-- > 0;)
  {
    Node &node = nodes_[id];
    if (!grads_[id] || !node.backward)
    {
      continue;
    }
    GradSink sink(*this, node.inputs);
    node.backward(*grads_[id], sink);
  }

  GradientMap out;
  for (auto const &[name, id] : parameters_)
  {
    out.emplace(name, grads_[id] ? *grads_[id] : Tensor::zeros(nodes_[id].value.shape()));
  }
  return out;
}

std::vector<std::string> Tape::parameter_names() const
{
  std::vector<std::string> names;
  names.reserve(parameters_.size());
  for (auto const &entry : parameters_)
  {
    names.push_back(entry.first);
  }
  return names;
}

void Tape::clear()
{
  nodes_.clear();
  parameters_.clear();
  grads_.clear();
}

}  // namespace svdtrain

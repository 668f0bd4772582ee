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

#include "svdtrain/optimizer.hpp"

#include "svdtrain/error.hpp"

namespace svdtrain {

void Schedule::validate() const
{
  if (!(initial_lr >= 0.0))
  {
    throw ParameterError("initial learning rate must be non-negative");
  }
  for (std::size_t i = 1; i < milestones.size(); ++i)
  {
    if (milestones[i].first <= milestones[i - 1].first)
    {
      throw ParameterError("schedule milestones must be strictly increasing");
    }
  }
}

Schedule Schedule::cifar_reference()
{
  return Schedule{0.001, {{81, 0.1}, {122, 0.1}}};
}

double lr_at_epoch(const Schedule &schedule, std::size_t epoch)
{
  double lr = schedule.initial_lr;
  for (auto const &[at, multiplier] : schedule.milestones)
  {
    if (at <= epoch)
    {
      lr *= multiplier;
    }
  }
  return lr;
}

void OptimizerState::validate() const
{
  if (!(momentum >= 0.0 && momentum < 1.0))
  {
    throw ParameterError("momentum must lie in [0, 1)");
  }
  if (!(weight_decay >= 0.0) || !(lr >= 0.0))
  {
    throw ParameterError("learning rate and weight decay must be non-negative");
  }
}

namespace {

bool is_singular_value(const std::string &name)
{
  return name.size() >= 2 && name.compare(name.size() - 2, 2, ".s") == 0;
}

}  // namespace

void sgd_step(const ParameterRefs &params, const GradientMap &grads, OptimizerState &state)
{
  state.validate();
  for (auto const &[name, tensor] : params)
  {
    auto const found = grads.find(name);
    if (found == grads.end())
    {
      throw DimensionError("no gradient for parameter '" + name + "'");
    }
    Tensor const &grad = found->second;
    if (grad.shape() != tensor->shape())
    {
      throw DimensionError("gradient for '" + name + "' has shape " +
                           shape_to_string(grad.shape()) + ", parameter " +
                           shape_to_string(tensor->shape()));
    }
    auto [it, inserted] = state.buffers.try_emplace(name, Tensor::zeros(tensor->shape()));
    Tensor &buffer      = it->second;
    if (buffer.shape() != tensor->shape())
    {
      throw DimensionError("momentum buffer for '" + name + "' has stale shape " +
                           shape_to_string(buffer.shape()));
    }
    double const decay =
        (!state.decay_singular_values && is_singular_value(name)) ? 0.0 : state.weight_decay;
    auto w = tensor->data();
    auto g = grad.data();
    auto b = buffer.data();
    for (std::size_t i = 0; i < w.size(); ++i)
    {
      b[i] = state.momentum * b[i] + (g[i] + decay * w[i]);
      w[i] -= state.lr * b[i];
    }
  }
}

}  // namespace svdtrain

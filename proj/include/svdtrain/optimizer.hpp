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
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace svdtrain {

/// Piecewise-constant learning rate: initial_lr times every multiplier whose
/// milestone epoch has been reached.
struct Schedule
{
  double                                      initial_lr = 0.01;
  std::vector<std::pair<std::size_t, double>> milestones;  // (epoch, multiplier)

  void validate() const;

  /// CIFAR-10 recipe: 0.001, x0.1 at epochs 81 and 122.
  static Schedule cifar_reference();
};

double lr_at_epoch(const Schedule &schedule, std::size_t epoch);

/// Heavy-ball SGD: g' = g + wd * w; buf = momentum * buf + g'; w -= lr * buf.
struct OptimizerState
{
  double lr           = 0.01;
  double momentum     = 0.9;
  double weight_decay = 5e-4;
  /// When false, tensors named "*.s" are exempt from weight decay.
  bool   decay_singular_values = true;

  std::map<std::string, Tensor> buffers;

  void validate() const;
};

using ParameterRefs = std::vector<std::pair<std::string, Tensor *>>;

void sgd_step(const ParameterRefs &params, const GradientMap &grads, OptimizerState &state);

}  // namespace svdtrain

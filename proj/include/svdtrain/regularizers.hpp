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

#include "svdtrain/svd_layer.hpp"
#include "svdtrain/tape.hpp"
#include "svdtrain/tensor.hpp"

#include <span>
#include <string_view>

namespace svdtrain {

enum class SparsityKind
{
  None,
  L1,
  Hoyer,
};

std::string_view to_string(SparsityKind kind);
/// Accepts "none", "l1", "hoyer".
SparsityKind     parse_sparsity(std::string_view text);

struct RegularizerConfig
{
  double       lambda_o = 0.0;  // orthogonality decay
  double       lambda_s = 0.0;  // sparsity decay, must be 0 when kind is None
  SparsityKind kind     = SparsityKind::None;

  void validate() const;
};

/// (||U^T U - I||_F^2 + ||V^T V - I||_F^2) / r^2
Var orthogonality_loss(Var u, Var v);
/// sum |s_i|
Var l1_loss(Var s);
/// ||s||_1 / ||s||_2, or 0 (with zero gradient) when ||s||_2 < 1e-12.
Var hoyer_loss(Var s);

double orthogonality_loss(const Tensor &u, const Tensor &v);
double l1_loss(const Tensor &s);
double hoyer_loss(const Tensor &s);

/// Trainable factors of one decomposed layer as seen by the objective.
struct FactorVars
{
  Var u;
  Var s;
  Var v;
};

/// task_loss + lambda_o * sum_l L_o(U_l, V_l) + lambda_s * sum_l L_s(s_l)
Var total_objective(Var task_loss, std::span<const FactorVars> layers,
                    const RegularizerConfig &config);

}  // namespace svdtrain

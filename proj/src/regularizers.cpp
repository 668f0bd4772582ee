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

#include "svdtrain/regularizers.hpp"

#include "svdtrain/error.hpp"
#include "svdtrain/ops.hpp"

#include <cmath>
#include <string>

namespace svdtrain {

std::string_view to_string(SparsityKind kind)
{
  switch (kind)
  {
  case SparsityKind::None:
    return "none";
  case SparsityKind::L1:
    return "l1";
  case SparsityKind::Hoyer:
    return "hoyer";
  }
  return "unknown";
}

SparsityKind parse_sparsity(std::string_view text)
{
  if (text == "none")
  {
    return SparsityKind::None;
  }
  if (text == "l1")
  {
    return SparsityKind::L1;
  }
  if (text == "hoyer")
  {
    return SparsityKind::Hoyer;
  }
  throw ParameterError("unknown regularizer '" + std::string(text) + "'");
}

void RegularizerConfig::validate() const
{
  if (!(lambda_o >= 0.0) || !(lambda_s >= 0.0))
  {
    throw ParameterError("regularizer decays must be non-negative");
  }
  if (kind == SparsityKind::None && lambda_s != 0.0)
  {
    throw ParameterError("lambda_s must be 0 when no sparsity regularizer is selected");
  }
}

namespace {

void require_vector(const Var &s, const char *what)
{
  if (s.value().rank() != 1 || s.value().size() == 0)
  {
    throw DimensionError(std::string(what) + " expects a non-empty vector, got " +
                         shape_to_string(s.shape()));
  }
}

template <typename Fn>
double evaluate(Fn fn, const Tensor &a)
{
  Tape tape;
  return fn(tape.constant(a)).value().item();
}

}  // namespace

Var orthogonality_loss(Var u, Var v)
{
  if (u.value().rank() != 2 || v.value().rank() != 2 || u.shape()[1] != v.shape()[1] ||
      u.shape()[1] == 0)
  {
    throw DimensionError("orthogonality_loss column mismatch: u " + shape_to_string(u.shape()) +
                         ", v " + shape_to_string(v.shape()));
  }
  std::size_t const r  = u.shape()[1];
  Tape             &tp = u.tape();
  Var const         eye = tp.constant(Tensor::identity(r));
  Var const gram_u = ad::sub(ad::matmul(ad::transpose(u), u), eye);
  Var const gram_v = ad::sub(ad::matmul(ad::transpose(v), v), eye);
  Var const total  = ad::add(ad::sum(ad::square(gram_u)), ad::sum(ad::square(gram_v)));
  return ad::scale(total, 1.0 / static_cast<double>(r * r));
}

Var l1_loss(Var s)
{
  require_vector(s, "l1_loss");
  return ad::sum(ad::abs(s));
}

Var hoyer_loss(Var s)
{
  require_vector(s, "hoyer_loss");
  double energy = 0.0;
  for (double x : s.value().data())
  {
    energy += x * x;
  }
  if (std::sqrt(energy) < 1e-12)
  {
    // Recorded as a function of s so the node stays connected, with zero gradient.
    return ad::scale(ad::sum(s), 0.0);
  }
  Var const l1 = ad::sum(ad::abs(s));
  Var const l2 = ad::sqrt(ad::sum(ad::square(s)));
  return ad::div(l1, l2);
}

double orthogonality_loss(const Tensor &u, const Tensor &v)
{
  Tape tape;
  return orthogonality_loss(tape.constant(u), tape.constant(v)).value().item();
}

double l1_loss(const Tensor &s)
{
  return evaluate([](Var x) { return l1_loss(x); }, s);
}

double hoyer_loss(const Tensor &s)
{
  return evaluate([](Var x) { return hoyer_loss(x); }, s);
}

Var total_objective(Var task_loss, std::span<const FactorVars> layers,
                    const RegularizerConfig &config)
{
  config.validate();
  Var total = task_loss;
  if (config.lambda_o != 0.0 && !layers.empty())
  {
    Var ortho = orthogonality_loss(layers[0].u, layers[0].v);
    for (std::size_t l = 1; l < layers.size(); ++l)
    {
      ortho = ad::add(ortho, orthogonality_loss(layers[l].u, layers[l].v));
    }
    total = ad::add(total, ad::scale(ortho, config.lambda_o));
  }
  if (config.lambda_s != 0.0 && config.kind != SparsityKind::None && !layers.empty())
  {
    auto sparsity = [&](Var s) {
      return config.kind == SparsityKind::L1 ? l1_loss(s) : hoyer_loss(s);
    };
    Var sparse = sparsity(layers[0].s);
    for (std::size_t l = 1; l < layers.size(); ++l)
    {
      sparse = ad::add(sparse, sparsity(layers[l].s));
    }
    total = ad::add(total, ad::scale(sparse, config.lambda_s));
  }
  return total;
}

}  // namespace svdtrain

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

#include "svdtrain/gradcheck.hpp"

#include "svdtrain/error.hpp"

#include <algorithm>
#include <cmath>

namespace svdtrain {
namespace {

double evaluate(const ScalarFn &f, const Tensor &p)
{
  Tape tape;
  return f(tape, tape.constant(p)).value().item();
}

}  // namespace

double finite_diff_check(const ScalarFn &f, const Tensor &p, double eps)
{
  if (!(eps > 0.0 && eps <= 1e-2))
  {
    throw ParameterError("finite difference step must lie in (0, 1e-2]");
  }

  Tensor analytic;
  {
    Tape tape;
    Var  param = tape.parameter("p", p);
    Var  loss  = f(tape, param);
    analytic   = tape.backward(loss).at("p");
  }

  double worst = 0.0;
  Tensor probe = p;
  for (std::size_t i = 0; i < p.size(); ++i)
  {
    double const original = probe[i];
    probe[i]              = original + eps;
    double const upper    = evaluate(f, probe);
    probe[i]              = original - eps;
    double const lower    = evaluate(f, probe);
    probe[i]              = original;

    double const numeric = (upper - lower) / (2.0 * eps);
    double const err     = std::abs(numeric - analytic[i]) / std::max(1.0, std::abs(analytic[i]));
    worst                = std::max(worst, err);
  }
  return worst;
}

}  // namespace svdtrain

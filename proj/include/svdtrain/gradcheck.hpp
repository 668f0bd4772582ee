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

#include <functional>

namespace svdtrain {

/// Scalar-valued function of one parameter tensor, expressed on a tape.
using ScalarFn = std::function<Var(Tape &, Var)>;

/**
 * Largest disagreement between the tape gradient of `f` at `p` and central
 * differences (f(p + eps e_i) - f(p - eps e_i)) / (2 eps), measured per
 * coordinate as |numeric - analytic| / max(1, |analytic|).
 *
 * `eps` must lie in (0, 1e-2].
 */
double finite_diff_check(const ScalarFn &f, const Tensor &p, double eps = 1e-6);

}  // namespace svdtrain

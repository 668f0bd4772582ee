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

#include "svdtrain/tensor.hpp"

#include <cstddef>

namespace svdtrain {

/// Thin factorization a = u diag(s) v^T with r = min(m, n).
struct SvdFactors
{
  Tensor u;  // m x r, orthonormal columns
  Tensor s;  // r, non-negative, non-increasing
  Tensor v;  // n x r, orthonormal columns

  std::size_t rank() const
  {
    return s.size();
  }
};

struct SvdOptions
{
  double      tolerance  = 1e-12;
  std::size_t max_sweeps = 60;
};

/**
 * One-sided (Hestenes) Jacobi SVD with cyclic sweeps.
 *
 * A column pair (i, j) counts as orthogonal once |a_i . a_j| <= tolerance *
 * |a_i| |a_j|. Columns of u belonging to zero singular values are completed
 * to an orthonormal set. The largest-magnitude entry of each u column is made
 * non-negative so results are deterministic.
 *
 * Throws NumericError (with the final off-diagonal residual) if a sweep
 * still rotates after `max_sweeps`.
 */
SvdFactors svd(const Tensor &a, const SvdOptions &options = {});

/// u diag(s) v^T.
Tensor reconstruct(const SvdFactors &factors);

/// ||m^T m - I||_F for a matrix with orthonormal columns expected.
double orthonormality_residual(const Tensor &m);

}  // namespace svdtrain

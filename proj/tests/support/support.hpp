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

#include "svdtrain/gradcheck.hpp"
#include "svdtrain/random.hpp"
#include "svdtrain/svd_layer.hpp"
#include "svdtrain/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace testing {

using namespace svdtrain;

Tensor random_tensor(Rng &rng, Shape shape, double stddev = 1.0);
/// Entries bounded away from zero (|x| in [lo, hi]) with random sign.
Tensor away_from_zero(Rng &rng, Shape shape, double lo = 0.2, double hi = 1.5);

/// Singular values of `a` from the eigenvalues of its Gram matrix (Eigen),
/// sorted descending.
std::vector<double> gram_singular_values(const Tensor &a);

/// Largest |K| over all subsets K with sum_{K} s^2 <= e * sum s^2, by
/// enumeration of every subset (r <= 20).
std::size_t brute_force_max_prune(const std::vector<double> &s, double e);
/// Whether `pruned` (indices) meets the budget under exact long-double sums.
bool within_budget(const std::vector<double> &s, const std::vector<std::size_t> &pruned, double e);

/// Named scalar function plus the point it is checked at.
struct GradCase
{
  std::string name;
  ScalarFn    fn;
  Tensor      point;
};

/// Every differentiable op, each regularizer, the composed objective and
/// the layer forwards, on seeded random inputs.
std::vector<GradCase> gradient_cases(std::uint64_t seed);

/// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string &tag);

std::string read_text(const std::filesystem::path &path);

}  // namespace testing

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

#include <cstdint>
#include <random>

namespace svdtrain {

/// Seeded generator shared by initializers, data synthesis and shuffling.
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(seed)
  {}

  /// Seed derived from several integers (seed, epoch, stream id ...).
  static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

  double normal(double mean = 0.0, double stddev = 1.0);
  double uniform(double lo = 0.0, double hi = 1.0);
  std::uint64_t below(std::uint64_t n);

  Tensor normal_tensor(Shape shape, double stddev = 1.0);
  Tensor uniform_tensor(Shape shape, double lo, double hi);

  std::mt19937_64 &engine()
  {
    return engine_;
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace svdtrain

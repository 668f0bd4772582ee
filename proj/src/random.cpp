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

#include "svdtrain/random.hpp"

namespace svdtrain {

std::uint64_t Rng::mix(std::uint64_t a, std::uint64_t b)
{
  // splitmix64 finalizer over the combined words
  std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
  z               = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z               = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::normal(double mean, double stddev)
{
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

double Rng::uniform(double lo, double hi)
{
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

std::uint64_t Rng::below(std::uint64_t n)
{
  std::uniform_int_distribution<std::uint64_t> dist(0, n - 1);
  return dist(engine_);
}

Tensor Rng::normal_tensor(Shape shape, double stddev)
{
  Tensor out(std::move(shape));
  for (double &x : out.data())
  {
    x = normal(0.0, stddev);
  }
  return out;
}

Tensor Rng::uniform_tensor(Shape shape, double lo, double hi)
{
  Tensor out(std::move(shape));
  for (double &x : out.data())
  {
    x = uniform(lo, hi);
  }
  return out;
}

}  // namespace svdtrain

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

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace svdtrain {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape &shape);
std::string shape_to_string(const Shape &shape);

/**
 * Dense n-dimensional array of doubles, row-major (last index fastest).
 *
 * A 0-dimensional tensor (empty shape) holds a single scalar.
 */
class Tensor
{
public:
  Tensor();  // scalar 0
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double value);
  static Tensor zeros(Shape shape);
  static Tensor ones(Shape shape);
  static Tensor identity(std::size_t n);
  /// 2-D tensor from nested rows; all rows must have equal length.
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor vector(std::initializer_list<double> values);

  const Shape &shape() const
  {
    return shape_;
  }
  std::size_t rank() const
  {
    return shape_.size();
  }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const
  {
    return data_.size();
  }

  std::span<double> data()
  {
    return data_;
  }
  std::span<const double> data() const
  {
    return data_;
  }
  const std::vector<double> &values() const
  {
    return data_;
  }

  double &operator[](std::size_t i)
  {
    return data_[i];
  }
  double operator[](std::size_t i) const
  {
    return data_[i];
  }

  double &at(std::size_t i, std::size_t j);
  double  at(std::size_t i, std::size_t j) const;
  double &at(std::size_t a, std::size_t b, std::size_t c, std::size_t d);
  double  at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const;

  /// Value of a 0-d or single-element tensor.
  double item() const;

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const;

  bool all_finite() const;

  bool operator==(const Tensor &other) const = default;

private:
  Shape               shape_;
  std::vector<double> data_;
};

// Plain (non-recording) arithmetic.
Tensor matmul(const Tensor &a, const Tensor &b);
Tensor transpose(const Tensor &a);
/// Generic axis permutation: out.shape[i] = in.shape[axes[i]].
Tensor permute(const Tensor &a, std::span<const std::size_t> axes);
Tensor add(const Tensor &a, const Tensor &b);
Tensor sub(const Tensor &a, const Tensor &b);
Tensor scale(const Tensor &a, double factor);
double frobenius_norm(const Tensor &a);
double max_abs_diff(const Tensor &a, const Tensor &b);

/// Copy of columns `cols` of a 2-D tensor, in the given order.
Tensor select_columns(const Tensor &a, std::span<const std::size_t> cols);

}  // namespace svdtrain

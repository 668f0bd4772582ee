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

#include "svdtrain/tensor.hpp"

#include "svdtrain/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace svdtrain {

std::size_t shape_numel(const Shape &shape)
{
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape &shape)
{
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i)
  {
    if (i != 0)
    {
      out << 'x';
    }
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor()
  : data_(1, 0.0)
{}

Tensor::Tensor(Shape shape, double fill)
  : shape_(std::move(shape))
  , data_(shape_numel(shape_), fill)
{}

Tensor::Tensor(Shape shape, std::vector<double> data)
  : shape_(std::move(shape))
  , data_(std::move(data))
{
  if (data_.size() != shape_numel(shape_))
  {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_to_string(shape_));
  }
}

Tensor Tensor::scalar(double value)
{
  return Tensor(Shape{}, std::vector<double>{value});
}

Tensor Tensor::zeros(Shape shape)
{
  return Tensor(std::move(shape), 0.0);
}

Tensor Tensor::ones(Shape shape)
{
  return Tensor(std::move(shape), 1.0);
}

Tensor Tensor::identity(std::size_t n)
{
  Tensor out({n, n});
  for (std::size_t i = 0; i < n; ++i)
  {
    out.at(i, i) = 1.0;
  }
  return out;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows)
{
  std::size_t const   m = rows.size();
  std::size_t const   n = m == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(m * n);
  for (auto const &row : rows)
  {
    if (row.size() != n)
    {
      throw DimensionError("ragged matrix literal");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({m, n}, std::move(data));
}

Tensor Tensor::vector(std::initializer_list<double> values)
{
  return Tensor({values.size()}, std::vector<double>(values));
}

std::size_t Tensor::dim(std::size_t axis) const
{
  if (axis >= shape_.size())
  {
    throw RankError("axis " + std::to_string(axis) + " out of range for shape " +
                    shape_to_string(shape_));
  }
  return shape_[axis];
}

double &Tensor::at(std::size_t i, std::size_t j)
{
  return data_[i * shape_[1] + j];
}

double Tensor::at(std::size_t i, std::size_t j) const
{
  return data_[i * shape_[1] + j];
}

double &Tensor::at(std::size_t a, std::size_t b, std::size_t c, std::size_t d)
{
  return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
}

double Tensor::at(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const
{
  return data_[((a * shape_[1] + b) * shape_[2] + c) * shape_[3] + d];
}

double Tensor::item() const
{
  if (data_.size() != 1)
  {
    throw RankError("item() on tensor of shape " + shape_to_string(shape_));
  }
  return data_[0];
}

Tensor Tensor::reshaped(Shape shape) const
{
  if (shape_numel(shape) != data_.size())
  {
    throw DimensionError("cannot reshape " + shape_to_string(shape_) + " to " +
                         shape_to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const
{
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Tensor matmul(const Tensor &a, const Tensor &b)
{
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
  {
    throw DimensionError("matmul shape mismatch: " + shape_to_string(a.shape()) + " x " +
                         shape_to_string(b.shape()));
  }
  std::size_t const m = a.dim(0);
  std::size_t const k = a.dim(1);
  std::size_t const n = b.dim(1);
  Tensor            out({m, n});
  auto              lhs = a.data();
  auto              rhs = b.data();
  auto              dst = out.data();
  for (std::size_t i = 0; i < m; ++i)
  {
    double *row = dst.data() + i * n;
    for (std::size_t p = 0; p < k; ++p)
    {
      double const aip = lhs[i * k + p];
      if (aip == 0.0)
      {
        continue;
      }
      double const *brow = rhs.data() + p * n;
      for (std::size_t j = 0; j < n; ++j)
      {
        row[j] += aip * brow[j];
      }
    }
  }
  return out;
}

Tensor transpose(const Tensor &a)
{
  if (a.rank() != 2)
  {
    throw RankError("transpose expects a matrix, got " + shape_to_string(a.shape()));
  }
  std::size_t const m = a.dim(0);
  std::size_t const n = a.dim(1);
  Tensor            out({n, m});
  for (std::size_t i = 0; i < m; ++i)
  {
    for (std::size_t j = 0; j < n; ++j)
    {
      out.at(j, i) = a.at(i, j);
    }
  }
  return out;
}

Tensor permute(const Tensor &a, std::span<const std::size_t> axes)
{
  std::size_t const rank = a.rank();
  if (axes.size() != rank)
  {
    throw RankError("permute axes do not match shape " + shape_to_string(a.shape()));
  }
  std::vector<bool> seen(rank, false);
  Shape             out_shape(rank);
  for (std::size_t i = 0; i < rank; ++i)
  {
    if (axes[i] >= rank || seen[axes[i]])
    {
      throw DimensionError("invalid permutation for shape " + shape_to_string(a.shape()));
    }
    seen[axes[i]] = true;
    out_shape[i]  = a.shape()[axes[i]];
  }

  std::vector<std::size_t> in_strides(rank, 1);
  for (std::size_t i = rank; i-- > 1;)
  {
    in_strides[i - 1] = in_strides[i] * a.shape()[i];
  }
  std::vector<std::size_t> strides(rank);
  for (std::size_t i = 0; i < rank; ++i)
  {
    strides[i] = in_strides[axes[i]];
  }

  Tensor                   out(out_shape);
  std::vector<std::size_t> index(rank, 0);
  auto                     src = a.data();
  auto                     dst = out.data();
  for (std::size_t flat = 0; flat < out.size(); ++flat)
  {
    std::size_t offset = 0;
    for (std::size_t i = 0; i < rank; ++i)
    {
      offset += index[i] * strides[i];
    }
    dst[flat] = src[offset];
    for (std::size_t i = rank; i-- > 0;)
    {
      if (++index[i] < out_shape[i])
      {
        break;
      }
      index[i] = 0;
    }
  }
  return out;
}

Tensor add(const Tensor &a, const Tensor &b)
{
  if (a.shape() != b.shape())
  {
    throw DimensionError("add shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] += b[i];
  }
  return out;
}

Tensor sub(const Tensor &a, const Tensor &b)
{
  if (a.shape() != b.shape())
  {
    throw DimensionError("sub shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] -= b[i];
  }
  return out;
}

Tensor scale(const Tensor &a, double factor)
{
  Tensor out = a;
  for (double &x : out.data())
  {
    x *= factor;
  }
  return out;
}

double frobenius_norm(const Tensor &a)
{
  double sum = 0.0;
  for (double x : a.data())
  {
    sum += x * x;
  }
  return std::sqrt(sum);
}

double max_abs_diff(const Tensor &a, const Tensor &b)
{
  if (a.shape() != b.shape())
  {
    throw DimensionError("max_abs_diff shape mismatch: " + shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
  {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

Tensor select_columns(const Tensor &a, std::span<const std::size_t> cols)
{
  if (a.rank() != 2)
  {
    throw RankError("select_columns expects a matrix, got " + shape_to_string(a.shape()));
  }
  std::size_t const rows = a.dim(0);
  Tensor            out({rows, cols.size()});
  for (std::size_t j = 0; j < cols.size(); ++j)
  {
    if (cols[j] >= a.dim(1))
    {
      throw DimensionError("column index " + std::to_string(cols[j]) + " out of range");
    }
    for (std::size_t i = 0; i < rows; ++i)
    {
      out.at(i, j) = a.at(i, cols[j]);
    }
  }
  return out;
}

}  // namespace svdtrain

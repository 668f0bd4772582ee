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

#include "svdtrain/linalg.hpp"

#include "svdtrain/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace svdtrain {
namespace {

// Column-major working copy so that column rotations touch contiguous memory.
struct ColumnSet
{
  std::size_t                      rows = 0;
  std::vector<std::vector<double>> cols;

  double dot(std::size_t i, std::size_t j) const
  {
    double acc = 0.0;
    for (std::size_t k = 0; k < rows; ++k)
    {
      acc += cols[i][k] * cols[j][k];
    }
    return acc;
  }

  void rotate(std::size_t i, std::size_t j, double c, double s)
  {
    auto &ci = cols[i];
    auto &cj = cols[j];
    for (std::size_t k = 0; k < rows; ++k)
    {
      double const x = ci[k];
      double const y = cj[k];
      ci[k]          = c * x - s * y;
      cj[k]          = s * x + c * y;
    }
  }
};

// Tall case (m >= n): orthogonalize the n columns of a, accumulating v.
SvdFactors svd_tall(const Tensor &a, const SvdOptions &options)
{
  std::size_t const m = a.dim(0);
  std::size_t const n = a.dim(1);

  ColumnSet work{m, std::vector<std::vector<double>>(n, std::vector<double>(m))};
  ColumnSet basis{n, std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0))};
  double    total = 0.0;
  for (std::size_t j = 0; j < n; ++j)
  {
    for (std::size_t i = 0; i < m; ++i)
    {
      work.cols[j][i] = a.at(i, j);
      total += a.at(i, j) * a.at(i, j);
    }
    basis.cols[j][j] = 1.0;
  }
  // Columns whose energy is below this are numerically zero and need no
  // further orthogonalization against anything.
  double const negligible = total * 1e-300;

  double residual  = 0.0;
  bool   converged = n < 2;
  for (std::size_t sweep = 0; sweep < options.max_sweeps && !converged; ++sweep)
  {
    converged = true;
    residual  = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i)
    {
      for (std::size_t j = i + 1; j < n; ++j)
      {
        double const alpha = work.dot(i, i);
        double const beta  = work.dot(j, j);
        double const gamma = work.dot(i, j);
        double const scale = std::sqrt(alpha * beta);
        if (alpha <= negligible || beta <= negligible || gamma == 0.0)
        {
          continue;
        }
        residual = std::max(residual, std::abs(gamma) / scale);
        if (std::abs(gamma) <= options.tolerance * scale)
        {
          continue;
        }
        converged        = false;
        double const zeta = (beta - alpha) / (2.0 * gamma);
        double const t =
            std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double const c = 1.0 / std::sqrt(1.0 + t * t);
        double const s = c * t;
        work.rotate(i, j, c, s);
        basis.rotate(i, j, c, s);
      }
    }
  }
  if (!converged)
  {
    std::ostringstream msg;
    msg << "jacobi svd did not converge after " << options.max_sweeps
        << " sweeps; residual off-diagonal ratio " << residual;
    throw NumericError(msg.str());
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j)
  {
    sigma[j] = std::sqrt(work.dot(j, j));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  double const sigma_max = n == 0 ? 0.0 : sigma[order[0]];
  double const zero_cut  = std::max(sigma_max * 1e-14 * static_cast<double>(std::max(m, n)),
                                    std::numeric_limits<double>::min());

  SvdFactors out{Tensor({m, n}), Tensor({n}), Tensor({n, n})};
  std::vector<std::vector<double>> ucols;
  ucols.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
  {
    std::size_t const j = order[k];
    out.s[k]            = sigma[j];
    for (std::size_t i = 0; i < n; ++i)
    {
      out.v.at(i, k) = basis.cols[j][i];
    }
    std::vector<double> col(m, 0.0);
    if (sigma[j] > zero_cut)
    {
      for (std::size_t i = 0; i < m; ++i)
      {
        col[i] = work.cols[j][i] / sigma[j];
      }
    }
    ucols.push_back(std::move(col));
  }

  // Complete u for (numerically) zero singular values with Gram-Schmidt over
  // the standard basis, re-orthogonalized twice for stability.
  std::size_t next_basis = 0;
  for (std::size_t k = 0; k < n; ++k)
  {
    if (out.s[k] > zero_cut)
    {
      continue;
    }
    out.s[k] = 0.0;
    while (true)
    {
      if (next_basis >= m)
      {
        throw NumericError("could not complete orthonormal basis for u");
      }
      std::vector<double> cand(m, 0.0);
      cand[next_basis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass)
      {
        for (std::size_t q = 0; q < n; ++q)
        {
          if (q == k || (out.s[q] <= zero_cut && q > k))
          {
            continue;
          }
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i)
          {
            proj += cand[i] * ucols[q][i];
          }
          for (std::size_t i = 0; i < m; ++i)
          {
            cand[i] -= proj * ucols[q][i];
          }
        }
      }
      double norm = 0.0;
      for (double x : cand)
      {
        norm += x * x;
      }
      norm = std::sqrt(norm);
      if (norm > 1e-6)
      {
        for (std::size_t i = 0; i < m; ++i)
        {
          ucols[k][i] = cand[i] / norm;
        }
        break;
      }
    }
  }

  for (std::size_t k = 0; k < n; ++k)
  {
    // Sign convention: largest-magnitude entry of each u column is non-negative.
    std::size_t peak = 0;
    for (std::size_t i = 1; i < m; ++i)
    {
      if (std::abs(ucols[k][i]) > std::abs(ucols[k][peak]))
      {
        peak = i;
      }
    }
    double const sign = ucols[k][peak] < 0.0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < m; ++i)
    {
      out.u.at(i, k) = sign * ucols[k][i];
    }
    if (sign < 0.0)
    {
      for (std::size_t i = 0; i < n; ++i)
      {
        out.v.at(i, k) = -out.v.at(i, k);
      }
    }
  }
  return out;
}

}  // namespace

SvdFactors svd(const Tensor &a, const SvdOptions &options)
{
  if (a.rank() != 2 || a.dim(0) == 0 || a.dim(1) == 0)
  {
    throw DimensionError("svd expects a non-empty matrix, got " + shape_to_string(a.shape()));
  }
  if (!a.all_finite())
  {
    throw NumericError("svd input contains non-finite entries");
  }
  if (a.dim(0) >= a.dim(1))
  {
    return svd_tall(a, options);
  }

  // Wide case: factor a^T = v' s u'^T and swap roles, then re-apply the sign
  // convention to the new u.
  SvdFactors   t   = svd_tall(transpose(a), options);
  SvdFactors   out{std::move(t.v), std::move(t.s), std::move(t.u)};
  std::size_t const r = out.s.size();
  for (std::size_t k = 0; k < r; ++k)
  {
    std::size_t peak = 0;
    for (std::size_t i = 1; i < out.u.dim(0); ++i)
    {
      if (std::abs(out.u.at(i, k)) > std::abs(out.u.at(peak, k)))
      {
        peak = i;
      }
    }
    if (out.u.at(peak, k) < 0.0)
    {
      for (std::size_t i = 0; i < out.u.dim(0); ++i)
      {
        out.u.at(i, k) = -out.u.at(i, k);
      }
      for (std::size_t i = 0; i < out.v.dim(0); ++i)
      {
        out.v.at(i, k) = -out.v.at(i, k);
      }
    }
  }
  return out;
}

Tensor reconstruct(const SvdFactors &factors)
{
  Tensor scaled = factors.u;
  for (std::size_t i = 0; i < scaled.dim(0); ++i)
  {
    for (std::size_t k = 0; k < scaled.dim(1); ++k)
    {
      scaled.at(i, k) *= factors.s[k];
    }
  }
  return matmul(scaled, transpose(factors.v));
}

double orthonormality_residual(const Tensor &m)
{
  Tensor gram = matmul(transpose(m), m);
  return frobenius_norm(sub(gram, Tensor::identity(gram.dim(0))));
}

}  // namespace svdtrain

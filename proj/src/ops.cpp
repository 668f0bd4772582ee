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

#include "svdtrain/ops.hpp"

#include "svdtrain/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace svdtrain {

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride,
                               std::size_t padding)
{
  if (stride == 0)
  {
    throw GeometryError("stride must be positive");
  }
  std::size_t const padded = in + 2 * padding;
  if (kernel == 0 || padded < kernel || (padded - kernel) % stride != 0)
  {
    throw GeometryError("window " + std::to_string(kernel) + " with stride " +
                        std::to_string(stride) + " and padding " + std::to_string(padding) +
                        " does not tile an extent of " + std::to_string(in));
  }
  return (padded - kernel) / stride + 1;
}

namespace ad {
namespace {

void require_same_shape(const Var &a, const Var &b, const char *op)
{
  if (a.shape() != b.shape())
  {
    throw DimensionError(std::string(op) + " shape mismatch: " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

template <typename Fn>
Tensor map_values(const Tensor &in, Fn fn)
{
  Tensor out = in;
  for (double &x : out.data())
  {
    x = fn(x);
  }
  return out;
}

}  // namespace

Var matmul(Var a, Var b)
{
  Tape  *tape = &a.tape();
  NodeId ia   = a.id();
  NodeId ib   = b.id();
  return tape->record(svdtrain::matmul(a.value(), b.value()), {a, b},
                      [tape, ia, ib](const Tensor &g, GradSink &sink) {
                        if (sink.wants(0))
                        {
                          sink.add(0, svdtrain::matmul(g, svdtrain::transpose(tape->value(ib))));
                        }
                        if (sink.wants(1))
                        {
                          sink.add(1, svdtrain::matmul(svdtrain::transpose(tape->value(ia)), g));
                        }
                      });
}

Var transpose(Var a)
{
  return a.tape().record(svdtrain::transpose(a.value()), {a},
                         [](const Tensor &g, GradSink &sink) {
                           sink.add(0, svdtrain::transpose(g));
                         });
}

Var add(Var a, Var b)
{
  require_same_shape(a, b, "add");
  return a.tape().record(svdtrain::add(a.value(), b.value()), {a, b},
                         [](const Tensor &g, GradSink &sink) {
                           sink.add(0, g);
                           sink.add(1, g);
                         });
}

Var sub(Var a, Var b)
{
  require_same_shape(a, b, "sub");
  return a.tape().record(svdtrain::sub(a.value(), b.value()), {a, b},
                         [](const Tensor &g, GradSink &sink) {
                           sink.add(0, g);
                           if (sink.wants(1))
                           {
                             sink.add(1, svdtrain::scale(g, -1.0));
                           }
                         });
}

Var mul(Var a, Var b)
{
  require_same_shape(a, b, "mul");
  Tape  *tape = &a.tape();
  NodeId ia   = a.id();
  NodeId ib   = b.id();
  Tensor out  = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] *= b.value()[i];
  }
  return tape->record(std::move(out), {a, b}, [tape, ia, ib](const Tensor &g, GradSink &sink) {
    Tensor const &av = tape->value(ia);
    Tensor const &bv = tape->value(ib);
    if (sink.wants(0))
    {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i)
      {
        ga[i] *= bv[i];
      }
      sink.add(0, std::move(ga));
    }
    if (sink.wants(1))
    {
      Tensor gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i)
      {
        gb[i] *= av[i];
      }
      sink.add(1, std::move(gb));
    }
  });
}

Var div(Var a, Var b)
{
  require_same_shape(a, b, "div");
  Tape  *tape = &a.tape();
  NodeId ia   = a.id();
  NodeId ib   = b.id();
  Tensor out  = a.value();
  for (std::size_t i = 0; i < out.size(); ++i)
  {
    out[i] /= b.value()[i];
  }
  return tape->record(std::move(out), {a, b}, [tape, ia, ib](const Tensor &g, GradSink &sink) {
    Tensor const &av = tape->value(ia);
    Tensor const &bv = tape->value(ib);
    if (sink.wants(0))
    {
      Tensor ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i)
      {
        ga[i] /= bv[i];
      }
      sink.add(0, std::move(ga));
    }
    if (sink.wants(1))
    {
      Tensor gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i)
      {
        gb[i] *= -av[i] / (bv[i] * bv[i]);
      }
      sink.add(1, std::move(gb));
    }
  });
}

Var scale(Var a, double factor)
{
  return a.tape().record(svdtrain::scale(a.value(), factor), {a},
                         [factor](const Tensor &g, GradSink &sink) {
                           sink.add(0, svdtrain::scale(g, factor));
                         });
}

Var square(Var a)
{
  Tape  *tape = &a.tape();
  NodeId ia   = a.id();
  return tape->record(map_values(a.value(), [](double x) { return x * x; }), {a},
                      [tape, ia](const Tensor &g, GradSink &sink) {
                        Tensor const &av = tape->value(ia);
                        Tensor        ga = g;
                        for (std::size_t i = 0; i < ga.size(); ++i)
                        {
                          ga[i] *= 2.0 * av[i];
                        }
                        sink.add(0, std::move(ga));
                      });
}

Var abs(Var a)
{
  Tape  *tape = &a.tape();
  NodeId ia   = a.id();
  return tape->record(map_values(a.value(), [](double x) { return std::abs(x); }), {a},
                      [tape, ia](const Tensor &g, GradSink &sink) {
                        Tensor const &av = tape->value(ia);
                        Tensor        ga = g;
                        for (std::size_t i = 0; i < ga.size(); ++i)
                        {
                          double const x = av[i];
                          ga[i] *= x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
                        }
                        sink.add(0, std::move(ga));
                      });
}

Var sqrt(Var a)
{
  for (double x : a.value().data())
  {
    if (x < 0.0)
    {
      throw NumericError("sqrt of negative value " + std::to_string(x));
    }
  }
  Tensor root = map_values(a.value(), [](double x) { return std::sqrt(x); });
  return a.tape().record(root, {a}, [root](const Tensor &g, GradSink &sink) {
    Tensor ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i)
    {
      ga[i] = root[i] > 0.0 ? ga[i] / (2.0 * root[i]) : 0.0;
    }
    sink.add(0, std::move(ga));
  });
}

Var relu(Var a)
{
  Tape  *tape = &a.tape();
  NodeId ia   = a.id();
  return tape->record(map_values(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {a},
                      [tape, ia](const Tensor &g, GradSink &sink) {
                        Tensor const &av = tape->value(ia);
                        Tensor        ga = g;
                        for (std::size_t i = 0; i < ga.size(); ++i)
                        {
                          if (av[i] <= 0.0)
                          {
                            ga[i] = 0.0;
                          }
                        }
                        sink.add(0, std::move(ga));
                      });
}

Var sum(Var a)
{
  double total = 0.0;
  for (double x : a.value().data())
  {
    total += x;
  }
  Shape shape = a.shape();
  return a.tape().record(Tensor::scalar(total), {a}, [shape](const Tensor &g, GradSink &sink) {
    sink.add(0, Tensor(shape, g.item()));
  });
}

Var reshape(Var a, Shape shape)
{
  Shape original = a.shape();
  return a.tape().record(a.value().reshaped(std::move(shape)), {a},
                         [original](const Tensor &g, GradSink &sink) {
                           sink.add(0, g.reshaped(original));
                         });
}

Var permute(Var a, std::span<const std::size_t> axes)
{
  std::vector<std::size_t> inverse(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i)
  {
    if (axes[i] >= axes.size())
    {
      throw DimensionError("invalid permutation axis " + std::to_string(axes[i]));
    }
    inverse[axes[i]] = i;
  }
  return a.tape().record(svdtrain::permute(a.value(), axes), {a},
                         [inverse](const Tensor &g, GradSink &sink) {
                           sink.add(0, svdtrain::permute(g, inverse));
                         });
}

Var scale_columns(Var matrix, Var v)
{
  Tensor const &m = matrix.value();
  if (m.rank() != 2 || v.value().rank() != 1 || v.value().dim(0) != m.dim(1))
  {
    throw DimensionError("scale_columns shape mismatch: " + shape_to_string(m.shape()) +
                         " vs " + shape_to_string(v.shape()));
  }
  std::size_t const rows = m.dim(0);
  std::size_t const cols = m.dim(1);
  Tensor            out  = m;
  for (std::size_t i = 0; i < rows; ++i)
  {
    for (std::size_t j = 0; j < cols; ++j)
    {
      out.at(i, j) *= v.value()[j];
    }
  }
  Tape  *tape = &matrix.tape();
  NodeId im   = matrix.id();
  NodeId iv   = v.id();
  return tape->record(std::move(out), {matrix, v},
                      [tape, im, iv, rows, cols](const Tensor &g, GradSink &sink) {
                        Tensor const &mv = tape->value(im);
                        Tensor const &vv = tape->value(iv);
                        if (sink.wants(0))
                        {
                          Tensor gm = g;
                          for (std::size_t i = 0; i < rows; ++i)
                          {
                            for (std::size_t j = 0; j < cols; ++j)
                            {
                              gm.at(i, j) *= vv[j];
                            }
                          }
                          sink.add(0, std::move(gm));
                        }
                        if (sink.wants(1))
                        {
                          Tensor gv({cols});
                          for (std::size_t i = 0; i < rows; ++i)
                          {
                            for (std::size_t j = 0; j < cols; ++j)
                            {
                              gv[j] += g.at(i, j) * mv.at(i, j);
                            }
                          }
                          sink.add(1, std::move(gv));
                        }
                      });
}

Var add_row_bias(Var x, Var bias)
{
  Tensor const &xv = x.value();
  if (xv.rank() != 2 || bias.value().rank() != 1 || bias.value().dim(0) != xv.dim(1))
  {
    throw DimensionError("add_row_bias shape mismatch: " + shape_to_string(xv.shape()) + " vs " +
                         shape_to_string(bias.shape()));
  }
  std::size_t const rows = xv.dim(0);
  std::size_t const cols = xv.dim(1);
  Tensor            out  = xv;
  for (std::size_t i = 0; i < rows; ++i)
  {
    for (std::size_t j = 0; j < cols; ++j)
    {
      out.at(i, j) += bias.value()[j];
    }
  }
  return x.tape().record(std::move(out), {x, bias},
                         [rows, cols](const Tensor &g, GradSink &sink) {
                           sink.add(0, g);
                           if (sink.wants(1))
                           {
                             Tensor gb({cols});
                             for (std::size_t i = 0; i < rows; ++i)
                             {
                               for (std::size_t j = 0; j < cols; ++j)
                               {
                                 gb[j] += g.at(i, j);
                               }
                             }
                             sink.add(1, std::move(gb));
                           }
                         });
}

Var add_channel_bias(Var x, Var bias)
{
  Tensor const &xv = x.value();
  if (xv.rank() != 4 || bias.value().rank() != 1 || bias.value().dim(0) != xv.dim(1))
  {
    throw DimensionError("add_channel_bias shape mismatch: " + shape_to_string(xv.shape()) +
                         " vs " + shape_to_string(bias.shape()));
  }
  std::size_t const batch    = xv.dim(0);
  std::size_t const channels = xv.dim(1);
  std::size_t const plane    = xv.dim(2) * xv.dim(3);
  Tensor            out      = xv;
  for (std::size_t n = 0; n < batch; ++n)
  {
    for (std::size_t c = 0; c < channels; ++c)
    {
      double *p = out.data().data() + (n * channels + c) * plane;
      double  b = bias.value()[c];
      for (std::size_t k = 0; k < plane; ++k)
      {
        p[k] += b;
      }
    }
  }
  return x.tape().record(std::move(out), {x, bias},
                         [batch, channels, plane](const Tensor &g, GradSink &sink) {
                           sink.add(0, g);
                           if (sink.wants(1))
                           {
                             Tensor gb({channels});
                             for (std::size_t n = 0; n < batch; ++n)
                             {
                               for (std::size_t c = 0; c < channels; ++c)
                               {
                                 double const *p = g.data().data() + (n * channels + c) * plane;
                                 for (std::size_t k = 0; k < plane; ++k)
                                 {
                                   gb[c] += p[k];
                                 }
                               }
                             }
                             sink.add(1, std::move(gb));
                           }
                         });
}

namespace {

struct PatchGeometry
{
  std::size_t batch, channels, height, width;
  std::size_t kh, kw;
  std::size_t out_h, out_w;
  Conv2dParams params;

  std::size_t rows() const
  {
    return channels * kh * kw;
  }
  std::size_t cols() const
  {
    return batch * out_h * out_w;
  }
};

// Visits every (patch row, patch column, source offset) triple that lands
// inside the unpadded image; padded positions contribute zero.
template <typename Fn>
void for_each_patch_entry(const PatchGeometry &geo, Fn fn)
{
  std::size_t const cols = geo.cols();
  for (std::size_t c = 0; c < geo.channels; ++c)
  {
    for (std::size_t ki = 0; ki < geo.kh; ++ki)
    {
      for (std::size_t kj = 0; kj < geo.kw; ++kj)
      {
        std::size_t const row = (c * geo.kh + ki) * geo.kw + kj;
        for (std::size_t n = 0; n < geo.batch; ++n)
        {
          std::size_t const src_plane = (n * geo.channels + c) * geo.height * geo.width;
          for (std::size_t oy = 0; oy < geo.out_h; ++oy)
          {
            long const y = static_cast<long>(oy * geo.params.stride_h + ki) -
                           static_cast<long>(geo.params.pad_h);
            if (y < 0 || y >= static_cast<long>(geo.height))
            {
              continue;
            }
            std::size_t const col_base = (n * geo.out_h + oy) * geo.out_w;
            for (std::size_t ox = 0; ox < geo.out_w; ++ox)
            {
              long const x = static_cast<long>(ox * geo.params.stride_w + kj) -
                             static_cast<long>(geo.params.pad_w);
              if (x < 0 || x >= static_cast<long>(geo.width))
              {
                continue;
              }
              fn(row * cols + col_base + ox,
                 src_plane + static_cast<std::size_t>(y) * geo.width + static_cast<std::size_t>(x));
            }
          }
        }
      }
    }
  }
}

}  // namespace

Var im2col(Var input, std::size_t kh, std::size_t kw, const Conv2dParams &params)
{
  Tensor const &in = input.value();
  if (in.rank() != 4)
  {
    throw RankError("im2col expects N x C x H x W input, got " + shape_to_string(in.shape()));
  }
  PatchGeometry geo{in.dim(0), in.dim(1), in.dim(2), in.dim(3), kh, kw, 0, 0, params};
  geo.out_h = conv_output_extent(geo.height, kh, params.stride_h, params.pad_h);
  geo.out_w = conv_output_extent(geo.width, kw, params.stride_w, params.pad_w);

  Tensor cols({geo.rows(), geo.cols()});
  auto   dst = cols.data();
  auto   src = in.data();
  for_each_patch_entry(geo, [&](std::size_t to, std::size_t from) { dst[to] = src[from]; });

  Shape in_shape = in.shape();
  return input.tape().record(std::move(cols), {input},
                             [geo, in_shape](const Tensor &g, GradSink &sink) {
                               Tensor gin(in_shape);
                               auto   dst = gin.data();
                               auto   src = g.data();
                               for_each_patch_entry(geo, [&](std::size_t from, std::size_t to) {
                                 dst[to] += src[from];
                               });
                               sink.add(0, std::move(gin));
                             });
}

Var conv2d(Var input, Var kernel, const Conv2dParams &params)
{
  Tensor const &in = input.value();
  Tensor const &k  = kernel.value();
  if (in.rank() != 4 || k.rank() != 4)
  {
    throw RankError("conv2d expects 4-D input and kernel, got " + shape_to_string(in.shape()) +
                    " and " + shape_to_string(k.shape()));
  }
  if (in.dim(1) != k.dim(1))
  {
    throw DimensionError("conv2d channel mismatch: input " + shape_to_string(in.shape()) +
                         " vs kernel " + shape_to_string(k.shape()));
  }
  std::size_t const batch   = in.dim(0);
  std::size_t const filters = k.dim(0);
  std::size_t const out_h   = conv_output_extent(in.dim(2), k.dim(2), params.stride_h, params.pad_h);
  std::size_t const out_w   = conv_output_extent(in.dim(3), k.dim(3), params.stride_w, params.pad_w);

  Var cols   = im2col(input, k.dim(2), k.dim(3), params);
  Var flat_k = reshape(kernel, {filters, k.dim(1) * k.dim(2) * k.dim(3)});
  Var out    = matmul(flat_k, cols);  // F x (N*H'*W')
  out        = reshape(out, {filters, batch, out_h, out_w});
  static constexpr std::array<std::size_t, 4> kSwapLeading{1, 0, 2, 3};
  return permute(out, kSwapLeading);
}

Var max_pool2d(Var input, std::size_t window)
{
  Tensor const &in = input.value();
  if (in.rank() != 4)
  {
    throw RankError("max_pool2d expects N x C x H x W input, got " + shape_to_string(in.shape()));
  }
  if (window == 0 || in.dim(2) < window || in.dim(3) < window)
  {
    throw GeometryError("pooling window " + std::to_string(window) + " does not fit " +
                        shape_to_string(in.shape()));
  }
  std::size_t const planes = in.dim(0) * in.dim(1);
  std::size_t const height = in.dim(2);
  std::size_t const width  = in.dim(3);
  std::size_t const out_h  = height / window;
  std::size_t const out_w  = width / window;

  Tensor                   out({in.dim(0), in.dim(1), out_h, out_w});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t p = 0; p < planes; ++p)
  {
    for (std::size_t oy = 0; oy < out_h; ++oy)
    {
      for (std::size_t ox = 0; ox < out_w; ++ox)
      {
        double      best  = -std::numeric_limits<double>::infinity();
        std::size_t where = 0;
        for (std::size_t dy = 0; dy < window; ++dy)
        {
          for (std::size_t dx = 0; dx < window; ++dx)
          {
            std::size_t const idx = (p * height + oy * window + dy) * width + ox * window + dx;
            if (in[idx] > best)
            {
              best  = in[idx];
              where = idx;
            }
          }
        }
        std::size_t const o = (p * out_h + oy) * out_w + ox;
        out[o]              = best;
        argmax[o]           = where;
      }
    }
  }
  Shape in_shape = in.shape();
  return input.tape().record(std::move(out), {input},
                             [in_shape, argmax = std::move(argmax)](const Tensor &g,
                                                                    GradSink     &sink) {
                               Tensor gin(in_shape);
                               for (std::size_t o = 0; o < argmax.size(); ++o)
                               {
                                 gin[argmax[o]] += g[o];
                               }
                               sink.add(0, std::move(gin));
                             });
}

Var flatten(Var input)
{
  Shape const &shape = input.shape();
  if (shape.empty())
  {
    throw RankError("cannot flatten a scalar");
  }
  std::size_t const batch = shape[0];
  return reshape(input, {batch, batch == 0 ? 0 : input.value().size() / batch});
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels)
{
  Tensor const &z = logits.value();
  if (z.rank() != 2 || z.dim(0) != labels.size() || z.dim(0) == 0)
  {
    throw DimensionError("softmax_cross_entropy: logits " + shape_to_string(z.shape()) +
                         " vs " + std::to_string(labels.size()) + " labels");
  }
  std::size_t const batch   = z.dim(0);
  std::size_t const classes = z.dim(1);
  Tensor            probs({batch, classes});
  double            loss = 0.0;
  for (std::size_t i = 0; i < batch; ++i)
  {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
    {
      throw DimensionError("label " + std::to_string(labels[i]) + " outside [0, " +
                           std::to_string(classes) + ")");
    }
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < classes; ++j)
    {
      peak = std::max(peak, z.at(i, j));
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < classes; ++j)
    {
      probs.at(i, j) = std::exp(z.at(i, j) - peak);
      denom += probs.at(i, j);
    }
    for (std::size_t j = 0; j < classes; ++j)
    {
      probs.at(i, j) /= denom;
    }
    loss += std::log(denom) + peak - z.at(i, static_cast<std::size_t>(labels[i]));
  }
  loss /= static_cast<double>(batch);

  std::vector<int> label_copy(labels.begin(), labels.end());
  return logits.tape().record(
      Tensor::scalar(loss), {logits},
      [probs = std::move(probs), label_copy = std::move(label_copy), batch](const Tensor &g,
                                                                            GradSink     &sink) {
        Tensor       grad  = probs;
        double const coeff = g.item() / static_cast<double>(batch);
        for (std::size_t i = 0; i < batch; ++i)
        {
          grad.at(i, static_cast<std::size_t>(label_copy[i])) -= 1.0;
        }
        for (double &x : grad.data())
        {
          x *= coeff;
        }
        sink.add(0, std::move(grad));
      });
}

}  // namespace ad

Tensor conv2d(const Tensor &input, const Tensor &kernel, const Conv2dParams &params)
{
  Tape tape;
  return ad::conv2d(tape.constant(input), tape.constant(kernel), params).value();
}

Tensor conv2d(const Tensor &input, const Tensor &kernel, std::size_t stride, std::size_t padding)
{
  return conv2d(input, kernel, Conv2dParams::uniform(stride, padding));
}

}  // namespace svdtrain

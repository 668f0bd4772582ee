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

#include "support.hpp"

#include "svdtrain/compression.hpp"
#include "svdtrain/error.hpp"
#include "svdtrain/linalg.hpp"
#include "svdtrain/model.hpp"
#include "svdtrain/ops.hpp"
#include "svdtrain/svd_layer.hpp"

#include <doctest.h>

#include <cmath>

using namespace svdtrain;
using namespace testing;

namespace {

Tensor one_hot_kernel(std::size_t a, std::size_t b, std::size_t c, std::size_t d)
{
  Tensor k = Tensor::zeros({2, 2, 2, 2});
  k.at(a, b, c, d) = 1.0;
  return k;
}

std::pair<std::size_t, std::size_t> nonzero_at(const Tensor &m)
{
  for (std::size_t i = 0; i < m.dim(0); ++i)
    for (std::size_t j = 0; j < m.dim(1); ++j)
      if (m.at(i, j) != 0.0)
        return {i, j};
  return {99, 99};
}

}  // namespace

TEST_CASE("channel-wise reshape index map")
{
  auto const m = reshape_channelwise(one_hot_kernel(1, 0, 0, 0));
  CHECK(m.shape() == Shape{2, 8});
  CHECK(nonzero_at(m) == std::pair<std::size_t, std::size_t>{1, 0});
  CHECK(nonzero_at(reshape_channelwise(one_hot_kernel(0, 1, 1, 1))) ==
        std::pair<std::size_t, std::size_t>{0, 7});
}

TEST_CASE("spatial-wise reshape index map")
{
  auto const m = reshape_spatialwise(one_hot_kernel(1, 0, 1, 0));
  CHECK(m.shape() == Shape{4, 4});
  CHECK(nonzero_at(m) == std::pair<std::size_t, std::size_t>{3, 0});
  CHECK(nonzero_at(reshape_spatialwise(one_hot_kernel(0, 1, 0, 1))) ==
        std::pair<std::size_t, std::size_t>{0, 3});
}

TEST_CASE("reshapes are bijections")
{
  Rng rng(1);
  for (ConvGeometry g : {ConvGeometry{3, 2, 3, 1}, ConvGeometry{4, 5, 2, 3}, ConvGeometry{1, 1, 1, 1}})
  {
    Tensor const k = random_tensor(rng, g.kernel_shape());
    CHECK(unreshape_channelwise(reshape_channelwise(k), g) == k);
    CHECK(unreshape_spatialwise(reshape_spatialwise(k), g) == k);
    // every entry lands somewhere distinct: sums of squares agree
    CHECK(frobenius_norm(reshape_spatialwise(k)) == doctest::Approx(frobenius_norm(k)));
  }
  CHECK_THROWS_AS(unreshape_channelwise(Tensor::zeros({3, 5}), ConvGeometry{3, 2, 2, 2}),
                  DimensionError);
}

TEST_CASE("init_from_dense")
{
  SvdLayer const fc = init_from_dense(Tensor::matrix({{3, 0}, {0, 2}}),
                                      DecompositionScheme::FullyConnected, FcGeometry{2, 2});
  CHECK(fc.s == Tensor::vector({3, 2}));

  Rng                rng(2);
  ConvGeometry const g{8, 4, 3, 3, 1, 1};
  Tensor const       k = random_tensor(rng, g.kernel_shape());

  SvdLayer const ch = init_from_dense(k, DecompositionScheme::ChannelWise, g);
  CHECK(ch.rank() == 8);
  CHECK(frobenius_norm(sub(compose_effective_weight(ch), k)) < 1e-8);

  SvdLayer const sp = init_from_dense(k, DecompositionScheme::SpatialWise, g);
  CHECK(sp.rank() == 12);
  CHECK(frobenius_norm(sub(compose_effective_weight(sp), k)) < 1e-8);

  CHECK_THROWS_AS(init_from_dense(k, DecompositionScheme::FullyConnected, g), Error);
}

TEST_CASE("compose_effective_weight")
{
  SvdLayer scalar{DecompositionScheme::FullyConnected, FcGeometry{1, 1}, Tensor::identity(1),
                  Tensor::vector({2}), Tensor::identity(1), std::nullopt};
  CHECK(compose_effective_weight(scalar) == Tensor::matrix({{2}}));

  // truncation matches the Eckart-Young optimum
  Rng          rng(3);
  Tensor const w     = random_tensor(rng, {6, 4});
  SvdLayer     layer = init_from_dense(w, DecompositionScheme::FullyConnected, FcGeometry{6, 4});
  layer.s[3]         = 0.0;
  double const err   = frobenius_norm(sub(compose_effective_weight(layer), w));
  auto const   sv    = gram_singular_values(w);
  CHECK(err == doctest::Approx(sv[3]).epsilon(1e-9));
}

TEST_CASE("decomposed forward matches dense forward at full rank")
{
  Rng rng(4);
  for (auto scheme : {DecompositionScheme::ChannelWise, DecompositionScheme::SpatialWise})
  {
    for (ConvGeometry g : {ConvGeometry{3, 2, 3, 3, 1, 1}, ConvGeometry{4, 3, 3, 1, 2, 1},
                           ConvGeometry{2, 3, 1, 3, 1, 0}, ConvGeometry{5, 2, 3, 3, 2, 0}})
    {
      CAPTURE(to_string(scheme));
      CAPTURE(g.n);
      Tensor const   k     = random_tensor(rng, g.kernel_shape());
      Tensor const   bias  = random_tensor(rng, {g.n});
      SvdLayer const layer = init_from_dense(k, scheme, g, bias);
      Tensor const   x     = random_tensor(rng, {2, g.c, 7, 7});
      Tensor const   dense = dense_forward(DenseLayer{g, k, bias}, x);
      CHECK(max_abs_diff(forward(layer, x), dense) < 1e-9);
    }
  }
  Tensor const   w  = random_tensor(rng, {5, 7});
  SvdLayer const fc = init_from_dense(w, DecompositionScheme::FullyConnected, FcGeometry{5, 7});
  Tensor const   x  = random_tensor(rng, {3, 7});
  CHECK(max_abs_diff(forward(fc, x), matmul(x, transpose(w))) < 1e-12);
}

TEST_CASE("forward with zero or negated singular values")
{
  Rng                rng(5);
  ConvGeometry const g{3, 2, 3, 3, 1, 1};
  Tensor const       bias = random_tensor(rng, {3});
  SvdLayer layer = init_from_dense(random_tensor(rng, g.kernel_shape()),
                                   DecompositionScheme::ChannelWise, g, bias);
  Tensor const x = random_tensor(rng, {2, 2, 5, 5});

  SvdLayer negated = layer;
  negated.s[1]     = -negated.s[1];
  CHECK(max_abs_diff(forward(negated, x), forward(layer, x)) == 0.0);

  SvdLayer zero = layer;
  zero.s        = Tensor::zeros({layer.rank()});
  Tensor const out = forward(zero, x);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t f = 0; f < 3; ++f)
      for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j)
          CHECK(out.at(n, f, i, j) == bias[f]);

  zero.bias.reset();
  CHECK(forward(zero, x) == Tensor::zeros({2, 3, 5, 5}));
}

TEST_CASE("layer validation")
{
  Rng      rng(6);
  SvdLayer layer = init_from_dense(random_tensor(rng, {4, 3}), DecompositionScheme::FullyConnected,
                                   FcGeometry{4, 3});
  CHECK_NOTHROW(layer.validate());
  SvdLayer bad = layer;
  bad.s        = Tensor::zeros({2});
  CHECK_THROWS_AS(bad.validate(), DimensionError);
  CHECK_THROWS_AS(forward(layer, Tensor::zeros({2, 5})), DimensionError);
  CHECK_THROWS_AS((ConvGeometry{0, 1, 1, 1}.validate()), GeometryError);
  CHECK(parse_scheme("spatial") == DecompositionScheme::SpatialWise);
  CHECK_THROWS_AS(parse_scheme("diagonal"), ParameterError);
}

TEST_CASE("reference models decompose exactly")
{
  Rng rng(7);
  for (std::string name : {"mlp-s", "cnn-s"})
  {
    for (auto scheme : {DecompositionScheme::ChannelWise, DecompositionScheme::SpatialWise})
    {
      Model const dense = build_reference_model(name, {1, 8, 8}, 4, 11);
      Model const svd   = decompose_model(dense, scheme);
      CHECK(svd.svd_layer_count() == 3);
      Tensor const x = random_tensor(rng, {3, 1, 8, 8});
      CHECK(max_abs_diff(predict_logits(svd, x), predict_logits(dense, x)) < 1e-9);
      CHECK(max_abs_diff(predict_logits(compose_model(svd), x), predict_logits(dense, x)) < 1e-9);
    }
  }
  CHECK(build_reference_model("cnn-s", {1, 8, 8}, 4, 11).nodes.size() == 7);
  CHECK_THROWS_AS(build_reference_model("resnet", {1, 8, 8}, 4, 1), ParameterError);
}

TEST_CASE("parameter names follow node order")
{
  Model const m     = decompose_model(build_reference_model("cnn-s", {1, 4, 4}, 3, 1),
                                      DecompositionScheme::ChannelWise);
  auto const  refs  = parameter_refs(m);
  CHECK(refs.front().first == "layer0.u");
  Tape       tape;
  ModelVars const vars  = bind_parameters(tape, m);
  auto const      names = tape.parameter_names();
  CHECK(names.size() == refs.size());
  (void)vars;
}

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

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace svdtrain;
using namespace testing;

namespace {

std::vector<std::size_t> complement(const PruneDecision &d, std::size_t r)
{
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < r; ++i)
  {
    if (std::find(d.keep_indices.begin(), d.keep_indices.end(), i) == d.keep_indices.end())
    {
      out.push_back(i);
    }
  }
  return out;
}

SvdLayer conv_layer(std::size_t n, std::size_t c, std::size_t w, std::size_t h,
                    DecompositionScheme scheme, std::size_t r, std::size_t stride = 1,
                    std::size_t padding = 1)
{
  ConvGeometry const g{n, c, w, h, stride, padding};
  MatrixShape const  m = reshaped_shape(scheme, g);
  return SvdLayer{scheme, g, Tensor::zeros({m.rows, r}), Tensor::ones({r}), Tensor::zeros({m.cols, r}),
                  std::nullopt};
}

}  // namespace

TEST_CASE("select_prune_set examples")
{
  PruneDecision const a = select_prune_set(Tensor::vector({2, 1}), 0.2);
  CHECK(a.keep_indices == std::vector<std::size_t>{0});
  CHECK(a.rank_after == 1);
  CHECK(a.pruned_energy_fraction == doctest::Approx(0.2));

  PruneDecision const b = select_prune_set(Tensor::vector({1, 10, 0.1}), 0.02);
  CHECK(b.keep_indices == std::vector<std::size_t>{1});

  PruneDecision const c = select_prune_set(Tensor::vector({0, 3, 0, -1}), 0.0);
  CHECK(c.keep_indices == std::vector<std::size_t>{1, 3});
  CHECK(c.pruned_energy_fraction == 0.0);
}

TEST_CASE("select_prune_set keeps order and the floor")
{
  PruneDecision const all = select_prune_set(Tensor::vector({0.5, -3, 2}), 1.0);
  CHECK(all.keep_indices == std::vector<std::size_t>{1});

  PruneDecision const z = select_prune_set(Tensor::zeros({3}), 0.5);
  CHECK(z.rank_after == 1);

  PruneDecision const none = select_prune_set(Tensor::vector({0.2, 5, -1, 3}), 0.0);
  CHECK(none.keep_indices == std::vector<std::size_t>{1, 3, 2, 0});

  CHECK_THROWS_AS(select_prune_set(Tensor::vector({1}), 1.5), ParameterError);
  CHECK_THROWS_AS(select_prune_set(Tensor::vector({1}), -0.1), ParameterError);
  CHECK_THROWS_AS(select_prune_set(Tensor::zeros({2, 2}), 0.1), DimensionError);
  CHECK_THROWS_AS(select_prune_set(Tensor::zeros({0}), 0.1), DimensionError);
}

TEST_CASE("select_prune_set matches subset enumeration")
{
  Rng rng(1);
  for (int trial = 0; trial < 150; ++trial)
  {
    std::size_t const   r = 1 + rng.below(10);
    std::vector<double> s(r);
    for (auto &x : s)
    {
      x = rng.normal();
    }
    if (trial % 3 == 0 && r > 2)
    {
      s[1] = s[0];  // exact tie
      s[2] = -s[0] * (1.0 + 1e-15);
    }
    double const        e = trial % 5 == 0 ? rng.uniform(0.0, 1.0) : rng.uniform(0.0, 0.2);
    PruneDecision const d = select_prune_set(Tensor({r}, s), e);
    auto const          pruned = complement(d, r);
    CAPTURE(trial);
    CHECK(within_budget(s, pruned, e));
    CHECK(pruned.size() == std::min(brute_force_max_prune(s, e), r - 1));
  }
}

TEST_CASE("prune_layer")
{
  Rng            rng(2);
  Tensor const   w     = random_tensor(rng, {5, 4});
  SvdLayer const layer = init_from_dense(w, DecompositionScheme::FullyConnected, FcGeometry{5, 4});
  Tensor const   x     = random_tensor(rng, {3, 4});

  PruneDecision keep_all = select_prune_set(layer.s, 0.0);
  CHECK(forward(prune_layer(layer, keep_all), x) == forward(layer, x));

  CHECK_THROWS_AS(prune_layer(layer, PruneDecision{}), InvariantError);
  CHECK_THROWS_AS(prune_layer(layer, PruneDecision{{7}, 0.0, 1}), InvariantError);
}

TEST_CASE("pruning tiny singular values is harmless only with orthonormal factors")
{
  Rng              rng(3);
  SvdFactors const q = svd(random_tensor(rng, {6, 2}));
  SvdFactors const p = svd(random_tensor(rng, {5, 2}));
  SvdLayer layer{DecompositionScheme::FullyConnected, FcGeometry{6, 5}, q.u, Tensor::vector({5, 1e-9}),
                 p.u, std::nullopt};
  Tensor const        x = random_tensor(rng, {8, 5});
  PruneDecision const d = select_prune_set(layer.s, 1e-6);
  REQUIRE(d.rank_after == 1);
  CHECK(max_abs_diff(forward(prune_layer(layer, d), x), forward(layer, x)) <= 1e-6);

  // second column no longer unit norm
  SvdLayer skewed = layer;
  for (std::size_t i = 0; i < 6; ++i)
  {
    skewed.u.at(i, 1) *= 1e5;
  }
  for (std::size_t i = 0; i < 5; ++i)
  {
    skewed.v.at(i, 1) *= 1e5;
  }
  CHECK(max_abs_diff(forward(prune_layer(skewed, d), x), forward(skewed, x)) > 1e-3);
}

TEST_CASE("flops formulas")
{
  SpatialSize const in{8, 8};
  std::uint64_t const dense = dense_flops_count(ConvGeometry{16, 8, 3, 3, 1, 1}, in);
  CHECK(dense == 16ull * 8 * 9 * 64);

  auto const ch = conv_layer(16, 8, 3, 3, DecompositionScheme::ChannelWise, 4);
  CHECK(flops_count(ch, in) == 4ull * 72 * 64 + 16ull * 4 * 64);
  CHECK(static_cast<double>(dense) / static_cast<double>(flops_count(ch, in)) ==
        doctest::Approx(3.2727).epsilon(1e-4));

  auto const sp = conv_layer(16, 8, 3, 3, DecompositionScheme::SpatialWise, 4);
  CHECK(static_cast<double>(dense) / static_cast<double>(flops_count(sp, in)) == 4.0);

  auto const full = conv_layer(16, 8, 3, 3, DecompositionScheme::ChannelWise, 16);
  CHECK(static_cast<double>(flops_count(full, in)) / static_cast<double>(dense) ==
        doctest::Approx(1.2222).epsilon(1e-4));

  // strided, padded spatial-wise: r*c*h*H*W' + n*r*w*H'*W'
  auto const strided = conv_layer(6, 3, 3, 3, DecompositionScheme::SpatialWise, 2, 2, 1);
  std::uint64_t const out = 5;  // (9 + 2 - 3) / 2 + 1
  CHECK(flops_count(strided, SpatialSize{9, 9}) == 2ull * 3 * 3 * 9 * out + 6ull * 2 * 3 * out * out);

  SvdLayer const fc{DecompositionScheme::FullyConnected, FcGeometry{10, 20}, Tensor::zeros({10, 3}),
                    Tensor::ones({3}), Tensor::zeros({20, 3}), std::nullopt};
  CHECK(flops_count(fc, in) == 90);
  CHECK(dense_flops_count(FcGeometry{10, 20}, in) == 200);
  CHECK(params_count(fc) == 93);
  CHECK_THROWS_AS(flops_count(conv_layer(4, 2, 3, 3, DecompositionScheme::ChannelWise, 2, 2, 0),
                              SpatialSize{8, 8}),
                  GeometryError);
}

TEST_CASE("prune_model accounting")
{
  Model const model = decompose_model(build_reference_model("cnn-s", {1, 8, 8}, 5, 3),
                                      DecompositionScheme::ChannelWise);
  Rng          rng(4);
  Tensor const x = random_tensor(rng, {2, 1, 8, 8});

  auto const [same, r0] = prune_model(model, 0.0);
  CHECK(r0.speedup == 1.0);
  CHECK(max_abs_diff(predict_logits(same, x), predict_logits(model, x)) < 1e-12);

  auto const [floor, r1] = prune_model(model, 1.0);
  for (std::size_t i : floor.svd_layer_indices())
  {
    CHECK(std::get<SvdLayer>(floor.nodes[i]).rank() == 1);
  }

  auto const [pruned, report] = prune_model(model, 0.05);
  auto const          shapes = model.node_input_shapes();
  std::uint64_t       total  = 0;
  std::uint64_t       dense  = 0;
  for (std::size_t i = 0; i < pruned.nodes.size(); ++i)
  {
    SpatialSize const in = shapes[i].size() == 3 ? SpatialSize{shapes[i][1], shapes[i][2]} : SpatialSize{};
    if (auto const *l = std::get_if<SvdLayer>(&pruned.nodes[i]))
    {
      total += flops_count(*l, in);
      dense += dense_flops_count(l->geometry, in);
    }
  }
  CHECK(report.total_flops_after == total);
  CHECK(report.total_flops_dense == dense);
  CHECK(report.speedup == doctest::Approx(static_cast<double>(report.total_flops_before) /
                                          static_cast<double>(report.total_flops_after)));
  CHECK(report.layers.size() == 3);
  for (auto const &rec : report.layers)
  {
    CHECK(rec.flops_after <= rec.flops_before);
    CHECK(rec.pruned_energy_fraction <= 0.05);
  }
  std::string const text = report.to_text();
  CHECK(text.find("layer=0 scheme=channel") == 0);
  CHECK(text.find("total energy_threshold=0.05") != std::string::npos);
}

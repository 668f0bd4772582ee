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

#include "svdtrain/ops.hpp"
#include "svdtrain/regularizers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace testing {

Tensor random_tensor(Rng &rng, Shape shape, double stddev)
{
  return rng.normal_tensor(std::move(shape), stddev);
}

Tensor away_from_zero(Rng &rng, Shape shape, double lo, double hi)
{
  Tensor t(std::move(shape));
  for (double &x : t.data())
  {
    double const mag = rng.uniform(lo, hi);
    x                = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

std::vector<double> gram_singular_values(const Tensor &a)
{
  std::size_t const m = a.dim(0);
  std::size_t const n = a.dim(1);
  Eigen::MatrixXd   e(m, n);
  for (std::size_t i = 0; i < m; ++i)
  {
    for (std::size_t j = 0; j < n; ++j)
    {
      e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a.at(i, j);
    }
  }
  Eigen::MatrixXd const gram = m >= n ? Eigen::MatrixXd(e.transpose() * e)
                                      : Eigen::MatrixXd(e * e.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i)
  {
    out.push_back(std::sqrt(std::max(0.0, solver.eigenvalues()(i))));
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

bool within_budget(const std::vector<double> &s, const std::vector<std::size_t> &pruned, double e)
{
  long double total = 0.0L;
  for (double x : s)
  {
    total += static_cast<long double>(x) * x;
  }
  long double removed = 0.0L;
  for (std::size_t i : pruned)
  {
    removed += static_cast<long double>(s[i]) * s[i];
  }
  return removed <= static_cast<long double>(e) * total;
}

std::size_t brute_force_max_prune(const std::vector<double> &s, double e)
{
  std::size_t const r    = s.size();
  std::size_t       best = 0;
  for (std::uint32_t mask = 0; mask < (1u << r); ++mask)
  {
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < r; ++i)
    {
      if (mask & (1u << i))
      {
        subset.push_back(i);
      }
    }
    if (subset.size() > best && within_budget(s, subset, e))
    {
      best = subset.size();
    }
  }
  return best;
}

namespace {

// sum(f * weights): a scalar with a non-trivial gradient everywhere.
Var weigh(Var x, const Tensor &weights)
{
  Tape &tape = x.tape();
  return ad::sum(ad::mul(x, tape.constant(weights)));
}

ScalarFn weighted(std::function<Var(Tape &, Var)> op, Tensor weights)
{
  return [op = std::move(op), weights = std::move(weights)](Tape &tape, Var p) {
    return weigh(op(tape, p), weights);
  };
}

}  // namespace

std::vector<GradCase> gradient_cases(std::uint64_t seed)
{
  Rng                   rng(seed);
  std::vector<GradCase> cases;
  auto add = [&](std::string name, ScalarFn fn, Tensor point) {
    cases.push_back(GradCase{std::move(name), std::move(fn), std::move(point)});
  };
  auto r = [&](Shape shape) { return random_tensor(rng, std::move(shape)); };

  {
    Tensor b = r({4, 2});
    Tensor w = r({3, 2});
    add("matmul/lhs", weighted([b](Tape &t, Var p) { return ad::matmul(p, t.constant(b)); }, w),
        r({3, 4}));
    Tensor a = r({3, 4});
    add("matmul/rhs", weighted([a](Tape &t, Var p) { return ad::matmul(t.constant(a), p); }, w),
        r({4, 2}));
  }
  add("transpose", weighted([](Tape &, Var p) { return ad::transpose(p); }, r({4, 3})), r({3, 4}));
  {
    Tensor other = r({2, 3});
    Tensor w     = r({2, 3});
    add("add", weighted([other](Tape &t, Var p) { return ad::add(p, t.constant(other)); }, w),
        r({2, 3}));
    add("sub/rhs", weighted([other](Tape &t, Var p) { return ad::sub(t.constant(other), p); }, w),
        r({2, 3}));
    add("mul", weighted([other](Tape &t, Var p) { return ad::mul(t.constant(other), p); }, w),
        r({2, 3}));
    Tensor denom = away_from_zero(rng, {2, 3}, 0.5, 2.0);
    add("div/numerator",
        weighted([denom](Tape &t, Var p) { return ad::div(p, t.constant(denom)); }, w), r({2, 3}));
    add("div/denominator",
        weighted([other](Tape &t, Var p) { return ad::div(t.constant(other), p); }, w),
        away_from_zero(rng, {2, 3}, 0.5, 2.0));
  }
  add("scale", weighted([](Tape &, Var p) { return ad::scale(p, -2.5); }, r({5})), r({5}));
  add("square", weighted([](Tape &, Var p) { return ad::square(p); }, r({5})), r({5}));
  add("abs", weighted([](Tape &, Var p) { return ad::abs(p); }, r({6})), away_from_zero(rng, {6}));
  add("sqrt", weighted([](Tape &, Var p) { return ad::sqrt(p); }, r({6})),
      rng.uniform_tensor({6}, 0.2, 2.0));
  add("relu", weighted([](Tape &, Var p) { return ad::relu(p); }, r({6})), away_from_zero(rng, {6}));
  add("sum", [](Tape &, Var p) { return ad::sum(ad::square(p)); }, r({2, 3}));
  add("reshape", weighted([](Tape &, Var p) { return ad::reshape(p, {3, 4}); }, r({3, 4})),
      r({2, 6}));
  add("permute",
      weighted(
          [](Tape &, Var p) {
            std::vector<std::size_t> const axes{2, 0, 3, 1};
            return ad::permute(p, axes);
          },
          r({4, 2, 5, 3})),
      r({2, 3, 4, 5}));
  {
    Tensor v = r({3});
    Tensor m = r({4, 3});
    Tensor w = r({4, 3});
    add("scale_columns/matrix",
        weighted([v](Tape &t, Var p) { return ad::scale_columns(p, t.constant(v)); }, w), r({4, 3}));
    add("scale_columns/vector",
        weighted([m](Tape &t, Var p) { return ad::scale_columns(t.constant(m), p); }, w), r({3}));
  }
  {
    Tensor x = r({5, 3});
    Tensor b = r({3});
    Tensor w = r({5, 3});
    add("add_row_bias/input",
        weighted([b](Tape &t, Var p) { return ad::add_row_bias(p, t.constant(b)); }, w), r({5, 3}));
    add("add_row_bias/bias",
        weighted([x](Tape &t, Var p) { return ad::add_row_bias(t.constant(x), p); }, w), r({3}));
  }
  {
    Tensor x = r({2, 3, 4, 4});
    Tensor b = r({3});
    Tensor w = r({2, 3, 4, 4});
    add("add_channel_bias/input",
        weighted([b](Tape &t, Var p) { return ad::add_channel_bias(p, t.constant(b)); }, w),
        r({2, 3, 4, 4}));
    add("add_channel_bias/bias",
        weighted([x](Tape &t, Var p) { return ad::add_channel_bias(t.constant(x), p); }, w), r({3}));
  }
  {
    // 2 x 2 x 5 x 5 input, 3 x 3 window, stride 2, pad 1 -> 3 x 3 output
    Conv2dParams const params = Conv2dParams::uniform(2, 1);
    add("im2col",
        weighted([params](Tape &, Var p) { return ad::im2col(p, 3, 3, params); }, r({18, 18})),
        r({2, 2, 5, 5}));
    Tensor kernel = r({4, 2, 3, 3});
    Tensor input  = r({2, 2, 5, 5});
    Tensor w      = r({2, 4, 3, 3});
    add("conv2d/input",
        weighted([kernel, params](Tape &t, Var p) {
          return ad::conv2d(p, t.constant(kernel), params);
        }, w),
        r({2, 2, 5, 5}));
    add("conv2d/kernel",
        weighted([input, params](Tape &t, Var p) {
          return ad::conv2d(t.constant(input), p, params);
        }, w),
        r({4, 2, 3, 3}));
    // asymmetric stride / padding as used by the spatial-wise sub-layers
    Conv2dParams const rows{1, 2, 0, 1};
    Tensor             k13 = r({3, 2, 1, 3});
    add("conv2d/asymmetric",
        weighted([k13, rows](Tape &t, Var p) { return ad::conv2d(p, t.constant(k13), rows); },
                 r({2, 3, 5, 3})),
        r({2, 2, 5, 5}));
  }
  add("max_pool2d", weighted([](Tape &, Var p) { return ad::max_pool2d(p, 2); }, r({2, 3, 2, 2})),
      r({2, 3, 4, 4}));
  add("flatten", weighted([](Tape &, Var p) { return ad::flatten(p); }, r({2, 12})),
      r({2, 3, 2, 2}));
  {
    std::vector<int> const labels{0, 2, 1, 2};
    add("softmax_cross_entropy",
        [labels](Tape &, Var p) { return ad::softmax_cross_entropy(p, labels); }, r({4, 3}));
  }

  // regularizers
  {
    Tensor v = r({5, 3});
    Tensor u = r({4, 3});
    add("orthogonality_loss/u",
        [v](Tape &t, Var p) { return orthogonality_loss(p, t.constant(v)); }, r({4, 3}));
    add("orthogonality_loss/v",
        [u](Tape &t, Var p) { return orthogonality_loss(t.constant(u), p); }, r({5, 3}));
  }
  add("l1_loss", [](Tape &, Var p) { return l1_loss(p); }, away_from_zero(rng, {6}));
  add("hoyer_loss", [](Tape &, Var p) { return hoyer_loss(p); }, away_from_zero(rng, {6}));
  {
    Tensor u = r({4, 3});
    Tensor v = r({5, 3});
    Tensor s = away_from_zero(rng, {3});
    Tensor x = r({2, 5});
    Tensor w = r({2, 4});
    for (auto kind : {SparsityKind::L1, SparsityKind::Hoyer})
    {
      RegularizerConfig const cfg{0.7, 0.3, kind};
      std::string const       tag = std::string(to_string(kind));
      // task: weighted output of an FC layer built from the same factors
      auto objective = [=](Tape &t, Var pu, Var ps, Var pv) {
        Var const root  = ad::sqrt(ad::abs(ps));
        Var const right = ad::scale_columns(pv, root);
        Var const left  = ad::scale_columns(pu, root);
        Var const out   = ad::matmul(ad::matmul(t.constant(x), right), ad::transpose(left));
        Var const task  = weigh(out, w);
        FactorVars const f[] = {{pu, ps, pv}};
        return total_objective(task, f, cfg);
      };
      add("total_objective/" + tag + "/u",
          [=](Tape &t, Var p) { return objective(t, p, t.constant(s), t.constant(v)); }, u);
      add("total_objective/" + tag + "/s",
          [=](Tape &t, Var p) { return objective(t, t.constant(u), p, t.constant(v)); }, s);
      add("total_objective/" + tag + "/v",
          [=](Tape &t, Var p) { return objective(t, t.constant(u), t.constant(s), p); }, v);
    }
  }

  // decomposed layer forwards, gradient w.r.t. each factor
  struct LayerSpec
  {
    std::string         name;
    DecompositionScheme scheme;
    LayerGeometry       geometry;
    Shape               input;
  };
  std::vector<LayerSpec> const layers{
      {"fc", DecompositionScheme::FullyConnected, FcGeometry{4, 5}, {3, 5}},
      {"channel", DecompositionScheme::ChannelWise, ConvGeometry{3, 2, 3, 3, 1, 1}, {2, 2, 4, 4}},
      {"spatial", DecompositionScheme::SpatialWise, ConvGeometry{3, 2, 3, 3, 2, 1}, {2, 2, 5, 5}},
  };
  for (auto const &spec : layers)
  {
    SvdLayer base = init_from_dense(r(weight_shape(spec.geometry)), spec.scheme, spec.geometry,
                                    r({output_channels(spec.geometry)}));
    Tensor const input = r(spec.input);
    Tensor const probe = r(forward(base, input).shape());
    for (std::string const which : {"u", "s", "v", "bias"})
    {
      Tensor point = which == "u" ? base.u : which == "s" ? base.s : which == "v" ? base.v : *base.bias;
      add("layer_forward/" + spec.name + "/" + which,
          [=](Tape &t, Var p) {
            SvdLayerVars vars = bind_constants(t, base);
            (which == "u" ? vars.u : which == "s" ? vars.s : which == "v" ? vars.v : *vars.bias) = p;
            return weigh(forward(base, vars, t.constant(input)), probe);
          },
          point);
    }
  }
  return cases;
}

std::filesystem::path scratch_dir(const std::string &tag)
{
  static std::atomic<int> counter{0};
  auto const dir = std::filesystem::temp_directory_path() /
                   ("svdtrain-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
                    std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_text(const std::filesystem::path &path)
{
  std::ifstream      in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace testing

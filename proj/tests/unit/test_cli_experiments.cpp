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

#include "svdtrain/checkpoint.hpp"
#include "svdtrain/cli.hpp"
#include "svdtrain/config.hpp"
#include "svdtrain/error.hpp"
#include "svdtrain/metrics.hpp"
#include "svdtrain/pipeline.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace svdtrain;
using namespace testing;
namespace fs = std::filesystem;

namespace {

Model pruned_model()
{
  Model const m = decompose_model(build_reference_model("cnn-s", {1, 6, 6}, 4, 21),
                                  DecompositionScheme::SpatialWise);
  return prune_model(m, 0.2).first;
}

void expect_same_model(const Model &a, const Model &b)
{
  CHECK(a.name == b.name);
  CHECK(a.input_shape == b.input_shape);
  CHECK(a.class_count == b.class_count);
  auto const pa = parameter_refs(a);
  auto const pb = parameter_refs(b);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
  {
    CHECK(pa[i].first == pb[i].first);
    CHECK(pa[i].second->shape() == pb[i].second->shape());
    CHECK(std::memcmp(pa[i].second->data().data(), pb[i].second->data().data(),
                      pa[i].second->size() * sizeof(double)) == 0);
  }
}

nlohmann::json read_json(const fs::path &p)
{
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

void write_json(const fs::path &p, const nlohmann::json &j)
{
  std::ofstream(p) << j.dump(2);
}

struct CliRun
{
  int         code = 0;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args)
{
  args.insert(args.begin(), "svdtrain");
  std::vector<const char *> argv;
  for (auto const &a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  int const code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path small_config_file(const fs::path &dir)
{
  nlohmann::json const j = {
      {"model", "mlp-s"},
      {"dataset", {{"kind", "blobs"}, {"classes", 3}, {"class_count", 3}, {"per_class", 15},
                   {"shape", {1, 4, 4}}, {"center_scale", 1.5}}},
      {"train", {{"epochs", 2}, {"lr", 0.01}}},
      {"finetune", {{"epochs", 1}, {"lr", 0.001}}},
      {"batch_size", 10},
      {"out", "out"},
  };
  write_json(dir / "cfg.json", j);
  return dir / "cfg.json";
}

}  // namespace

TEST_CASE("checkpoint round trip is bit exact")
{
  fs::path const dir = scratch_dir("ckpt");
  Model const    m   = pruned_model();
  save_checkpoint(m, dir / "m.json");
  CHECK(fs::exists(dir / "m.json.bin"));
  Model const back = load_checkpoint(dir / "m.json");
  expect_same_model(m, back);

  Model const dense = build_reference_model("mlp-s", {3}, 2, 4);
  save_checkpoint(dense, dir / "d.json");
  expect_same_model(dense, load_checkpoint(dir / "d.json"));
}

TEST_CASE("damaged checkpoints are rejected")
{
  fs::path const dir = scratch_dir("ckpt_bad");
  save_checkpoint(pruned_model(), dir / "m.json");
  auto const blob = dir / "m.json.bin";
  auto const size = fs::file_size(blob);

  SUBCASE("blob truncated by one value")
  {
    fs::resize_file(blob, size - 8);
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), BlobLengthError);
  }
  SUBCASE("future format version")
  {
    auto j              = read_json(dir / "m.json");
    j["format_version"] = kCheckpointFormatVersion + 1;
    write_json(dir / "m.json", j);
    std::string msg;
    try
    {
      load_checkpoint(dir / "m.json");
    }
    catch (const VersionError &e)
    {
      msg = e.what();
    }
    CHECK(msg.find(std::to_string(kCheckpointFormatVersion)) != std::string::npos);
    CHECK(msg.find(std::to_string(kCheckpointFormatVersion + 1)) != std::string::npos);
  }
  SUBCASE("manifest is not json")
  {
    std::ofstream(dir / "m.json") << "{\"format_version\": 1, nodes";
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), ManifestError);
  }
  SUBCASE("misaligned offset")
  {
    auto j = read_json(dir / "m.json");
    j["nodes"][0]["tensors"]["s"]["offset"] = j["nodes"][0]["tensors"]["s"]["offset"].get<int>() + 4;
    write_json(dir / "m.json", j);
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), ManifestError);
  }
  SUBCASE("rank disagrees with tensors")
  {
    auto j               = read_json(dir / "m.json");
    j["nodes"][0]["rank"] = 99;
    write_json(dir / "m.json", j);
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), ManifestError);
  }
  SUBCASE("missing key")
  {
    auto j = read_json(dir / "m.json");
    j.erase("model");
    write_json(dir / "m.json", j);
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), ManifestError);
  }
  SUBCASE("missing blob")
  {
    fs::remove(blob);
    CHECK_THROWS_AS(load_checkpoint(dir / "m.json"), Error);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "nothing.json"), IoError);
}

TEST_CASE("metrics log matches the golden file")
{
  std::vector<EpochMetrics> const records{
      {0, "train", 0.01, 2.25, 0.5, 0.0625, 1.5, {}},
      {1, "train", 0.001, 1.125, 0.75, 0.0, 1.25, {}},
      {0, "finetune", 0.0001, 0.1, 0.875, 3.0517578125e-05, 1.0, {}},
  };
  fs::path const dir = scratch_dir("metrics");
  log_metrics(dir / "metrics.log", records);
  std::string const golden = read_text(fs::path(SVDTRAIN_TEST_DATA) / "golden" / "metrics.log");
  CHECK(read_text(dir / "metrics.log") == golden);

  auto const back = read_metrics(dir / "metrics.log");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
  {
    CHECK(back[i].epoch == records[i].epoch);
    CHECK(back[i].stage == records[i].stage);
    CHECK(back[i].lr == records[i].lr);
    CHECK(back[i].train_loss == records[i].train_loss);
    CHECK(back[i].mean_orth_residual == records[i].mean_orth_residual);
  }
  CHECK_THROWS_AS(parse_metrics_line("epoch=0 stage=train"), FormatError);
  CHECK_THROWS_AS(parse_metrics_line("epoch=x stage=train lr=1 train_loss=1 val_acc=1 "
                                     "mean_orth_residual=1 mean_hoyer=1"),
                  FormatError);
}

TEST_CASE("tradeoff table matches the golden file")
{
  std::vector<TradeoffRow> const rows{
      {0.0, 0.001, 0.96875, -0.015625, 1.25, 1.5},
      {0.5, 0.25, 0.9375, -0.046875, 2.5, 3.0},
  };
  fs::path const dir = scratch_dir("tradeoff");
  emit_tradeoff(dir / "sub" / "tradeoff.tsv", rows);
  CHECK(read_text(dir / "sub" / "tradeoff.tsv") ==
        read_text(fs::path(SVDTRAIN_TEST_DATA) / "golden" / "tradeoff.tsv"));
}

TEST_CASE("config parsing")
{
  fs::path const dir = scratch_dir("config");
  ExperimentConfig const c = load_config(small_config_file(dir));
  CHECK(c.model == "mlp-s");
  CHECK(c.dataset.per_class == 15);
  CHECK(c.dataset.shape == Shape{1, 4, 4});
  CHECK(c.train.epochs == 2);
  CHECK(c.output_dir == dir / "out");
  CHECK(c.regularizer.lambda_o == 1.0);

  ExperimentConfig const again = parse_config(dump_config(c), dir);
  CHECK(dump_config(again) == dump_config(c));

  CHECK_THROWS_AS(parse_config(R"({"energy": 2})", dir), ParameterError);
  CHECK_THROWS_AS(parse_config(R"({"scheme": "diag"})", dir), ParameterError);
  CHECK_THROWS_AS(parse_config(R"({"regularizer": {"kind": "none", "lambda_s": 1}})", dir),
                  ParameterError);
  CHECK_THROWS_AS(load_config(dir / "absent.json"), IoError);
}

TEST_CASE("sweep produces one row per grid point")
{
  ExperimentConfig c      = load_config(small_config_file(scratch_dir("sweep")));
  c.regularizer.kind      = SparsityKind::Hoyer;
  Datasets const    data  = load_datasets(c.dataset);
  double const      ls[]  = {0.0, 0.2};
  double const      es[]  = {0.0, 0.1};
  SweepResult const r     = run_sweep(c, data, ls, es);
  REQUIRE(r.rows.size() == 4);
  REQUIRE(r.reports.size() == 4);
  for (std::size_t i = 0; i < 4; ++i)
  {
    CHECK(r.rows[i].lambda_s == ls[i / 2]);
    CHECK(r.rows[i].energy == es[i % 2]);
    CHECK(r.rows[i].speedup == r.reports[i].speedup);
    CHECK(r.rows[i].speedup_vs_dense == r.reports[i].speedup_vs_dense);
    CHECK(r.rows[i].accuracy_gain == doctest::Approx(r.rows[i].accuracy - r.baseline_accuracy));
  }
  CHECK(r.rows[0].speedup == 1.0);
  CHECK(r.rows[0].accuracy == r.baseline_accuracy);
}

TEST_CASE("cli usage errors")
{
  auto const unknown = cli({"train", "--bogus"});
  CHECK(unknown.code == kExitUsage);
  CHECK(unknown.err.find("Usage") != std::string::npos);

  CHECK(cli({"explode"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"--energy", "2", "prune"}).code == kExitUsage);
  CHECK(cli({"--scheme", "diag", "train"}).code == kExitUsage);

  auto const help = cli({"--help"});
  CHECK(help.code == kExitOk);
  CHECK(help.out.find("pipeline") != std::string::npos);

  auto const no_ckpt = cli({"flops"});
  CHECK(no_ckpt.code == kExitFailure);
  CHECK(no_ckpt.err.find("--checkpoint") != std::string::npos);
}

TEST_CASE("cli subcommands")
{
  fs::path const dir = scratch_dir("cli");
  fs::path const cfg = small_config_file(dir);
  fs::path const out = dir / "run";

  SUBCASE("train with zero epochs saves the initial model")
  {
    auto const r = cli({"--config", cfg.string(), "--out", out.string(), "--epochs", "0", "train"});
    REQUIRE(r.code == kExitOk);
    ExperimentConfig c   = load_config(cfg);
    Datasets const   d   = load_datasets(c.dataset);
    Model const      ref = initial_model(c, d.train.sample_shape(), d.train.class_count);
    expect_same_model(load_checkpoint(out / "model.ckpt.json"), ref);

    auto const f = cli({"--checkpoint", (out / "model.ckpt.json").string(), "flops"});
    CHECK(f.code == kExitOk);
    CHECK(f.out == flops_report(ref).to_text());

    auto const p = cli({"--config", cfg.string(), "--out", (dir / "pruned").string(), "--energy",
                        "0.3", "--checkpoint", (out / "model.ckpt.json").string(), "prune"});
    CHECK(p.code == kExitOk);
    CHECK(fs::exists(dir / "pruned" / "prune_report.txt"));

    auto const e = cli({"--config", cfg.string(), "--checkpoint",
                        (dir / "pruned" / "model.ckpt.json").string(), "eval"});
    CHECK(e.code == kExitOk);
    CHECK(e.out.find("val_acc=") == 0);

    auto const ft = cli({"--config", cfg.string(), "--out", (dir / "ft").string(), "--epochs", "1",
                         "--checkpoint", (dir / "pruned" / "model.ckpt.json").string(), "finetune"});
    CHECK(ft.code == kExitOk);
    CHECK(read_metrics(dir / "ft" / "metrics.log").size() == 1);
  }
  SUBCASE("pipeline writes its outputs")
  {
    auto const r = cli({"--config", cfg.string(), "--out", out.string(), "--reg", "hoyer",
                        "--lambda-s", "0.1", "--energy", "0.01", "pipeline"});
    REQUIRE(r.code == kExitOk);
    for (auto const *name : {"model.ckpt.json", "model.ckpt.json.bin", "metrics.log",
                             "prune_report.txt", "summary.txt"})
    {
      CHECK(fs::exists(out / name));
    }
    CHECK(read_metrics(out / "metrics.log").size() == 3);
  }
  SUBCASE("sweep writes the tradeoff table")
  {
    auto const r = cli({"--config", cfg.string(), "--out", out.string(), "--reg", "hoyer",
                        "sweep", "--lambdas", "0,0.1", "--energies", "0.01"});
    REQUIRE(r.code == kExitOk);
    auto const text = read_text(out / "tradeoff.tsv");
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  }
  SUBCASE("runtime failure exits with 2")
  {
    auto const r = cli({"--config", cfg.string(), "--checkpoint", (dir / "none.json").string(), "eval"});
    CHECK(r.code == kExitFailure);
    CHECK(r.err.find("error:") == 0);
  }
}

TEST_CASE("shipped configs parse")
{
  fs::path const dir = fs::path(SVDTRAIN_TEST_DATA).parent_path() / "configs";
  std::size_t    n   = 0;
  for (auto const &entry : fs::directory_iterator(dir))
  {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_config(entry.path()));
    ++n;
  }
  CHECK(n >= 2);
  ExperimentConfig const desk = load_config(dir / "desk.json");
  CHECK(desk.regularizer.kind == SparsityKind::Hoyer);
  CHECK(desk.train.schedule.initial_lr == ExperimentConfig{}.train.schedule.initial_lr);
}

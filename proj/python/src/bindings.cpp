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

#include "svdtrain/checkpoint.hpp"
#include "svdtrain/cli.hpp"
#include "svdtrain/compression.hpp"
#include "svdtrain/config.hpp"
#include "svdtrain/error.hpp"
#include "svdtrain/linalg.hpp"
#include "svdtrain/pipeline.hpp"
#include "svdtrain/regularizers.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace svdtrain;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array &a)
{
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor &t)
{
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

py::dict report_dict(const PruneReport &r)
{
  py::list layers;
  for (auto const &l : r.layers)
  {
    py::dict d;
    d["node_index"]             = l.node_index;
    d["scheme"]                 = std::string(to_string(l.scheme));
    d["rank_before"]            = l.rank_before;
    d["rank_after"]             = l.rank_after;
    d["pruned_energy_fraction"] = l.pruned_energy_fraction;
    d["flops_dense"]            = l.flops_dense;
    d["flops_before"]           = l.flops_before;
    d["flops_after"]            = l.flops_after;
    layers.append(d);
  }
  py::dict d;
  d["energy_threshold"]   = r.energy_threshold;
  d["layers"]             = layers;
  d["total_flops_dense"]  = r.total_flops_dense;
  d["total_flops_before"] = r.total_flops_before;
  d["total_flops_after"]  = r.total_flops_after;
  d["speedup"]            = r.speedup;
  d["speedup_vs_dense"]   = r.speedup_vs_dense;
  return d;
}

}  // namespace

PYBIND11_MODULE(_svdtrain, m)
{
  m.doc() = "Bindings for the svdtrain C++ library";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<VersionError>(m, "VersionError", base.ptr());
  py::register_exception<ManifestError>(m, "ManifestError", base.ptr());
  py::register_exception<BlobLengthError>(m, "BlobLengthError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def(
      "svd",
      [](const Array &a) {
        SvdFactors const f = svd(to_tensor(a));
        return py::make_tuple(to_array(f.u), to_array(f.s), to_array(f.v));
      },
      py::arg("a"), "Thin SVD: returns (u, s, v) with a = u diag(s) v^T.");

  m.def("hoyer_loss", [](const Array &s) { return hoyer_loss(to_tensor(s)); }, py::arg("s"));
  m.def("l1_loss", [](const Array &s) { return l1_loss(to_tensor(s)); }, py::arg("s"));
  m.def(
      "orthogonality_loss",
      [](const Array &u, const Array &v) { return orthogonality_loss(to_tensor(u), to_tensor(v)); },
      py::arg("u"), py::arg("v"));

  m.def(
      "select_prune_set",
      [](const Array &s, double e) {
        PruneDecision const d = select_prune_set(to_tensor(s), e);
        return py::make_tuple(d.keep_indices, d.pruned_energy_fraction);
      },
      py::arg("s"), py::arg("energy_threshold"),
      "Indices kept (descending |s|) and the pruned energy fraction.");

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("load", &load_config, py::arg("path"))
      .def_static(
          "parse", [](const std::string &text) { return parse_config(text); }, py::arg("json"))
      .def("dump", &dump_config)
      .def("validate", &ExperimentConfig::validate)
      .def_readwrite("model", &ExperimentConfig::model)
      .def_readwrite("energy_threshold", &ExperimentConfig::energy_threshold)
      .def_readwrite("batch_size", &ExperimentConfig::batch_size)
      .def_readwrite("seed", &ExperimentConfig::seed)
      .def_readwrite("output_dir", &ExperimentConfig::output_dir)
      .def_property(
          "scheme", [](const ExperimentConfig &c) { return std::string(to_string(c.scheme)); },
          [](ExperimentConfig &c, const std::string &s) { c.scheme = parse_scheme(s); })
      .def_property(
          "regularizer",
          [](const ExperimentConfig &c) {
            return py::make_tuple(std::string(to_string(c.regularizer.kind)), c.regularizer.lambda_o,
                                  c.regularizer.lambda_s);
          },
          [](ExperimentConfig &c, std::tuple<std::string, double, double> r) {
            c.regularizer = {std::get<1>(r), std::get<2>(r), parse_sparsity(std::get<0>(r))};
          },
          "(kind, lambda_o, lambda_s)")
      .def_property(
          "epochs", [](const ExperimentConfig &c) { return py::make_tuple(c.train.epochs, c.finetune.epochs); },
          [](ExperimentConfig &c, std::pair<std::size_t, std::size_t> e) {
            c.train.epochs    = e.first;
            c.finetune.epochs = e.second;
          },
          "(training epochs, finetuning epochs)")
      .def_property(
          "blobs",
          [](const ExperimentConfig &c) {
            return py::make_tuple(c.dataset.classes, c.dataset.per_class, c.dataset.shape);
          },
          [](ExperimentConfig &c, std::tuple<std::size_t, std::size_t, Shape> b) {
            c.dataset.kind        = "blobs";
            c.dataset.classes     = std::get<0>(b);
            c.dataset.class_count = std::get<0>(b);
            c.dataset.per_class   = std::get<1>(b);
            c.dataset.shape       = std::get<2>(b);
          },
          "Synthetic data as (classes, per_class, sample shape)");

  py::class_<Model>(m, "Model")
      .def_readonly("name", &Model::name)
      .def_readonly("input_shape", &Model::input_shape)
      .def_readonly("class_count", &Model::class_count)
      .def("ranks",
           [](const Model &model) {
             std::vector<std::size_t> out;
             for (std::size_t i : model.svd_layer_indices())
               out.push_back(std::get<SvdLayer>(model.nodes[i]).rank());
             return out;
           })
      .def("predict", [](const Model &model, const Array &x) { return to_array(predict_logits(model, to_tensor(x))); },
           py::arg("inputs"))
      .def("flops_report", [](const Model &model) { return report_dict(flops_report(model)); })
      .def("save", [](const Model &model, const std::filesystem::path &p) { save_checkpoint(model, p); },
           py::arg("path"));
  m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
  m.def(
      "prune",
      [](const Model &model, double e) {
        auto [pruned, report] = prune_model(model, e);
        return py::make_tuple(pruned, report_dict(report));
      },
      py::arg("model"), py::arg("energy_threshold"));

  m.def(
      "run_pipeline",
      [](const ExperimentConfig &config) {
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(config);
        }
        py::dict d;
        d["model"]            = r.final_model;
        d["report"]           = report_dict(r.report);
        d["trained_accuracy"] = r.trained_accuracy;
        d["pruned_accuracy"]  = r.pruned_accuracy;
        d["final_accuracy"]   = r.final_accuracy;
        d["epochs"]           = r.metrics.size();
        return d;
      },
      py::arg("config"), "Train, prune and finetune; returns accuracies, the report and the model.");

  m.def(
      "main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "svdtrain");
        std::vector<const char *> argv;
        for (auto const &a : args)
          argv.push_back(a.c_str());
        std::ostringstream out, err;
        int const code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr).");
}

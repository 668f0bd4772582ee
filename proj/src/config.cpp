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

#include "svdtrain/config.hpp"

#include "svdtrain/error.hpp"
#include "svdtrain/random.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace svdtrain {

using nlohmann::json;

namespace {

// Value checks only; file references may not exist yet at parse time.
void validate_values(const ExperimentConfig &cfg)
{
  cfg.regularizer.validate();
  cfg.train.schedule.validate();
  cfg.finetune.schedule.validate();
  if (!(cfg.energy_threshold >= 0.0 && cfg.energy_threshold <= 1.0))
  {
    throw ParameterError("energy threshold must lie in [0, 1]");
  }
  if (cfg.batch_size == 0)
  {
    throw ParameterError("batch size must be at least 1");
  }
}

}  // namespace

void ExperimentConfig::validate() const
{
  regularizer.validate();
  train.schedule.validate();
  finetune.schedule.validate();
  if (!(energy_threshold >= 0.0 && energy_threshold <= 1.0))
  {
    throw ParameterError("energy threshold must lie in [0, 1]");
  }
  if (batch_size == 0)
  {
    throw ParameterError("batch size must be at least 1");
  }
  if (scheme == DecompositionScheme::FullyConnected)
  {
    throw ParameterError("scheme must be 'channel' or 'spatial'");
  }
  if (model != "mlp-s" && model != "cnn-s" && !std::filesystem::exists(model))
  {
    throw IoError("model checkpoint '" + model + "' does not exist");
  }
  auto require = [](const std::filesystem::path &p, const char *what) {
    if (p.empty() || !std::filesystem::exists(p))
    {
      throw IoError(std::string(what) + " file '" + p.string() + "' does not exist");
    }
  };
  if (dataset.kind == "idx")
  {
    require(dataset.train_images, "training image");
    require(dataset.train_labels, "training label");
    require(dataset.val_images, "validation image");
    require(dataset.val_labels, "validation label");
  }
  else if (dataset.kind == "csv")
  {
    require(dataset.train_csv, "training csv");
    require(dataset.val_csv, "validation csv");
  }
  else if (dataset.kind == "blobs")
  {
    if (dataset.classes == 0 || dataset.per_class == 0 || dataset.shape.empty())
    {
      throw ParameterError("blobs dataset needs positive classes, per_class and a shape");
    }
  }
  else
  {
    throw ParameterError("unknown dataset kind '" + dataset.kind + "'");
  }
}

StageConfig ExperimentConfig::training_stage() const
{
  StageConfig stage;
  stage.stage                 = StageKind::FullRankSvdTraining;
  stage.epochs                = train.epochs;
  stage.schedule              = train.schedule;
  stage.regularizer           = regularizer;
  stage.seed                  = seed;
  stage.batch_size            = batch_size;
  stage.momentum              = momentum;
  stage.weight_decay          = weight_decay;
  stage.decay_singular_values = decay_singular_values;
  stage.augment               = augment;
  return stage;
}

StageConfig ExperimentConfig::finetune_stage() const
{
  StageConfig stage          = training_stage();
  stage.stage                = StageKind::Finetune;
  stage.epochs               = finetune.epochs;
  stage.schedule             = finetune.schedule;
  stage.regularizer.lambda_s = 0.0;
  stage.regularizer.kind     = SparsityKind::None;
  stage.seed                 = Rng::mix(seed, 0xf1e7);
  return stage;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p)
{
  std::filesystem::path path(p);
  if (path.empty() || path.is_absolute() || base.empty())
  {
    return path;
  }
  return base / path;
}

Schedule parse_schedule(const json &j, const Schedule &fallback)
{
  Schedule s = fallback;
  if (j.contains("lr"))
  {
    s.initial_lr = j.at("lr").get<double>();
  }
  if (j.contains("milestones"))
  {
    s.milestones.clear();
    for (auto const &m : j.at("milestones"))
    {
      s.milestones.emplace_back(m.at(0).get<std::size_t>(), m.at(1).get<double>());
    }
  }
  return s;
}

StageRecipe parse_recipe(const json &j, const StageRecipe &fallback)
{
  StageRecipe r = fallback;
  if (j.contains("epochs"))
  {
    r.epochs = j.at("epochs").get<std::size_t>();
  }
  r.schedule = parse_schedule(j, fallback.schedule);
  return r;
}

json schedule_json(const StageRecipe &r)
{
  json milestones = json::array();
  for (auto const &[epoch, mult] : r.schedule.milestones)
  {
    milestones.push_back({epoch, mult});
  }
  return {{"epochs", r.epochs}, {"lr", r.schedule.initial_lr}, {"milestones", milestones}};
}

}  // namespace

ExperimentConfig parse_config(const std::string &json_text, const std::filesystem::path &base_dir)
{
  json j;
  try
  {
    j = json::parse(json_text);
  }
  catch (const json::parse_error &e)
  {
    throw ParameterError(std::string("config is not valid JSON: ") + e.what());
  }

  ExperimentConfig cfg;
  try
  {
    if (j.contains("model"))
    {
      std::string const model = j.at("model").get<std::string>();
      cfg.model = (model == "mlp-s" || model == "cnn-s") ? model : resolve(base_dir, model).string();
    }
    if (j.contains("scheme"))
    {
      cfg.scheme = parse_scheme(j.at("scheme").get<std::string>());
    }
    if (j.contains("regularizer"))
    {
      auto const &r = j.at("regularizer");
      if (r.contains("kind"))
      {
        cfg.regularizer.kind = parse_sparsity(r.at("kind").get<std::string>());
      }
      cfg.regularizer.lambda_o = r.value("lambda_o", cfg.regularizer.lambda_o);
      cfg.regularizer.lambda_s = r.value("lambda_s", cfg.regularizer.lambda_s);
    }
    cfg.energy_threshold = j.value("energy", cfg.energy_threshold);
    if (j.contains("train"))
    {
      cfg.train = parse_recipe(j.at("train"), cfg.train);
    }
    if (j.contains("finetune"))
    {
      cfg.finetune = parse_recipe(j.at("finetune"), cfg.finetune);
    }
    cfg.batch_size            = j.value("batch_size", cfg.batch_size);
    cfg.momentum              = j.value("momentum", cfg.momentum);
    cfg.weight_decay          = j.value("weight_decay", cfg.weight_decay);
    cfg.decay_singular_values = j.value("decay_singular_values", cfg.decay_singular_values);
    cfg.augment               = j.value("augment", cfg.augment);
    cfg.seed                  = j.value("seed", cfg.seed);
    if (j.contains("out"))
    {
      cfg.output_dir = resolve(base_dir, j.at("out").get<std::string>());
    }
    if (j.contains("dataset"))
    {
      auto const  &d  = j.at("dataset");
      DatasetSpec &ds = cfg.dataset;
      ds.kind         = d.value("kind", ds.kind);
      ds.classes      = d.value("classes", ds.classes);
      ds.per_class    = d.value("per_class", ds.per_class);
      if (d.contains("shape"))
      {
        ds.shape = d.at("shape").get<Shape>();
      }
      ds.center_scale        = d.value("center_scale", ds.center_scale);
      ds.seed                = d.value("seed", ds.seed);
      ds.validation_fraction = d.value("validation_fraction", ds.validation_fraction);
      ds.class_count         = d.value("class_count", ds.class_count);
      ds.limit               = d.value("limit", ds.limit);
      ds.normalize           = d.value("normalize", ds.normalize);
      auto path = [&](const char *key) {
        return d.contains(key) ? resolve(base_dir, d.at(key).get<std::string>())
                               : std::filesystem::path{};
      };
      ds.train_images = path("train_images");
      ds.train_labels = path("train_labels");
      ds.val_images   = path("val_images");
      ds.val_labels   = path("val_labels");
      ds.train_csv    = path("train_csv");
      ds.val_csv      = path("val_csv");
    }
  }
  catch (const json::exception &e)
  {
    throw ParameterError(std::string("malformed config: ") + e.what());
  }
  validate_values(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open config " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.parent_path());
}

std::string dump_config(const ExperimentConfig &config)
{
  DatasetSpec const &ds = config.dataset;
  json dataset{{"kind", ds.kind},
               {"classes", ds.classes},
               {"per_class", ds.per_class},
               {"shape", ds.shape},
               {"center_scale", ds.center_scale},
               {"seed", ds.seed},
               {"validation_fraction", ds.validation_fraction},
               {"class_count", ds.class_count},
               {"limit", ds.limit},
               {"normalize", ds.normalize}};
  auto put_path = [&](const char *key, const std::filesystem::path &p) {
    if (!p.empty())
    {
      dataset[key] = p.string();
    }
  };
  put_path("train_images", ds.train_images);
  put_path("train_labels", ds.train_labels);
  put_path("val_images", ds.val_images);
  put_path("val_labels", ds.val_labels);
  put_path("train_csv", ds.train_csv);
  put_path("val_csv", ds.val_csv);

  json j{{"model", config.model},
         {"dataset", dataset},
         {"scheme", std::string(to_string(config.scheme))},
         {"regularizer",
          {{"kind", std::string(to_string(config.regularizer.kind))},
           {"lambda_o", config.regularizer.lambda_o},
           {"lambda_s", config.regularizer.lambda_s}}},
         {"energy", config.energy_threshold},
         {"train", schedule_json(config.train)},
         {"finetune", schedule_json(config.finetune)},
         {"batch_size", config.batch_size},
         {"momentum", config.momentum},
         {"weight_decay", config.weight_decay},
         {"decay_singular_values", config.decay_singular_values},
         {"augment", config.augment},
         {"seed", config.seed},
         {"out", config.output_dir.string()}};
  return j.dump(2) + "\n";
}

}  // namespace svdtrain

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

#include "svdtrain/metrics.hpp"

#include "svdtrain/error.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace svdtrain {

namespace {

std::string real(double x)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

constexpr const char *kMetricKeys[] = {"epoch",      "stage",   "lr",         "train_loss",
                                       "val_acc",    "mean_orth_residual", "mean_hoyer"};

}  // namespace

void write_text_file(const std::filesystem::path &path, const std::string &text)
{
  if (path.has_parent_path())
  {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.flush();
  if (!out)
  {
    throw IoError("cannot write " + path.string());
  }
}

std::string format_metrics_line(const EpochMetrics &r)
{
  std::ostringstream out;
  out << "epoch=" << r.epoch << " stage=" << r.stage << " lr=" << real(r.lr)
      << " train_loss=" << real(r.train_loss) << " val_acc=" << real(r.val_acc)
      << " mean_orth_residual=" << real(r.mean_orth_residual)
      << " mean_hoyer=" << real(r.mean_hoyer);
  return out.str();
}

EpochMetrics parse_metrics_line(const std::string &line)
{
  std::map<std::string, std::string> fields;
  std::istringstream                 in(line);
  std::string                        token;
  while (in >> token)
  {
    auto const eq = token.find('=');
    if (eq == std::string::npos)
    {
      throw FormatError("metrics token '" + token + "' is not key=value");
    }
    fields[token.substr(0, eq)] = token.substr(eq + 1);
  }
  for (const char *key : kMetricKeys)
  {
    if (!fields.contains(key))
    {
      throw FormatError(std::string("metrics line lacks '") + key + "'");
    }
  }
  EpochMetrics r;
  try
  {
    r.epoch              = std::stoull(fields["epoch"]);
    r.stage              = fields["stage"];
    r.lr                 = std::stod(fields["lr"]);
    r.train_loss         = std::stod(fields["train_loss"]);
    r.val_acc            = std::stod(fields["val_acc"]);
    r.mean_orth_residual = std::stod(fields["mean_orth_residual"]);
    r.mean_hoyer         = std::stod(fields["mean_hoyer"]);
  }
  catch (const std::logic_error &)
  {
    throw FormatError("metrics line has a malformed number: " + line);
  }
  return r;
}

void log_metrics(const std::filesystem::path &path, std::span<const EpochMetrics> records)
{
  std::string text;
  for (auto const &r : records)
  {
    text += format_metrics_line(r);
    text += '\n';
  }
  write_text_file(path, text);
}

std::vector<EpochMetrics> read_metrics(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  std::vector<EpochMetrics> out;
  std::string               line;
  while (std::getline(in, line))
  {
    if (!line.empty())
    {
      out.push_back(parse_metrics_line(line));
    }
  }
  return out;
}

std::string format_tradeoff(std::span<const TradeoffRow> rows)
{
  std::ostringstream out;
  out << "lambda_s\tenergy\taccuracy\taccuracy_gain\tspeedup\tspeedup_vs_dense\n";
  for (auto const &r : rows)
  {
    out << real(r.lambda_s) << '\t' << real(r.energy) << '\t' << real(r.accuracy) << '\t'
        << real(r.accuracy_gain) << '\t' << real(r.speedup) << '\t' << real(r.speedup_vs_dense)
        << '\n';
  }
  return out.str();
}

void emit_tradeoff(const std::filesystem::path &path, std::span<const TradeoffRow> rows)
{
  write_text_file(path, format_tradeoff(rows));
}

}  // namespace svdtrain

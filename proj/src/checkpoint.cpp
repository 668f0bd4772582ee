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

#include "svdtrain/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace svdtrain {

using nlohmann::json;

std::filesystem::path checkpoint_blob_path(const std::filesystem::path &manifest_path)
{
  std::filesystem::path blob = manifest_path;
  blob += ".bin";
  return blob;
}

namespace {

void append_le(std::string &out, double value)
{
  auto bits = std::bit_cast<std::uint64_t>(value);
  for (int i = 0; i < 8; ++i)
  {
    out.push_back(static_cast<char>(bits & 0xffu));
    bits >>= 8;
  }
}

double read_le(const char *p)
{
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i)
  {
    bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  }
  return std::bit_cast<double>(bits);
}

json geometry_json(const LayerGeometry &geometry)
{
  if (auto const *fc = std::get_if<FcGeometry>(&geometry))
  {
    return {{"kind", "fc"}, {"m", fc->m}, {"n", fc->n}};
  }
  auto const &g = std::get<ConvGeometry>(geometry);
  return {{"kind", "conv"}, {"n", g.n},           {"c", g.c},
          {"w", g.w},       {"h", g.h},           {"stride", g.stride},
          {"padding", g.padding}};
}

LayerGeometry parse_geometry(const json &j)
{
  std::string const kind = j.at("kind").get<std::string>();
  if (kind == "fc")
  {
    return FcGeometry{j.at("m").get<std::size_t>(), j.at("n").get<std::size_t>()};
  }
  if (kind == "conv")
  {
    return ConvGeometry{j.at("n").get<std::size_t>(),      j.at("c").get<std::size_t>(),
                        j.at("w").get<std::size_t>(),      j.at("h").get<std::size_t>(),
                        j.at("stride").get<std::size_t>(), j.at("padding").get<std::size_t>()};
  }
  throw ManifestError("unknown geometry kind '" + kind + "'");
}

class BlobWriter
{
public:
  json put(const Tensor &t)
  {
    json entry{{"offset", bytes_.size()}, {"shape", t.shape()}};
    for (double x : t.data())
    {
      append_le(bytes_, x);
    }
    return entry;
  }
  const std::string &bytes() const
  {
    return bytes_;
  }

private:
  std::string bytes_;
};

struct Extent
{
  std::size_t offset = 0;
  std::size_t bytes  = 0;
  std::string name;
};

class BlobReader
{
public:
  explicit BlobReader(const std::string &bytes)
    : bytes_(bytes)
  {}

  Tensor get(const json &entry, const std::string &name)
  {
    auto const  offset = entry.at("offset").get<std::size_t>();
    Shape const shape  = entry.at("shape").get<Shape>();
    std::size_t const count = shape_numel(shape);
    std::size_t const len   = count * 8;
    if (offset % 8 != 0)
    {
      throw ManifestError("tensor " + name + " has a misaligned offset");
    }
    if (offset + len > bytes_.size())
    {
      throw ManifestError("tensor " + name + " extends past the end of the blob");
    }
    extents_.push_back(Extent{offset, len, name});
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i)
    {
      values[i] = read_le(bytes_.data() + offset + 8 * i);
    }
    return Tensor(shape, std::move(values));
  }

  /// Offsets must tile the blob exactly, without overlap or gaps.
  void check_tiling()
  {
    std::sort(extents_.begin(), extents_.end(),
              [](const Extent &a, const Extent &b) { return a.offset < b.offset; });
    std::size_t cursor = 0;
    for (auto const &e : extents_)
    {
      if (e.offset < cursor)
      {
        throw ManifestError("tensor " + e.name + " overlaps the previous tensor");
      }
      if (e.offset > cursor)
      {
        throw ManifestError("gap in blob before tensor " + e.name);
      }
      cursor = e.offset + e.bytes;
    }
    if (cursor != bytes_.size())
    {
      throw ManifestError("blob has unreferenced trailing bytes");
    }
  }

private:
  const std::string  &bytes_;
  std::vector<Extent> extents_;
};

std::string read_file(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path &path, const std::string &bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out)
  {
    throw IoError("cannot write " + path.string());
  }
}

}  // namespace

void save_checkpoint(const Model &model, const std::filesystem::path &manifest_path)
{
  model.validate();
  BlobWriter blob;
  json       nodes = json::array();
  for (auto const &node : model.nodes)
  {
    json entry;
    if (auto const *svd = std::get_if<SvdLayer>(&node))
    {
      json tensors{{"u", blob.put(svd->u)}, {"s", blob.put(svd->s)}, {"v", blob.put(svd->v)}};
      if (svd->bias)
      {
        tensors["bias"] = blob.put(*svd->bias);
      }
      entry = {{"type", "svd"},
               {"scheme", std::string(to_string(svd->scheme))},
               {"geometry", geometry_json(svd->geometry)},
               {"rank", svd->rank()},
               {"tensors", tensors}};
    }
    else if (auto const *dense = std::get_if<DenseLayer>(&node))
    {
      json tensors{{"weight", blob.put(dense->weight)}};
      if (dense->bias)
      {
        tensors["bias"] = blob.put(*dense->bias);
      }
      entry = {{"type", "dense"}, {"geometry", geometry_json(dense->geometry)}, {"tensors", tensors}};
    }
    else if (std::holds_alternative<ReluOp>(node))
    {
      entry = {{"type", "relu"}};
    }
    else if (auto const *pool = std::get_if<MaxPoolOp>(&node))
    {
      entry = {{"type", "maxpool"}, {"window", pool->window}};
    }
    else
    {
      entry = {{"type", "flatten"}};
    }
    nodes.push_back(std::move(entry));
  }

  auto const blob_path = checkpoint_blob_path(manifest_path);
  json const manifest{
      {"format_version", kCheckpointFormatVersion},
      {"model",
       {{"name", model.name}, {"input_shape", model.input_shape}, {"class_count", model.class_count}}},
      {"blob", {{"file", blob_path.filename().string()}, {"bytes", blob.bytes().size()}}},
      {"nodes", nodes}};

  if (manifest_path.has_parent_path())
  {
    std::filesystem::create_directories(manifest_path.parent_path());
  }
  write_file(blob_path, blob.bytes());
  write_file(manifest_path, manifest.dump(2) + "\n");
}

Model load_checkpoint(const std::filesystem::path &manifest_path)
{
  std::string const text = read_file(manifest_path);
  json              manifest;
  try
  {
    manifest = json::parse(text);
  }
  catch (const json::parse_error &e)
  {
    throw ManifestError("checkpoint manifest " + manifest_path.string() +
                        " is not valid JSON: " + e.what());
  }

  Model model;
  try
  {
    int const version = manifest.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion)
    {
      throw VersionError("checkpoint format version " + std::to_string(version) +
                         " is not supported (this build reads version " +
                         std::to_string(kCheckpointFormatVersion) + ")");
    }

    auto const blob_path =
        manifest_path.parent_path() / manifest.at("blob").at("file").get<std::string>();
    std::string const bytes    = read_file(blob_path);
    auto const        expected = manifest.at("blob").at("bytes").get<std::size_t>();
    if (bytes.size() != expected)
    {
      throw BlobLengthError("checkpoint blob " + blob_path.string() + " holds " +
                            std::to_string(bytes.size()) + " bytes, manifest expects " +
                            std::to_string(expected));
    }

    auto const &meta  = manifest.at("model");
    model.name        = meta.at("name").get<std::string>();
    model.input_shape = meta.at("input_shape").get<Shape>();
    model.class_count = meta.at("class_count").get<std::size_t>();

    BlobReader reader(bytes);
    auto const &nodes = manifest.at("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i)
    {
      auto const       &entry = nodes[i];
      std::string const type  = entry.at("type").get<std::string>();
      std::string const where = node_prefix(i);
      auto optional_bias      = [&]() -> std::optional<Tensor> {
        auto const &t = entry.at("tensors");
        if (!t.contains("bias"))
        {
          return std::nullopt;
        }
        return reader.get(t.at("bias"), where + ".bias");
      };
      if (type == "svd")
      {
        SvdLayer layer;
        layer.scheme   = parse_scheme(entry.at("scheme").get<std::string>());
        layer.geometry = parse_geometry(entry.at("geometry"));
        auto const &t  = entry.at("tensors");
        layer.u        = reader.get(t.at("u"), where + ".u");
        layer.s        = reader.get(t.at("s"), where + ".s");
        layer.v        = reader.get(t.at("v"), where + ".v");
        layer.bias     = optional_bias();
        if (layer.rank() != entry.at("rank").get<std::size_t>())
        {
          throw ManifestError(where + " rank disagrees with its tensor shapes");
        }
        model.nodes.emplace_back(std::move(layer));
      }
      else if (type == "dense")
      {
        DenseLayer layer;
        layer.geometry = parse_geometry(entry.at("geometry"));
        layer.weight   = reader.get(entry.at("tensors").at("weight"), where + ".weight");
        layer.bias     = optional_bias();
        model.nodes.emplace_back(std::move(layer));
      }
      else if (type == "relu")
      {
        model.nodes.emplace_back(ReluOp{});
      }
      else if (type == "maxpool")
      {
        model.nodes.emplace_back(MaxPoolOp{entry.at("window").get<std::size_t>()});
      }
      else if (type == "flatten")
      {
        model.nodes.emplace_back(FlattenOp{});
      }
      else
      {
        throw ManifestError("unknown node type '" + type + "' at " + where);
      }
    }
    reader.check_tiling();
  }
  catch (const json::exception &e)
  {
    throw ManifestError("corrupt checkpoint manifest " + manifest_path.string() + ": " + e.what());
  }
  catch (const VersionError &)
  {
    throw;
  }
  catch (const BlobLengthError &)
  {
    throw;
  }
  catch (const ManifestError &)
  {
    throw;
  }
  catch (const IoError &)
  {
    throw;
  }
  catch (const Error &e)
  {
    throw ManifestError("checkpoint manifest describes an invalid model: " + std::string(e.what()));
  }

  try
  {
    model.validate();
  }
  catch (const Error &e)
  {
    throw ManifestError("checkpoint manifest describes an invalid model: " + std::string(e.what()));
  }
  return model;
}

}  // namespace svdtrain

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

#include "svdtrain/dataset.hpp"

#include "svdtrain/error.hpp"
#include "svdtrain/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace svdtrain {

Shape Dataset::sample_shape() const
{
  Shape const &s = inputs.shape();
  return s.empty() ? Shape{} : Shape(s.begin() + 1, s.end());
}

void Dataset::validate() const
{
  if (labels.empty())
  {
    throw LengthError("dataset is empty");
  }
  if (inputs.rank() < 2 || inputs.dim(0) != labels.size())
  {
    throw ConsistencyError("inputs " + shape_to_string(inputs.shape()) + " do not match " +
                           std::to_string(labels.size()) + " labels");
  }
  if (class_count == 0)
  {
    throw ConsistencyError("class_count must be positive");
  }
  for (int label : labels)
  {
    if (label < 0 || static_cast<std::size_t>(label) >= class_count)
    {
      throw ConsistencyError("label " + std::to_string(label) + " outside [0, " +
                             std::to_string(class_count) + ")");
    }
  }
  if (!inputs.all_finite())
  {
    throw NumericError("dataset inputs contain non-finite values");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const
{
  std::size_t const per = size() == 0 ? 0 : inputs.size() / size();
  Shape             shape = inputs.shape();
  shape[0]                = indices.size();
  Dataset out{Tensor(shape), {}, class_count};
  out.labels.reserve(indices.size());
  auto src = inputs.data();
  auto dst = out.inputs.data();
  for (std::size_t k = 0; k < indices.size(); ++k)
  {
    std::size_t const i = indices[k];
    if (i >= size())
    {
      throw DimensionError("subset index " + std::to_string(i) + " out of range");
    }
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(i * per), per,
                dst.begin() + static_cast<std::ptrdiff_t>(k * per));
    out.labels.push_back(labels[i]);
  }
  return out;
}

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t> &bytes, std::size_t offset,
                        const std::filesystem::path &path)
{
  if (bytes.size() < offset + 4)
  {
    throw LengthError(path.string() + ": truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream &out, std::uint32_t value)
{
  char const bytes[4] = {static_cast<char>((value >> 24) & 0xFF),
                         static_cast<char>((value >> 16) & 0xFF),
                         static_cast<char>((value >> 8) & 0xFF), static_cast<char>(value & 0xFF)};
  out.write(bytes, 4);
}

std::ofstream open_for_write(const std::filesystem::path &path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw IoError("cannot write " + path.string());
  }
  return out;
}

}  // namespace

Dataset load_idx(const std::filesystem::path &image_path, const std::filesystem::path &label_path,
                 std::size_t class_count)
{
  auto const images = read_file(image_path);
  auto const labels = read_file(label_path);

  if (read_be32(images, 0, image_path) != kIdxImageMagic)
  {
    throw FormatError(image_path.string() + ": not an IDX unsigned-byte 3-D image file");
  }
  if (read_be32(labels, 0, label_path) != kIdxLabelMagic)
  {
    throw FormatError(label_path.string() + ": not an IDX unsigned-byte label file");
  }
  std::size_t const count  = read_be32(images, 4, image_path);
  std::size_t const height = read_be32(images, 8, image_path);
  std::size_t const width  = read_be32(images, 12, image_path);
  std::size_t const nlabel = read_be32(labels, 4, label_path);
  if (count == 0)
  {
    throw LengthError(image_path.string() + ": contains no images");
  }
  std::size_t const payload = count * height * width;
  if (images.size() != 16 + payload)
  {
    throw LengthError(image_path.string() + ": expected " + std::to_string(payload) +
                      " pixel bytes, found " + std::to_string(images.size() - 16));
  }
  if (labels.size() != 8 + nlabel)
  {
    throw LengthError(label_path.string() + ": expected " + std::to_string(nlabel) +
                      " label bytes, found " + std::to_string(labels.size() - 8));
  }
  if (nlabel != count)
  {
    throw ConsistencyError("image file holds " + std::to_string(count) + " images but label file " +
                           std::to_string(nlabel) + " labels");
  }

  Dataset out{Tensor({count, 1, height, width}), std::vector<int>(count), class_count};
  for (std::size_t i = 0; i < payload; ++i)
  {
    out.inputs[i] = static_cast<double>(images[16 + i]) / 255.0;
  }
  for (std::size_t i = 0; i < count; ++i)
  {
    out.labels[i] = labels[8 + i];
  }
  out.validate();
  return out;
}

void write_idx_images(const std::filesystem::path &path, std::size_t height, std::size_t width,
                      std::span<const std::uint8_t> pixels)
{
  if (height == 0 || width == 0 || pixels.size() % (height * width) != 0)
  {
    throw DimensionError("pixel count is not a multiple of the image size");
  }
  auto out = open_for_write(path);
  put_be32(out, kIdxImageMagic);
  put_be32(out, static_cast<std::uint32_t>(pixels.size() / (height * width)));
  put_be32(out, static_cast<std::uint32_t>(height));
  put_be32(out, static_cast<std::uint32_t>(width));
  out.write(reinterpret_cast<const char *>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path &path, std::span<const std::uint8_t> labels)
{
  auto out = open_for_write(path);
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char *>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

void write_idx(const Dataset &dataset, const std::filesystem::path &image_path,
               const std::filesystem::path &label_path)
{
  Shape const &shape = dataset.inputs.shape();
  if (shape.size() != 4 || shape[1] != 1)
  {
    throw DimensionError("IDX export needs N x 1 x H x W inputs, got " + shape_to_string(shape));
  }
  std::vector<std::uint8_t> pixels(dataset.inputs.size());
  for (std::size_t i = 0; i < pixels.size(); ++i)
  {
    double const scaled = std::round(std::clamp(dataset.inputs[i], 0.0, 1.0) * 255.0);
    pixels[i]           = static_cast<std::uint8_t>(scaled);
  }
  std::vector<std::uint8_t> labels(dataset.labels.begin(), dataset.labels.end());
  write_idx_images(image_path, shape[2], shape[3], pixels);
  write_idx_labels(label_path, labels);
}

Dataset load_csv(const std::filesystem::path &path, std::size_t class_count)
{
  std::ifstream in(path);
  if (!in)
  {
    throw IoError("cannot open " + path.string());
  }
  std::vector<double> values;
  std::vector<int>    labels;
  std::size_t         features = 0;
  std::string         line;
  std::size_t         line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream        ss(line);
    std::string              field;
    while (std::getline(ss, field, ','))
    {
      fields.push_back(field);
    }
    if (fields.size() < 2)
    {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": need at least one feature and a label");
    }
    if (features == 0)
    {
      features = fields.size() - 1;
    }
    else if (fields.size() - 1 != features)
    {
      throw ConsistencyError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(features) + " features");
    }
    try
    {
      for (std::size_t i = 0; i + 1 < fields.size(); ++i)
      {
        std::size_t  used  = 0;
        double const value = std::stod(fields[i], &used);
        if (used != fields[i].size())
        {
          throw std::invalid_argument(fields[i]);
        }
        values.push_back(value);
      }
      std::size_t used  = 0;
      int const   label = std::stoi(fields.back(), &used);
      if (used != fields.back().size())
      {
        throw std::invalid_argument(fields.back());
      }
      labels.push_back(label);
    }
    catch (const std::logic_error &)
    {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": malformed number");
    }
  }
  if (labels.empty())
  {
    throw LengthError(path.string() + ": no samples");
  }
  if (class_count == 0)
  {
    class_count = static_cast<std::size_t>(std::max(0, *std::max_element(labels.begin(), labels.end()))) + 1;
  }
  Dataset out{Tensor({labels.size(), features}, std::move(values)), std::move(labels), class_count};
  out.validate();
  return out;
}

Dataset synthetic_blobs(std::size_t class_count, std::size_t per_class, const Shape &sample_shape,
                        std::uint64_t seed, double center_scale)
{
  if (class_count == 0 || per_class == 0 || sample_shape.empty() || shape_numel(sample_shape) == 0)
  {
    throw ParameterError("synthetic_blobs needs positive counts and a non-empty sample shape");
  }
  std::size_t const dims = shape_numel(sample_shape);
  Rng               centre_rng(Rng::mix(seed, 1));
  Tensor            centres = centre_rng.normal_tensor({class_count, dims}, center_scale);

  Rng   noise_rng(Rng::mix(seed, 2));
  Shape shape{class_count * per_class};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  Dataset out{Tensor(shape), {}, class_count};
  out.labels.reserve(class_count * per_class);
  for (std::size_t k = 0; k < class_count; ++k)
  {
    for (std::size_t j = 0; j < per_class; ++j)
    {
      std::size_t const row = k * per_class + j;
      for (std::size_t d = 0; d < dims; ++d)
      {
        out.inputs[row * dims + d] = centres.at(k, d) + noise_rng.normal();
      }
      out.labels.push_back(static_cast<int>(k));
    }
  }
  return out;
}

std::vector<Batch> batches(const Dataset &dataset, std::size_t batch_size, std::uint64_t seed,
                           std::uint64_t epoch)
{
  if (batch_size == 0)
  {
    throw ParameterError("batch size must be at least 1");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(Rng::mix(seed, epoch));
  std::shuffle(order.begin(), order.end(), rng.engine());

  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size)
  {
    std::size_t const end = std::min(order.size(), start + batch_size);
    std::span<const std::size_t> ids(order.data() + start, end - start);
    Dataset part = dataset.subset(ids);
    out.push_back(Batch{std::move(part.inputs), std::move(part.labels),
                        std::vector<std::size_t>(ids.begin(), ids.end())});
  }
  return out;
}

namespace {

// (channels, elements per channel per sample)
std::pair<std::size_t, std::size_t> channel_layout(const Dataset &dataset)
{
  Shape const sample = dataset.sample_shape();
  if (sample.size() == 1)
  {
    return {sample[0], 1};
  }
  if (sample.size() == 3)
  {
    return {sample[0], sample[1] * sample[2]};
  }
  throw DimensionError("normalization needs N x D or N x C x H x W data, got " +
                       shape_to_string(dataset.inputs.shape()));
}

}  // namespace

Dataset normalize(const Dataset &dataset, std::span<const double> mean,
                  std::span<const double> stddev)
{
  auto const [channels, plane] = channel_layout(dataset);
  if (mean.size() != channels || stddev.size() != channels)
  {
    throw DimensionError("normalization needs " + std::to_string(channels) +
                         " means and standard deviations");
  }
  for (double sd : stddev)
  {
    if (!(sd > 0.0))
    {
      throw ParameterError("standard deviation must be positive");
    }
  }
  Dataset out = dataset;
  for (std::size_t n = 0; n < dataset.size(); ++n)
  {
    for (std::size_t c = 0; c < channels; ++c)
    {
      double *p = out.inputs.data().data() + (n * channels + c) * plane;
      for (std::size_t k = 0; k < plane; ++k)
      {
        p[k] = (p[k] - mean[c]) / stddev[c];
      }
    }
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> channel_statistics(const Dataset &dataset)
{
  auto const [channels, plane] = channel_layout(dataset);
  std::vector<double> mean(channels, 0.0);
  std::vector<double> var(channels, 0.0);
  double const        count = static_cast<double>(dataset.size() * plane);
  for (std::size_t n = 0; n < dataset.size(); ++n)
  {
    for (std::size_t c = 0; c < channels; ++c)
    {
      double const *p = dataset.inputs.data().data() + (n * channels + c) * plane;
      for (std::size_t k = 0; k < plane; ++k)
      {
        mean[c] += p[k];
      }
    }
  }
  for (double &m : mean)
  {
    m /= count;
  }
  for (std::size_t n = 0; n < dataset.size(); ++n)
  {
    for (std::size_t c = 0; c < channels; ++c)
    {
      double const *p = dataset.inputs.data().data() + (n * channels + c) * plane;
      for (std::size_t k = 0; k < plane; ++k)
      {
        var[c] += (p[k] - mean[c]) * (p[k] - mean[c]);
      }
    }
  }
  for (double &v : var)
  {
    v = std::sqrt(v / count);
  }
  return {mean, var};
}

Tensor augment(const Tensor &images, std::span<const std::size_t> sample_ids, std::size_t pad,
               std::uint64_t seed, std::uint64_t epoch)
{
  if (images.rank() != 4 || images.dim(0) != sample_ids.size())
  {
    throw DimensionError("augment needs N x C x H x W images with one id per sample");
  }
  std::size_t const channels = images.dim(1);
  std::size_t const height   = images.dim(2);
  std::size_t const width    = images.dim(3);
  Tensor            out(images.shape());
  for (std::size_t n = 0; n < images.dim(0); ++n)
  {
    Rng        rng(Rng::mix(Rng::mix(seed, epoch), sample_ids[n]));
    long const dy   = static_cast<long>(rng.below(2 * pad + 1)) - static_cast<long>(pad);
    long const dx   = static_cast<long>(rng.below(2 * pad + 1)) - static_cast<long>(pad);
    bool const flip = rng.below(2) == 1;
    for (std::size_t c = 0; c < channels; ++c)
    {
      for (std::size_t y = 0; y < height; ++y)
      {
        for (std::size_t x = 0; x < width; ++x)
        {
          long const sy = static_cast<long>(y) + dy;
          long       sx = static_cast<long>(flip ? width - 1 - x : x) + dx;
          if (sy < 0 || sy >= static_cast<long>(height) || sx < 0 ||
              sx >= static_cast<long>(width))
          {
            continue;
          }
          out.at(n, c, y, x) =
              images.at(n, c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
        }
      }
    }
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset &dataset, double validation_fraction,
                                  std::uint64_t seed)
{
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
  {
    throw ParameterError("validation fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(Rng::mix(seed, 0x5B117));
  std::shuffle(order.begin(), order.end(), rng.engine());
  auto const held = static_cast<std::size_t>(
      std::round(validation_fraction * static_cast<double>(dataset.size())));
  if (held == 0 || held >= dataset.size())
  {
    throw ParameterError("split leaves an empty partition");
  }
  std::span<const std::size_t> all(order);
  return {dataset.subset(all.subspan(held)), dataset.subset(all.first(held))};
}

}  // namespace svdtrain

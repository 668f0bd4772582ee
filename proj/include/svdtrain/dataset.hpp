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

#pragma once

#include "svdtrain/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace svdtrain {

/// Labelled samples: inputs N x C x H x W (or N x D), labels in [0, class_count).
struct Dataset
{
  Tensor           inputs;
  std::vector<int> labels;
  std::size_t      class_count = 0;

  std::size_t size() const
  {
    return labels.size();
  }
  /// Per-sample shape (inputs shape without the leading N).
  Shape sample_shape() const;
  void  validate() const;
  /// Rows `indices` in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// IDX image (magic 0x00000803, N x H x W bytes) + label (0x00000801) files.
/// Pixels are scaled to [0, 1]; result is N x 1 x H x W.
Dataset load_idx(const std::filesystem::path &image_path, const std::filesystem::path &label_path,
                 std::size_t class_count = 10);

/// Writers used to author fixtures; byte-exact inverses of load_idx.
void write_idx_images(const std::filesystem::path &path, std::size_t height, std::size_t width,
                      std::span<const std::uint8_t> pixels);
void write_idx_labels(const std::filesystem::path &path, std::span<const std::uint8_t> labels);
/// Re-serializes a dataset loaded by load_idx (pixels rounded back to bytes).
void write_idx(const Dataset &dataset, const std::filesystem::path &image_path,
               const std::filesystem::path &label_path);

/// Comma-separated features with a trailing integer label, one sample per
/// line. `class_count` 0 infers max(label) + 1.
Dataset load_csv(const std::filesystem::path &path, std::size_t class_count = 0);

/**
 * Gaussian clusters: each class gets a seeded centre with entries drawn from
 * N(0, center_scale^2); samples add unit-variance noise. `sample_shape` is
 * either {D} or {C, H, W}. Samples are grouped by class.
 */
Dataset synthetic_blobs(std::size_t class_count, std::size_t per_class, const Shape &sample_shape,
                        std::uint64_t seed, double center_scale = 3.0);

struct Batch
{
  Tensor                   inputs;
  std::vector<int>         labels;
  std::vector<std::size_t> indices;  // rows of the source dataset
};

/// Seeded shuffle dependent on (seed, epoch); the final short batch is kept.
std::vector<Batch> batches(const Dataset &dataset, std::size_t batch_size, std::uint64_t seed,
                           std::uint64_t epoch);

/// (x - mean[c]) / std[c] per channel (per feature for N x D data).
Dataset normalize(const Dataset &dataset, std::span<const double> mean,
                  std::span<const double> stddev);

/// Per-channel mean and standard deviation over the whole dataset.
std::pair<std::vector<double>, std::vector<double>> channel_statistics(const Dataset &dataset);

/// Random crop (zero padding `pad`, then crop back) and horizontal flip,
/// deterministic in (seed, epoch, sample index). Image data only.
Tensor augment(const Tensor &images, std::span<const std::size_t> sample_ids, std::size_t pad,
               std::uint64_t seed, std::uint64_t epoch);

/// Deterministic train/validation split (seeded permutation).
std::pair<Dataset, Dataset> split(const Dataset &dataset, double validation_fraction,
                                  std::uint64_t seed);

}  // namespace svdtrain

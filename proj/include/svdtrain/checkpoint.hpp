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

#include "svdtrain/model.hpp"

#include <filesystem>

namespace svdtrain {

inline constexpr int kCheckpointFormatVersion = 1;

/**
 * Two files: a JSON manifest at `manifest_path` and a blob next to it
 * (`<manifest filename>.bin`) holding every tensor as little-endian f64
 * values, concatenated in manifest order.
 *
 * Manifest layout:
 *   format_version, model {name, input_shape, class_count},
 *   blob {file, bytes},
 *   nodes [ {type: svd|dense|relu|maxpool|flatten, scheme, geometry, rank,
 *            tensors {u|s|v|weight|bias: {offset, shape}}} ]
 * Offsets are in bytes from the start of the blob.
 */
void  save_checkpoint(const Model &model, const std::filesystem::path &manifest_path);

/// Throws VersionError, ManifestError or BlobLengthError on a damaged
/// checkpoint and IoError if a file cannot be read.
Model load_checkpoint(const std::filesystem::path &manifest_path);

std::filesystem::path checkpoint_blob_path(const std::filesystem::path &manifest_path);

}  // namespace svdtrain
